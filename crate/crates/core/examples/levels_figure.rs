//! Writes the first four levels for constant `lambda = 1/3` as SVG and CSV.

use cantor_density::enclosure::rational;
use cantor_density::figure::{levels_csv, levels_svg};
use cantor_density::{LambdaSequence, Result};

pub fn run(dir: &std::path::Path) -> Result<(String, String)> {
    let seq = LambdaSequence::truncated(vec![rational(1, 3); 4])?;
    let svg = levels_svg(&seq, 4)?;
    let csv = levels_csv(&seq, 4)?;
    std::fs::write(dir.join("levels.svg"), &svg)?;
    std::fs::write(dir.join("levels.csv"), &csv)?;
    println!("wrote levels.svg and levels.csv to {}", dir.display());
    Ok((svg, csv))
}

fn main() -> Result<()> {
    run(&std::env::temp_dir()).map(|_| ())
}

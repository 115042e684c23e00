//! Component lengths, first gaps and level measures of a lambda sequence,
//! next to the explicit intervals of the first levels.

use cantor_density::enclosure::{rational, to_f64};
use cantor_density::{lemma1_quantities, level_intervals, LambdaSequence, Result};

pub fn run() -> Result<Vec<(usize, f64, f64, f64)>> {
    let seq = LambdaSequence::truncated(vec![rational(1, 2), rational(1, 3), rational(1, 4), rational(1, 5)])?;
    let mut rows = Vec::new();
    println!("{:>2}  {:>12}  {:>12}  {:>12}", "n", "r_n", "g_n", "|C_n|");
    for n in 1..=seq.depth() {
        let q = lemma1_quantities(&seq, n)?;
        println!("{n:>2}  {:>12}  {:>12}  {:>12}", q.r.to_string(), q.g.to_string(), q.level_measure.to_string());
        rows.push((n, to_f64(&q.r), to_f64(&q.g), to_f64(&q.level_measure)));
    }
    for (a, b) in level_intervals(&seq, 2)? {
        println!("level 2 component [{a}, {b}]");
    }
    Ok(rows)
}

fn main() -> Result<()> {
    run().map(|_| ())
}

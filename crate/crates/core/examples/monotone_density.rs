//! On each band `[r_n, r_(n-1))` the prefix density is largest at `r_n`;
//! also decomposes a component endpoint into copies of `r_k` plus gaps.

use cantor_density::density::{check_lemma4, Lemma4Config};
use cantor_density::enclosure::rational;
use cantor_density::{CantorApproximation, LambdaSequence, PrefixDecomposition, Precision, Result};

pub fn run() -> Result<(usize, usize)> {
    let prefix = vec![rational(1, 2), rational(1, 3), rational(1, 3), rational(1, 5), rational(1, 8), rational(1, 8)];
    let approx = CantorApproximation::new(&LambdaSequence::truncated(prefix)?, 6, Precision::default())?;
    let report = check_lemma4(&approx, &Lemma4Config { samples_per_band: 50, ..Lemma4Config::default() })?;
    println!(
        "{} samples, {} exact failures, {} decompositions verified",
        report.records.len(),
        report.exact_failures(),
        report.decompositions_checked - report.decomposition_failures
    );
    let d = PrefixDecomposition::of_component(&approx, 2, 6, 13)?;
    println!(
        "component 13 of level 6 inside [0, r_1] ends at {} = {} r_6 + {}",
        d.endpoint, d.copies_of_ik, d.gap_mass
    );
    Ok((report.exact_failures(), report.decomposition_failures))
}

fn main() -> Result<()> {
    run().map(|_| ())
}

//! The densest window of a given length starts at 0: brute force over all
//! breakpoints against the prefix measure.

use cantor_density::enclosure::rational;
use cantor_density::{phi_bruteforce, prefix_measure_level_n, CantorApproximation, LambdaSequence, Precision, Result};

pub fn run() -> Result<usize> {
    let prefix = (1..=10).map(|k| rational(1, k + 1)).collect();
    let approx = CantorApproximation::new(&LambdaSequence::truncated(prefix)?, 10, Precision::default())?;
    let mut agree = 0;
    for s in [rational(1, 1000), rational(1, 7), rational(1, 3), rational(1, 2), rational(9, 10)] {
        let brute = phi_bruteforce(&approx, &s)?;
        let prefix = prefix_measure_level_n(&approx, &s)?;
        println!(
            "s = {s:>6}: window max = prefix measure: {}  ({} breakpoints, {} maximizers, first at {})",
            brute.max_value == prefix,
            brute.candidates,
            brute.witnesses.len(),
            brute.witnesses[0]
        );
        agree += usize::from(brute.max_value == prefix);
    }
    Ok(agree)
}

fn main() -> Result<()> {
    run().map(|_| ())
}

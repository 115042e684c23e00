#![allow(dead_code)]

use cantor_density::enclosure::{from_f64, rational};
use cantor_density::{LambdaSequence, Precision};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Level sets built by literally halving every interval and keeping the
/// left `(1 - lambda)` part of each half.
pub fn halving_levels(lambdas: &[BigRational]) -> Vec<Vec<(BigRational, BigRational)>> {
    let mut levels = vec![vec![(BigRational::zero(), BigRational::one())]];
    for lambda in lambdas {
        let keep = BigRational::one() - lambda;
        let next = levels
            .last()
            .unwrap()
            .iter()
            .flat_map(|(a, b)| {
                let mid = (a + b) / BigRational::from_integer(BigInt::from(2));
                let left = (a.clone(), a + (&mid - a) * &keep);
                let right = (mid.clone(), &mid + (b - &mid) * &keep);
                [left, right]
            })
            .collect();
        levels.push(next);
    }
    levels
}

pub struct OracleQuantities {
    pub r: BigRational,
    pub g: BigRational,
    pub measure: BigRational,
}

/// Component length, first gap and total length at level `n >= 1`.
pub fn oracle_quantities(levels: &[Vec<(BigRational, BigRational)>], n: usize) -> OracleQuantities {
    let level = &levels[n];
    OracleQuantities {
        r: &level[0].1 - &level[0].0,
        g: &level[1].0 - &level[0].1,
        measure: level.iter().map(|(a, b)| b - a).sum(),
    }
}

/// Brute-force `|C_N ∩ [a, b]|` over explicit intervals.
pub fn window_oracle(intervals: &[(BigRational, BigRational)], a: &BigRational, b: &BigRational) -> BigRational {
    intervals
        .iter()
        .map(|(lo, hi)| {
            let l = if lo > a { lo } else { a };
            let h = if hi < b { hi } else { b };
            if l < h {
                h - l
            } else {
                BigRational::zero()
            }
        })
        .sum()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Non-increasing rationals `p / q` in `(0, 1)` with `q <= 64`.
pub fn random_prefix(rng: &mut ChaCha8Rng, depth: usize) -> Vec<BigRational> {
    let mut out: Vec<BigRational> = (0..depth)
        .map(|_| {
            let q: i64 = rng.gen_range(2..=64);
            let p: i64 = rng.gen_range(1..q);
            rational(p, q)
        })
        .collect();
    out.sort_by(|a, b| b.cmp(a));
    out
}

/// A random prefix with a convergent geometric tail.
pub fn random_sequence(rng: &mut ChaCha8Rng, depth: usize) -> LambdaSequence {
    let prefix = random_prefix(rng, depth);
    let last = cantor_density::enclosure::neg_log_enclosure(&(BigRational::one() - &prefix[depth - 1]), Precision::default())
        .unwrap();
    let base = last.lo() * rational(1, 2);
    LambdaSequence::new(prefix, rational(1, 2), base).unwrap()
}

/// Uniform point in `(0, 1]` on the grid `k / 2^40`.
pub fn random_unit(rng: &mut ChaCha8Rng) -> BigRational {
    let k: u64 = rng.gen_range(1..=1u64 << 40);
    BigRational::new(BigInt::from(k), BigInt::from(1u64 << 40))
}

pub fn exact(x: f64) -> BigRational {
    from_f64(x).unwrap()
}

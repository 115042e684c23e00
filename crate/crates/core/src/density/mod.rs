//! Prefix measures of `C_N` and `C`, the maximal density `phi_C`, and the
//! sliding-window oracle.

mod checks;

pub use checks::*;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::construction::{CantorApproximation, Geometry, MAX_LEVEL};
use crate::enclosure::{ceil_dyadic, exp_enclosure, floor_dyadic, Precision, RationalEnclosure};
use crate::error::{Error, Result};

fn check_unit(x: &BigRational) -> Result<()> {
    if x.is_negative() || x > &BigRational::one() {
        return Err(Error::Domain(format!("{x} is outside [0, 1]")));
    }
    Ok(())
}

fn check_window(s: &BigRational) -> Result<()> {
    if !s.is_positive() || s > &BigRational::one() {
        return Err(Error::Domain(format!("window length {s} is outside (0, 1]")));
    }
    Ok(())
}

/// Position of `x` relative to `C_N`.
struct Location {
    /// Components lying entirely in `[0, x]`.
    full: usize,
    /// Length of `[0, x]` inside the next component, `0 <= overlap < r_N`.
    overlap: BigRational,
}

fn locate(geo: &Geometry, x: &BigRational) -> Location {
    let (p, q) = (x.numer(), x.denom());
    let target = p * &geo.denom;
    // components with left endpoint strictly below x
    let k = geo.lefts.partition_point(|l| l * q < target);
    if k == 0 {
        return Location { full: 0, overlap: BigRational::zero() };
    }
    let left = &geo.lefts[k - 1];
    let inside = BigRational::new(&target - left * q, q * &geo.denom);
    let width = BigRational::new(geo.width.clone(), geo.denom.clone());
    if inside >= width {
        Location { full: k, overlap: BigRational::zero() }
    } else {
        Location { full: k - 1, overlap: inside }
    }
}

/// `|C_N ∩ [0, x]|`, exact.
pub fn prefix_measure_level_n(approx: &CantorApproximation, x: &BigRational) -> Result<BigRational> {
    check_unit(x)?;
    let loc = locate(approx.geometry(), x);
    let r = approx.r(approx.level());
    Ok(r * BigInt::from(loc.full) + loc.overlap)
}

/// Enclosure of `|C ∩ [0, x]|` from level-N data alone: full components
/// contribute `r_N tau_N`, the partial one between `0` and
/// `min(overlap, r_N tau_N)`.
pub fn prefix_measure_bounds(approx: &CantorApproximation, x: &BigRational) -> Result<RationalEnclosure> {
    check_unit(x)?;
    let loc = locate(approx.geometry(), x);
    Ok(coarse_bounds(approx, &loc))
}

fn coarse_bounds(approx: &CantorApproximation, loc: &Location) -> RationalEnclosure {
    let r = approx.r(approx.level());
    let tau = approx.tail_factor();
    let full = tau.scale(&(r * BigInt::from(loc.full)));
    let partial_hi = loc.overlap.clone().min(r * tau.hi());
    RationalEnclosure::new(full.lo().clone(), full.hi() + partial_hi)
}

/// Enclosure of `phi_C(s) = |C ∩ [0, s]| / s`.
pub fn phi(approx: &CantorApproximation, s: &BigRational) -> Result<RationalEnclosure> {
    check_window(s)?;
    Ok(prefix_measure_bounds(approx, s)?.scale(&s.recip()))
}

/// Tighter prefix enclosures obtained by descending `extra` levels below
/// `N` inside the partially covered component.
///
/// With `A_m = (1 - lambda_m) / 2` and `Q_m(u)` the retained fraction of the
/// first `u`-share of a level-m component,
/// `Q_m(u) = A Q_{m+1}(u / A)` for `u <= 1/2` and
/// `Q_m(u) = A tau_{m+1} + A Q_{m+1}((u - 1/2) / A)` otherwise, where
/// `Q_m(u) = tau_m` once `u >= 1`.
#[derive(Clone, Debug)]
pub struct PrefixEvaluator {
    approx: CantorApproximation,
    extra: usize,
    bits: u32,
    /// `A_{N+1}, ..., A_{N+extra}`.
    halves: Vec<RationalEnclosure>,
    /// `tau_N, ..., tau_{N+extra}`.
    taus: Vec<RationalEnclosure>,
}

impl PrefixEvaluator {
    pub fn new(approx: &CantorApproximation, extra: usize) -> Self {
        Self::with_precision(approx, extra, approx.precision())
    }

    pub fn with_precision(approx: &CantorApproximation, extra: usize, prec: Precision) -> Self {
        let approx = if prec == approx.precision() { approx.clone() } else { approx.with_precision(prec) };
        let seq = approx.lambda();
        let n = approx.level();
        let bits = prec.working_bits() + extra as u32;
        let half = BigRational::new(BigInt::one(), BigInt::from(2));
        let halves = (n + 1..=n + extra)
            .map(|m| match seq.lambda(m) {
                Some(l) => RationalEnclosure::point((BigRational::one() - l) * &half),
                None => {
                    if seq.is_truncated() {
                        return RationalEnclosure::point(half.clone());
                    }
                    let k = m - seq.depth();
                    let ell = seq.tail_base() * num_traits::pow(seq.tail_ratio().clone(), k);
                    exp_enclosure(&-ell, prec).scale(&half).round_outward(bits)
                }
            })
            .collect();
        let taus = (n..=n + extra).map(|m| seq.tail_product(m, prec)).collect();
        PrefixEvaluator { approx, extra, bits, halves, taus }
    }

    pub fn approximation(&self) -> &CantorApproximation {
        &self.approx
    }

    pub fn extra_levels(&self) -> usize {
        self.extra
    }

    pub fn precision(&self) -> Precision {
        self.approx.precision()
    }

    /// Enclosure of `|C ∩ [0, x]|`, never wider than
    /// [`prefix_measure_bounds`] and contained in it.
    pub fn prefix_bounds(&self, x: &BigRational) -> Result<RationalEnclosure> {
        check_unit(x)?;
        let loc = locate(self.approx.geometry(), x);
        let coarse = coarse_bounds(&self.approx, &loc);
        if self.extra == 0 || loc.overlap.is_zero() {
            return Ok(coarse);
        }
        let r = self.approx.r(self.approx.level());
        let u = &loc.overlap / r;
        let (q_lo, q_hi) = (self.fraction_lower(u.clone()), self.fraction_upper(u));
        let full_lo = r * BigInt::from(loc.full) * self.taus[0].lo();
        let full_hi = r * BigInt::from(loc.full) * self.taus[0].hi();
        let lo = (full_lo + r * q_lo).max(coarse.lo().clone());
        let hi = (full_hi + r * q_hi).min(coarse.hi().clone());
        Ok(RationalEnclosure::new(lo.min(hi.clone()), hi))
    }

    pub fn phi(&self, s: &BigRational) -> Result<RationalEnclosure> {
        check_window(s)?;
        Ok(self.prefix_bounds(s)?.scale(&s.recip()))
    }

    fn fraction_lower(&self, mut u: BigRational) -> BigRational {
        let one = BigRational::one();
        let half = BigRational::new(BigInt::one(), BigInt::from(2));
        let mut acc = BigRational::zero();
        let mut scale = BigRational::one();
        for k in 0..=self.extra {
            if u >= one {
                return floor_dyadic(&(acc + scale * self.taus[k].lo()), self.bits);
            }
            if k == self.extra {
                break;
            }
            let a = &self.halves[k];
            if u > half {
                acc += &scale * a.lo() * self.taus[k + 1].lo();
                u -= &half;
            }
            scale = floor_dyadic(&(scale * a.lo()), self.bits);
            u = floor_dyadic(&(u / a.hi()), self.bits);
            acc = floor_dyadic(&acc, self.bits);
        }
        acc
    }

    fn fraction_upper(&self, mut u: BigRational) -> BigRational {
        let one = BigRational::one();
        let half = BigRational::new(BigInt::one(), BigInt::from(2));
        let mut acc = BigRational::zero();
        let mut scale = BigRational::one();
        for k in 0..=self.extra {
            let tau = self.taus[k].hi();
            if u >= one || k == self.extra {
                let last = if u >= one { tau.clone() } else { u.min(tau.clone()) };
                return ceil_dyadic(&(acc + scale * last), self.bits);
            }
            let a = &self.halves[k];
            if u > half {
                acc += &scale * a.hi() * self.taus[k + 1].hi();
                u -= &half;
            }
            scale = ceil_dyadic(&(scale * a.hi()), self.bits);
            u = ceil_dyadic(&(u / a.lo()), self.bits);
            acc = ceil_dyadic(&acc, self.bits);
        }
        unreachable!("loop returns at the last level")
    }
}

/// Exact maximum of `a -> |C_N ∩ [a, a + s]|` with every maximizing
/// breakpoint.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BruteForceMax {
    pub max_value: BigRational,
    /// Sorted ascending, deduplicated.
    pub witnesses: Vec<BigRational>,
    /// Breakpoints enumerated.
    pub candidates: usize,
}

impl BruteForceMax {
    pub fn density(&self, s: &BigRational) -> BigRational {
        &self.max_value / s
    }
}

/// Default cap on the level accepted by [`phi_bruteforce`].
pub const BRUTEFORCE_MAX_LEVEL: usize = 20;

/// Screening slack: a floating-point window measure is within `1e-14` of
/// the exact one, so every exact maximizer scores within twice that of the
/// floating-point maximum.
const SCREEN_MARGIN: f64 = 1e-11;

pub fn phi_bruteforce(approx: &CantorApproximation, s: &BigRational) -> Result<BruteForceMax> {
    phi_bruteforce_capped(approx, s, BRUTEFORCE_MAX_LEVEL)
}

/// Enumerates the breakpoints `L`, `L + r_N`, `L - s`, `L + r_N - s` (each
/// component left endpoint `L`) together with `0` and `1 - s`, clipped to
/// `[0, 1 - s]`. Every breakpoint is scored in floating point; those within
/// the screening margin of the best score are rescored exactly.
pub fn phi_bruteforce_capped(approx: &CantorApproximation, s: &BigRational, cap: usize) -> Result<BruteForceMax> {
    check_window(s)?;
    if approx.level() > cap.min(MAX_LEVEL) {
        return Err(Error::ResourceLimit(format!(
            "brute force over 2^{} components exceeds the cap 2^{}",
            approx.level(),
            cap.min(MAX_LEVEL)
        )));
    }
    let geo = approx.geometry();
    let lefts = geo.lefts_f64();
    let w = crate::enclosure::to_f64(&BigRational::new(geo.width.clone(), geo.denom.clone()));
    let sf = crate::enclosure::to_f64(s);
    let amax = (1.0 - sf).max(0.0);

    let measure = |x: f64, ptr: &mut usize| -> f64 {
        while *ptr < lefts.len() && lefts[*ptr] <= x {
            *ptr += 1;
        }
        if *ptr == 0 {
            0.0
        } else {
            (*ptr - 1) as f64 * w + (x - lefts[*ptr - 1]).clamp(0.0, w)
        }
    };

    #[derive(Clone, Copy)]
    enum Kind {
        Left,
        Right,
        LeftMinus,
        RightMinus,
        Zero,
        End,
    }
    let shifts = [(Kind::Left, 0.0, 0.0), (Kind::Right, w, 0.0), (Kind::LeftMinus, 0.0, sf), (Kind::RightMinus, w, sf)];
    let mut scored: Vec<(f64, Kind, usize)> = Vec::with_capacity(4 * lefts.len() + 2);
    let mut best = f64::NEG_INFINITY;
    for &(kind, plus, minus) in &shifts {
        let (mut p_lo, mut p_hi) = (0usize, 0usize);
        for (i, &l) in lefts.iter().enumerate() {
            let a = (l + plus - minus).clamp(0.0, amax);
            let v = measure(a + sf, &mut p_hi) - measure(a, &mut p_lo);
            best = best.max(v);
            scored.push((v, kind, i));
        }
    }
    for (kind, a) in [(Kind::Zero, 0.0), (Kind::End, amax)] {
        let (mut p_lo, mut p_hi) = (0usize, 0usize);
        let v = measure(a + sf, &mut p_hi) - measure(a, &mut p_lo);
        best = best.max(v);
        scored.push((v, kind, 0));
    }
    let candidates = scored.len();

    // exact rescoring in integer units of 1 / (D q), where s = p / q
    let (p, q) = (s.numer(), s.denom());
    let scale = &geo.denom * q;
    let lefts_q: Vec<BigInt> = geo.lefts.iter().map(|l| l * q).collect();
    let width_q = &geo.width * q;
    let s_int = p * &geo.denom;
    let end = &scale - &s_int;
    let exact_a = |kind: Kind, i: usize| -> BigInt {
        let a = match kind {
            Kind::Left => lefts_q[i].clone(),
            Kind::Right => &lefts_q[i] + &width_q,
            Kind::LeftMinus => &lefts_q[i] - &s_int,
            Kind::RightMinus => &lefts_q[i] + &width_q - &s_int,
            Kind::Zero => BigInt::zero(),
            Kind::End => end.clone(),
        };
        a.clamp(BigInt::zero(), end.clone())
    };
    let mut max_value: Option<BigInt> = None;
    let mut witnesses: Vec<BigInt> = Vec::new();
    for &(v, kind, i) in &scored {
        if v < best - SCREEN_MARGIN {
            continue;
        }
        let a = exact_a(kind, i);
        let b = &a + &s_int;
        let value = window_measure(&lefts_q, &width_q, &a, &b);
        match &max_value {
            Some(m) if &value < m => {}
            Some(m) if &value == m => witnesses.push(a),
            _ => {
                max_value = Some(value);
                witnesses = vec![a];
            }
        }
    }
    witnesses.sort();
    witnesses.dedup();
    let max_value = max_value.expect("at least the breakpoint 0 survives screening");
    Ok(BruteForceMax {
        max_value: BigRational::new(max_value, scale.clone()),
        witnesses: witnesses.into_iter().map(|a| BigRational::new(a, scale.clone())).collect(),
        candidates,
    })
}

/// `|C_N ∩ [a, b]|` in integer units: components strictly inside count
/// whole, the two boundary ones are clipped.
fn window_measure(lefts: &[BigInt], w: &BigInt, a: &BigInt, b: &BigInt) -> BigInt {
    let clip = |lo: &BigInt| -> BigInt {
        let hi = lo + w;
        let from = if lo > a { lo } else { a };
        let to = if &hi < b { &hi } else { b };
        if to > from {
            to - from
        } else {
            BigInt::zero()
        }
    };
    // components meeting (a, b) are first..last
    let a_minus_w = a - w;
    let first = lefts.partition_point(|l| l <= &a_minus_w);
    let last = lefts.partition_point(|l| l < b);
    if last <= first {
        BigInt::zero()
    } else if last - first == 1 {
        clip(&lefts[first])
    } else {
        clip(&lefts[first]) + clip(&lefts[last - 1]) + w * BigInt::from(last - first - 2)
    }
}

/// Decomposition of the right endpoint `b` of a level-k component lying in
/// `I_{n-1} = [0, r_{n-1}]` as `copies * r_k + gap_mass`.
///
/// `theta_i` is the address bit of level `n + i`;
/// `b = r_k + sum theta_i (r_{n+i} + g_{n+i})`,
/// `copies = 1 + sum theta_i 2^(k-n-i)`,
/// `gap_mass = sum theta_i (G_{n+i} + g_{n+i})` with `G_k = 0` and
/// `G_j = 2 G_{j+1} + 2 g_{j+1}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PrefixDecomposition {
    pub n: usize,
    pub k: usize,
    pub theta: Vec<bool>,
    pub copies_of_ik: BigInt,
    pub gap_mass: BigRational,
    /// `G_n, ..., G_k`.
    pub gaps: Vec<BigRational>,
    pub endpoint: BigRational,
}

impl PrefixDecomposition {
    /// Decomposes the `index`-th level-k component from the left; the
    /// component must lie in `I_{n-1}`, i.e. `index < 2^(k-n+1)`.
    pub fn of_component(approx: &CantorApproximation, n: usize, k: usize, index: usize) -> Result<Self> {
        if n == 0 || n > k || k > approx.level() {
            return Err(Error::IndexOutOfRange { index: k, depth: approx.level() });
        }
        let span = k - n + 1;
        if span < usize::BITS as usize && index >> span != 0 {
            return Err(Error::InvalidArgument(format!("component {index} is not inside I_{}", n - 1)));
        }
        let r = |m: usize| approx.r(m);
        let g = |m: usize| approx.g(m);
        let theta: Vec<bool> = (0..span).map(|i| (index >> (span - 1 - i)) & 1 == 1).collect();

        let mut gaps = vec![BigRational::zero(); span];
        for j in (n..k).rev() {
            gaps[j - n] = &gaps[j + 1 - n] * BigInt::from(2) + g(j + 1) * BigInt::from(2);
        }
        let mut copies = BigInt::one();
        let mut gap_mass = BigRational::zero();
        let mut endpoint = r(k).clone();
        for (i, &t) in theta.iter().enumerate() {
            if t {
                copies += BigInt::one() << (k - n - i);
                gap_mass += &gaps[i] + g(n + i);
                endpoint += r(n + i) + g(n + i);
            }
        }
        Ok(PrefixDecomposition { n, k, theta, copies_of_ik: copies, gap_mass, gaps, endpoint })
    }

    pub fn reconstruct(&self, approx: &CantorApproximation) -> BigRational {
        approx.r(self.k) * &self.copies_of_ik + &self.gap_mass
    }

    /// Checks the decomposition against the geometry: the reconstruction,
    /// the closed form of each `G`, the identity
    /// `r_{n+i} = 2^(k-n-i) r_k + G_{n+i}`, and
    /// `|C_k ∩ [0, b]| = copies * r_k` when `k` is the approximation level.
    pub fn verify(&self, approx: &CantorApproximation) -> bool {
        let (n, k) = (self.n, self.k);
        if self.reconstruct(approx) != self.endpoint {
            return false;
        }
        for i in 0..=k - n {
            let closed: BigRational = (i + 1..=k - n)
                .map(|j| approx.g(n + j) * (BigInt::one() << (j - i)))
                .fold(BigRational::zero(), |a, b| a + b);
            if closed != self.gaps[i] {
                return false;
            }
            let rebuilt = approx.r(k) * (BigInt::one() << (k - n - i)) + &self.gaps[i];
            if &rebuilt != approx.r(n + i) {
                return false;
            }
        }
        if k == approx.level() {
            match prefix_measure_level_n(approx, &self.endpoint) {
                Ok(m) => m == approx.r(k) * &self.copies_of_ik,
                Err(_) => false,
            }
        } else {
            true
        }
    }

    pub fn copies(&self) -> Option<u64> {
        self.copies_of_ik.to_u64()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::construction::LambdaSequence;
    use crate::enclosure::rational as r;

    fn approx(prefix: Vec<BigRational>, level: usize) -> CantorApproximation {
        let seq = LambdaSequence::truncated(prefix).unwrap();
        CantorApproximation::new(&seq, level, Precision::default()).unwrap()
    }

    #[test]
    fn level_n_prefix_examples() {
        let a = approx(vec![r(1, 3)], 1);
        assert_eq!(prefix_measure_level_n(&a, &r(1, 2)).unwrap(), r(1, 3));
        assert_eq!(prefix_measure_level_n(&a, &r(0, 1)).unwrap(), r(0, 1));
        assert_eq!(prefix_measure_level_n(&a, &r(1, 1)).unwrap(), r(2, 3));
        assert_eq!(prefix_measure_level_n(&a, &r(2, 3)).unwrap(), r(1, 2));
        assert!(prefix_measure_level_n(&a, &r(3, 2)).is_err());
        assert!(prefix_measure_level_n(&a, &r(-1, 2)).is_err());
    }

    #[test]
    fn bruteforce_examples() {
        let a = approx(vec![r(1, 3)], 1);
        let b = phi_bruteforce(&a, &r(1, 3)).unwrap();
        assert_eq!(b.max_value, r(1, 3));
        assert!(b.witnesses.contains(&r(0, 1)) && b.witnesses.contains(&r(1, 2)));
        let full = phi_bruteforce(&a, &r(1, 1)).unwrap();
        assert_eq!((full.max_value, full.witnesses), (r(2, 3), vec![r(0, 1)]));
        let a2 = approx(vec![r(1, 3), r(1, 3)], 2);
        let b2 = phi_bruteforce(&a2, &r(1, 6)).unwrap();
        assert_eq!(b2.max_value, r(1, 9));
        assert!(b2.witnesses.contains(&r(0, 1)));
        assert!(phi_bruteforce(&a2, &r(0, 1)).is_err());
        assert!(matches!(phi_bruteforce_capped(&a2, &r(1, 2), 1), Err(Error::ResourceLimit(_))));
    }

    #[test]
    fn coarse_bounds_examples() {
        let seq = LambdaSequence::new(vec![r(1, 4), r(1, 8)], r(1, 2), r(1, 16)).unwrap();
        let a = CantorApproximation::new(&seq, 2, Precision::default()).unwrap();
        let whole = prefix_measure_bounds(&a, &r(1, 1)).unwrap();
        assert_eq!(whole, a.measure());
        let r1 = a.r(1).clone();
        let at_r1 = prefix_measure_bounds(&a, &r1).unwrap();
        assert_eq!(at_r1, seq.tail_product(1, Precision::default()).scale(&r1));
        let in_gap = &r1 + a.g(1) / BigInt::from(2);
        assert_eq!(prefix_measure_bounds(&a, &in_gap).unwrap(), at_r1);
        assert_eq!(phi(&a, &r(1, 1)).unwrap(), a.measure());
    }

    #[test]
    fn refined_bounds_nest_and_shrink() {
        let seq = LambdaSequence::new(vec![r(1, 4), r(1, 8), r(1, 16)], r(1, 2), r(1, 32)).unwrap();
        let a = CantorApproximation::new(&seq, 2, Precision::default()).unwrap();
        let ev = PrefixEvaluator::new(&a, 12);
        for x in [r(1, 7), r(2, 5), r(5, 9), r(99, 100)] {
            let coarse = prefix_measure_bounds(&a, &x).unwrap();
            let fine = ev.prefix_bounds(&x).unwrap();
            assert!(coarse.encloses(&fine), "{x}");
            assert!(fine.width() * BigInt::from(1000) < a.r(2).clone());
        }
    }

    #[test]
    fn decomposition_round_trip() {
        let a = approx(vec![r(1, 3), r(1, 4), r(1, 5), r(1, 6)], 4);
        for n in 1..=4 {
            for idx in 0..(1usize << (4 - n + 1)) {
                let d = PrefixDecomposition::of_component(&a, n, 4, idx).unwrap();
                assert!(d.verify(&a), "n={n} idx={idx}");
                assert_eq!(d.endpoint, a.component(idx).1);
            }
        }
        assert!(PrefixDecomposition::of_component(&a, 2, 4, 8).is_err());
    }
}

//! Exact rational enclosures and certified transcendental bounds.
//!
//! Every quantity that is defined through an infinite product or a
//! transcendental function is carried as a pair `[lo, hi]` of exact
//! rationals. Series evaluations round outward to dyadic rationals so that
//! the size of the numbers stays bounded while every bracket remains valid.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Arbitrary-precision signed rational used for every length, measure and
/// density in the exact part of the crate.
pub type ExactRational = BigRational;

/// Extra bits carried by series evaluations beyond the requested precision.
const GUARD_BITS: u32 = 32;

/// Remainder bound `2^-bits` for series evaluations.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Precision {
    bits: u32,
}

impl Precision {
    pub const MIN_BITS: u32 = 32;
    pub const MAX_BITS: u32 = 256;

    /// Validated constructor accepting `2^-32 ..= 2^-256`.
    pub fn new(bits: u32) -> Result<Self> {
        if !(Self::MIN_BITS..=Self::MAX_BITS).contains(&bits) {
            return Err(Error::InvalidArgument(format!(
                "precision 2^-{bits} outside 2^-{}..=2^-{}",
                Self::MIN_BITS,
                Self::MAX_BITS
            )));
        }
        Ok(Precision { bits })
    }

    /// Parses `"64"`, `"2^-64"` or `"2^(-64)"`.
    pub fn parse(text: &str) -> Result<Self> {
        let t: String = text.chars().filter(|c| !c.is_whitespace()).collect();
        let digits = t
            .strip_prefix("2^")
            .map(|rest| rest.trim_start_matches('(').trim_end_matches(')'))
            .map(|rest| {
                rest.strip_prefix('-').ok_or_else(|| {
                    Error::Parse(format!("precision exponent must be negative: {text}"))
                })
            })
            .transpose()?
            .unwrap_or(&t);
        let bits: u32 = digits
            .parse()
            .map_err(|_| Error::Parse(format!("unrecognised precision {text:?}")))?;
        Self::new(bits)
    }

    pub fn bits(self) -> u32 {
        self.bits
    }

    /// Halves the series remainder bound. Escalation may leave the
    /// user-facing range.
    pub fn escalated(self) -> Self {
        Precision { bits: self.bits + 1 }
    }

    pub(crate) fn working_bits(self) -> u32 {
        self.bits + GUARD_BITS
    }
}

impl Default for Precision {
    fn default() -> Self {
        Precision { bits: 64 }
    }
}

impl fmt::Display for Precision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "2^-{}", self.bits)
    }
}

pub fn rational(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

pub fn pow2(exp: u32) -> BigInt {
    BigInt::one() << exp as usize
}

/// Largest multiple of `2^-bits` not above `x`.
pub fn floor_dyadic(x: &BigRational, bits: u32) -> BigRational {
    let scale = pow2(bits);
    let n = (x * BigRational::from_integer(scale.clone())).floor().to_integer();
    BigRational::new(n, scale)
}

/// Smallest multiple of `2^-bits` not below `x`.
pub fn ceil_dyadic(x: &BigRational, bits: u32) -> BigRational {
    let scale = pow2(bits);
    let n = (x * BigRational::from_integer(scale.clone())).ceil().to_integer();
    BigRational::new(n, scale)
}

pub fn to_f64(x: &BigRational) -> f64 {
    // Ratio::to_f64 handles huge numerators/denominators without overflow.
    x.to_f64().unwrap_or(f64::NAN)
}

/// Exact conversion of a finite float.
pub fn from_f64(x: f64) -> Result<BigRational> {
    BigRational::from_float(x).ok_or_else(|| Error::Domain(format!("non-finite value {x}")))
}

/// Certified bracket `[lo, hi]` around an exactly defined real number.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RationalEnclosure {
    lo: BigRational,
    hi: BigRational,
}

/// Outcome of comparing two enclosures.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EnclosureOrdering {
    /// Every point of the left bracket is strictly below the right one.
    Less,
    /// Every point of the left bracket is strictly above the right one.
    Greater,
    Overlapping,
}

impl RationalEnclosure {
    pub fn new(lo: BigRational, hi: BigRational) -> Self {
        assert!(lo <= hi, "enclosure with lo > hi");
        RationalEnclosure { lo, hi }
    }

    pub fn point(x: BigRational) -> Self {
        RationalEnclosure { lo: x.clone(), hi: x }
    }

    pub fn zero() -> Self {
        Self::point(BigRational::zero())
    }

    pub fn one() -> Self {
        Self::point(BigRational::one())
    }

    pub fn lo(&self) -> &BigRational {
        &self.lo
    }

    pub fn hi(&self) -> &BigRational {
        &self.hi
    }

    pub fn into_bounds(self) -> (BigRational, BigRational) {
        (self.lo, self.hi)
    }

    pub fn width(&self) -> BigRational {
        &self.hi - &self.lo
    }

    pub fn midpoint(&self) -> BigRational {
        (&self.lo + &self.hi) / BigInt::from(2)
    }

    pub fn is_point(&self) -> bool {
        self.lo == self.hi
    }

    pub fn contains(&self, x: &BigRational) -> bool {
        &self.lo <= x && x <= &self.hi
    }

    /// True when `inner` lies inside `self`.
    pub fn encloses(&self, inner: &RationalEnclosure) -> bool {
        self.lo <= inner.lo && inner.hi <= self.hi
    }

    pub fn overlaps(&self, other: &RationalEnclosure) -> bool {
        self.lo <= other.hi && other.lo <= self.hi
    }

    pub fn compare(&self, other: &RationalEnclosure) -> EnclosureOrdering {
        if self.hi < other.lo {
            EnclosureOrdering::Less
        } else if self.lo > other.hi {
            EnclosureOrdering::Greater
        } else {
            EnclosureOrdering::Overlapping
        }
    }

    pub fn scale(&self, k: &BigRational) -> Self {
        if k.is_negative() {
            RationalEnclosure::new(&self.hi * k, &self.lo * k)
        } else {
            RationalEnclosure::new(&self.lo * k, &self.hi * k)
        }
    }

    pub fn recip(&self) -> Result<Self> {
        if self.lo.is_positive() || self.hi.is_negative() {
            Ok(RationalEnclosure::new(self.hi.recip(), self.lo.recip()))
        } else {
            Err(Error::Domain("division by an enclosure containing zero".into()))
        }
    }

    pub fn div(&self, other: &RationalEnclosure) -> Result<Self> {
        Ok(self * &other.recip()?)
    }

    pub fn min(&self, other: &RationalEnclosure) -> Self {
        RationalEnclosure::new(
            (&self.lo).min(&other.lo).clone(),
            (&self.hi).min(&other.hi).clone(),
        )
    }

    pub fn max(&self, other: &RationalEnclosure) -> Self {
        RationalEnclosure::new(
            (&self.lo).max(&other.lo).clone(),
            (&self.hi).max(&other.hi).clone(),
        )
    }

    pub fn hull(&self, other: &RationalEnclosure) -> Self {
        RationalEnclosure::new(
            (&self.lo).min(&other.lo).clone(),
            (&self.hi).max(&other.hi).clone(),
        )
    }

    /// Intersects with `[lo, hi]`, collapsing to the nearest bound if disjoint.
    pub fn clamp(&self, lo: &BigRational, hi: &BigRational) -> Self {
        let l = self.lo.clone().max(lo.clone()).min(hi.clone());
        let h = self.hi.clone().min(hi.clone()).max(l.clone());
        RationalEnclosure::new(l, h)
    }

    pub fn round_outward(&self, bits: u32) -> Self {
        RationalEnclosure::new(floor_dyadic(&self.lo, bits), ceil_dyadic(&self.hi, bits))
    }

    pub fn powi(&self, k: u32) -> Self {
        if k == 0 {
            return Self::one();
        }
        let pl = num_traits::pow(self.lo.clone(), k as usize);
        let ph = num_traits::pow(self.hi.clone(), k as usize);
        if !self.lo.is_negative() {
            RationalEnclosure::new(pl, ph)
        } else if !self.hi.is_positive() {
            if k % 2 == 0 {
                RationalEnclosure::new(ph, pl)
            } else {
                RationalEnclosure::new(pl, ph)
            }
        } else if k % 2 == 0 {
            RationalEnclosure::new(BigRational::zero(), pl.max(ph))
        } else {
            RationalEnclosure::new(pl, ph)
        }
    }

    pub fn sqrt(&self, prec: Precision) -> Result<Self> {
        if self.lo.is_negative() {
            return Err(Error::Domain("square root of a negative enclosure".into()));
        }
        let lo = sqrt_bounds(&self.lo, prec.working_bits()).0;
        let hi = sqrt_bounds(&self.hi, prec.working_bits()).1;
        Ok(RationalEnclosure::new(lo, hi))
    }

    pub fn to_f64_bounds(&self) -> (f64, f64) {
        (to_f64(&self.lo), to_f64(&self.hi))
    }
}

impl fmt::Display for RationalEnclosure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{:.12}, {:.12}]", to_f64(&self.lo), to_f64(&self.hi))
    }
}

impl Add for &RationalEnclosure {
    type Output = RationalEnclosure;
    fn add(self, rhs: &RationalEnclosure) -> RationalEnclosure {
        RationalEnclosure::new(&self.lo + &rhs.lo, &self.hi + &rhs.hi)
    }
}

impl Sub for &RationalEnclosure {
    type Output = RationalEnclosure;
    fn sub(self, rhs: &RationalEnclosure) -> RationalEnclosure {
        RationalEnclosure::new(&self.lo - &rhs.hi, &self.hi - &rhs.lo)
    }
}

impl Mul for &RationalEnclosure {
    type Output = RationalEnclosure;
    fn mul(self, rhs: &RationalEnclosure) -> RationalEnclosure {
        if !self.lo.is_negative() && !rhs.lo.is_negative() {
            return RationalEnclosure::new(&self.lo * &rhs.lo, &self.hi * &rhs.hi);
        }
        let products = [
            &self.lo * &rhs.lo,
            &self.lo * &rhs.hi,
            &self.hi * &rhs.lo,
            &self.hi * &rhs.hi,
        ];
        let lo = products.iter().min().cloned().unwrap();
        let hi = products.iter().max().cloned().unwrap();
        RationalEnclosure::new(lo, hi)
    }
}

impl Neg for &RationalEnclosure {
    type Output = RationalEnclosure;
    fn neg(self) -> RationalEnclosure {
        RationalEnclosure::new(-&self.hi, -&self.lo)
    }
}

/// `(floor, ceil)` of `sqrt(x)` at dyadic resolution `2^-bits`.
fn sqrt_bounds(x: &BigRational, bits: u32) -> (BigRational, BigRational) {
    if x.is_zero() {
        return (BigRational::zero(), BigRational::zero());
    }
    // sqrt(p/q) * 2^bits = sqrt(p * q * 4^bits) / q
    let p = x.numer();
    let q = x.denom();
    let radicand = p * q * pow2(2 * bits);
    let root = radicand.sqrt();
    let den = q * pow2(bits);
    let lo = BigRational::new(root.clone(), den.clone());
    if &root * &root == radicand {
        return (lo.clone(), lo);
    }
    let hi = BigRational::new(root + 1, den);
    (floor_dyadic(&lo, bits), ceil_dyadic(&hi, bits))
}

/// Number of halvings needed to bring a non-negative `x` below `1/2`.
fn halvings_below_half(x: &BigRational) -> u32 {
    let nb = x.numer().bits() as i64;
    let db = x.denom().bits() as i64;
    // x < 2^(nb - db + 1)
    (nb - db + 2).max(0) as u32
}

/// Enclosure of `exp(x)` for `x >= 0`.
fn exp_nonneg(x: &BigRational, bits: u32) -> RationalEnclosure {
    if x.is_zero() {
        return RationalEnclosure::one();
    }
    let m = halvings_below_half(x);
    let inner = bits + 8 + m;
    let y = x / BigRational::from_integer(pow2(m));
    // Outward rounding keeps terms at or above 2^-inner, so stop earlier.
    let threshold = BigRational::new(BigInt::one(), pow2(bits + 4 + m));

    let mut term_lo = BigRational::one();
    let mut term_hi = BigRational::one();
    let mut sum_lo = BigRational::one();
    let mut sum_hi = BigRational::one();
    let mut k = 1i64;
    loop {
        let kk = BigRational::from_integer(BigInt::from(k));
        term_lo = floor_dyadic(&(&term_lo * &y / &kk), inner);
        term_hi = ceil_dyadic(&(&term_hi * &y / &kk), inner);
        sum_lo += &term_lo;
        sum_hi += &term_hi;
        if term_hi < threshold {
            break;
        }
        k += 1;
    }
    // With y <= 1/2 the remaining tail is at most twice the next term,
    // which in turn is at most the last term included.
    sum_hi += &term_hi;

    let mut lo = floor_dyadic(&sum_lo, inner);
    let mut hi = ceil_dyadic(&sum_hi, inner);
    for _ in 0..m {
        lo = floor_dyadic(&(&lo * &lo), inner);
        hi = ceil_dyadic(&(&hi * &hi), inner);
    }
    RationalEnclosure::new(floor_dyadic(&lo, bits), ceil_dyadic(&hi, bits))
}

/// Certified enclosure of `exp(x)`.
pub fn exp_enclosure(x: &BigRational, prec: Precision) -> RationalEnclosure {
    let bits = prec.working_bits();
    if x.is_negative() {
        let e = exp_nonneg(&-x, bits);
        RationalEnclosure::new(
            floor_dyadic(&e.hi.recip(), bits),
            ceil_dyadic(&e.lo.recip(), bits),
        )
    } else {
        exp_nonneg(x, bits)
    }
}

/// `2 * atanh(z)` for `0 <= z <= 1/3`, i.e. `log((1 + z) / (1 - z))`.
fn log_ratio_series(z: &BigRational, bits: u32) -> RationalEnclosure {
    if z.is_zero() {
        return RationalEnclosure::zero();
    }
    let inner = bits + 8;
    let z2 = z * z;
    let threshold = BigRational::new(BigInt::one(), pow2(bits + 4));
    let mut pow_lo = z.clone();
    let mut pow_hi = z.clone();
    let mut sum_lo = BigRational::zero();
    let mut sum_hi = BigRational::zero();
    let mut k = 0i64;
    loop {
        let denom = BigRational::from_integer(BigInt::from(2 * k + 1));
        sum_lo += floor_dyadic(&(&pow_lo / &denom), inner);
        sum_hi += ceil_dyadic(&(&pow_hi / &denom), inner);
        pow_lo = floor_dyadic(&(&pow_lo * &z2), inner);
        pow_hi = ceil_dyadic(&(&pow_hi * &z2), inner);
        k += 1;
        if pow_hi < threshold {
            break;
        }
    }
    // Tail after the last term: sum_{j>=k} z^(2j+1)/(2j+1) <= pow * 9/8 / (2k+1) <= pow.
    sum_hi += &pow_hi;
    let two = BigRational::from_integer(BigInt::from(2));
    RationalEnclosure::new(&sum_lo * &two, &sum_hi * &two)
}

/// Certified enclosure of `ln(x)` for `x > 0`.
pub fn log_enclosure(x: &BigRational, prec: Precision) -> Result<RationalEnclosure> {
    if !x.is_positive() {
        return Err(Error::Domain(format!("logarithm of non-positive value {x}")));
    }
    let bits = prec.working_bits();
    let mut e = x.numer().bits() as i64 - x.denom().bits() as i64;
    let mut m = if e >= 0 {
        x / BigRational::from_integer(pow2(e as u32))
    } else {
        x * BigRational::from_integer(pow2((-e) as u32))
    };
    let one = BigRational::one();
    let two = BigRational::from_integer(BigInt::from(2));
    while m < one {
        m *= &two;
        e -= 1;
    }
    while m >= two {
        m /= &two;
        e += 1;
    }
    let z = (&m - &one) / (&m + &one);
    let log_m = log_ratio_series(&z, bits);
    let result = if e == 0 {
        log_m
    } else {
        let log2 = log_ratio_series(&rational(1, 3), bits);
        let scaled = log2.scale(&BigRational::from_integer(BigInt::from(e)));
        &scaled + &log_m
    };
    Ok(result.round_outward(bits))
}

/// Enclosure of `-ln(x)` for `0 < x`.
pub fn neg_log_enclosure(x: &BigRational, prec: Precision) -> Result<RationalEnclosure> {
    Ok(-&log_enclosure(x, prec)?)
}

/// Total order helper for enclosure lower bounds.
pub fn cmp_lo(a: &RationalEnclosure, b: &RationalEnclosure) -> Ordering {
    a.lo.cmp(&b.lo)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, d: i64) -> BigRational {
        rational(n, d)
    }

    #[test]
    fn precision_parsing() {
        assert_eq!(Precision::parse("64").unwrap().bits(), 64);
        assert_eq!(Precision::parse("2^-128").unwrap().bits(), 128);
        assert_eq!(Precision::parse("2^(-40)").unwrap().bits(), 40);
        assert!(Precision::parse("16").is_err());
        assert!(Precision::parse("2^-300").is_err());
        assert!(Precision::parse("2^64").is_err());
    }

    #[test]
    fn exp_brackets_known_values() {
        let p = Precision::default();
        let e = exp_enclosure(&BigRational::one(), p);
        assert!(to_f64(e.lo()) <= std::f64::consts::E && std::f64::consts::E <= to_f64(e.hi()));
        assert!(e.width() < r(1, 1) / BigRational::from_integer(pow2(64)));
        let em = exp_enclosure(&r(-1, 1), p);
        let prod = &e * &em;
        assert!(prod.contains(&BigRational::one()));
        for (num, den) in [(7, 3), (-25, 2), (1, 1000), (40, 1)] {
            let x = r(num, den);
            let e = exp_enclosure(&x, p);
            let f = (num as f64 / den as f64).exp();
            let (lo, hi) = e.to_f64_bounds();
            assert!(lo <= f * (1.0 + 1e-15) && f * (1.0 - 1e-15) <= hi, "{x}");
        }
    }

    #[test]
    fn log_brackets_known_values() {
        let p = Precision::default();
        let l2 = log_enclosure(&r(2, 1), p).unwrap();
        let (lo, hi) = l2.to_f64_bounds();
        assert!(lo <= std::f64::consts::LN_2 && std::f64::consts::LN_2 <= hi);
        assert!(l2.width() < BigRational::new(BigInt::one(), pow2(64)));
        assert_eq!(log_enclosure(&BigRational::one(), p).unwrap(), RationalEnclosure::zero());
        for (num, den) in [(1, 3), (1000, 7), (3, 1 << 20)] {
            let l = log_enclosure(&r(num, den), p).unwrap();
            let f = (num as f64 / den as f64).ln();
            let (lo, hi) = l.to_f64_bounds();
            assert!(lo <= f + 1e-14 && f - 1e-14 <= hi, "{num}/{den}");
        }
        assert!(log_enclosure(&BigRational::zero(), p).is_err());
    }

    #[test]
    fn exp_of_log_contains_argument() {
        let p = Precision::default();
        let x = r(5, 11);
        let l = log_enclosure(&x, p).unwrap();
        let lo = exp_enclosure(l.lo(), p);
        let hi = exp_enclosure(l.hi(), p);
        assert!(lo.lo() <= &x && &x <= hi.hi());
    }

    #[test]
    fn sqrt_is_exact_on_squares_and_brackets_otherwise() {
        let p = Precision::default();
        let s = RationalEnclosure::point(r(9, 16)).sqrt(p).unwrap();
        assert_eq!(s, RationalEnclosure::point(r(3, 4)));
        let s2 = RationalEnclosure::point(r(2, 1)).sqrt(p).unwrap();
        assert!(&(s2.lo() * s2.lo()) <= &r(2, 1) && &r(2, 1) <= &(s2.hi() * s2.hi()));
        assert!(RationalEnclosure::point(r(-1, 2)).sqrt(p).is_err());
    }

    #[test]
    fn interval_ops() {
        let a = RationalEnclosure::new(r(-1, 2), r(1, 3));
        let b = RationalEnclosure::new(r(2, 1), r(3, 1));
        assert_eq!(&a * &b, RationalEnclosure::new(r(-3, 2), r(1, 1)));
        assert_eq!(a.powi(2), RationalEnclosure::new(r(0, 1), r(1, 4)));
        assert!(a.recip().is_err());
        assert_eq!(b.compare(&a), EnclosureOrdering::Greater);
        assert_eq!(a.compare(&a), EnclosureOrdering::Overlapping);
        assert_eq!(
            floor_dyadic(&r(1, 3), 4),
            r(5, 16)
        );
        assert_eq!(ceil_dyadic(&r(1, 3), 4), r(6, 16));
        assert_eq!(floor_dyadic(&r(-1, 3), 4), r(-6, 16));
    }
}

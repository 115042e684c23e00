//! Lambda sequences, their level-n geometry, and synthesis from a target.
//!
//! Level `C_n` has `2^n` components of length `r_n`; the component with
//! address bits `b_1..b_n` starts at `sum b_i * r_{i-1} / 2`.

use std::sync::{Arc, OnceLock};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::enclosure::{
    ceil_dyadic, exp_enclosure, neg_log_enclosure, pow2, rational, to_f64, Precision,
    RationalEnclosure,
};
use crate::error::{Error, Result};
use crate::target::TargetFunction;

/// Largest level whose components are materialized explicitly.
pub const MAX_LEVEL: usize = 20;

fn half() -> BigRational {
    rational(1, 2)
}

fn dyadic(k: usize) -> BigRational {
    BigRational::new(BigInt::one(), pow2(k as u32))
}

/// Prefix `lambda_1..lambda_N` plus the geometric tail
/// `ell_j = tail_base * tail_ratio^(j - N)` for `j > N`, where
/// `lambda_j = 1 - exp(-ell_j)`.
///
/// A zero `tail_base` is the truncated (zero-extended) sequence. A unit
/// `tail_ratio` with positive base is a divergent tail and yields a set of
/// measure zero.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LambdaSequence {
    prefix: Vec<BigRational>,
    tail_ratio: BigRational,
    tail_base: BigRational,
}

impl LambdaSequence {
    pub fn new(prefix: Vec<BigRational>, tail_ratio: BigRational, tail_base: BigRational) -> Result<Self> {
        if prefix.is_empty() {
            return Err(Error::InvalidLambda("depth must be at least 1".into()));
        }
        for (i, l) in prefix.iter().enumerate() {
            if !l.is_positive() || *l >= BigRational::one() {
                return Err(Error::InvalidLambda(format!("lambda_{} = {l} is not in (0, 1)", i + 1)));
            }
        }
        if let Some(i) = prefix.windows(2).position(|w| w[1] > w[0]) {
            return Err(Error::InvalidLambda(format!(
                "lambda_{} = {} exceeds lambda_{} = {}",
                i + 2,
                prefix[i + 1],
                i + 1,
                prefix[i]
            )));
        }
        if !tail_ratio.is_positive() || tail_ratio > BigRational::one() {
            return Err(Error::InvalidLambda(format!("tail ratio {tail_ratio} is not in (0, 1]")));
        }
        if tail_base.is_negative() {
            return Err(Error::InvalidLambda(format!("tail base {tail_base} is negative")));
        }
        let next_ell = &tail_base * &tail_ratio;
        if next_ell.is_positive() {
            let last = prefix.last().unwrap();
            let ell_n = neg_log_enclosure(&(BigRational::one() - last), Precision::default())?;
            if &next_ell > ell_n.hi() {
                return Err(Error::InvalidLambda(format!(
                    "tail starts at ell = {next_ell}, above -log(1 - lambda_N) <= {}",
                    ell_n.hi()
                )));
            }
        }
        Ok(LambdaSequence { prefix, tail_ratio, tail_base })
    }

    /// The zero-extended sequence: `lambda_j = 0` for `j > N`.
    pub fn truncated(prefix: Vec<BigRational>) -> Result<Self> {
        Self::new(prefix, half(), BigRational::zero())
    }

    /// `lambda_j = lambda` for every `j`, a measure-zero set.
    pub fn constant(lambda: BigRational, depth: usize, prec: Precision) -> Result<Self> {
        if depth == 0 {
            return Err(Error::InvalidLambda("depth must be at least 1".into()));
        }
        if !lambda.is_positive() || lambda >= BigRational::one() {
            return Err(Error::InvalidLambda(format!("lambda = {lambda} is not in (0, 1)")));
        }
        let ell = neg_log_enclosure(&(BigRational::one() - &lambda), prec)?;
        Self::new(vec![lambda; depth], BigRational::one(), ell.lo().clone())
    }

    pub fn depth(&self) -> usize {
        self.prefix.len()
    }

    pub fn prefix(&self) -> &[BigRational] {
        &self.prefix
    }

    /// `lambda_i` for `1 <= i <= depth`.
    pub fn lambda(&self, i: usize) -> Option<&BigRational> {
        i.checked_sub(1).and_then(|k| self.prefix.get(k))
    }

    pub fn tail_ratio(&self) -> &BigRational {
        &self.tail_ratio
    }

    pub fn tail_base(&self) -> &BigRational {
        &self.tail_base
    }

    pub fn is_truncated(&self) -> bool {
        self.tail_base.is_zero()
    }

    pub fn is_divergent(&self) -> bool {
        !self.is_truncated() && self.tail_ratio.is_one()
    }

    /// `sum_{j > m} ell_j` for `m >= depth`; `None` when the tail diverges.
    pub fn tail_ell_sum_after(&self, m: usize) -> Option<BigRational> {
        assert!(m >= self.depth(), "tail sums start at the depth");
        if self.is_truncated() {
            return Some(BigRational::zero());
        }
        if self.is_divergent() {
            return None;
        }
        let q = &self.tail_ratio;
        let power = num_traits::pow(q.clone(), m - self.depth() + 1);
        Some(&self.tail_base * power / (BigRational::one() - q))
    }

    /// Exact `prod_{j = from+1}^{to} (1 - lambda_j)` within the prefix.
    pub fn prefix_product(&self, from: usize, to: usize) -> BigRational {
        self.prefix[from.min(to)..to]
            .iter()
            .fold(BigRational::one(), |acc, l| acc * (BigRational::one() - l))
    }

    /// Enclosure of `tau_m = prod_{j > m} (1 - lambda_j)`.
    ///
    /// For `m <= depth` this is the exact prefix product times one shared
    /// enclosure of the tail, so `tau_m = (1 - lambda_{m+1}) tau_{m+1}` holds
    /// between the returned enclosures as well.
    pub fn tail_product(&self, m: usize, prec: Precision) -> RationalEnclosure {
        let n = self.depth();
        let tail = |k: usize| match self.tail_ell_sum_after(k) {
            None => RationalEnclosure::zero(),
            Some(s) if s.is_zero() => RationalEnclosure::one(),
            Some(s) => exp_enclosure(&-s, prec),
        };
        if m >= n {
            tail(m)
        } else {
            tail(n).scale(&self.prefix_product(m, n))
        }
    }

    /// Enclosure of `|C| = prod_j (1 - lambda_j)`.
    pub fn measure(&self, prec: Precision) -> RationalEnclosure {
        self.tail_product(0, prec)
    }
}

/// `r_n`, `g_n` and `|C_n| = 2^n r_n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Lemma1Quantities {
    pub r: BigRational,
    pub g: BigRational,
    pub level_measure: BigRational,
}

/// `r_0..r_n` from the closed form.
fn radii(lambda: &LambdaSequence, n: usize) -> Vec<BigRational> {
    let mut r = Vec::with_capacity(n + 1);
    r.push(BigRational::one());
    for i in 1..=n {
        let prev = &r[i - 1];
        r.push(prev * (BigRational::one() - &lambda.prefix[i - 1]) / BigInt::from(2));
    }
    r
}

fn check_index(lambda: &LambdaSequence, n: usize) -> Result<()> {
    if n > lambda.depth() {
        return Err(Error::IndexOutOfRange { index: n, depth: lambda.depth() });
    }
    Ok(())
}

pub fn lemma1_quantities(lambda: &LambdaSequence, n: usize) -> Result<Lemma1Quantities> {
    check_index(lambda, n)?;
    if n == 0 {
        return Err(Error::IndexOutOfRange { index: 0, depth: lambda.depth() });
    }
    let prod = lambda.prefix_product(0, n);
    let r = &prod / BigRational::from_integer(pow2(n as u32));
    let r_prev = &prod / (BigRational::one() - &lambda.prefix[n - 1])
        / BigRational::from_integer(pow2(n as u32 - 1));
    let g = &r_prev * &lambda.prefix[n - 1] / BigInt::from(2);
    Ok(Lemma1Quantities { r, g, level_measure: prod })
}

/// The `2^n` components of `C_n` in increasing order.
pub fn level_intervals(lambda: &LambdaSequence, n: usize) -> Result<Vec<(BigRational, BigRational)>> {
    check_index(lambda, n)?;
    if n > MAX_LEVEL {
        return Err(Error::ResourceLimit(format!("level {n} exceeds the cap {MAX_LEVEL}")));
    }
    let r = radii(lambda, n);
    let mut lefts = vec![BigRational::zero()];
    for i in 1..=n {
        let offset = &r[i - 1] / BigInt::from(2);
        lefts = lefts.into_iter().flat_map(|x| [x.clone(), x + &offset]).collect();
    }
    Ok(lefts.into_iter().map(|a| (a.clone(), a + &r[n])).collect())
}

/// Address `b_1..b_n` of a level-n component, most significant level first.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct IntervalAddress {
    bits: Vec<bool>,
}

impl IntervalAddress {
    pub fn new(bits: Vec<bool>) -> Self {
        IntervalAddress { bits }
    }

    /// Address of the `index`-th component (from the left) of `C_n`.
    pub fn from_index(index: usize, n: usize) -> Self {
        assert!(n >= usize::BITS as usize || index >> n == 0, "index outside level");
        IntervalAddress { bits: (0..n).map(|i| (index >> (n - 1 - i)) & 1 == 1).collect() }
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn level(&self) -> usize {
        self.bits.len()
    }

    pub fn index(&self) -> usize {
        self.bits.iter().fold(0, |acc, &b| (acc << 1) | b as usize)
    }

    /// `sum_{b_i = 1} r_{i-1} / 2`.
    pub fn left_endpoint(&self, lambda: &LambdaSequence) -> Result<BigRational> {
        check_index(lambda, self.level())?;
        let r = radii(lambda, self.level());
        Ok(self
            .bits
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .fold(BigRational::zero(), |acc, (i, _)| acc + &r[i] / BigInt::from(2)))
    }

    pub fn interval(&self, lambda: &LambdaSequence) -> Result<(BigRational, BigRational)> {
        let a = self.left_endpoint(lambda)?;
        let r = radii(lambda, self.level());
        let b = &a + &r[self.level()];
        Ok((a, b))
    }
}

/// Integer coordinates of `C_N` over a common denominator.
#[derive(Debug)]
pub(crate) struct Geometry {
    pub denom: BigInt,
    pub lefts: Vec<BigInt>,
    pub width: BigInt,
    offsets_f64: Vec<f64>,
    lefts_f64: OnceLock<Vec<f64>>,
}

impl Geometry {
    /// Left endpoints summed in floating point from the rounded offsets;
    /// each entry is within `N` ulps of 1 of the exact value.
    pub fn lefts_f64(&self) -> &[f64] {
        self.lefts_f64.get_or_init(|| {
            let mut lefts = vec![0.0];
            for off in &self.offsets_f64 {
                lefts = lefts.into_iter().flat_map(|x| [x, x + off]).collect();
            }
            lefts
        })
    }
}

/// Level-N approximation: the components of `C_N` plus an enclosure of
/// the tail factor `tau_N`.
#[derive(Clone, Debug)]
pub struct CantorApproximation {
    lambda: LambdaSequence,
    level: usize,
    r: Vec<BigRational>,
    g: Vec<BigRational>,
    tail_factor: RationalEnclosure,
    precision: Precision,
    geometry: Arc<Geometry>,
}

impl CantorApproximation {
    pub fn new(lambda: &LambdaSequence, level: usize, prec: Precision) -> Result<Self> {
        check_index(lambda, level)?;
        if level > MAX_LEVEL {
            return Err(Error::ResourceLimit(format!("level {level} exceeds the cap {MAX_LEVEL}")));
        }
        let r = radii(lambda, level);
        let g: Vec<BigRational> = (1..=level)
            .map(|n| &r[n - 1] * &lambda.prefix[n - 1] / BigInt::from(2))
            .collect();
        let offsets: Vec<BigRational> = (1..=level).map(|i| &r[i - 1] / BigInt::from(2)).collect();
        let denom = offsets
            .iter()
            .chain(std::iter::once(&r[level]))
            .fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
        let to_int = |x: &BigRational| (x * BigRational::from_integer(denom.clone())).to_integer();
        let mut lefts = vec![BigInt::zero()];
        for off in &offsets {
            let step = to_int(off);
            lefts = lefts.into_iter().flat_map(|x| [x.clone(), x + &step]).collect();
        }
        let width = to_int(&r[level]);
        let offsets_f64 = offsets.iter().map(to_f64).collect();
        Ok(CantorApproximation {
            lambda: lambda.clone(),
            level,
            tail_factor: lambda.tail_product(level, prec),
            r,
            g,
            precision: prec,
            geometry: Arc::new(Geometry { denom, lefts, width, offsets_f64, lefts_f64: OnceLock::new() }),
        })
    }

    /// Same geometry with the tail factor recomputed at `prec`.
    pub fn with_precision(&self, prec: Precision) -> Self {
        CantorApproximation {
            tail_factor: self.lambda.tail_product(self.level, prec),
            precision: prec,
            ..self.clone()
        }
    }

    pub fn lambda(&self) -> &LambdaSequence {
        &self.lambda
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn precision(&self) -> Precision {
        self.precision
    }

    /// `r_n` for `0 <= n <= level`.
    pub fn r(&self, n: usize) -> &BigRational {
        &self.r[n]
    }

    pub fn radii(&self) -> &[BigRational] {
        &self.r
    }

    /// `g_n` for `1 <= n <= level`.
    pub fn g(&self, n: usize) -> &BigRational {
        &self.g[n - 1]
    }

    pub fn tail_factor(&self) -> &RationalEnclosure {
        &self.tail_factor
    }

    pub fn component_count(&self) -> usize {
        self.geometry.lefts.len()
    }

    pub fn component(&self, i: usize) -> (BigRational, BigRational) {
        let g = &self.geometry;
        let a = BigRational::new(g.lefts[i].clone(), g.denom.clone());
        let b = BigRational::new(&g.lefts[i] + &g.width, g.denom.clone());
        (a, b)
    }

    pub fn intervals(&self) -> impl Iterator<Item = (BigRational, BigRational)> + '_ {
        (0..self.component_count()).map(|i| self.component(i))
    }

    /// `|C_N| = 2^N r_N`, exact.
    pub fn level_measure(&self) -> BigRational {
        &self.r[self.level] * BigRational::from_integer(pow2(self.level as u32))
    }

    /// Enclosure of `|C|`.
    pub fn measure(&self) -> RationalEnclosure {
        self.tail_factor.scale(&self.level_measure())
    }

    pub(crate) fn geometry(&self) -> &Geometry {
        &self.geometry
    }
}

/// Output of [`synthesize_lambda`]: the sequence and the schedule behind it.
#[derive(Clone, Debug)]
pub struct Synthesis {
    pub sequence: LambdaSequence,
    /// Upper enclosures of `L_n = -log f(2^(1-n))` for `n = 1..=4N`.
    pub l_upper: Vec<BigRational>,
    /// Final `ell_1..ell_N` before conversion to lambda.
    pub ell: Vec<BigRational>,
    pub measure: RationalEnclosure,
}

/// Default headroom `c` added to the telescoping schedule.
pub fn default_headroom() -> BigRational {
    rational(1, 8)
}

/// Builds a lambda sequence whose set satisfies
/// `prod_{j > n} (1 - lambda_j) < f(2^(1-n))` for `n <= N`, with a geometric
/// tail dominating `L_n` for `N < n <= 4N`, and positive measure.
pub fn synthesize_lambda(
    f: &TargetFunction,
    depth: usize,
    headroom: &BigRational,
    prec: Precision,
) -> Result<Synthesis> {
    if depth == 0 {
        return Err(Error::InvalidArgument("depth must be at least 1".into()));
    }
    if !headroom.is_positive() {
        return Err(Error::InvalidArgument(format!("headroom {headroom} must be positive")));
    }
    if !f.is_monotone() {
        return Err(Error::InvalidTarget(
            "target is not flagged non-increasing; take its decreasing envelope first".into(),
        ));
    }
    let horizon = 4 * depth;
    let mut values = Vec::with_capacity(horizon);
    for n in 1..=horizon {
        let v = f.evaluate(&dyadic(n - 1), prec)?;
        if !v.lo().is_positive() {
            return Err(Error::InvalidTarget(format!(
                "f(2^-{}) is not bounded away from zero (lower bound {})",
                n - 1,
                v.lo()
            )));
        }
        if let Some(prev) = values.last() {
            let prev: &RationalEnclosure = prev;
            if v.hi() < prev.lo() {
                return Err(Error::InvalidTarget(format!(
                    "f increases between 2^-{} and 2^-{}",
                    n - 1,
                    n - 2
                )));
            }
        }
        values.push(v);
    }
    let mut l_upper: Vec<BigRational> = values
        .iter()
        .map(|v| neg_log_enclosure(v.lo(), prec).map(|e| e.hi().clone()))
        .collect::<Result<_>>()?;
    for n in (0..horizon - 1).rev() {
        if l_upper[n] < l_upper[n + 1] {
            l_upper[n] = l_upper[n + 1].clone();
        }
    }
    let l_first_hi = l_upper[0].clone();
    let l_last_lo = neg_log_enclosure(values[horizon - 1].hi(), prec)?.lo().clone();
    if l_first_hi.is_positive() && l_last_lo * BigInt::from(2) >= l_first_hi {
        return Err(Error::InvalidTarget(format!(
            "f(2^-{}) has not moved halfway towards 1; the limit at 0 cannot be certified at this depth",
            horizon - 1
        )));
    }

    // ell_n = (L_{n-1} - L_n) + c 2^-n, ell_1 = ell_2 + c.
    let l = |n: usize| &l_upper[n - 1];
    let mut ell: Vec<BigRational> = Vec::with_capacity(depth);
    for n in 1..=depth {
        let m = n.max(2);
        ell.push(l(m - 1) - l(m) + headroom * dyadic(m));
    }
    ell[0] = &ell[0] + headroom;

    let q = tail_ratio_estimate(&l_upper, depth);
    let one = BigRational::one();
    let slack = rational(65, 64);
    for n in depth..=horizon {
        let needed = l(n) * (&one - &q) / num_traits::pow(q.clone(), n - depth + 1) * &slack;
        if needed > ell[depth - 1] {
            ell[depth - 1] = needed;
        }
    }
    for n in (0..depth - 1).rev() {
        if ell[n] < ell[n + 1] {
            ell[n] = ell[n + 1].clone();
        }
    }

    let bits = prec.bits();
    let mut prefix: Vec<BigRational> = ell
        .iter()
        .map(|e| ceil_dyadic(&(&one - exp_enclosure(&-e, prec).lo()), bits))
        .collect();
    for n in (0..depth - 1).rev() {
        if prefix[n] < prefix[n + 1] {
            prefix[n] = prefix[n + 1].clone();
        }
    }
    if prefix.iter().any(|x| x >= &one) {
        return Err(Error::SynthesisUnverified("a lambda value rounded up to 1".into()));
    }
    let sequence = LambdaSequence::new(prefix, q, ell[depth - 1].clone())
        .map_err(|e| Error::SynthesisUnverified(e.to_string()))?;

    for n in 1..=depth {
        let tau = sequence.tail_product(n, prec);
        if tau.hi() >= values[n - 1].lo() {
            return Err(Error::SynthesisUnverified(format!(
                "prod_(j>{n}) (1 - lambda_j) <= {} is not below f(2^-{}) >= {}",
                tau.hi(),
                n - 1,
                values[n - 1].lo()
            )));
        }
    }
    for n in depth + 1..=horizon {
        let tail = sequence.tail_ell_sum_after(n).unwrap_or_else(BigRational::zero);
        if tail <= *l(n) {
            return Err(Error::SynthesisUnverified(format!(
                "tail sum after {n} does not dominate L_{n} <= {}",
                l(n)
            )));
        }
    }
    let measure = sequence.measure(prec);
    if !measure.lo().is_positive() {
        return Err(Error::SynthesisUnverified("measure enclosure does not exclude zero".into()));
    }
    Ok(Synthesis { sequence, l_upper, ell, measure })
}

/// `max(1/2, sup L_{n+1}/L_n)` over the last `N/2` indices, capped at 15/16
/// and rounded up to a multiple of 1/256.
fn tail_ratio_estimate(l_upper: &[BigRational], depth: usize) -> BigRational {
    let mut q = half();
    let start = depth - depth / 2;
    for n in start.max(1)..depth {
        let (a, b) = (&l_upper[n - 1], &l_upper[n]);
        if a.is_positive() {
            let ratio = b / a;
            if ratio > q {
                q = ratio;
            }
        }
    }
    let q = ceil_dyadic(&q, 8);
    q.min(rational(15, 16))
}

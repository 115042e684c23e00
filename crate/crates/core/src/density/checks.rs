//! Report-style verification suites and the target certificate.

use std::fmt::Write as _;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{phi_bruteforce, prefix_measure_level_n, PrefixDecomposition, PrefixEvaluator};
use crate::construction::CantorApproximation;
use crate::enclosure::{from_f64, pow2, to_f64, Precision, RationalEnclosure};
use crate::error::{Error, Result};
use crate::io::{decimal, enclosure as enc, exact};
use crate::target::TargetFunction;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    Indeterminate,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lemma2Record {
    #[serde(with = "exact")]
    pub s: BigRational,
    #[serde(with = "exact")]
    pub bruteforce_max: BigRational,
    #[serde(with = "exact")]
    pub prefix_value: BigRational,
    #[serde(with = "crate::io::exact_vec")]
    pub witnesses: Vec<BigRational>,
    pub exact_equal: bool,
    pub enclosure_consistent: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lemma2Report {
    pub level: usize,
    pub records: Vec<Lemma2Record>,
}

impl Lemma2Report {
    pub fn violations(&self) -> impl Iterator<Item = &Lemma2Record> {
        self.records.iter().filter(|r| !(r.exact_equal && r.enclosure_consistent))
    }

    pub fn passed(&self) -> bool {
        self.violations().next().is_none()
    }
}

/// Compares the sliding-window maximum with the window anchored at 0, and
/// checks that `phi(s)` is consistent with that maximum: with `M` the
/// level-N value, `lo <= M tau.hi`, `M tau.lo <= hi` and `hi <= M`.
pub fn check_lemma2(approx: &CantorApproximation, samples: &[BigRational]) -> Result<Lemma2Report> {
    let tau = approx.tail_factor();
    let mut records = Vec::with_capacity(samples.len());
    for s in samples {
        let brute = phi_bruteforce(approx, s)?;
        let prefix_value = prefix_measure_level_n(approx, s)?;
        let bounds = super::prefix_measure_bounds(approx, s)?;
        let m = &brute.max_value;
        let enclosure_consistent =
            bounds.lo() <= &(m * tau.hi()) && &(m * tau.lo()) <= bounds.hi() && bounds.hi() <= m;
        records.push(Lemma2Record {
            s: s.clone(),
            exact_equal: *m == prefix_value,
            bruteforce_max: brute.max_value,
            prefix_value,
            witnesses: brute.witnesses,
            enclosure_consistent,
        });
    }
    Ok(Lemma2Report { level: approx.level(), records })
}

#[derive(Clone, Debug)]
pub struct Lemma4Config {
    pub samples_per_band: usize,
    pub seed: u64,
    /// Whether to compare the enclosures of `phi_C` as well.
    pub enclosures: bool,
    /// Rounds of two extra levels and one extra precision bit.
    pub escalation_rounds: usize,
    pub decompositions_per_band: usize,
}

impl Default for Lemma4Config {
    fn default() -> Self {
        Lemma4Config { samples_per_band: 100, seed: 0, enclosures: true, escalation_rounds: 3, decompositions_per_band: 4 }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lemma4Record {
    pub n: usize,
    #[serde(with = "exact")]
    pub s: BigRational,
    /// `prefix(s) / s <= prefix(r_n) / r_n` at level N.
    pub exact_holds: bool,
    pub enclosure: Verdict,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lemma4Report {
    pub level: usize,
    pub records: Vec<Lemma4Record>,
    pub decompositions_checked: usize,
    pub decomposition_failures: usize,
}

impl Lemma4Report {
    pub fn exact_failures(&self) -> usize {
        self.records.iter().filter(|r| !r.exact_holds).count()
    }

    pub fn count(&self, v: Verdict) -> usize {
        self.records.iter().filter(|r| r.enclosure == v).count()
    }

    /// No exact failure, no definite enclosure failure, and every
    /// decomposition verified.
    pub fn passed(&self) -> bool {
        self.exact_failures() == 0 && self.count(Verdict::Fail) == 0 && self.decomposition_failures == 0
    }
}

/// Samples `s = r_n + (r_{n-1} - r_n) k / 2^24` in each band.
pub fn band_samples(approx: &CantorApproximation, n: usize, count: usize, rng: &mut ChaCha8Rng) -> Vec<BigRational> {
    let (lo, hi) = (approx.r(n), approx.r(n - 1));
    let span = hi - lo;
    let den = BigRational::from_integer(pow2(24));
    (0..count)
        .map(|_| {
            let k: u32 = rng.gen_range(0..1 << 24);
            lo + &span * BigRational::from_integer(BigInt::from(k)) / &den
        })
        .collect()
}

fn compare_le(a: &RationalEnclosure, b: &RationalEnclosure) -> Verdict {
    if a.hi() <= b.lo() {
        Verdict::Pass
    } else if a.lo() > b.hi() {
        Verdict::Fail
    } else {
        Verdict::Indeterminate
    }
}

pub fn check_lemma4(approx: &CantorApproximation, config: &Lemma4Config) -> Result<Lemma4Report> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let level = approx.level();
    let evaluators: Vec<PrefixEvaluator> = if config.enclosures {
        let mut prec = approx.precision();
        (0..=config.escalation_rounds)
            .map(|round| {
                let ev = PrefixEvaluator::with_precision(approx, 2 * round, prec);
                prec = prec.escalated();
                ev
            })
            .collect()
    } else {
        Vec::new()
    };
    let mut records = Vec::new();
    let (mut checked, mut failures) = (0, 0);
    for n in 1..=level {
        let rn = approx.r(n).clone();
        let base = prefix_measure_level_n(approx, &rn)?;
        let mut samples = vec![rn.clone()];
        samples.extend(band_samples(approx, n, config.samples_per_band, &mut rng));
        for s in samples {
            let ps = prefix_measure_level_n(approx, &s)?;
            let exact_holds = &ps * &rn <= &base * &s;
            let enclosure = if !config.enclosures {
                Verdict::Indeterminate
            } else if s == rn {
                Verdict::Pass
            } else {
                let mut verdict = Verdict::Indeterminate;
                for ev in &evaluators {
                    verdict = compare_le(&ev.phi(&s)?, &ev.phi(&rn)?);
                    if verdict != Verdict::Indeterminate {
                        break;
                    }
                }
                verdict
            };
            records.push(Lemma4Record { n, s, exact_holds, enclosure });
        }
        let span = level - n + 1;
        for _ in 0..config.decompositions_per_band {
            let index = if span >= 63 { rng.gen::<usize>() } else { rng.gen_range(0..1usize << span) };
            let d = PrefixDecomposition::of_component(approx, n, level, index)?;
            checked += 1;
            if !d.verify(approx) {
                failures += 1;
            }
        }
    }
    Ok(Lemma4Report { level, records, decompositions_checked: checked, decomposition_failures: failures })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StructuralRecord {
    pub n: usize,
    #[serde(with = "exact")]
    pub r_n: BigRational,
    #[serde(with = "enc")]
    pub phi: RationalEnclosure,
    /// `f(2^(1-n))`.
    #[serde(with = "enc")]
    pub f: RationalEnclosure,
    /// `lo(f) - hi(phi)`.
    #[serde(with = "exact")]
    pub margin: BigRational,
    pub margin_decimal: String,
    pub verdict: Verdict,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleRecord {
    #[serde(with = "exact")]
    pub s: BigRational,
    pub s_decimal: String,
    #[serde(with = "enc")]
    pub phi: RationalEnclosure,
    #[serde(with = "enc")]
    pub f: RationalEnclosure,
    #[serde(with = "exact")]
    pub margin: BigRational,
    pub margin_decimal: String,
    pub verdict: Verdict,
}

/// Evidence that `phi_C(s) < f(s)` at every structural and sampled point.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Certificate {
    pub target: String,
    pub level: usize,
    pub precision_bits: u32,
    pub extra_levels: usize,
    #[serde(with = "enc")]
    pub measure: RationalEnclosure,
    pub positive_measure: bool,
    pub structural: Vec<StructuralRecord>,
    pub samples: Vec<SampleRecord>,
    pub holds: bool,
}

impl Certificate {
    pub fn min_margin(&self) -> Option<BigRational> {
        self.structural
            .iter()
            .map(|r| &r.margin)
            .chain(self.samples.iter().map(|r| &r.margin))
            .min()
            .cloned()
    }

    fn labels(&self, verdict: Verdict) -> Vec<String> {
        let mut out = Vec::new();
        if verdict == Verdict::Fail && !self.positive_measure {
            out.push("measure".to_string());
        }
        out.extend(self.structural.iter().filter(|r| r.verdict == verdict).map(|r| format!("n={}", r.n)));
        out.extend(self.samples.iter().filter(|r| r.verdict == verdict).map(|r| format!("s={}", r.s_decimal)));
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn profile(&self) -> DensityProfile {
        DensityProfile {
            samples: self
                .samples
                .iter()
                .map(|r| ProfilePoint { s: r.s.clone(), phi: r.phi.clone(), f: Some(r.f.clone()) })
                .collect(),
            structural: self.structural.iter().map(|r| (r.n, r.r_n.clone(), r.phi.clone())).collect(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct VerifyConfig {
    /// Extra levels used before any escalation.
    pub extra_levels: usize,
    /// Each round adds two levels and one precision bit.
    pub escalation_rounds: usize,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig { extra_levels: 0, escalation_rounds: 12 }
    }
}

/// `count` log-spaced points from `r_N` to 1 inclusive, as exact dyadics.
pub fn default_samples(approx: &CantorApproximation, count: usize) -> Vec<BigRational> {
    let lo = to_f64(approx.r(approx.level())).ln();
    let mut out: Vec<BigRational> = (0..count)
        .map(|k| {
            let t = if count <= 1 { 1.0 } else { k as f64 / (count - 1) as f64 };
            let x = (lo * (1.0 - t)).exp().clamp(f64::MIN_POSITIVE, 1.0);
            from_f64(x).expect("finite")
        })
        .collect();
    if let Some(last) = out.last_mut() {
        *last = BigRational::one();
    }
    out.sort();
    out.dedup();
    out
}

fn strict_lt(phi: &RationalEnclosure, f: &RationalEnclosure) -> Verdict {
    if phi.hi() < f.lo() {
        Verdict::Pass
    } else if phi.lo() >= f.hi() {
        Verdict::Fail
    } else {
        Verdict::Indeterminate
    }
}

/// Certifies `hi phi(r_n) < lo f(2^(1-n))` for `1 <= n <= N`,
/// `hi phi(s) < lo f(s)` at every sample, and a positive measure.
///
/// Undecided points are re-evaluated with two more levels and one more
/// precision bit per round.
pub fn verify_target(
    approx: &CantorApproximation,
    f: &TargetFunction,
    samples: &[BigRational],
    config: &VerifyConfig,
) -> Result<Certificate> {
    for s in samples {
        if !s.is_positive() || s > &BigRational::one() {
            return Err(Error::Domain(format!("sample {s} is outside (0, 1]")));
        }
    }
    let mut prec = approx.precision();
    let mut extra = config.extra_levels;
    let mut ev = PrefixEvaluator::with_precision(approx, extra, prec);

    let structural_point = |ev: &PrefixEvaluator, prec: Precision, n: usize| -> Result<StructuralRecord> {
        let rn = approx.r(n).clone();
        let phi = ev.phi(&rn)?;
        let x = BigRational::new(BigInt::one(), pow2(n as u32 - 1));
        let fx = f.evaluate(&x, prec)?;
        let margin = fx.lo() - phi.hi();
        Ok(StructuralRecord {
            n,
            margin_decimal: decimal(&margin),
            verdict: strict_lt(&phi, &fx),
            r_n: rn,
            phi,
            f: fx,
            margin,
        })
    };
    let sample_point = |ev: &PrefixEvaluator, prec: Precision, s: &BigRational| -> Result<SampleRecord> {
        let phi = ev.phi(s)?;
        let fx = f.evaluate(s, prec)?;
        let margin = fx.lo() - phi.hi();
        Ok(SampleRecord {
            s: s.clone(),
            s_decimal: decimal(s),
            margin_decimal: decimal(&margin),
            verdict: strict_lt(&phi, &fx),
            phi,
            f: fx,
            margin,
        })
    };

    let mut structural = (1..=approx.level())
        .map(|n| structural_point(&ev, prec, n))
        .collect::<Result<Vec<_>>>()?;
    let mut records = samples.iter().map(|s| sample_point(&ev, prec, s)).collect::<Result<Vec<_>>>()?;

    for _ in 0..config.escalation_rounds {
        let pending = structural.iter().any(|r| r.verdict == Verdict::Indeterminate)
            || records.iter().any(|r| r.verdict == Verdict::Indeterminate);
        if !pending {
            break;
        }
        extra += 2;
        prec = prec.escalated();
        ev = PrefixEvaluator::with_precision(approx, extra, prec);
        for r in structural.iter_mut().filter(|r| r.verdict == Verdict::Indeterminate) {
            *r = structural_point(&ev, prec, r.n)?;
        }
        for r in records.iter_mut().filter(|r| r.verdict == Verdict::Indeterminate) {
            *r = sample_point(&ev, prec, &r.s.clone())?;
        }
    }

    let measure = approx.lambda().measure(prec);
    let positive_measure = measure.lo().is_positive();
    let all_pass = structural.iter().all(|r| r.verdict == Verdict::Pass)
        && records.iter().all(|r| r.verdict == Verdict::Pass);
    let cert = Certificate {
        target: f.label().to_string(),
        level: approx.level(),
        precision_bits: prec.bits(),
        extra_levels: extra,
        measure,
        positive_measure,
        structural,
        samples: records,
        holds: all_pass && positive_measure,
    };
    let failed = cert.labels(Verdict::Fail);
    if !failed.is_empty() {
        return Err(Error::CertificateFailed { offending: failed, certificate: Box::new(cert) });
    }
    let pending = cert.labels(Verdict::Indeterminate);
    if !pending.is_empty() {
        return Err(Error::CertificateIndeterminate { pending, certificate: Box::new(cert) });
    }
    Ok(cert)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProfilePoint {
    pub s: BigRational,
    pub phi: RationalEnclosure,
    pub f: Option<RationalEnclosure>,
}

/// Enclosures of `phi_C` at sample points and at `r_1..r_N`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DensityProfile {
    pub samples: Vec<ProfilePoint>,
    pub structural: Vec<(usize, BigRational, RationalEnclosure)>,
}

impl DensityProfile {
    pub fn compute(ev: &PrefixEvaluator, samples: &[BigRational], f: Option<&TargetFunction>) -> Result<Self> {
        let approx = ev.approximation();
        let prec = ev.precision();
        let points = samples
            .iter()
            .map(|s| {
                Ok(ProfilePoint {
                    s: s.clone(),
                    phi: ev.phi(s)?,
                    f: f.map(|f| f.evaluate(s, prec)).transpose()?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let structural = (1..=approx.level())
            .map(|n| Ok((n, approx.r(n).clone(), ev.phi(approx.r(n))?)))
            .collect::<Result<Vec<_>>>()?;
        Ok(DensityProfile { samples: points, structural })
    }

    /// Columns `s_num, s_den, phi_lo, phi_hi, f_lo, f_hi, margin`; the `f`
    /// columns are empty when no target was supplied.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("s_num,s_den,phi_lo,phi_hi,f_lo,f_hi,margin\n");
        for p in &self.samples {
            let (f_lo, f_hi, margin) = match &p.f {
                Some(f) => (decimal(f.lo()), decimal(f.hi()), decimal(&(f.lo() - p.phi.hi()))),
                None => (String::new(), String::new(), String::new()),
            };
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                p.s.numer(),
                p.s.denom(),
                decimal(p.phi.lo()),
                decimal(p.phi.hi()),
                f_lo,
                f_hi,
                margin
            );
        }
        out
    }

    /// True when `lo(phi(r_n))` never decreases as `n` grows.
    pub fn structural_increasing(&self) -> bool {
        self.structural.windows(2).all(|w| w[0].2.lo() <= w[1].2.lo())
    }
}

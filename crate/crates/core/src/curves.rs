//! Curves in floating point: arc-length reparametrization, the chord/arc
//! infimum `g(x)`, the constant `rho`, and the Lipschitz functions `F`, `H`
//! with their attainment scans.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::sync::Arc;

use num_rational::BigRational;
use num_traits::ToPrimitive;

use crate::construction::CantorApproximation;
use crate::density::PrefixEvaluator;
use crate::enclosure::{ceil_dyadic, from_f64, to_f64};
use crate::error::{Error, Result};
use crate::target::{Expr, TargetFunction};

pub type VectorFn = Arc<dyn Fn(f64) -> Vec<f64> + Send + Sync>;

/// Grid used for the unit-speed and degeneracy checks.
pub const CHECK_GRID: usize = 1024;

#[derive(Clone)]
pub struct ParametricCurve {
    name: String,
    dim: usize,
    position: VectorFn,
    derivative: VectorFn,
    domain: (f64, f64),
    arc_length: bool,
}

impl fmt::Debug for ParametricCurve {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ParametricCurve")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("domain", &self.domain)
            .field("arc_length", &self.arc_length)
            .finish()
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn grid(domain: (f64, f64), n: usize) -> impl Iterator<Item = f64> {
    let (a, b) = domain;
    (0..=n).map(move |i| a + (b - a) * i as f64 / n as f64)
}

impl ParametricCurve {
    /// A flagged curve must have `| |a'| - 1 | <= 1e-8` on the check grid.
    pub fn new(
        name: impl Into<String>,
        dim: usize,
        position: VectorFn,
        derivative: VectorFn,
        domain: (f64, f64),
        arc_length: bool,
    ) -> Result<Self> {
        if !(domain.0 < domain.1) || !domain.0.is_finite() || !domain.1.is_finite() {
            return Err(Error::InvalidArgument(format!("empty curve domain [{}, {}]", domain.0, domain.1)));
        }
        let curve = ParametricCurve { name: name.into(), dim, position, derivative, domain, arc_length };
        if arc_length {
            for t in grid(domain, CHECK_GRID) {
                let speed = curve.speed(t);
                if (speed - 1.0).abs() > 1e-8 {
                    return Err(Error::InvalidArgument(format!(
                        "curve flagged arc-length has speed {speed} at t = {t}"
                    )));
                }
            }
        }
        Ok(curve)
    }

    pub fn line(length: f64) -> Result<Self> {
        Self::new(
            "line",
            2,
            Arc::new(|t| vec![t, 0.0]),
            Arc::new(|_| vec![1.0, 0.0]),
            (0.0, length),
            true,
        )
    }

    /// Arc-length circle of the given radius, traversed over `length`.
    pub fn circle(radius: f64, length: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::InvalidArgument(format!("radius {radius} must be positive")));
        }
        Self::new(
            "circle",
            2,
            Arc::new(move |t| vec![radius * (t / radius).cos(), radius * (t / radius).sin()]),
            Arc::new(move |t| vec![-(t / radius).sin(), (t / radius).cos()]),
            (0.0, length),
            true,
        )
    }

    /// The unit circle on `[0, pi]`.
    pub fn unit_circle() -> Self {
        Self::circle(1.0, std::f64::consts::PI).expect("valid circle")
    }

    pub fn ellipse(a: f64, b: f64) -> Result<Self> {
        Self::new(
            "ellipse",
            2,
            Arc::new(move |t| vec![a * t.cos(), b * t.sin()]),
            Arc::new(move |t| vec![-a * t.sin(), b * t.cos()]),
            (0.0, std::f64::consts::PI),
            false,
        )
    }

    /// Graph of `t^2 / 2` over `[0, 1]`.
    pub fn parabola() -> Self {
        Self::new(
            "parabola",
            2,
            Arc::new(|t| vec![t, t * t / 2.0]),
            Arc::new(|t| vec![1.0, t]),
            (0.0, 1.0),
            false,
        )
        .expect("valid parabola")
    }

    /// `(t cos t, t sin t)` over `[t0, t1]`.
    pub fn spiral(t0: f64, t1: f64) -> Result<Self> {
        Self::new(
            "spiral",
            2,
            Arc::new(|t| vec![t * t.cos(), t * t.sin()]),
            Arc::new(|t| vec![t.cos() - t * t.sin(), t.sin() + t * t.cos()]),
            (t0, t1),
            false,
        )
    }

    /// Polynomial coordinates with rational coefficients, e.g. `"(t, t^2/2)"`.
    pub fn polynomial(spec: &str, domain: (f64, f64)) -> Result<Self> {
        let inner = spec
            .trim()
            .strip_prefix('(')
            .and_then(|s| s.strip_suffix(')'))
            .ok_or_else(|| Error::Parse(format!("polynomial curve must look like (p1, p2, ...): {spec:?}")))?;
        let coords: Vec<Vec<f64>> = split_top_level(inner)
            .iter()
            .map(|c| {
                Expr::parse_in(c, "t")?
                    .to_polynomial()
                    .map(|p| p.iter().map(to_f64).collect::<Vec<f64>>())
            })
            .collect::<Result<_>>()?;
        if coords.is_empty() {
            return Err(Error::Parse("polynomial curve needs at least one coordinate".into()));
        }
        let dim = coords.len();
        let horner = |p: &[f64], t: f64| p.iter().rev().fold(0.0, |acc, c| acc * t + c);
        let derivs: Vec<Vec<f64>> = coords
            .iter()
            .map(|p| p.iter().enumerate().skip(1).map(|(k, c)| c * k as f64).collect())
            .collect();
        let pos = coords.clone();
        Self::new(
            format!("poly{spec}"),
            dim,
            Arc::new(move |t| pos.iter().map(|p| horner(p, t)).collect()),
            Arc::new(move |t| derivs.iter().map(|p| horner(p, t)).collect()),
            domain,
            false,
        )
    }

    /// Built-in curve by name with optional numeric parameters:
    /// `line{length}`, `circle{radius, length}`, `ellipse{a, b}`,
    /// `parabola`, `spiral{t0, t1}`.
    pub fn builtin(name: &str, params: &BTreeMap<String, f64>) -> Result<Self> {
        let get = |key: &str, default: f64| params.get(key).copied().unwrap_or(default);
        let allowed: &[&str] = match name {
            "line" => &["length"],
            "circle" => &["radius", "length"],
            "ellipse" => &["a", "b"],
            "parabola" => &[],
            "spiral" => &["t0", "t1"],
            other => return Err(Error::InvalidArgument(format!("unknown curve {other:?}"))),
        };
        if let Some(k) = params.keys().find(|k| !allowed.contains(&k.as_str())) {
            return Err(Error::InvalidArgument(format!("curve {name} has no parameter {k:?}")));
        }
        match name {
            "line" => Self::line(get("length", 1.0)),
            "circle" => {
                let radius = get("radius", 1.0);
                Self::circle(radius, get("length", std::f64::consts::PI * radius))
            }
            "ellipse" => Self::ellipse(get("a", 1.0), get("b", 0.5)),
            "parabola" => Ok(Self::parabola()),
            _ => Self::spiral(get("t0", 0.0), get("t1", 2.0 * std::f64::consts::PI)),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn domain(&self) -> (f64, f64) {
        self.domain
    }

    /// Parameter length `t1 - t0`; the arc length when flagged.
    pub fn length(&self) -> f64 {
        self.domain.1 - self.domain.0
    }

    pub fn is_arc_length(&self) -> bool {
        self.arc_length
    }

    pub fn position(&self, t: f64) -> Vec<f64> {
        (self.position)(t)
    }

    pub fn derivative(&self, t: f64) -> Vec<f64> {
        (self.derivative)(t)
    }

    pub fn speed(&self, t: f64) -> f64 {
        norm(&self.derivative(t))
    }

    /// Largest `|a'(t_{i+1}) - a'(t_i)|` over `n` cells of `[a, b]`.
    pub fn derivative_modulus(&self, a: f64, b: f64, n: usize) -> f64 {
        let pts: Vec<Vec<f64>> = grid((a, b), n).map(|t| self.derivative(t)).collect();
        pts.windows(2).map(|w| dist(&w[0], &w[1])).fold(0.0, f64::max)
    }
}

fn split_top_level(s: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut cur = String::new();
    for c in s.chars() {
        match c {
            '(' => depth += 1,
            ')' => depth -= 1,
            ',' if depth == 0 => {
                out.push(std::mem::take(&mut cur));
                continue;
            }
            _ => {}
        }
        cur.push(c);
    }
    out.push(cur);
    out
}

fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        left + right + delta / 15.0
    } else {
        simpson(f, a, m, fa, flm, fm, tol / 2.0, depth - 1) + simpson(f, m, b, fm, frm, fb, tol / 2.0, depth - 1)
    }
}

/// Adaptive Simpson quadrature of `f` over `[a, b]` to absolute tolerance `tol`.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let m = 0.5 * (a + b);
    simpson(f, a, b, f(a), f(m), f(b), tol, 48)
}

/// Cumulative arc length on a fixed grid of the original parameter.
struct ArcTable {
    curve: ParametricCurve,
    knots: Vec<f64>,
    cumulative: Vec<f64>,
    tol: f64,
}

impl ArcTable {
    fn arc_between(&self, a: f64, b: f64) -> f64 {
        let c = &self.curve;
        adaptive_simpson(&|t| c.speed(t), a, b, self.tol)
    }

    /// Original parameter at arc length `u`: bisection on the knot table,
    /// then safeguarded Newton inside the cell.
    fn invert(&self, u: f64) -> f64 {
        let total = *self.cumulative.last().unwrap();
        let u = u.clamp(0.0, total);
        let k = self.cumulative.partition_point(|&c| c <= u).clamp(1, self.knots.len() - 1) - 1;
        let (mut lo, mut hi) = (self.knots[k], self.knots[k + 1]);
        let base = self.cumulative[k];
        let target = u - base;
        let mut t = lo + (hi - lo) * (target / (self.cumulative[k + 1] - base)).clamp(0.0, 1.0);
        for _ in 0..60 {
            let value = self.arc_between(self.knots[k], t) - target;
            if value.abs() <= self.tol {
                break;
            }
            if value > 0.0 {
                hi = t;
            } else {
                lo = t;
            }
            let newton = t - value / self.curve.speed(t);
            t = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
            if hi - lo <= f64::EPSILON * hi.abs().max(1.0) {
                break;
            }
        }
        t
    }
}

/// Unit-speed reparametrization on `[0, total_length]`.
///
/// Fails with `DegenerateDerivative` if the speed drops below `10 tol` on
/// the check grid.
pub fn arclength_reparametrize(curve: &ParametricCurve, tol: f64) -> Result<ParametricCurve> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance {tol} must be positive")));
    }
    let (t0, t1) = curve.domain();
    if curve.is_arc_length() {
        let base = curve.clone();
        let shifted = base.clone();
        return ParametricCurve::new(
            format!("{}~", curve.name()),
            curve.dim(),
            Arc::new(move |u| base.position(t0 + u)),
            Arc::new(move |u| shifted.derivative(t0 + u)),
            (0.0, t1 - t0),
            true,
        );
    }
    for t in grid(curve.domain(), CHECK_GRID) {
        let speed = curve.speed(t);
        if !(speed >= 10.0 * tol) {
            return Err(Error::DegenerateDerivative { at: t, speed });
        }
    }
    let knots: Vec<f64> = grid(curve.domain(), CHECK_GRID).collect();
    let cell_tol = tol / CHECK_GRID as f64;
    let mut cumulative = vec![0.0];
    for w in knots.windows(2) {
        let c = curve.clone();
        let piece = adaptive_simpson(&|t| c.speed(t), w[0], w[1], cell_tol);
        cumulative.push(cumulative.last().unwrap() + piece);
    }
    let total = *cumulative.last().unwrap();
    let table = Arc::new(ArcTable { curve: curve.clone(), knots, cumulative, tol: cell_tol });
    let tp = table.clone();
    let td = table;
    ParametricCurve::new(
        format!("{}~", curve.name()),
        curve.dim(),
        Arc::new(move |u| tp.curve.position(tp.invert(u))),
        Arc::new(move |u| {
            let t = td.invert(u);
            let d = td.curve.derivative(t);
            let s = norm(&d);
            d.into_iter().map(|x| x / s).collect()
        }),
        (0.0, total),
        true,
    )
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChordRatio {
    /// Estimated `inf |a(t + x) - a(t)| / x`.
    pub value: f64,
    pub argmin: f64,
    /// Largest sampled ratio, for the upper inequality.
    pub max_value: f64,
    /// Spacing of the search grid.
    pub resolution: f64,
}

fn require_arc_length(curve: &ParametricCurve) -> Result<()> {
    if curve.is_arc_length() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("curve {} is not arc-length parametrized", curve.name())))
    }
}

/// `g(x) = inf { |a(t) - a(s)| / |t - s| : |t - s| = x }` over the whole
/// domain: grid search followed by golden-section refinement.
pub fn chord_ratio_inf(curve: &ParametricCurve, x: f64, grid_size: usize) -> Result<ChordRatio> {
    let (t0, t1) = curve.domain();
    chord_ratio_inf_window(curve, x, (t0, t1), grid_size)
}

/// As [`chord_ratio_inf`] with both points restricted to `window`.
pub fn chord_ratio_inf_window(curve: &ParametricCurve, x: f64, window: (f64, f64), grid_size: usize) -> Result<ChordRatio> {
    require_arc_length(curve)?;
    let (a, b) = window;
    let (t0, t1) = curve.domain();
    if a < t0 || b > t1 || !(a < b) {
        return Err(Error::Domain(format!("window [{a}, {b}] is not inside the curve domain")));
    }
    if !(x > 0.0) || x > b - a {
        return Err(Error::Domain(format!("x = {x} is outside (0, {}]", b - a)));
    }
    let ratio = |t: f64| dist(&curve.position(t + x), &curve.position(t)) / x;
    let span = b - a - x;
    let n = grid_size.max(2);
    let h = span / (n - 1) as f64;
    let (mut best_t, mut best, mut max_value) = (a, f64::INFINITY, f64::NEG_INFINITY);
    for i in 0..n {
        let t = if i + 1 == n { a + span } else { a + h * i as f64 };
        let v = ratio(t);
        max_value = max_value.max(v);
        if v < best {
            best = v;
            best_t = t;
        }
    }
    if span > 0.0 {
        let (mut lo, mut hi) = ((best_t - h).max(a), (best_t + h).min(a + span));
        let phi = 0.5 * (5f64.sqrt() - 1.0);
        let mut c = hi - phi * (hi - lo);
        let mut d = lo + phi * (hi - lo);
        let (mut fc, mut fd) = (ratio(c), ratio(d));
        for _ in 0..80 {
            if fc < fd {
                hi = d;
                d = c;
                fd = fc;
                c = hi - phi * (hi - lo);
                fc = ratio(c);
            } else {
                lo = c;
                c = d;
                fc = fd;
                d = lo + phi * (hi - lo);
                fd = ratio(d);
            }
        }
        for (t, v) in [(c, fc), (d, fd)] {
            if v < best {
                best = v;
                best_t = t;
            }
        }
    }
    Ok(ChordRatio { value: best, argmin: best_t, max_value, resolution: h })
}

/// Default grid for the chord searches inside [`find_rho`].
pub const RHO_GRID: usize = 512;

/// Largest sampled `rho <= min(1, length)` with `g(x) >= 1/2` for every
/// sampled `x <= rho`; the crossing is located by bisection.
pub fn find_rho(curve: &ParametricCurve) -> Result<f64> {
    require_arc_length(curve)?;
    let cap = curve.length().min(1.0);
    let g = |x: f64| -> Result<f64> {
        let c = chord_ratio_inf(curve, x, RHO_GRID)?;
        if c.max_value > 1.0 + 1e-6 {
            return Err(Error::NumericalInconsistency(format!(
                "chord exceeds arc by a factor {} at x = {x}",
                c.max_value
            )));
        }
        Ok(c.value)
    };
    let samples = 200;
    let mut prev = 0.0;
    for k in 1..=samples {
        let x = cap * k as f64 / samples as f64;
        if g(x)? < 0.5 {
            let (mut lo, mut hi) = (prev, x);
            for _ in 0..50 {
                let mid = 0.5 * (lo + hi);
                if mid > 0.0 && g(mid)? >= 0.5 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            return Ok(lo);
        }
        prev = x;
    }
    Ok(cap)
}

/// Lower bound `max(1/2, 1 - K x^2)` for `g(rho x)` with
/// `K = (1.25 kappa rho)^2 / 6`, where `kappa` is the grid-sampled
/// Lipschitz constant of `a'` on `[0, rho]`.
///
/// Unit speed gives `g(x) >= 1 - kappa^2 x^2 / 24`; the factors 1.25 and 4
/// absorb the sampling error of `kappa`.
pub fn curve_target(curve: &ParametricCurve, rho: f64) -> Result<TargetFunction> {
    require_arc_length(curve)?;
    let (t0, _) = curve.domain();
    let n = CHECK_GRID;
    let kappa = curve.derivative_modulus(t0, t0 + rho, n) * n as f64 / rho;
    let k = (1.25 * kappa * rho).powi(2) / 6.0;
    let k = ceil_dyadic(&from_f64(k)?, 16);
    TargetFunction::parse(&format!("max(1/2, 1 - {k} * x^2)"), true)
}

pub type ScalarFn = Arc<dyn Fn(f64) -> Result<f64> + Send + Sync>;

/// A real function on the arc `a([0, rho])`, indexed by the arc parameter.
#[derive(Clone)]
pub struct LipschitzFunction {
    pub name: String,
    pub rho: f64,
    eval: ScalarFn,
}

impl fmt::Debug for LipschitzFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LipschitzFunction").field("name", &self.name).field("rho", &self.rho).finish()
    }
}

impl LipschitzFunction {
    pub fn new(name: impl Into<String>, rho: f64, eval: ScalarFn) -> Self {
        LipschitzFunction { name: name.into(), rho, eval }
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        if !(0.0..=self.rho).contains(&t) {
            return Err(Error::Domain(format!("t = {t} is outside [0, {}]", self.rho)));
        }
        (self.eval)(t)
    }
}

/// Extra levels used by `F` and `H`, enough for double precision.
pub const FUNCTION_EXTRA_LEVELS: usize = 40;

fn cantor_fraction(approx: &CantorApproximation, curve: &ParametricCurve, rho: f64) -> Result<Arc<dyn Fn(f64) -> Result<(f64, f64)> + Send + Sync>> {
    require_arc_length(curve)?;
    if !(rho > 0.0) || rho > curve.length() {
        return Err(Error::Domain(format!("rho = {rho} is outside (0, {}]", curve.length())));
    }
    let ev = Arc::new(PrefixEvaluator::new(approx, FUNCTION_EXTRA_LEVELS));
    let rho_q = from_f64(rho)?;
    Ok(Arc::new(move |t: f64| {
        let u: BigRational = (from_f64(t)? / &rho_q).min(BigRational::from_integer(1.into()));
        let m = ev.prefix_bounds(&u)?.midpoint();
        Ok((u.to_f64().unwrap_or(f64::NAN), to_f64(&m)))
    }))
}

/// `F(a(t)) = rho |C ∩ [0, t / rho]|`, the integral of the indicator of
/// the Cantor set mapped onto `[0, rho]`.
pub fn build_f(approx: &CantorApproximation, curve: &ParametricCurve, rho: f64) -> Result<LipschitzFunction> {
    let frac = cantor_fraction(approx, curve, rho)?;
    Ok(LipschitzFunction::new("F", rho, Arc::new(move |t| Ok(rho * frac(t)?.1))))
}

/// `H(a(t)) = rho (m - (u - m) / 8)` with `u = t / rho` and
/// `m = |C ∩ [0, u]|`.
pub fn build_h(approx: &CantorApproximation, curve: &ParametricCurve, rho: f64) -> Result<LipschitzFunction> {
    let frac = cantor_fraction(approx, curve, rho)?;
    Ok(LipschitzFunction::new(
        "H",
        rho,
        Arc::new(move |t| {
            let (u, m) = frac(t)?;
            Ok(rho * (m - (u - m) / 8.0))
        }),
    ))
}

/// `p -> |p - a(base)|` on `a([0, rho])`, which attains its constant.
pub fn distance_function(curve: &ParametricCurve, base: f64, rho: f64) -> LipschitzFunction {
    let c = curve.clone();
    let origin = curve.position(base);
    LipschitzFunction::new("distance", rho, Arc::new(move |t| Ok(dist(&c.position(t), &origin))))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LipschitzSample {
    pub t: f64,
    pub s: f64,
    pub quotient: f64,
    pub chord: f64,
}

impl LipschitzSample {
    pub fn arc(&self) -> f64 {
        (self.t - self.s).abs()
    }
}

#[derive(Clone, Debug)]
pub struct ScanConfig {
    pub coarse_grid: usize,
    pub refine_rounds: usize,
    /// Pairs refined in each round.
    pub keep: usize,
    /// Pairs closer than `min_separation * rho` are not probed.
    pub min_separation: f64,
}

impl Default for ScanConfig {
    fn default() -> Self {
        ScanConfig { coarse_grid: 400, refine_rounds: 6, keep: 8, min_separation: 1e-6 }
    }
}

#[derive(Clone, Debug)]
pub struct AttainmentScan {
    pub sup_estimate: f64,
    pub witnesses: Vec<LipschitzSample>,
    pub attained: bool,
    /// Final grid resolution after refinement.
    pub resolution: f64,
    pub pairs_evaluated: usize,
    /// Largest quotient over pairs at least two final cells apart.
    pub separated_sup: f64,
    pub records: Vec<LipschitzSample>,
}

impl AttainmentScan {
    /// Columns `t, s, quotient, chord, arc`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,s,quotient,chord,arc\n");
        for r in &self.records {
            let _ = writeln!(out, "{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}", r.t, r.s, r.quotient, r.chord, r.arc());
        }
        out
    }
}

/// Attained-flag tolerance.
pub const ATTAIN_TOL: f64 = 1e-12;

/// Lipschitz quotients over all pairs of a coarse grid on `[0, rho]`, then
/// `refine_rounds` rounds around the best pairs: a 7x7 local grid whose
/// width halves every round, plus contractions of each pair towards its
/// first point by factors 1/2, 1/4 and 1/8.
///
/// `attained` is set when a pair at least two final cells apart comes
/// within `1e-12` of the supremum estimate.
pub fn attainment_scan(f: &LipschitzFunction, curve: &ParametricCurve, config: &ScanConfig) -> Result<AttainmentScan> {
    require_arc_length(curve)?;
    let rho = f.rho;
    let n = config.coarse_grid.max(2);
    let h0 = rho / (n - 1) as f64;
    let min_sep = config.min_separation * rho;
    let mut cache: BTreeMap<u64, (f64, Vec<f64>)> = BTreeMap::new();
    let mut point = |t: f64| -> Result<(f64, Vec<f64>)> {
        if let Some(v) = cache.get(&t.to_bits()) {
            return Ok(v.clone());
        }
        let v = (f.eval(t)?, curve.position(t));
        cache.insert(t.to_bits(), v.clone());
        Ok(v)
    };
    let quotient = |a: &(f64, Vec<f64>), b: &(f64, Vec<f64>)| {
        let chord = dist(&a.1, &b.1);
        ((a.0 - b.0).abs() / chord, chord)
    };

    let coarse: Vec<f64> = (0..n).map(|i| if i + 1 == n { rho } else { h0 * i as f64 }).collect();
    let values: Vec<(f64, Vec<f64>)> = coarse.iter().map(|&t| point(t)).collect::<Result<_>>()?;
    let mut pairs_evaluated = 0usize;
    let mut all: Vec<LipschitzSample> = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let (q, chord) = quotient(&values[i], &values[j]);
            pairs_evaluated += 1;
            all.push(LipschitzSample { t: coarse[i], s: coarse[j], quotient: q, chord });
        }
    }
    let by_quotient = |a: &LipschitzSample, b: &LipschitzSample| b.quotient.total_cmp(&a.quotient);
    all.sort_by(by_quotient);
    let mut top: Vec<LipschitzSample> = all.iter().take(config.keep).copied().collect();
    let mut records: Vec<LipschitzSample> = all.iter().take(4 * config.keep).copied().collect();
    let mut best = all[0];
    let final_cell = h0 / (1u64 << config.refine_rounds.min(60)) as f64;
    let separated = |p: &LipschitzSample| (p.t - p.s).abs() >= 2.0 * final_cell;
    let mut separated_sup = all.iter().filter(|p| separated(p)).map(|p| p.quotient).fold(f64::NEG_INFINITY, f64::max);
    drop(all);

    for round in 1..=config.refine_rounds {
        let width = h0 / (1u64 << (round - 1)) as f64;
        let mut fresh: Vec<LipschitzSample> = Vec::new();
        for p in &top {
            let mut probes: Vec<(f64, f64)> = Vec::with_capacity(52);
            for i in 0..7 {
                for j in 0..7 {
                    let t = (p.t + width * (i as f64 - 3.0) / 3.0).clamp(0.0, rho);
                    let s = (p.s + width * (j as f64 - 3.0) / 3.0).clamp(0.0, rho);
                    probes.push((t, s));
                }
            }
            for k in 1..=3 {
                probes.push((p.t, p.t + (p.s - p.t) / (1u64 << k) as f64));
            }
            for (t, s) in probes {
                if (t - s).abs() < min_sep {
                    continue;
                }
                let (a, b) = (point(t)?, point(s)?);
                let (q, chord) = quotient(&a, &b);
                pairs_evaluated += 1;
                fresh.push(LipschitzSample { t, s, quotient: q, chord });
            }
        }
        for p in &fresh {
            if p.quotient > best.quotient {
                best = *p;
            }
            if separated(p) {
                separated_sup = separated_sup.max(p.quotient);
            }
        }
        records.extend(fresh.iter().copied());
        fresh.extend(top.iter().copied());
        fresh.sort_by(by_quotient);
        fresh.dedup_by(|a, b| a.t == b.t && a.s == b.s);
        top = fresh.into_iter().take(config.keep).collect();
    }
    let sup_estimate = best.quotient;
    Ok(AttainmentScan {
        sup_estimate,
        witnesses: top,
        attained: separated_sup >= sup_estimate - ATTAIN_TOL,
        resolution: final_cell,
        pairs_evaluated,
        separated_sup,
        records,
    })
}

//! Acceptance suite: one PASS/FAIL line per criterion, including its time
//! budget. Runs without the libtest harness so the lines always print.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use cantor_density::curves::{
    attainment_scan, build_f, build_h, chord_ratio_inf, curve_target, distance_function, find_rho,
    ParametricCurve, ScanConfig,
};
use cantor_density::density::{check_lemma2, check_lemma4, default_samples, Lemma4Config, VerifyConfig};
use cantor_density::enclosure::{rational, to_f64};
use cantor_density::{
    default_headroom, level_intervals, lemma1_quantities, prefix_measure_bounds, synthesize_lambda,
    verify_target, CantorApproximation, LambdaSequence, Precision, TargetFunction,
};
use num_traits::Signed;

use common::*;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome { passed, detail: detail.into() }
}

fn criterion_sequences() -> Vec<LambdaSequence> {
    let mut rng = rng(2);
    (0..10).map(|_| random_sequence(&mut rng, 14)).collect()
}

fn closed_forms_match_halving() -> Outcome {
    let mut rng = rng(1);
    let mut mismatches = 0;
    let mut checked = 0;
    for k in 0..50 {
        let depth = 1 + k % 12;
        let prefix = random_prefix(&mut rng, depth);
        let seq = LambdaSequence::truncated(prefix.clone()).unwrap();
        let levels = halving_levels(&prefix);
        for n in 1..=depth {
            let closed = lemma1_quantities(&seq, n).unwrap();
            let oracle = oracle_quantities(&levels, n);
            checked += 1;
            if closed.r != oracle.r || closed.g != oracle.g || closed.level_measure != oracle.measure {
                mismatches += 1;
            }
            if level_intervals(&seq, n).unwrap() != levels[n] {
                mismatches += 1;
            }
        }
    }
    outcome(mismatches == 0, format!("{checked} levels, {mismatches} mismatches"))
}

fn sliding_window_equals_prefix() -> Outcome {
    let mut rng = rng(3);
    let mut failures = 0;
    for seq in criterion_sequences() {
        let approx = CantorApproximation::new(&seq, 14, Precision::default()).unwrap();
        let samples: Vec<_> = (0..64).map(|_| random_unit(&mut rng)).collect();
        let report = check_lemma2(&approx, &samples).unwrap();
        failures += report.records.iter().filter(|r| !r.exact_equal).count();
    }
    outcome(failures == 0, format!("640 windows, {failures} mismatches"))
}

fn prefix_density_peaks_at_radii() -> Outcome {
    let mut failures = 0;
    let mut checked = 0;
    let config = Lemma4Config { enclosures: false, ..Lemma4Config::default() };
    for seq in criterion_sequences() {
        let approx = CantorApproximation::new(&seq, 14, Precision::default()).unwrap();
        let report = check_lemma4(&approx, &config).unwrap();
        checked += report.records.len();
        failures += report.exact_failures() + report.decomposition_failures;
    }
    outcome(failures == 0, format!("{checked} samples, {failures} failures"))
}

fn cusp_target_certified() -> Outcome {
    let prec = Precision::default();
    let f = TargetFunction::parse("max(1/2, 1 - sqrt(x))", true).unwrap();
    let synthesis = synthesize_lambda(&f, 14, &default_headroom(), prec).unwrap();
    let approx = CantorApproximation::new(&synthesis.sequence, 14, prec).unwrap();
    let samples = default_samples(&approx, 128);
    match verify_target(&approx, &f, &samples, &VerifyConfig::default()) {
        Ok(cert) => {
            let margin = cert.min_margin().unwrap();
            let lo = cert.measure.lo().clone();
            let ok = cert.holds && margin.is_positive() && lo > rational(1, 10) && cert.structural.len() == 14;
            outcome(
                ok,
                format!(
                    "{} structural + {} samples, min margin {:.3e}, measure >= {:.6}",
                    cert.structural.len(),
                    cert.samples.len(),
                    to_f64(&margin),
                    to_f64(&lo)
                ),
            )
        }
        Err(e) => outcome(false, e.to_string()),
    }
}

fn circle_chord_ratio() -> Outcome {
    let circle = ParametricCurve::unit_circle();
    let mut worst = 0f64;
    for k in 0..20 {
        let x = 1e-3 * (std::f64::consts::PI / 1e-3).powf(k as f64 / 19.0);
        let x = x.min(std::f64::consts::PI);
        let g = chord_ratio_inf(&circle, x, 256).unwrap().value;
        worst = worst.max((g - 2.0 * (x / 2.0).sin() / x).abs());
    }
    let g_small = chord_ratio_inf(&circle, 1e-3, 256).unwrap().value;
    outcome(worst <= 1e-6 && g_small > 1.0 - 1e-6, format!("max error {worst:.2e}, g(1e-3) = {g_small:.12}"))
}

fn lipschitz_constant_not_attained() -> Outcome {
    let prec = Precision::default();
    let circle = ParametricCurve::unit_circle();
    let rho = find_rho(&circle).unwrap();
    let target = curve_target(&circle, rho).unwrap();
    let synthesis = synthesize_lambda(&target, 14, &default_headroom(), prec).unwrap();
    let approx = CantorApproximation::new(&synthesis.sequence, 14, prec).unwrap();
    let f = build_f(&approx, &circle, rho).unwrap();
    let h = build_h(&approx, &circle, rho).unwrap();
    let config = ScanConfig::default();
    let scan_f = attainment_scan(&f, &circle, &config).unwrap();
    let scan_h = attainment_scan(&h, &circle, &config).unwrap();
    let control = attainment_scan(&distance_function(&circle, 0.0, rho), &circle, &config).unwrap();

    let origin = circle.position(0.0);
    let quotients: Vec<f64> = (4..=12)
        .map(|n| {
            let t = rho * to_f64(approx.r(n));
            let p = circle.position(t);
            let chord = ((p[0] - origin[0]).powi(2) + (p[1] - origin[1]).powi(2)).sqrt();
            (f.eval(t).unwrap() - f.eval(0.0).unwrap()).abs() / chord
        })
        .collect();
    let increasing = quotients.windows(2).all(|w| w[0] < w[1]);
    let last = *quotients.last().unwrap();
    let ok = scan_f.sup_estimate < 1.0
        && scan_h.sup_estimate < 1.0
        && !scan_f.attained
        && !scan_h.attained
        && control.attained
        && increasing
        && last > 0.99;
    outcome(
        ok,
        format!(
            "rho = {rho}, sup F = {:.9}, sup H = {:.9}, attained F/H/control = {}/{}/{}, q(r_12) = {last:.6}, increasing = {increasing}",
            scan_f.sup_estimate, scan_h.sup_estimate, scan_f.attained, scan_h.attained, control.attained
        ),
    )
}

fn brackets_nest_when_deepening() -> Outcome {
    let mut rng = rng(7);
    let prec = Precision::default();
    let f = TargetFunction::parse("max(1/2, 1 - sqrt(x))", true).unwrap();
    let synthesized = synthesize_lambda(&f, 12, &default_headroom(), prec).unwrap().sequence;
    let mut sequences = vec![synthesized];
    sequences.extend((0..4).map(|_| random_sequence(&mut rng, 12)));
    let mut violations = 0;
    let mut checked = 0;
    for (i, seq) in sequences.iter().enumerate() {
        let coarse = CantorApproximation::new(seq, 10, prec).unwrap();
        let fine = CantorApproximation::new(seq, 12, prec).unwrap();
        let count = if i == 0 { 300 } else { 50 };
        for _ in 0..count {
            let x = random_unit(&mut rng);
            let outer = prefix_measure_bounds(&coarse, &x).unwrap();
            let inner = prefix_measure_bounds(&fine, &x).unwrap();
            checked += 1;
            if !outer.encloses(&inner) {
                violations += 1;
            }
        }
    }
    outcome(violations == 0, format!("{checked} points, {violations} violations"))
}

fn main() -> ExitCode {
    let criteria: [(&str, u64, fn() -> Outcome); 7] = [
        ("closed forms equal the halving construction", 10, closed_forms_match_halving),
        ("sliding-window maximum equals the prefix measure", 60, sliding_window_equals_prefix),
        ("prefix density peaks at component lengths", 60, prefix_density_peaks_at_radii),
        ("synthesized set certified below max(1/2, 1 - sqrt x)", 120, cusp_target_certified),
        ("chord/arc infimum on the circle", 5, circle_chord_ratio),
        ("Lipschitz constant of F and H not attained", 120, lipschitz_constant_not_attained),
        ("prefix brackets nest from level 10 to 12", 30, brackets_nest_when_deepening),
    ];
    let mut all = true;
    for (k, (name, budget, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = run();
        let elapsed = start.elapsed();
        let in_time = elapsed <= Duration::from_secs(*budget);
        let passed = result.passed && in_time;
        all &= passed;
        println!(
            "{} criterion {}: {name}: {} [{:.2}s / {budget}s]",
            if passed { "PASS" } else { "FAIL" },
            k + 1,
            result.detail,
            elapsed.as_secs_f64()
        );
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

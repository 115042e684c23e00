mod common;

use cantor_density::curves::{build_f, build_h, chord_ratio_inf, ParametricCurve};
use cantor_density::density::{phi, PrefixEvaluator};
use cantor_density::enclosure::{exp_enclosure, log_enclosure, rational, to_f64};
use cantor_density::io::{sequence_from_json, sequence_to_json};
use cantor_density::{
    lemma1_quantities, level_intervals, phi_bruteforce, prefix_measure_bounds, prefix_measure_level_n,
    CantorApproximation, Expr, LambdaSequence, Precision, PrefixDecomposition,
};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use proptest::prelude::*;

use common::*;

fn prefix_strategy(max_depth: usize) -> impl Strategy<Value = Vec<BigRational>> {
    prop::collection::vec((2i64..=40).prop_flat_map(|q| (1..q, Just(q))), 1..=max_depth).prop_map(|pairs| {
        let mut out: Vec<BigRational> = pairs.into_iter().map(|(p, q)| rational(p, q)).collect();
        out.sort_by(|a, b| b.cmp(a));
        out
    })
}

fn sequence_strategy(max_depth: usize) -> impl Strategy<Value = LambdaSequence> {
    (prefix_strategy(max_depth), 1u32..=7, 0u32..=4).prop_map(|(prefix, ratio_num, base_frac)| {
        let last = &prefix[prefix.len() - 1];
        let cap = cantor_density::enclosure::neg_log_enclosure(&(BigRational::one() - last), Precision::default())
            .unwrap()
            .lo()
            .clone();
        let q = rational(i64::from(ratio_num), 8);
        let base = cap * rational(i64::from(base_frac), 4);
        LambdaSequence::new(prefix, q, base).unwrap()
    })
}

fn unit_point() -> impl Strategy<Value = BigRational> {
    (1u64..=1 << 30).prop_map(|k| BigRational::new(BigInt::from(k), BigInt::from(1u64 << 30)))
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    #[test]
    fn closed_forms_equal_halving(prefix in prefix_strategy(9)) {
        let seq = LambdaSequence::truncated(prefix.clone()).unwrap();
        let levels = halving_levels(&prefix);
        for n in 1..=prefix.len() {
            let q = lemma1_quantities(&seq, n).unwrap();
            let o = oracle_quantities(&levels, n);
            prop_assert_eq!(&q.r, &o.r);
            prop_assert_eq!(&q.g, &o.g);
            prop_assert_eq!(&q.level_measure, &o.measure);
            prop_assert_eq!(level_intervals(&seq, n).unwrap(), levels[n].clone());
        }
    }

    #[test]
    fn prefix_measure_equals_clipped_sum(prefix in prefix_strategy(8), x in unit_point()) {
        let n = prefix.len();
        let approx = CantorApproximation::new(&LambdaSequence::truncated(prefix.clone()).unwrap(), n, Precision::default()).unwrap();
        let levels = halving_levels(&prefix);
        prop_assert_eq!(prefix_measure_level_n(&approx, &x).unwrap(), window_oracle(&levels[n], &BigRational::zero(), &x));
    }

    #[test]
    fn densest_window_starts_at_zero(prefix in prefix_strategy(6), s in unit_point()) {
        let n = prefix.len();
        let approx = CantorApproximation::new(&LambdaSequence::truncated(prefix.clone()).unwrap(), n, Precision::default()).unwrap();
        let intervals = &halving_levels(&prefix)[n];
        let end = BigRational::one() - &s;
        // every window's measure is piecewise linear in its start, so the
        // maximum is attained where an endpoint meets a component endpoint
        let mut starts = vec![BigRational::zero(), end.clone()];
        for (a, b) in intervals {
            for p in [a, b] {
                starts.push(p.clone());
                starts.push(p - &s);
            }
        }
        let best = starts
            .into_iter()
            .map(|a| a.max(BigRational::zero()).min(end.clone()))
            .map(|a| window_oracle(intervals, &a, &(&a + &s)))
            .max()
            .unwrap();
        let prefix_value = prefix_measure_level_n(&approx, &s).unwrap();
        prop_assert_eq!(&best, &prefix_value);
        let brute = phi_bruteforce(&approx, &s).unwrap();
        prop_assert_eq!(&brute.max_value, &prefix_value);
        prop_assert!(brute.witnesses.windows(2).all(|w| w[0] < w[1]));
        prop_assert_eq!(&brute.witnesses[0], &BigRational::zero());
    }

    #[test]
    fn density_peaks_at_band_start(prefix in prefix_strategy(10), t in 0u64..(1 << 20)) {
        let n_max = prefix.len();
        let approx = CantorApproximation::new(&LambdaSequence::truncated(prefix).unwrap(), n_max, Precision::default()).unwrap();
        for n in 1..=n_max {
            let (lo, hi) = (approx.r(n), approx.r(n - 1));
            let s = lo + (hi - lo) * BigRational::new(BigInt::from(t), BigInt::from(1u64 << 20));
            let ps = prefix_measure_level_n(&approx, &s).unwrap();
            let pr = prefix_measure_level_n(&approx, lo).unwrap();
            prop_assert!(ps * lo <= pr * &s);
        }
    }

    #[test]
    fn brackets_nest_across_levels(seq in sequence_strategy(10), x in unit_point()) {
        let depth = seq.depth();
        prop_assume!(depth >= 2);
        let coarse = CantorApproximation::new(&seq, depth - 1, Precision::default()).unwrap();
        let fine = CantorApproximation::new(&seq, depth, Precision::default()).unwrap();
        let outer = prefix_measure_bounds(&coarse, &x).unwrap();
        let inner = prefix_measure_bounds(&fine, &x).unwrap();
        prop_assert!(outer.encloses(&inner));
        let ev = PrefixEvaluator::new(&fine, 6);
        prop_assert!(inner.encloses(&ev.prefix_bounds(&x).unwrap()));
    }

    #[test]
    fn phi_at_one_is_the_measure(seq in sequence_strategy(10)) {
        let approx = CantorApproximation::new(&seq, seq.depth(), Precision::default()).unwrap();
        let p = phi(&approx, &BigRational::one()).unwrap();
        let level = approx.level_measure();
        let tau = approx.tail_factor();
        let lo = &level * tau.lo();
        let hi = &level * tau.hi();
        prop_assert!(p.lo() <= &lo && &hi <= p.hi());
    }

    #[test]
    fn decomposition_round_trips(prefix in prefix_strategy(10), n_off in 0usize..10, k_off in 0usize..10, index in 0usize..1024) {
        let depth = prefix.len();
        let approx = CantorApproximation::new(&LambdaSequence::truncated(prefix).unwrap(), depth, Precision::default()).unwrap();
        let n = 1 + n_off % depth;
        let k = n + k_off % (depth - n + 1);
        let index = index % (1usize << (k - n + 1));
        let d = PrefixDecomposition::of_component(&approx, n, k, index).unwrap();
        prop_assert_eq!(d.reconstruct(&approx), d.endpoint.clone());
        prop_assert!(d.verify(&approx));
    }

    #[test]
    fn sequence_json_round_trips(seq in sequence_strategy(12)) {
        let json = sequence_to_json(&seq).unwrap();
        let back = sequence_from_json(&json).unwrap();
        prop_assert_eq!(&back, &seq);
        prop_assert_eq!(sequence_to_json(&back).unwrap(), json);
    }

    #[test]
    fn exp_and_log_enclosures_are_consistent(num in -4000i64..4000, bits in 32u32..128) {
        let prec = Precision::new(bits).unwrap();
        let x = rational(num, 1000);
        let e = exp_enclosure(&x, prec);
        prop_assert!(e.lo() <= e.hi());
        let back_lo = log_enclosure(e.lo(), prec).unwrap();
        let back_hi = log_enclosure(e.hi(), prec).unwrap();
        prop_assert!(back_lo.lo() <= &x && &x <= back_hi.hi());
        let reference = (num as f64 / 1000.0).exp();
        prop_assert!(to_f64(e.lo()) <= reference * (1.0 + 1e-15) && reference <= to_f64(e.hi()) * (1.0 + 1e-15));
    }

    #[test]
    fn circle_chord_ratio_is_monotone(a in 1e-3f64..3.0, b in 1e-3f64..3.0) {
        prop_assume!((a - b).abs() > 1e-6);
        let c = ParametricCurve::unit_circle();
        let (x, y) = if a < b { (a, b) } else { (b, a) };
        let gx = chord_ratio_inf(&c, x, 64).unwrap().value;
        let gy = chord_ratio_inf(&c, y, 64).unwrap().value;
        prop_assert!(gy <= gx + 1e-12 && gx <= 1.0 + 1e-12);
    }
}

#[test]
fn expressions_round_trip_through_display() {
    for src in ["max(1/2, 1 - sqrt(x))", "min(x, 1 - x) * 3/4", "(x + 1)^3 / (2 - x)", "-x + 1/3"] {
        let e = Expr::parse(src).unwrap();
        assert_eq!(Expr::parse(&e.to_string()).unwrap(), e, "{src}");
    }
}

#[test]
fn f_and_h_slopes_on_gaps_and_components() {
    let seq = LambdaSequence::truncated(vec![rational(1, 4); 8]).unwrap();
    let approx = CantorApproximation::new(&seq, 8, Precision::default()).unwrap();
    let circle = ParametricCurve::unit_circle();
    let rho = 0.75;
    let f = build_f(&approx, &circle, rho).unwrap();
    let h = build_h(&approx, &circle, rho).unwrap();
    assert_eq!(f.eval(0.0).unwrap(), 0.0);
    assert!((f.eval(rho).unwrap() - rho * to_f64(approx.measure().lo())).abs() < 1e-12);
    assert!(f.eval(rho + 1e-9).is_err());
    let level: Vec<(f64, f64)> = approx.intervals().map(|(a, b)| (to_f64(&a) * rho, to_f64(&b) * rho)).collect();
    let cells = 4096;
    let dt = rho / cells as f64;
    let (mut gap_cells, mut component_cells) = (0, 0);
    for i in 0..cells {
        let (t0, t1) = (i as f64 * dt, (i + 1) as f64 * dt);
        let df = f.eval(t1).unwrap() - f.eval(t0).unwrap();
        let dh = h.eval(t1).unwrap() - h.eval(t0).unwrap();
        assert!(df >= -1e-12 && df <= dt + 1e-12, "F slope out of [0, 1] on cell {i}");
        let in_gap = level.windows(2).any(|w| w[0].1 < t0 && t1 < w[1].0);
        let in_component = level.iter().any(|&(a, b)| a < t0 && t1 < b);
        if in_gap {
            gap_cells += 1;
            assert!(df.abs() < 1e-12);
            assert!((dh + dt / 8.0).abs() < 1e-12, "H slope {} on gap cell {i}", dh / dt);
        }
        if in_component {
            component_cells += 1;
            assert!(dh >= -dt / 8.0 - 1e-12 && dh <= dt + 1e-12);
        }
    }
    assert!(gap_cells > 100 && component_cells > 100);
}

#[test]
fn h_at_rho_splits_the_integral() {
    let seq = LambdaSequence::truncated(vec![rational(1, 3); 6]).unwrap();
    let approx = CantorApproximation::new(&seq, 6, Precision::default()).unwrap();
    let circle = ParametricCurve::unit_circle();
    let h = build_h(&approx, &circle, 1.0).unwrap();
    let m = to_f64(approx.measure().lo());
    assert!((h.eval(1.0).unwrap() - (m - (1.0 - m) / 8.0)).abs() < 1e-12);
    assert_eq!(h.eval(0.0).unwrap(), 0.0);
}

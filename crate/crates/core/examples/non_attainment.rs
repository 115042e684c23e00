//! F and H on the unit circle stay strictly below Lipschitz constant 1,
//! while the distance to a point attains it.

use cantor_density::curves::{curve_target, distance_function, ScanConfig};
use cantor_density::{
    attainment_scan, build_f, build_h, default_headroom, find_rho, synthesize_lambda, CantorApproximation,
    ParametricCurve, Precision, Result,
};

pub struct Outcome {
    pub sup_f: f64,
    pub sup_h: f64,
    pub attained_f: bool,
    pub attained_h: bool,
    pub attained_distance: bool,
}

pub fn run(config: &ScanConfig) -> Result<Outcome> {
    let prec = Precision::default();
    let circle = ParametricCurve::unit_circle();
    let rho = find_rho(&circle)?;
    let target = curve_target(&circle, rho)?;
    let synthesis = synthesize_lambda(&target, 12, &default_headroom(), prec)?;
    let approx = CantorApproximation::new(&synthesis.sequence, 12, prec)?;
    let f = attainment_scan(&build_f(&approx, &circle, rho)?, &circle, config)?;
    let h = attainment_scan(&build_h(&approx, &circle, rho)?, &circle, config)?;
    let d = attainment_scan(&distance_function(&circle, 0.0, rho), &circle, config)?;
    for (name, scan) in [("F", &f), ("H", &h), ("distance", &d)] {
        println!("{name:>8}: sup {:.12}  attained {}", scan.sup_estimate, scan.attained);
    }
    Ok(Outcome {
        sup_f: f.sup_estimate,
        sup_h: h.sup_estimate,
        attained_f: f.attained,
        attained_h: h.attained,
        attained_distance: d.attained,
    })
}

fn main() -> Result<()> {
    run(&ScanConfig { coarse_grid: 160, refine_rounds: 5, ..ScanConfig::default() }).map(|_| ())
}

//! Synthesizes a sequence for the target `max(1/2, 1 - sqrt(x))` and
//! certifies `phi_C < f` at the structural points and log-spaced samples.

use cantor_density::density::{default_samples, VerifyConfig};
use cantor_density::enclosure::to_f64;
use cantor_density::{
    default_headroom, synthesize_lambda, verify_target, CantorApproximation, Certificate, Precision, Result,
    TargetFunction,
};

pub fn run(depth: usize) -> Result<Certificate> {
    let prec = Precision::default();
    let f = TargetFunction::parse("max(1/2, 1 - sqrt(x))", true)?;
    let synthesis = synthesize_lambda(&f, depth, &default_headroom(), prec)?;
    let approx = CantorApproximation::new(&synthesis.sequence, depth, prec)?;
    let cert = verify_target(&approx, &f, &default_samples(&approx, 64), &VerifyConfig::default())?;
    for r in &cert.structural {
        println!("n = {:>2}  phi(r_n) <= {:.9}  f >= {:.9}  {:?}", r.n, to_f64(r.phi.hi()), to_f64(r.f.lo()), r.verdict);
    }
    println!(
        "measure in [{:.9}, {:.9}], smallest margin {:.3e}",
        to_f64(cert.measure.lo()),
        to_f64(cert.measure.hi()),
        to_f64(&cert.min_margin().expect("nonempty"))
    );
    Ok(cert)
}

fn main() -> Result<()> {
    run(12).map(|_| ())
}

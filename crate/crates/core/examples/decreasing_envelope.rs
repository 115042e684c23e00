//! A target that dips and recovers is replaced by its running minimum
//! before synthesis.

use cantor_density::enclosure::{rational, to_f64};
use cantor_density::target::default_envelope_grid;
use cantor_density::{
    decreasing_envelope, default_headroom, synthesize_lambda, Precision, RationalEnclosure, Result, TargetFunction,
};

pub fn run() -> Result<RationalEnclosure> {
    let prec = Precision::default();
    let g = TargetFunction::parse("max(3/4, 1 - 2*x*(1 - x))", false)?;
    let h = decreasing_envelope(&g, &default_envelope_grid(48, 64), prec)?;
    for x in [rational(1, 8), rational(1, 2), rational(3, 4), rational(1, 1)] {
        println!(
            "x = {:>4}: g = {:.6}  envelope = {:.6}",
            x.to_string(),
            to_f64(g.evaluate(&x, prec)?.lo()),
            to_f64(h.evaluate(&x, prec)?.lo())
        );
    }
    let synthesis = synthesize_lambda(&h, 10, &default_headroom(), prec)?;
    println!("measure in [{:.9}, {:.9}]", to_f64(synthesis.measure.lo()), to_f64(synthesis.measure.hi()));
    Ok(synthesis.measure)
}

fn main() -> Result<()> {
    run().map(|_| ())
}

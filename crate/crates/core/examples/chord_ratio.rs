//! Chord/arc infimum on circles: the unit circle against `2 sin(x/2) / x`,
//! and the first dip to 1/2 on a circle of radius 0.1.

use cantor_density::curves::chord_ratio_inf;
use cantor_density::{find_rho, ParametricCurve, Result};

pub fn run() -> Result<(f64, f64)> {
    let circle = ParametricCurve::unit_circle();
    let mut worst = 0f64;
    for x in [1e-3, 1e-2, 0.1, 0.5, 1.0, 2.0, std::f64::consts::PI] {
        let g = chord_ratio_inf(&circle, x, 256)?.value;
        let exact = 2.0 * (x / 2.0).sin() / x;
        worst = worst.max((g - exact).abs());
        println!("x = {x:<8} g = {g:.12}  closed form {exact:.12}");
    }
    let small = ParametricCurve::circle(0.1, 1.0)?;
    let rho = find_rho(&small)?;
    println!("radius 0.1 circle: rho = {rho:.6}");
    Ok((worst, rho))
}

fn main() -> Result<()> {
    run().map(|_| ())
}

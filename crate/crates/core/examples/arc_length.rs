//! Unit-speed reparametrization of the parabola `(t, t^2/2)` and an
//! ellipse.

use cantor_density::{arclength_reparametrize, ParametricCurve, Result};

pub fn run() -> Result<f64> {
    let parabola = arclength_reparametrize(&ParametricCurve::polynomial("(t, t^2/2)", (0.0, 1.0))?, 1e-10)?;
    let exact = (2f64.sqrt() + (1.0 + 2f64.sqrt()).ln()) / 2.0;
    println!("parabola length {:.12} (closed form {exact:.12})", parabola.length());
    for u in [0.25, 0.5, 1.0] {
        let p = parabola.position(u);
        println!("  u = {u}: ({:.9}, {:.9}), speed {:.12}", p[0], p[1], parabola.speed(u));
    }
    let ellipse = arclength_reparametrize(&ParametricCurve::ellipse(1.0, 0.5)?, 1e-10)?;
    println!("half ellipse a = 1, b = 1/2: length {:.12}", ellipse.length());
    Ok(parabola.length())
}

fn main() -> Result<()> {
    run().map(|_| ())
}

//! Static pictures of the first levels: SVG bars and a CSV of the exact
//! component endpoints.

use std::fmt::Write as _;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::construction::{level_intervals, LambdaSequence};
use crate::enclosure::to_f64;
use crate::error::{Error, Result};

pub const CANVAS_WIDTH: u32 = 800;
pub const ROW_HEIGHT: u32 = 40;
/// Deepest level drawn; beyond it bars are thinner than a pixel.
pub const MAX_FIGURE_LEVEL: usize = 10;

/// Nearest integer, ties to even.
pub fn round_half_even(x: &BigRational) -> BigInt {
    let (q, r) = x.numer().div_mod_floor(x.denom());
    let twice = r * BigInt::from(2);
    match twice.cmp(x.denom()) {
        std::cmp::Ordering::Less => q,
        std::cmp::Ordering::Greater => q + 1,
        std::cmp::Ordering::Equal if q.is_even() => q,
        std::cmp::Ordering::Equal => q + 1,
    }
}

/// Components of `C_0..C_n`, level by level.
pub fn levels(lambda: &LambdaSequence, n: usize) -> Result<Vec<Vec<(BigRational, BigRational)>>> {
    let mut out = vec![vec![(BigRational::zero(), BigRational::one())]];
    for k in 1..=n {
        out.push(level_intervals(lambda, k)?);
    }
    Ok(out)
}

fn check_depth(n: usize) -> Result<()> {
    if n > MAX_FIGURE_LEVEL {
        return Err(Error::InvalidArgument(format!("level {n} exceeds the figure cap {MAX_FIGURE_LEVEL}")));
    }
    Ok(())
}

/// One row per level on an `800 x 40 (n + 1)` canvas. Endpoints are scaled
/// exactly and rounded half-even to whole pixels.
pub fn levels_svg(lambda: &LambdaSequence, n: usize) -> Result<String> {
    check_depth(n)?;
    let rows = levels(lambda, n)?;
    let height = ROW_HEIGHT * rows.len() as u32;
    let scale = BigRational::from_integer(BigInt::from(CANVAS_WIDTH));
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{CANVAS_WIDTH}" height="{height}" viewBox="0 0 {CANVAS_WIDTH} {height}">"#
    );
    let _ = writeln!(svg, r#"<rect width="{CANVAS_WIDTH}" height="{height}" fill="white"/>"#);
    for (k, row) in rows.iter().enumerate() {
        let y = ROW_HEIGHT as usize * k + ROW_HEIGHT as usize / 4;
        let _ = writeln!(svg, r#"<g id="level-{k}" fill="black">"#);
        for (a, b) in row {
            let x0 = round_half_even(&(a * &scale));
            let x1 = round_half_even(&(b * &scale));
            let _ = writeln!(
                svg,
                r#"<rect x="{x0}" y="{y}" width="{}" height="{}"/>"#,
                x1 - &x0,
                ROW_HEIGHT / 2
            );
        }
        let _ = writeln!(svg, "</g>");
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

/// Columns `level, index, left_num, left_den, right_num, right_den, left, right`.
pub fn levels_csv(lambda: &LambdaSequence, n: usize) -> Result<String> {
    let mut out = String::from("level,index,left_num,left_den,right_num,right_den,left,right\n");
    for (k, row) in levels(lambda, n)?.iter().enumerate() {
        for (i, (a, b)) in row.iter().enumerate() {
            let _ = writeln!(
                out,
                "{k},{i},{},{},{},{},{:.17e},{:.17e}",
                a.numer(),
                a.denom(),
                b.numer(),
                b.denom(),
                to_f64(a),
                to_f64(b)
            );
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::enclosure::rational as r;

    #[test]
    fn half_even_rounding() {
        assert_eq!(round_half_even(&r(5, 2)), BigInt::from(2));
        assert_eq!(round_half_even(&r(7, 2)), BigInt::from(4));
        assert_eq!(round_half_even(&r(-5, 2)), BigInt::from(-2));
        assert_eq!(round_half_even(&r(800, 3)), BigInt::from(267));
    }

    #[test]
    fn thirds_figure() {
        let seq = LambdaSequence::truncated(vec![r(1, 3), r(1, 3)]).unwrap();
        let svg = levels_svg(&seq, 2).unwrap();
        assert!(svg.contains(r#"height="120""#));
        // level 2: [0, 1/9] [1/6, 5/18] [1/2, 11/18] [2/3, 7/9]
        for x in ["0", "133", "400", "533"] {
            assert!(svg.contains(&format!(r#"<rect x="{x}" y="90""#)), "{x}");
        }
        assert_eq!(svg.matches("<rect ").count(), 1 + 1 + 2 + 4);
        assert!(levels_svg(&seq, 11).is_err());
    }

    #[test]
    fn level_zero_is_one_bar() {
        let seq = LambdaSequence::truncated(vec![r(1, 3)]).unwrap();
        let svg = levels_svg(&seq, 0).unwrap();
        assert!(svg.contains(r#"<rect x="0" y="10" width="800" height="20"/>"#));
        let csv = levels_csv(&seq, 1).unwrap();
        assert_eq!(csv.lines().count(), 1 + 1 + 2);
        assert!(csv.contains("1,1,1,2,5,6,"));
    }
}

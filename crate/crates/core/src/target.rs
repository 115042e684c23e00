//! Target functions `f: [0, 1] -> [0, 1]` evaluated as rational enclosures.
//!
//! Targets come in three flavours: expression trees over
//! `{x, rationals, + - * /, ^, sqrt, min, max}`, tabulated step functions,
//! and the decreasing envelope of another target on a grid.

use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::enclosure::{Precision, RationalEnclosure};
use crate::error::{Error, Result};

/// Parses `"3"`, `"-7/4"`, `"0.125"` or `"1.5e-3"` into an exact rational.
pub fn parse_rational(text: &str) -> Result<BigRational> {
    let t = text.trim();
    let bad = || Error::Parse(format!("not a rational number: {text:?}"));
    if let Some((n, d)) = t.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| bad())?;
        let d: BigInt = d.trim().parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(bad());
        }
        return Ok(BigRational::new(n, d));
    }
    let (neg, body) = match t.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, t.strip_prefix('+').unwrap_or(t)),
    };
    let (mantissa, exponent) = match body.split_once(['e', 'E']) {
        Some((m, e)) => (m, e.parse::<i32>().ok().filter(|e| e.abs() <= 4096).ok_or_else(bad)?),
        None => (body, 0),
    };
    let (int_part, frac_part) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let digits = format!("{int_part}{frac_part}");
    let num: BigInt = if digits.is_empty() { BigInt::zero() } else { digits.parse().map_err(|_| bad())? };
    let shift = exponent - frac_part.len() as i32;
    let scale = num_traits::pow(BigInt::from(10), shift.unsigned_abs() as usize);
    let value = if shift >= 0 { BigRational::from_integer(num * scale) } else { BigRational::new(num, scale) };
    Ok(if neg { -value } else { value })
}

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Var,
    Const(BigRational),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, u32),
    Sqrt(Box<Expr>),
    Min(Vec<Expr>),
    Max(Vec<Expr>),
}

#[derive(Clone, Debug, PartialEq)]
enum Token {
    Num(String),
    Ident(String),
    Op(char),
}

fn tokenize(src: &str) -> Result<Vec<Token>> {
    let mut out = Vec::new();
    let chars: Vec<char> = src.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        match c {
            c if c.is_whitespace() => i += 1,
            '0'..='9' | '.' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                    i += 1;
                }
                out.push(Token::Num(chars[start..i].iter().collect()));
            }
            c if c.is_alphabetic() => {
                let start = i;
                while i < chars.len() && chars[i].is_alphanumeric() {
                    i += 1;
                }
                out.push(Token::Ident(chars[start..i].iter().collect()));
            }
            '+' | '-' | '*' | '/' | '^' | '(' | ')' | ',' => {
                out.push(Token::Op(c));
                i += 1;
            }
            '−' => {
                out.push(Token::Op('-'));
                i += 1;
            }
            '×' | '·' => {
                out.push(Token::Op('*'));
                i += 1;
            }
            '÷' => {
                out.push(Token::Op('/'));
                i += 1;
            }
            '√' => {
                out.push(Token::Ident("sqrt".into()));
                i += 1;
            }
            _ => return Err(Error::Parse(format!("unexpected character {c:?} in {src:?}"))),
        }
    }
    Ok(out)
}

struct Parser<'a> {
    tokens: Vec<Token>,
    pos: usize,
    var: &'a str,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn eat_op(&mut self, op: char) -> bool {
        if self.peek() == Some(&Token::Op(op)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_op(&mut self, op: char) -> Result<()> {
        if self.eat_op(op) {
            Ok(())
        } else {
            Err(Error::Parse(format!("expected {op:?} at token {}", self.pos)))
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            if self.eat_op('+') {
                lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat_op('-') {
                lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat_op('*') {
                lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
            } else if self.eat_op('/') {
                lhs = Expr::Div(Box::new(lhs), Box::new(self.unary()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.eat_op('-') {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        if self.eat_op('+') {
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if self.eat_op('^') {
            match self.tokens.get(self.pos).cloned() {
                Some(Token::Num(n)) => {
                    self.pos += 1;
                    let k: u32 = n
                        .parse()
                        .map_err(|_| Error::Parse(format!("exponent must be a small non-negative integer, got {n}")))?;
                    Ok(Expr::Pow(Box::new(base), k))
                }
                _ => Err(Error::Parse("exponent must be a non-negative integer literal".into())),
            }
        } else {
            Ok(base)
        }
    }

    fn args(&mut self) -> Result<Vec<Expr>> {
        self.expect_op('(')?;
        let mut args = vec![self.expr()?];
        while self.eat_op(',') {
            args.push(self.expr()?);
        }
        self.expect_op(')')?;
        Ok(args)
    }

    fn atom(&mut self) -> Result<Expr> {
        match self.tokens.get(self.pos).cloned() {
            Some(Token::Num(n)) => {
                self.pos += 1;
                Ok(Expr::Const(parse_rational(&n)?))
            }
            Some(Token::Ident(name)) => {
                self.pos += 1;
                match name.as_str() {
                    v if v == self.var => Ok(Expr::Var),
                    "sqrt" => {
                        let mut args = self.args()?;
                        if args.len() != 1 {
                            return Err(Error::Parse("sqrt takes one argument".into()));
                        }
                        Ok(Expr::Sqrt(Box::new(args.pop().unwrap())))
                    }
                    "min" | "max" => {
                        let args = self.args()?;
                        if args.len() < 2 {
                            return Err(Error::Parse(format!("{name} takes at least two arguments")));
                        }
                        Ok(if name == "min" { Expr::Min(args) } else { Expr::Max(args) })
                    }
                    other => Err(Error::Parse(format!("unknown identifier {other:?}"))),
                }
            }
            Some(Token::Op('(')) => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect_op(')')?;
                Ok(e)
            }
            other => Err(Error::Parse(format!("unexpected token {other:?}"))),
        }
    }
}

impl Expr {
    /// Parses an expression in the single variable `var`.
    pub fn parse_in(src: &str, var: &str) -> Result<Expr> {
        let tokens = tokenize(src)?;
        let mut p = Parser { tokens, pos: 0, var };
        let e = p.expr()?;
        if p.pos != p.tokens.len() {
            return Err(Error::Parse(format!("trailing input in {src:?}")));
        }
        Ok(e)
    }

    /// Parses an expression in `x`.
    pub fn parse(src: &str) -> Result<Expr> {
        Self::parse_in(src, "x")
    }

    pub fn eval_enclosure(&self, x: &RationalEnclosure, prec: Precision) -> Result<RationalEnclosure> {
        Ok(match self {
            Expr::Var => x.clone(),
            Expr::Const(c) => RationalEnclosure::point(c.clone()),
            Expr::Neg(a) => -&a.eval_enclosure(x, prec)?,
            Expr::Add(a, b) => &a.eval_enclosure(x, prec)? + &b.eval_enclosure(x, prec)?,
            Expr::Sub(a, b) => &a.eval_enclosure(x, prec)? - &b.eval_enclosure(x, prec)?,
            Expr::Mul(a, b) => &a.eval_enclosure(x, prec)? * &b.eval_enclosure(x, prec)?,
            Expr::Div(a, b) => a.eval_enclosure(x, prec)?.div(&b.eval_enclosure(x, prec)?)?,
            Expr::Pow(a, k) => a.eval_enclosure(x, prec)?.powi(*k),
            Expr::Sqrt(a) => a.eval_enclosure(x, prec)?.sqrt(prec)?,
            Expr::Min(args) => fold_enclosures(args, x, prec, RationalEnclosure::min)?,
            Expr::Max(args) => fold_enclosures(args, x, prec, RationalEnclosure::max)?,
        })
    }

    pub fn eval_f64(&self, x: f64) -> f64 {
        match self {
            Expr::Var => x,
            Expr::Const(c) => crate::enclosure::to_f64(c),
            Expr::Neg(a) => -a.eval_f64(x),
            Expr::Add(a, b) => a.eval_f64(x) + b.eval_f64(x),
            Expr::Sub(a, b) => a.eval_f64(x) - b.eval_f64(x),
            Expr::Mul(a, b) => a.eval_f64(x) * b.eval_f64(x),
            Expr::Div(a, b) => a.eval_f64(x) / b.eval_f64(x),
            Expr::Pow(a, k) => a.eval_f64(x).powi(*k as i32),
            Expr::Sqrt(a) => a.eval_f64(x).sqrt(),
            Expr::Min(args) => args.iter().map(|e| e.eval_f64(x)).fold(f64::INFINITY, f64::min),
            Expr::Max(args) => args.iter().map(|e| e.eval_f64(x)).fold(f64::NEG_INFINITY, f64::max),
        }
    }

    /// Coefficients `c_0, c_1, ...` when the expression is a polynomial.
    pub fn to_polynomial(&self) -> Result<Vec<BigRational>> {
        fn trim(mut p: Vec<BigRational>) -> Vec<BigRational> {
            while p.len() > 1 && p.last().is_some_and(|c| c.is_zero()) {
                p.pop();
            }
            p
        }
        fn add(a: &[BigRational], b: &[BigRational], sign: i64) -> Vec<BigRational> {
            let n = a.len().max(b.len());
            let s = BigRational::from_integer(BigInt::from(sign));
            (0..n)
                .map(|i| {
                    let x = a.get(i).cloned().unwrap_or_else(BigRational::zero);
                    let y = b.get(i).cloned().unwrap_or_else(BigRational::zero);
                    x + y * &s
                })
                .collect()
        }
        fn mul(a: &[BigRational], b: &[BigRational]) -> Vec<BigRational> {
            let mut out = vec![BigRational::zero(); a.len() + b.len() - 1];
            for (i, x) in a.iter().enumerate() {
                for (j, y) in b.iter().enumerate() {
                    out[i + j] += x * y;
                }
            }
            out
        }
        let p = match self {
            Expr::Var => vec![BigRational::zero(), BigRational::one()],
            Expr::Const(c) => vec![c.clone()],
            Expr::Neg(a) => a.to_polynomial()?.into_iter().map(|c| -c).collect(),
            Expr::Add(a, b) => add(&a.to_polynomial()?, &b.to_polynomial()?, 1),
            Expr::Sub(a, b) => add(&a.to_polynomial()?, &b.to_polynomial()?, -1),
            Expr::Mul(a, b) => mul(&a.to_polynomial()?, &b.to_polynomial()?),
            Expr::Div(a, b) => {
                let d = trim(b.to_polynomial()?);
                if d.len() != 1 || d[0].is_zero() {
                    return Err(Error::Parse("polynomials may only be divided by non-zero constants".into()));
                }
                a.to_polynomial()?.into_iter().map(|c| c / &d[0]).collect()
            }
            Expr::Pow(a, k) => {
                let base = a.to_polynomial()?;
                let mut acc = vec![BigRational::one()];
                for _ in 0..*k {
                    acc = mul(&acc, &base);
                }
                acc
            }
            Expr::Sqrt(_) | Expr::Min(_) | Expr::Max(_) => {
                return Err(Error::Parse("sqrt/min/max are not polynomial".into()))
            }
        };
        Ok(trim(p))
    }
}

fn fold_enclosures(
    args: &[Expr],
    x: &RationalEnclosure,
    prec: Precision,
    op: fn(&RationalEnclosure, &RationalEnclosure) -> RationalEnclosure,
) -> Result<RationalEnclosure> {
    let mut acc = args[0].eval_enclosure(x, prec)?;
    for a in &args[1..] {
        acc = op(&acc, &a.eval_enclosure(x, prec)?);
    }
    Ok(acc)
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let list = |f: &mut fmt::Formatter<'_>, name: &str, args: &[Expr]| {
            write!(f, "{name}(")?;
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{a}")?;
            }
            write!(f, ")")
        };
        match self {
            Expr::Var => write!(f, "x"),
            Expr::Const(c) if c.is_negative() => write!(f, "({c})"),
            Expr::Const(c) => write!(f, "{c}"),
            Expr::Neg(a) => write!(f, "(-{a})"),
            Expr::Add(a, b) => write!(f, "({a} + {b})"),
            Expr::Sub(a, b) => write!(f, "({a} - {b})"),
            Expr::Mul(a, b) => write!(f, "({a} * {b})"),
            Expr::Div(a, b) => write!(f, "({a} / {b})"),
            Expr::Pow(a, k) => write!(f, "({a})^{k}"),
            Expr::Sqrt(a) => write!(f, "sqrt({a})"),
            Expr::Min(args) => list(f, "min", args),
            Expr::Max(args) => list(f, "max", args),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TargetKind {
    Expression,
    Tabulated,
    EnvelopeOf,
}

#[derive(Clone, Debug)]
struct Table {
    xs: Vec<BigRational>,
    ys: Vec<BigRational>,
}

impl Table {
    /// Step function from below: between two nodes the smaller value.
    fn eval(&self, x: &BigRational) -> BigRational {
        let k = self.xs.partition_point(|node| node < x);
        if k == self.xs.len() {
            return self.ys[k - 1].clone();
        }
        if &self.xs[k] == x || k == 0 {
            return self.ys[k].clone();
        }
        self.ys[k - 1].clone().min(self.ys[k].clone())
    }
}

#[derive(Clone, Debug)]
struct Envelope {
    inner: Arc<TargetFunction>,
    grid: Vec<BigRational>,
    running_min: Vec<RationalEnclosure>,
}

#[derive(Clone, Debug)]
enum Repr {
    Expression(Expr),
    Tabulated(Table),
    Envelope(Envelope),
}

/// A target `f` with enclosure-valued evaluation on exact rationals.
#[derive(Clone, Debug)]
pub struct TargetFunction {
    repr: Repr,
    monotone: bool,
    label: String,
}

impl TargetFunction {
    /// Expression target; `monotone` records the caller's claim that `f`
    /// is non-increasing.
    pub fn expression(expr: Expr, monotone: bool) -> Self {
        let label = expr.to_string();
        TargetFunction { repr: Repr::Expression(expr), monotone, label }
    }

    pub fn parse(src: &str, monotone: bool) -> Result<Self> {
        let mut t = Self::expression(Expr::parse(src)?, monotone);
        t.label = src.trim().to_string();
        Ok(t)
    }

    /// Step function through `(x, f(x))` nodes, taking the smaller
    /// neighbouring value between nodes.
    pub fn tabulated(mut points: Vec<(BigRational, BigRational)>, monotone: bool) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidTarget("empty table".into()));
        }
        points.sort_by(|a, b| a.0.cmp(&b.0));
        if points.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::InvalidTarget("duplicate abscissa in table".into()));
        }
        let (xs, ys): (Vec<_>, Vec<_>) = points.into_iter().unzip();
        let label = format!("table[{} nodes]", xs.len());
        Ok(TargetFunction { repr: Repr::Tabulated(Table { xs, ys }), monotone, label })
    }

    /// Reads `x,y` lines (rationals or decimals, `#` comments).
    pub fn parse_table(text: &str, monotone: bool) -> Result<Self> {
        let mut points = Vec::new();
        for line in text.lines() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (x, y) = line
                .split_once(',')
                .ok_or_else(|| Error::Parse(format!("table line without comma: {line:?}")))?;
            points.push((parse_rational(x)?, parse_rational(y)?));
        }
        Self::tabulated(points, monotone)
    }

    pub fn kind(&self) -> TargetKind {
        match self.repr {
            Repr::Expression(_) => TargetKind::Expression,
            Repr::Tabulated(_) => TargetKind::Tabulated,
            Repr::Envelope(_) => TargetKind::EnvelopeOf,
        }
    }

    pub fn is_monotone(&self) -> bool {
        self.monotone
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Enclosure of `f(x)`, intersected with `[0, 1]`.
    pub fn evaluate(&self, x: &BigRational, prec: Precision) -> Result<RationalEnclosure> {
        let raw = match &self.repr {
            Repr::Expression(e) => e.eval_enclosure(&RationalEnclosure::point(x.clone()), prec)?,
            Repr::Tabulated(t) => RationalEnclosure::point(t.eval(x)),
            Repr::Envelope(env) => {
                let k = env.grid.partition_point(|g| g < x).min(env.grid.len() - 1);
                env.running_min[k].clone()
            }
        };
        Ok(raw.clamp(&BigRational::zero(), &BigRational::one()))
    }

    pub fn evaluate_f64(&self, x: f64) -> Result<(f64, f64)> {
        let e = self.evaluate(&crate::enclosure::from_f64(x)?, Precision::default())?;
        Ok(e.to_f64_bounds())
    }
}

/// Decreasing envelope `h(s) = inf { g(x) : x in [0, s] }` sampled on `grid`.
///
/// `h(s)` is the running minimum of the enclosures of `g` over the grid
/// points up to the first grid point `>= s` (all points when `s` is beyond
/// the grid), so `h` is a non-increasing step function with `h <= g` on the
/// grid.
pub fn decreasing_envelope(g: &TargetFunction, grid: &[BigRational], prec: Precision) -> Result<TargetFunction> {
    let mut grid = grid.to_vec();
    grid.sort();
    grid.dedup();
    if grid.is_empty() {
        return Err(Error::InvalidArgument("envelope grid is empty".into()));
    }
    if grid[0] <= BigRational::zero() || grid[grid.len() - 1] > BigRational::one() {
        return Err(Error::Domain("envelope grid must lie in (0, 1]".into()));
    }
    let mut running_min: Vec<RationalEnclosure> = Vec::with_capacity(grid.len());
    for x in &grid {
        let v = g.evaluate(x, prec)?;
        let next = match running_min.last() {
            Some(prev) => prev.min(&v),
            None => v,
        };
        running_min.push(next);
    }
    let label = format!("envelope({})", g.label());
    Ok(TargetFunction {
        repr: Repr::Envelope(Envelope { inner: Arc::new(g.clone()), grid, running_min }),
        monotone: true,
        label,
    })
}

impl TargetFunction {
    /// The function an envelope was built from.
    pub fn envelope_source(&self) -> Option<&TargetFunction> {
        match &self.repr {
            Repr::Envelope(env) => Some(&env.inner),
            _ => None,
        }
    }
}

/// Dyadic points `2^-k` for `k = 0..=max_k` merged with `1/m, 2/m, ..., 1`.
pub fn default_envelope_grid(max_k: u32, uniform: u32) -> Vec<BigRational> {
    let mut grid: Vec<BigRational> = (0..=max_k)
        .map(|k| BigRational::new(BigInt::one(), crate::enclosure::pow2(k)))
        .collect();
    grid.extend((1..=uniform).map(|i| BigRational::new(BigInt::from(i), BigInt::from(uniform))));
    grid.sort();
    grid.dedup();
    grid
}

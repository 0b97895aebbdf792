//! Test-function expressions, rational in `z₁, z₂, w₁, w₂` and their conjugates.
//!
//! ```text
//! expr   := term {("+"|"-") term}
//! term   := unary {("*"|"/") unary}
//! unary  := "-" unary | factor
//! factor := base ["^" ["-"] int]
//! base   := "z1"|"z2"|"w1"|"w2"|"i"|number|"conj(" expr ")"|"(" expr ")"
//! ```

use std::fmt;
use std::ops;

use num_complex::Complex64;
use thiserror::Error;

use crate::jets::{Jet, JetError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Leaf {
    Z1,
    Z2,
    W1,
    W2,
}

impl Leaf {
    fn name(self) -> &'static str {
        match self {
            Leaf::Z1 => "z1",
            Leaf::Z2 => "z2",
            Leaf::W1 => "w1",
            Leaf::W2 => "w2",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Leaf(Leaf),
    /// Non-negative real literal.
    Num(f64),
    I,
    Conj(Box<Expr>),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, i32),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("syntax error at position {position}: expected {expected}")]
    Syntax { position: usize, expected: String },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("denominator `{path}` too close to zero: |value| = {value:e}")]
    NearZeroDenominator { path: String, value: f64 },
    #[error(transparent)]
    Jet(#[from] JetError),
}

pub fn z1() -> Expr {
    Expr::Leaf(Leaf::Z1)
}
pub fn z2() -> Expr {
    Expr::Leaf(Leaf::Z2)
}
pub fn w1() -> Expr {
    Expr::Leaf(Leaf::W1)
}
pub fn w2() -> Expr {
    Expr::Leaf(Leaf::W2)
}

/// A literal; negative or complex values become `Neg`/`I` combinations.
pub fn lit(c: Complex64) -> Expr {
    let real = |x: f64| if x < 0.0 { -Expr::Num(-x) } else { Expr::Num(x) };
    match (c.re, c.im) {
        (re, im) if im == 0.0 => real(re),
        (re, im) if re == 0.0 => {
            if im == 1.0 {
                Expr::I
            } else {
                real(im) * Expr::I
            }
        }
        (re, im) => real(re) + real(im) * Expr::I,
    }
}

impl Expr {
    pub fn conj(self) -> Expr {
        Expr::Conj(Box::new(self))
    }

    pub fn pow(self, n: i32) -> Expr {
        Expr::Pow(Box::new(self), n)
    }

    /// Number of nodes.
    pub fn size(&self) -> usize {
        match self {
            Expr::Leaf(_) | Expr::Num(_) | Expr::I => 1,
            Expr::Conj(e) | Expr::Neg(e) | Expr::Pow(e, _) => 1 + e.size(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => 1 + a.size() + b.size(),
        }
    }

    /// Evaluates the expression on jets of the coordinate functions
    /// `[z₁, z₂, z̄₁, z̄₂]` and the dual coordinates `[w₁, w₂, w̄₁, w̄₂]`.
    /// Denominators whose value is below `guard` in modulus are rejected.
    pub fn eval_jet(&self, z: &[Jet; 4], w: &[Jet; 4], guard: f64) -> Result<Jet, EvalError> {
        let order = z[0].order().min(w[0].order());
        self.eval_inner(z, w, guard, order, false)
    }

    /// Leaf jets with conjugation pushed down.
    fn eval_inner(&self, z: &[Jet; 4], w: &[Jet; 4], guard: f64, order: usize, bar: bool) -> Result<Jet, EvalError> {
        let o = if bar { 2 } else { 0 };
        Ok(match self {
            Expr::Leaf(Leaf::Z1) => z[o].truncate(order),
            Expr::Leaf(Leaf::Z2) => z[1 + o].truncate(order),
            Expr::Leaf(Leaf::W1) => w[o].truncate(order),
            Expr::Leaf(Leaf::W2) => w[1 + o].truncate(order),
            Expr::Num(x) => Jet::constant(Complex64::new(*x, 0.0), order),
            Expr::I => Jet::constant(Complex64::new(0.0, if bar { -1.0 } else { 1.0 }), order),
            Expr::Conj(e) => e.eval_inner(z, w, guard, order, !bar)?,
            Expr::Neg(e) => -e.eval_inner(z, w, guard, order, bar)?,
            Expr::Add(a, b) => &a.eval_inner(z, w, guard, order, bar)? + &b.eval_inner(z, w, guard, order, bar)?,
            Expr::Sub(a, b) => &a.eval_inner(z, w, guard, order, bar)? - &b.eval_inner(z, w, guard, order, bar)?,
            Expr::Mul(a, b) => &a.eval_inner(z, w, guard, order, bar)? * &b.eval_inner(z, w, guard, order, bar)?,
            Expr::Div(a, b) => {
                let den = b.eval_inner(z, w, guard, order, bar)?;
                self.check_den(b, &den, guard)?;
                a.eval_inner(z, w, guard, order, bar)?.div(&den, 0.0)?
            }
            Expr::Pow(e, n) => {
                let base = e.eval_inner(z, w, guard, order, bar)?;
                if *n < 0 {
                    self.check_den(e, &base, guard)?;
                }
                base.powi(*n, 0.0)?
            }
        })
    }

    fn check_den(&self, den_expr: &Expr, den: &Jet, guard: f64) -> Result<(), EvalError> {
        let value = den.value().norm();
        if !(value >= guard) || value == 0.0 {
            return Err(EvalError::NearZeroDenominator { path: den_expr.to_string(), value });
        }
        Ok(())
    }

    /// Plain value from point values of `(z, w)`.
    pub fn eval_value(&self, z: [Complex64; 2], w: [Complex64; 2]) -> Complex64 {
        match self {
            Expr::Leaf(Leaf::Z1) => z[0],
            Expr::Leaf(Leaf::Z2) => z[1],
            Expr::Leaf(Leaf::W1) => w[0],
            Expr::Leaf(Leaf::W2) => w[1],
            Expr::Num(x) => Complex64::new(*x, 0.0),
            Expr::I => Complex64::i(),
            Expr::Conj(e) => e.eval_value(z, w).conj(),
            Expr::Neg(e) => -e.eval_value(z, w),
            Expr::Add(a, b) => a.eval_value(z, w) + b.eval_value(z, w),
            Expr::Sub(a, b) => a.eval_value(z, w) - b.eval_value(z, w),
            Expr::Mul(a, b) => a.eval_value(z, w) * b.eval_value(z, w),
            Expr::Div(a, b) => a.eval_value(z, w) / b.eval_value(z, w),
            Expr::Pow(e, n) => e.eval_value(z, w).powi(*n),
        }
    }

    /// Every denominator subexpression (divisors and bases of negative powers).
    pub fn denominators(&self) -> Vec<&Expr> {
        let mut out = Vec::new();
        self.collect_dens(&mut out);
        out
    }

    fn collect_dens<'a>(&'a self, out: &mut Vec<&'a Expr>) {
        match self {
            Expr::Leaf(_) | Expr::Num(_) | Expr::I => {}
            Expr::Conj(e) | Expr::Neg(e) => e.collect_dens(out),
            Expr::Pow(e, n) => {
                if *n < 0 {
                    out.push(e);
                }
                e.collect_dens(out);
            }
            Expr::Div(a, b) => {
                out.push(b);
                a.collect_dens(out);
                b.collect_dens(out);
            }
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) => {
                a.collect_dens(out);
                b.collect_dens(out);
            }
        }
    }

    /// Smallest |denominator| at a point.
    pub fn min_denominator(&self, z: [Complex64; 2], w: [Complex64; 2]) -> f64 {
        self.denominators().iter().map(|d| d.eval_value(z, w).norm()).fold(f64::INFINITY, f64::min)
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Add(..) | Expr::Sub(..) => 1,
            Expr::Mul(..) | Expr::Div(..) => 2,
            Expr::Neg(_) => 3,
            Expr::Pow(..) => 4,
            _ => 5,
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let wrap = |f: &mut fmt::Formatter<'_>, e: &Expr, min: u8| -> fmt::Result {
            if e.precedence() < min {
                write!(f, "({e})")
            } else {
                write!(f, "{e}")
            }
        };
        match self {
            Expr::Leaf(l) => f.write_str(l.name()),
            Expr::Num(x) => write!(f, "{x}"),
            Expr::I => f.write_str("i"),
            Expr::Conj(e) => write!(f, "conj({e})"),
            Expr::Neg(e) => {
                f.write_str("-")?;
                wrap(f, e, 3)
            }
            Expr::Add(a, b) | Expr::Sub(a, b) => {
                wrap(f, a, 1)?;
                f.write_str(if matches!(self, Expr::Add(..)) { " + " } else { " - " })?;
                wrap(f, b, 2)
            }
            Expr::Mul(a, b) | Expr::Div(a, b) => {
                wrap(f, a, 2)?;
                f.write_str(if matches!(self, Expr::Mul(..)) { "*" } else { "/" })?;
                wrap(f, b, 3)
            }
            Expr::Pow(e, n) => {
                wrap(f, e, 5)?;
                write!(f, "^{n}")
            }
        }
    }
}

macro_rules! expr_binop {
    ($trait:ident, $method:ident, $variant:ident) => {
        impl ops::$trait for Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                Expr::$variant(Box::new(self), Box::new(rhs))
            }
        }
    };
}
expr_binop!(Add, add, Add);
expr_binop!(Sub, sub, Sub);
expr_binop!(Mul, mul, Mul);
expr_binop!(Div, div, Div);

impl ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::Neg(Box::new(self))
    }
}

pub fn parse(text: &str) -> Result<Expr, ParseError> {
    let mut p = Parser { src: text.as_bytes(), pos: 0 };
    let e = p.expr()?;
    p.skip_ws();
    if p.pos < p.src.len() {
        return Err(p.error("operator or end of input"));
    }
    Ok(e)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn error(&self, expected: &str) -> ParseError {
        ParseError::Syntax { position: self.pos, expected: expected.to_string() }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, tok: &str) -> bool {
        self.skip_ws();
        if self.src[self.pos..].starts_with(tok.as_bytes()) {
            self.pos += tok.len();
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    lhs = lhs + self.term()?;
                }
                Some(b'-') => {
                    self.pos += 1;
                    lhs = lhs - self.term()?;
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek() {
                Some(b'*') => {
                    self.pos += 1;
                    lhs = lhs * self.unary()?;
                }
                Some(b'/') => {
                    self.pos += 1;
                    lhs = lhs / self.unary()?;
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.peek() == Some(b'-') {
            self.pos += 1;
            return Ok(-self.unary()?);
        }
        self.factor()
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        let base = self.base()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            let neg = self.eat("-");
            self.skip_ws();
            let start = self.pos;
            while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
            if start == self.pos {
                return Err(self.error("integer exponent"));
            }
            let digits = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii digits");
            let n: i32 = digits.parse().map_err(|_| ParseError::Syntax {
                position: start,
                expected: "exponent fitting in 32 bits".into(),
            })?;
            return Ok(base.pow(if neg { -n } else { n }));
        }
        Ok(base)
    }

    fn base(&mut self) -> Result<Expr, ParseError> {
        const EXPECTED: &str = "z1, z2, w1, w2, i, number, conj( or (";
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                if !self.eat(")") {
                    return Err(self.error(")"));
                }
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(_) => {
                if self.eat("conj(") {
                    let e = self.expr()?;
                    if !self.eat(")") {
                        return Err(self.error(")"));
                    }
                    return Ok(e.conj());
                }
                for (tok, leaf) in [("z1", Leaf::Z1), ("z2", Leaf::Z2), ("w1", Leaf::W1), ("w2", Leaf::W2)] {
                    if self.eat(tok) {
                        return Ok(Expr::Leaf(leaf));
                    }
                }
                if self.eat("i") {
                    return Ok(Expr::I);
                }
                Err(self.error(EXPECTED))
            }
            None => Err(self.error(EXPECTED)),
        }
    }

    fn number(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        let digits = |p: &mut Self| {
            while p.pos < p.src.len() && p.src[p.pos].is_ascii_digit() {
                p.pos += 1;
            }
        };
        digits(self);
        if self.pos < self.src.len() && self.src[self.pos] == b'.' {
            self.pos += 1;
            digits(self);
        }
        if self.pos < self.src.len() && matches!(self.src[self.pos], b'e' | b'E') {
            let save = self.pos;
            self.pos += 1;
            if self.pos < self.src.len() && matches!(self.src[self.pos], b'+' | b'-') {
                self.pos += 1;
            }
            let exp_start = self.pos;
            digits(self);
            if exp_start == self.pos {
                self.pos = save;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii number");
        text.parse::<f64>()
            .map(Expr::Num)
            .map_err(|_| ParseError::Syntax { position: start, expected: "number".into() })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_examples() {
        assert_eq!(parse("z1*w1 + z2*w2").unwrap(), z1() * w1() + z2() * w2());
        assert_eq!(parse("z1/w2").unwrap(), z1() / w2());
        assert_eq!(parse("conj(z1)^2").unwrap(), z1().conj().pow(2));
        assert_eq!(parse("-z1^-2").unwrap(), -(z1().pow(-2)));
        assert_eq!(parse("2.5e-1*i").unwrap(), Expr::Num(0.25) * Expr::I);
        assert_eq!(parse("1 - 2 - 3").unwrap(), (Expr::Num(1.0) - Expr::Num(2.0)) - Expr::Num(3.0));
    }

    #[test]
    fn reports_syntax_errors() {
        match parse("z1 + * z2").unwrap_err() {
            ParseError::Syntax { position, .. } => assert_eq!(position, 5),
        }
        assert!(parse("z3").is_err());
        assert!(parse("conj(z1").is_err());
        assert!(parse("z1^").is_err());
        assert!(parse("z1 z2").is_err());
    }

    #[test]
    fn literal_builder() {
        let e = lit(Complex64::new(-1.5, 2.0));
        let v = e.eval_value([Complex64::new(0.0, 0.0); 2], [Complex64::new(0.0, 0.0); 2]);
        assert_eq!(v, Complex64::new(-1.5, 2.0));
        assert_eq!(parse(&e.to_string()).unwrap(), e);
    }

    fn arb_expr() -> impl Strategy<Value = Expr> {
        let leaf = prop_oneof![
            Just(z1()),
            Just(z2()),
            Just(w1()),
            Just(w2()),
            Just(Expr::I),
            (0u32..1000).prop_map(|n| Expr::Num(n as f64 / 8.0)),
        ];
        leaf.prop_recursive(4, 32, 2, |inner| {
            prop_oneof![
                inner.clone().prop_map(Expr::conj),
                inner.clone().prop_map(|e| -e),
                (inner.clone(), -3i32..4).prop_map(|(e, n)| e.pow(n)),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| a + b),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| a - b),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| a * b),
                (inner.clone(), inner).prop_map(|(a, b)| a / b),
            ]
        })
    }

    proptest! {
        #[test]
        fn print_parse_round_trip(e in arb_expr()) {
            let text = e.to_string();
            prop_assert_eq!(parse(&text).unwrap(), e);
        }
    }
}

//! Truncated Taylor expansions in the four Wirtinger variables
//! `(z₁, z₂, z̄₁, z̄₂)`.
//!
//! A [`Jet`] of order `n` stores the Taylor coefficients `c_a` of a smooth
//! function `f(p + h) = Σ c_a h^a` for all multi-indices `a = (a₁, a₂, b₁, b₂)`
//! of total degree `≤ n`, where `h = (h₁, h₂, h̄₁, h̄₂)` and the barred
//! increments are treated as independent variables. The base point is
//! implicit: jets are always relative to the point they were evaluated at.
//!
//! Coefficients are stored densely in a graded order shared by all jet orders,
//! so truncating to a lower order is taking a prefix.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};
use std::sync::OnceLock;

use num_complex::Complex64;
use thiserror::Error;

/// Highest supported jet order.
pub const MAX_ORDER: usize = 8;

/// Multi-index `(a₁, a₂, b₁, b₂)`: powers of `h₁, h₂, h̄₁, h̄₂`.
pub type MultiIndex = [u8; 4];

/// One of the four Wirtinger directions / variables.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Wirtinger {
    Z1,
    Z2,
    Zb1,
    Zb2,
}

impl Wirtinger {
    pub const ALL: [Wirtinger; 4] = [Wirtinger::Z1, Wirtinger::Z2, Wirtinger::Zb1, Wirtinger::Zb2];

    /// Position of this variable in a multi-index and in component arrays.
    pub fn slot(self) -> usize {
        match self {
            Wirtinger::Z1 => 0,
            Wirtinger::Z2 => 1,
            Wirtinger::Zb1 => 2,
            Wirtinger::Zb2 => 3,
        }
    }

    pub fn from_slot(slot: usize) -> Wirtinger {
        Wirtinger::ALL[slot]
    }

    /// `z_j ↔ z̄_j`.
    pub fn conj(self) -> Wirtinger {
        Wirtinger::from_slot((self.slot() + 2) % 4)
    }
}

impl fmt::Display for Wirtinger {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Wirtinger::Z1 => "z1",
            Wirtinger::Z2 => "z2",
            Wirtinger::Zb1 => "conj(z1)",
            Wirtinger::Zb2 => "conj(z2)",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum JetError {
    #[error("jet order mismatch: {0} vs {1}")]
    OrderMismatch(usize, usize),
    #[error("denominator too close to zero: |constant term| = {0:e}")]
    NearZeroDenominator(f64),
    #[error("{function} is undefined at constant term {value}")]
    DomainError { function: &'static str, value: Complex64 },
    #[error("cannot differentiate a jet of order 0")]
    OrderExhausted,
    #[error("singular system: condition estimate {0:e}")]
    SingularSystem(f64),
    #[error("linear solve residual {0:e} exceeds tolerance")]
    SolveResidual(f64),
    #[error("linear system has inconsistent dimensions")]
    Dimension,
}

/// Numerical thresholds used by jet division and linear solves.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JetSettings {
    /// Smallest admissible |constant term| of a denominator.
    pub eps_div: f64,
    /// Largest admissible relative residual of [`solve_linear`].
    pub eps_solve: f64,
    /// Largest admissible condition number of the constant-term matrix.
    pub max_condition: f64,
}

impl Default for JetSettings {
    fn default() -> Self {
        JetSettings { eps_div: 1e-12, eps_solve: 1e-9, max_condition: 1e8 }
    }
}

struct Tables {
    indices: Vec<MultiIndex>,
    /// `len[n]` = number of multi-indices with degree ≤ n.
    len: Vec<usize>,
    lookup: Vec<u32>,
    conj: Vec<usize>,
    /// For every target index k: all pairs (i, j) with index_i + index_j = index_k.
    products: Vec<Vec<(u32, u32)>>,
    /// For every variable and every target index k (degree ≤ MAX_ORDER - 1):
    /// the source index of k + e_var and the factor (k_var + 1).
    deriv: [Vec<(usize, f64)>; 4],
}

const SIDE: usize = MAX_ORDER + 1;

fn lookup_key(a: &MultiIndex) -> usize {
    a[0] as usize + SIDE * (a[1] as usize + SIDE * (a[2] as usize + SIDE * a[3] as usize))
}

fn degree(a: &MultiIndex) -> usize {
    a.iter().map(|&x| x as usize).sum()
}

fn tables() -> &'static Tables {
    static TABLES: OnceLock<Tables> = OnceLock::new();
    TABLES.get_or_init(|| {
        let mut indices = Vec::new();
        let mut len = Vec::with_capacity(SIDE);
        for d in 0..=MAX_ORDER {
            for a0 in (0..=d).rev() {
                for a1 in (0..=d - a0).rev() {
                    for b0 in (0..=d - a0 - a1).rev() {
                        let b1 = d - a0 - a1 - b0;
                        indices.push([a0 as u8, a1 as u8, b0 as u8, b1 as u8]);
                    }
                }
            }
            len.push(indices.len());
        }
        let mut lookup = vec![u32::MAX; SIDE.pow(4)];
        for (k, a) in indices.iter().enumerate() {
            lookup[lookup_key(a)] = k as u32;
        }
        let find = |a: &MultiIndex| lookup[lookup_key(a)] as usize;
        let conj = indices.iter().map(|a| find(&[a[2], a[3], a[0], a[1]])).collect();

        let mut products = vec![Vec::new(); indices.len()];
        for (i, a) in indices.iter().enumerate() {
            for (j, b) in indices.iter().enumerate() {
                if degree(a) + degree(b) > MAX_ORDER {
                    continue;
                }
                let s = [a[0] + b[0], a[1] + b[1], a[2] + b[2], a[3] + b[3]];
                products[find(&s)].push((i as u32, j as u32));
            }
        }

        let deriv = std::array::from_fn(|v| {
            indices[..len[MAX_ORDER - 1]]
                .iter()
                .map(|a| {
                    let mut s = *a;
                    s[v] += 1;
                    (find(&s), (a[v] as f64) + 1.0)
                })
                .collect()
        });

        Tables { indices, len, lookup, conj, products, deriv }
    })
}

/// Number of coefficients of a jet of the given order.
pub fn coefficient_count(order: usize) -> usize {
    tables().len[order]
}

/// Truncated Wirtinger–Taylor expansion of a smooth function at a point of C².
#[derive(Clone, Debug, PartialEq)]
pub struct Jet {
    order: usize,
    coeffs: Vec<Complex64>,
}

impl Jet {
    fn check_order(order: usize) {
        assert!(order <= MAX_ORDER, "jet order {order} exceeds MAX_ORDER = {MAX_ORDER}");
    }

    pub fn zero(order: usize) -> Jet {
        Jet::check_order(order);
        Jet { order, coeffs: vec![Complex64::new(0.0, 0.0); coefficient_count(order)] }
    }

    pub fn constant(value: Complex64, order: usize) -> Jet {
        let mut j = Jet::zero(order);
        j.coeffs[0] = value;
        j
    }

    pub fn one(order: usize) -> Jet {
        Jet::constant(Complex64::new(1.0, 0.0), order)
    }

    /// Jet of the coordinate function `var` at a point where it takes `value`.
    pub fn variable(var: Wirtinger, value: Complex64, order: usize) -> Jet {
        let mut j = Jet::constant(value, order);
        if order >= 1 {
            let mut a = [0u8; 4];
            a[var.slot()] = 1;
            j.set(&a, Complex64::new(1.0, 0.0));
        }
        j
    }

    /// Jets of `z₁, z₂, z̄₁, z̄₂` at the point `z`.
    pub fn coordinates(z: [Complex64; 2], order: usize) -> [Jet; 4] {
        [
            Jet::variable(Wirtinger::Z1, z[0], order),
            Jet::variable(Wirtinger::Z2, z[1], order),
            Jet::variable(Wirtinger::Zb1, z[0].conj(), order),
            Jet::variable(Wirtinger::Zb2, z[1].conj(), order),
        ]
    }

    /// Builds a jet from coefficients in the internal graded order.
    pub fn from_coefficients(order: usize, coeffs: Vec<Complex64>) -> Result<Jet, JetError> {
        Jet::check_order(order);
        if coeffs.len() != coefficient_count(order) {
            return Err(JetError::Dimension);
        }
        Ok(Jet { order, coeffs })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Constant term: the value of the function at the base point.
    pub fn value(&self) -> Complex64 {
        self.coeffs[0]
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Multi-indices in storage order, matching [`Jet::coefficients`].
    pub fn multi_indices(&self) -> &'static [MultiIndex] {
        &tables().indices[..self.coeffs.len()]
    }

    pub fn coeff(&self, a: &MultiIndex) -> Complex64 {
        if degree(a) > self.order || a.iter().any(|&x| x as usize > MAX_ORDER) {
            return Complex64::new(0.0, 0.0);
        }
        self.coeffs[tables().lookup[lookup_key(a)] as usize]
    }

    pub fn set(&mut self, a: &MultiIndex, value: Complex64) {
        assert!(degree(a) <= self.order, "multi-index {a:?} beyond jet order {}", self.order);
        let k = tables().lookup[lookup_key(a)] as usize;
        self.coeffs[k] = value;
    }

    pub fn truncate(&self, order: usize) -> Jet {
        let order = order.min(self.order);
        Jet { order, coeffs: self.coeffs[..coefficient_count(order)].to_vec() }
    }

    /// Largest coefficient modulus.
    pub fn norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Jet of the complex conjugate function.
    pub fn conj(&self) -> Jet {
        let t = tables();
        let coeffs = (0..self.coeffs.len()).map(|k| self.coeffs[t.conj[k]].conj()).collect();
        Jet { order: self.order, coeffs }
    }

    /// True when the jet is the jet of a real-valued function, to `tol`.
    pub fn is_real(&self, tol: f64) -> bool {
        let c = self.conj();
        self.coeffs.iter().zip(&c.coeffs).all(|(a, b)| (a - b).norm() <= tol)
    }

    /// Partial derivative in one Wirtinger direction; the order drops by one.
    pub fn derivative(&self, var: Wirtinger) -> Result<Jet, JetError> {
        if self.order == 0 {
            return Err(JetError::OrderExhausted);
        }
        let t = tables();
        let order = self.order - 1;
        let coeffs = t.deriv[var.slot()][..coefficient_count(order)]
            .iter()
            .map(|&(src, factor)| self.coeffs[src] * factor)
            .collect();
        Ok(Jet { order, coeffs })
    }

    /// Evaluates the truncated polynomial at the increment `h = (h₁, h₂, h̄₁, h̄₂)`.
    pub fn eval_increment(&self, h: [Complex64; 4]) -> Complex64 {
        self.multi_indices()
            .iter()
            .zip(&self.coeffs)
            .map(|(a, c)| {
                let mut m = *c;
                for v in 0..4 {
                    for _ in 0..a[v] {
                        m *= h[v];
                    }
                }
                m
            })
            .sum()
    }

    fn binary(&self, other: &Jet, f: impl Fn(Complex64, Complex64) -> Complex64) -> Jet {
        let order = self.order.min(other.order);
        let n = coefficient_count(order);
        let coeffs = self.coeffs[..n].iter().zip(&other.coeffs[..n]).map(|(&a, &b)| f(a, b)).collect();
        Jet { order, coeffs }
    }

    fn product(&self, other: &Jet) -> Jet {
        let order = self.order.min(other.order);
        let t = tables();
        let coeffs = t.products[..coefficient_count(order)]
            .iter()
            .map(|pairs| {
                pairs.iter().fold(Complex64::new(0.0, 0.0), |acc, &(i, j)| {
                    acc + self.coeffs[i as usize] * other.coeffs[j as usize]
                })
            })
            .collect();
        Jet { order, coeffs }
    }

    fn same_order(&self, other: &Jet) -> Result<(), JetError> {
        if self.order == other.order {
            Ok(())
        } else {
            Err(JetError::OrderMismatch(self.order, other.order))
        }
    }

    /// Sum of two jets of equal order.
    pub fn checked_add(&self, other: &Jet) -> Result<Jet, JetError> {
        self.same_order(other)?;
        Ok(self + other)
    }

    pub fn checked_sub(&self, other: &Jet) -> Result<Jet, JetError> {
        self.same_order(other)?;
        Ok(self - other)
    }

    /// Product of two jets of equal order, truncated at that order.
    pub fn checked_mul(&self, other: &Jet) -> Result<Jet, JetError> {
        self.same_order(other)?;
        Ok(self * other)
    }

    pub fn checked_div(&self, den: &Jet, eps_div: f64) -> Result<Jet, JetError> {
        self.same_order(den)?;
        self.div(den, eps_div)
    }

    pub fn scale(&self, s: Complex64) -> Jet {
        Jet { order: self.order, coeffs: self.coeffs.iter().map(|c| c * s).collect() }
    }

    /// Quotient `self / den`, at the lower of the two orders.
    pub fn div(&self, den: &Jet, eps_div: f64) -> Result<Jet, JetError> {
        let d0 = den.coeffs[0];
        if !(d0.norm() > eps_div) {
            return Err(JetError::NearZeroDenominator(d0.norm()));
        }
        let order = self.order.min(den.order);
        let n = coefficient_count(order);
        let t = tables();
        let inv = d0.inv();
        let mut out = vec![Complex64::new(0.0, 0.0); n];
        for k in 0..n {
            let mut acc = self.coeffs[k];
            for &(i, j) in &t.products[k] {
                if j != 0 {
                    acc -= out[i as usize] * den.coeffs[j as usize];
                }
            }
            out[k] = acc * inv;
        }
        Ok(Jet { order, coeffs: out })
    }

    pub fn recip(&self, eps_div: f64) -> Result<Jet, JetError> {
        Jet::one(self.order).div(self, eps_div)
    }

    /// Integer power; negative exponents go through [`Jet::recip`].
    pub fn powi(&self, n: i32, eps_div: f64) -> Result<Jet, JetError> {
        let base = if n < 0 { self.recip(eps_div)? } else { self.clone() };
        let mut e = n.unsigned_abs();
        let mut acc = Jet::one(self.order);
        let mut sq = base;
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &sq;
            }
            e >>= 1;
            if e > 0 {
                sq = &sq * &sq;
            }
        }
        Ok(acc)
    }

    /// Composes a one-variable function given by its Taylor coefficients at the
    /// constant term, `f(c + ε) = Σ a_m ε^m`, with the nilpotent part of the jet.
    fn compose(&self, taylor: &[Complex64]) -> Jet {
        let mut eps = self.clone();
        eps.coeffs[0] = Complex64::new(0.0, 0.0);
        let n = self.order;
        let mut acc = Jet::constant(taylor[n], n);
        for m in (0..n).rev() {
            acc = &acc * &eps;
            acc.coeffs[0] += taylor[m];
        }
        acc
    }

    fn require_positive_part(&self, function: &'static str) -> Result<Complex64, JetError> {
        let c = self.coeffs[0];
        if c.re > 0.0 && c.re.is_finite() && c.im.is_finite() {
            Ok(c)
        } else {
            Err(JetError::DomainError { function, value: c })
        }
    }

    pub fn elementary(&self, f: Elementary) -> Result<Jet, JetError> {
        let n = self.order;
        let taylor: Vec<Complex64> = match f {
            Elementary::Log => {
                let c = self.require_positive_part("log")?;
                let mut t = vec![c.ln()];
                let inv = c.inv();
                let mut p = Complex64::new(1.0, 0.0);
                for m in 1..=n {
                    p *= inv;
                    let sign = if m % 2 == 1 { 1.0 } else { -1.0 };
                    t.push(p * (sign / m as f64));
                }
                t
            }
            Elementary::Sqrt => return self.elementary(Elementary::Pow(0.5)),
            Elementary::Pow(r) => {
                let c = self.require_positive_part("pow")?;
                let inv = c.inv();
                let mut t = vec![c.powf(r)];
                let mut binom = 1.0;
                for m in 1..=n {
                    binom *= (r - (m - 1) as f64) / m as f64;
                    t.push(c.powf(r) * inv.powu(m as u32) * binom);
                }
                t
            }
            Elementary::Exp => {
                let e = self.coeffs[0].exp();
                let mut fact = 1.0;
                (0..=n)
                    .map(|m| {
                        if m > 0 {
                            fact *= m as f64;
                        }
                        e / fact
                    })
                    .collect()
            }
        };
        Ok(self.compose(&taylor))
    }

    pub fn ln(&self) -> Result<Jet, JetError> {
        self.elementary(Elementary::Log)
    }

    pub fn sqrt(&self) -> Result<Jet, JetError> {
        self.elementary(Elementary::Sqrt)
    }

    pub fn exp(&self) -> Jet {
        self.elementary(Elementary::Exp).expect("exp is entire")
    }

    pub fn powf(&self, r: f64) -> Result<Jet, JetError> {
        self.elementary(Elementary::Pow(r))
    }
}

/// Elementary functions composable with jets.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Elementary {
    Log,
    Sqrt,
    Pow(f64),
    Exp,
}

macro_rules! forward_binop {
    ($trait:ident, $method:ident, $body:expr) => {
        impl $trait<&Jet> for &Jet {
            type Output = Jet;
            fn $method(self, rhs: &Jet) -> Jet {
                let f: fn(&Jet, &Jet) -> Jet = $body;
                f(self, rhs)
            }
        }
        impl $trait<Jet> for Jet {
            type Output = Jet;
            fn $method(self, rhs: Jet) -> Jet {
                (&self).$method(&rhs)
            }
        }
        impl $trait<&Jet> for Jet {
            type Output = Jet;
            fn $method(self, rhs: &Jet) -> Jet {
                (&self).$method(rhs)
            }
        }
        impl $trait<Jet> for &Jet {
            type Output = Jet;
            fn $method(self, rhs: Jet) -> Jet {
                self.$method(&rhs)
            }
        }
    };
}

forward_binop!(Add, add, |a, b| a.binary(b, |x, y| x + y));
forward_binop!(Sub, sub, |a, b| a.binary(b, |x, y| x - y));
forward_binop!(Mul, mul, |a, b| a.product(b));

impl AddAssign<&Jet> for Jet {
    fn add_assign(&mut self, rhs: &Jet) {
        *self = &*self + rhs;
    }
}

impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        Jet { order: self.order, coeffs: self.coeffs.iter().map(|c| -c).collect() }
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        -&self
    }
}

impl Mul<Complex64> for &Jet {
    type Output = Jet;
    fn mul(self, rhs: Complex64) -> Jet {
        self.scale(rhs)
    }
}

impl Mul<Complex64> for Jet {
    type Output = Jet;
    fn mul(self, rhs: Complex64) -> Jet {
        self.scale(rhs)
    }
}

impl Mul<f64> for &Jet {
    type Output = Jet;
    fn mul(self, rhs: f64) -> Jet {
        self.scale(Complex64::new(rhs, 0.0))
    }
}

impl Add<Complex64> for &Jet {
    type Output = Jet;
    fn add(self, rhs: Complex64) -> Jet {
        let mut j = self.clone();
        j.coeffs[0] += rhs;
        j
    }
}

impl Add<Complex64> for Jet {
    type Output = Jet;
    fn add(mut self, rhs: Complex64) -> Jet {
        self.coeffs[0] += rhs;
        self
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    fn mul(self, rhs: f64) -> Jet {
        self.scale(Complex64::new(rhs, 0.0))
    }
}

/// Solves `A x = b` for jet-valued `A` (n × n, n ≤ 4) and `b`.
///
/// Gaussian elimination with partial pivoting on constant terms. The constant
/// term matrix must have condition number below `settings.max_condition`, and
/// the back-substituted solution must reproduce `b` to `settings.eps_solve`
/// relative to `‖A‖‖x‖ + ‖b‖`.
pub fn solve_linear(a: &[Vec<Jet>], b: &[Jet], settings: &JetSettings) -> Result<Vec<Jet>, JetError> {
    let n = b.len();
    if n == 0 || n > 4 || a.len() != n || a.iter().any(|row| row.len() != n) {
        return Err(JetError::Dimension);
    }
    let c0 = nalgebra::DMatrix::from_fn(n, n, |i, k| a[i][k].value());
    let sv = c0.clone().svd(false, false).singular_values;
    let smax = sv.max();
    let smin = sv.min();
    let cond = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if !(cond < settings.max_condition) {
        return Err(JetError::SingularSystem(cond));
    }

    let mut m: Vec<Vec<Jet>> = a.to_vec();
    let mut rhs: Vec<Jet> = b.to_vec();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| m[i][col].value().norm().total_cmp(&m[j][col].value().norm()))
            .expect("non-empty range");
        m.swap(col, pivot);
        rhs.swap(col, pivot);
        let p = m[col][col].clone();
        for row in col + 1..n {
            let factor = m[row][col].div(&p, settings.eps_div)?;
            for k in col..n {
                let t = &factor * &m[col][k];
                m[row][k] = &m[row][k] - &t;
            }
            let t = &factor * &rhs[col];
            rhs[row] = &rhs[row] - &t;
        }
    }
    let mut x: Vec<Jet> = vec![Jet::zero(0); n];
    for row in (0..n).rev() {
        let mut acc = rhs[row].clone();
        for k in row + 1..n {
            acc = &acc - &(&m[row][k] * &x[k]);
        }
        x[row] = acc.div(&m[row][row], settings.eps_div)?;
    }

    let a_norm = a.iter().flatten().map(Jet::norm).fold(0.0, f64::max);
    let x_norm = x.iter().map(Jet::norm).fold(0.0, f64::max);
    let b_norm = b.iter().map(Jet::norm).fold(0.0, f64::max);
    let scale = (a_norm * x_norm + b_norm).max(f64::MIN_POSITIVE);
    let mut residual: f64 = 0.0;
    for i in 0..n {
        let mut acc = -&b[i];
        for k in 0..n {
            acc += &(&a[i][k] * &x[k]);
        }
        residual = residual.max(acc.norm());
    }
    if residual / scale > settings.eps_solve {
        return Err(JetError::SolveResidual(residual / scale));
    }
    Ok(x)
}

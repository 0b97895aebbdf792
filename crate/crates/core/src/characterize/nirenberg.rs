//! Exact pluriharmonic polynomials matching a 2-jet on the model surface
//! `Im z₂ = |z₁|²`.
//!
//! Coefficients live in Q(i); the restriction to the model surface is a
//! symbolic substitution, so every check here is an identity.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_complex::Complex;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

pub type Qi = Complex<BigRational>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum JetParseError {
    #[error("expected 10 coefficients A..J, got {0}")]
    Count(usize),
    #[error("cannot parse `{0}` as a complex rational")]
    Number(String),
}

fn q(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn qi(re: BigRational, im: BigRational) -> Qi {
    Complex::new(re, im)
}

fn qi_int(re: i64, im: i64) -> Qi {
    qi(q(re, 1), q(im, 1))
}

/// Sparse polynomial over Q(i) with exponent vectors of fixed length `N`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Poly<const N: usize> {
    terms: BTreeMap<[u32; N], Qi>,
}

impl<const N: usize> Default for Poly<N> {
    fn default() -> Self {
        Poly { terms: BTreeMap::new() }
    }
}

impl<const N: usize> Poly<N> {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn term(c: Qi, exps: [u32; N]) -> Self {
        let mut p = Self::zero();
        p.add_term(exps, c);
        p
    }

    pub fn constant(c: Qi) -> Self {
        Self::term(c, [0; N])
    }

    pub fn var(k: usize) -> Self {
        let mut e = [0; N];
        e[k] = 1;
        Self::term(qi_int(1, 0), e)
    }

    fn add_term(&mut self, exps: [u32; N], c: Qi) {
        if c.is_zero() {
            return;
        }
        let entry = self.terms.entry(exps).or_insert_with(Qi::zero);
        *entry += c;
        if entry.is_zero() {
            self.terms.remove(&exps);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&[u32; N], &Qi)> {
        self.terms.iter()
    }

    pub fn coeff(&self, exps: &[u32; N]) -> Qi {
        self.terms.get(exps).cloned().unwrap_or_else(Qi::zero)
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.add_term(*e, c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(&qi_int(-1, 0)))
    }

    pub fn scale(&self, c: &Qi) -> Self {
        let mut out = Self::zero();
        for (e, v) in &self.terms {
            out.add_term(*e, v * c);
        }
        out
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Self::zero();
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                let mut e = [0; N];
                for k in 0..N {
                    e[k] = ea[k] + eb[k];
                }
                out.add_term(e, ca * cb);
            }
        }
        out
    }

    pub fn derivative(&self, k: usize) -> Self {
        let mut out = Self::zero();
        for (e, c) in &self.terms {
            if e[k] > 0 {
                let mut d = *e;
                d[k] -= 1;
                out.add_term(d, c * qi_int(e[k] as i64, 0));
            }
        }
        out
    }

    /// Drops terms of total degree above `max`.
    pub fn truncate(&self, max: u32) -> Self {
        Poly { terms: self.terms.iter().filter(|(e, _)| e.iter().sum::<u32>() <= max).map(|(e, c)| (*e, c.clone())).collect() }
    }

    /// Floating-point value.
    pub fn eval(&self, x: [num_complex::Complex64; N]) -> num_complex::Complex64 {
        use num_traits::ToPrimitive;
        let mut acc = num_complex::Complex64::new(0.0, 0.0);
        for (e, c) in &self.terms {
            let cf = num_complex::Complex64::new(c.re.to_f64().unwrap_or(f64::NAN), c.im.to_f64().unwrap_or(f64::NAN));
            let mut m = cf;
            for k in 0..N {
                m *= x[k].powu(e[k]);
            }
            acc += m;
        }
        acc
    }
}

/// Variables `(z₁, z̄₁, z₂, z̄₂)`.
pub type AmbientPoly = Poly<4>;
/// Variables `(z₁, z̄₁, x₂)` of the model surface.
pub type ModelPoly = Poly<3>;

const AMBIENT_NAMES: [&str; 4] = ["z1", "conj(z1)", "z2", "conj(z2)"];
const MODEL_NAMES: [&str; 3] = ["z1", "conj(z1)", "x2"];

fn fmt_rational(r: &BigRational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Coefficient text and whether it can be written without parentheses.
fn fmt_coeff(c: &Qi) -> (String, bool) {
    let (re, im) = (&c.re, &c.im);
    if im.is_zero() {
        return (fmt_rational(re), true);
    }
    let imag = |x: &BigRational| {
        if x.is_one() {
            "i".to_string()
        } else if (-x).is_one() {
            "-i".to_string()
        } else {
            format!("{}*i", fmt_rational(x))
        }
    };
    if re.is_zero() {
        return (imag(im), true);
    }
    let sign = if im.is_negative() { " - " } else { " + " };
    (format!("{}{}{}", fmt_rational(re), sign, imag(&im.abs())), false)
}

fn fmt_poly<const N: usize>(p: &Poly<N>, names: &[&str; N], f: &mut fmt::Formatter<'_>) -> fmt::Result {
    if p.is_zero() {
        return f.write_str("0");
    }
    let mut keys: Vec<&[u32; N]> = p.terms.keys().collect();
    keys.sort_by_key(|e| (e.iter().sum::<u32>(), std::cmp::Reverse(**e)));
    for (n, e) in keys.into_iter().enumerate() {
        let c = &p.terms[e];
        let mono: Vec<String> = (0..N)
            .filter(|&k| e[k] > 0)
            .map(|k| if e[k] == 1 { names[k].to_string() } else { format!("{}^{}", names[k], e[k]) })
            .collect();
        let (text, bare) = fmt_coeff(c);
        let mut term = if mono.is_empty() {
            if bare { text } else { format!("({text})") }
        } else if c.is_one() {
            mono.join("*")
        } else if *c == qi_int(-1, 0) {
            format!("-{}", mono.join("*"))
        } else if bare {
            format!("{}*{}", text, mono.join("*"))
        } else {
            format!("({})*{}", text, mono.join("*"))
        };
        if n > 0 {
            if let Some(rest) = term.strip_prefix('-') {
                f.write_str(" - ")?;
                term = rest.to_string();
            } else {
                f.write_str(" + ")?;
            }
        }
        f.write_str(&term)?;
    }
    Ok(())
}

impl fmt::Display for Poly<4> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_poly(self, &AMBIENT_NAMES, f)
    }
}

impl fmt::Display for Poly<3> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_poly(self, &MODEL_NAMES, f)
    }
}

/// The 2-jet `A + Bz₁ + Cz̄₁ + Dx₂ + Ez₁² + Fz̄₁² + Gz₁z̄₁ + Hz₁x₂ + Iz̄₁x₂ + Jx₂²`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TwoJet(pub [Qi; 10]);

impl TwoJet {
    /// Exponents in `(z₁, z̄₁, x₂)` of the ten jet monomials, in A..J order.
    pub const MONOMIALS: [[u32; 3]; 10] =
        [[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1], [2, 0, 0], [0, 2, 0], [1, 1, 0], [1, 0, 1], [0, 1, 1], [0, 0, 2]];

    pub fn as_polynomial(&self) -> ModelPoly {
        let mut p = ModelPoly::zero();
        for (c, e) in self.0.iter().zip(Self::MONOMIALS) {
            p.add_term(e, c.clone());
        }
        p
    }

    /// Small random rationals `n/d`, |n| ≤ 20, 1 ≤ d ≤ 9, in both parts.
    pub fn random(rng: &mut impl Rng) -> Self {
        let mut r = || q(rng.random_range(-20..=20), rng.random_range(1..=9));
        TwoJet(std::array::from_fn(|_| qi(r(), r())))
    }

    pub fn random_batch(n: usize, seed: u64) -> Vec<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| Self::random(&mut rng)).collect()
    }
}

impl std::str::FromStr for TwoJet {
    type Err = JetParseError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        if parts.len() != 10 {
            return Err(JetParseError::Count(parts.len()));
        }
        let coeffs = parts.iter().map(|p| parse_qi(p).ok_or_else(|| JetParseError::Number(p.to_string()))).collect::<Result<Vec<_>, _>>()?;
        Ok(TwoJet(coeffs.try_into().expect("ten entries")))
    }
}

/// Exact decimal or `p/q`, optionally signed.
fn parse_rational(s: &str) -> Option<BigRational> {
    let s = s.trim();
    if s.is_empty() {
        return None;
    }
    if let Some((n, d)) = s.split_once('/') {
        let d = parse_rational(d)?;
        return if d.is_zero() { None } else { Some(parse_rational(n)? / d) };
    }
    let (neg, body) = match s.as_bytes()[0] {
        b'-' => (true, &s[1..]),
        b'+' => (false, &s[1..]),
        _ => (false, s),
    };
    let (mant, exp) = match body.find(['e', 'E']) {
        Some(k) => (&body[..k], body[k + 1..].parse::<i32>().ok()?),
        None => (body, 0),
    };
    let (int, frac) = mant.split_once('.').unwrap_or((mant, ""));
    if int.is_empty() && frac.is_empty() || !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let digits: BigInt = format!("{int}{frac}").parse().ok()?;
    let scale = exp - frac.len() as i32;
    let ten = BigInt::from(10);
    let mut r = BigRational::from_integer(digits);
    if scale >= 0 {
        r *= BigRational::from_integer(num_traits::pow(ten, scale as usize));
    } else {
        r /= BigRational::from_integer(num_traits::pow(ten, (-scale) as usize));
    }
    Some(if neg { -r } else { r })
}

/// `a`, `bi`, `a+bi`, `a-bi`, `i`, `-i` with rational or decimal parts.
pub fn parse_qi(s: &str) -> Option<Qi> {
    let s: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    if s.is_empty() {
        return None;
    }
    let imag = |t: &str| -> Option<BigRational> {
        let body = t.strip_suffix('i')?.trim_end_matches('*');
        match body {
            "" | "+" => Some(q(1, 1)),
            "-" => Some(q(-1, 1)),
            b => parse_rational(b),
        }
    };
    if !s.ends_with('i') {
        return Some(qi(parse_rational(&s)?, q(0, 1)));
    }
    // split at the last sign that is not the leading one or part of an exponent
    let bytes = s.as_bytes();
    let split = (1..bytes.len()).rev().find(|&k| (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    match split {
        Some(k) => Some(qi(parse_rational(&s[..k])?, imag(&s[k..])?)),
        None => Some(qi(q(0, 1), imag(&s)?)),
    }
}

/// `A + Bz₁ + Cz̄₁ + (D−iG)/2·z₂ + (D+iG)/2·z̄₂ + Ez₁² + Fz̄₁² + Hz₁z₂ + Iz̄₁z̄₂ + Jz̄₂²`.
pub fn nirenberg_polynomial(jet: &TwoJet) -> AmbientPoly {
    let [a, b, c, d, e, f, g, h, i, j] = &jet.0;
    let half = qi(q(1, 2), q(0, 1));
    let ig = g * qi_int(0, 1);
    let mut p = AmbientPoly::zero();
    p.add_term([0, 0, 0, 0], a.clone());
    p.add_term([1, 0, 0, 0], b.clone());
    p.add_term([0, 1, 0, 0], c.clone());
    p.add_term([0, 0, 1, 0], (d - &ig) * &half);
    p.add_term([0, 0, 0, 1], (d + &ig) * &half);
    p.add_term([2, 0, 0, 0], e.clone());
    p.add_term([0, 2, 0, 0], f.clone());
    p.add_term([1, 0, 1, 0], h.clone());
    p.add_term([0, 1, 0, 1], i.clone());
    p.add_term([0, 0, 0, 2], j.clone());
    p
}

/// All four mixed second derivatives `∂²P/∂z_i∂z̄_j` vanish identically.
pub fn is_pluriharmonic(p: &AmbientPoly) -> bool {
    // variable slots: z₁ = 0, z̄₁ = 1, z₂ = 2, z̄₂ = 3
    [(0, 1), (0, 3), (2, 1), (2, 3)].iter().all(|&(h, a)| p.derivative(h).derivative(a).is_zero())
}

/// Substitutes `z₂ = x₂ + i z₁z̄₁`, `z̄₂ = x₂ − i z₁z̄₁` and truncates at degree 2.
pub fn model_restriction(p: &AmbientPoly) -> ModelPoly {
    let i = qi_int(0, 1);
    let zz = ModelPoly::term(qi_int(1, 0), [1, 1, 0]);
    let x2 = ModelPoly::var(2);
    let sub_z2 = x2.add(&zz.scale(&i));
    let sub_zb2 = x2.sub(&zz.scale(&i));
    let mut out = ModelPoly::zero();
    for (e, c) in p.terms() {
        let mut t = ModelPoly::term(c.clone(), [e[0], e[1], 0]);
        for _ in 0..e[2] {
            t = t.mul(&sub_z2).truncate(2);
        }
        for _ in 0..e[3] {
            t = t.mul(&sub_zb2).truncate(2);
        }
        out = out.add(&t.truncate(2));
    }
    out
}

/// Exact check: P is pluriharmonic and its restricted 2-jet equals the input.
pub fn verify(jet: &TwoJet) -> (AmbientPoly, bool, bool) {
    let p = nirenberg_polynomial(jet);
    let plh = is_pluriharmonic(&p);
    let matches = model_restriction(&p) == jet.as_polynomial();
    (p, plh, matches)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::parse;
    use num_complex::Complex64;

    fn unit(k: usize) -> TwoJet {
        let mut c: [Qi; 10] = std::array::from_fn(|_| Qi::zero());
        c[k] = qi_int(1, 0);
        TwoJet(c)
    }

    #[test]
    fn g_coefficient_example() {
        let p = nirenberg_polynomial(&unit(6));
        let expected = AmbientPoly::term(qi(q(0, 1), q(-1, 2)), [0, 0, 1, 0]).add(&AmbientPoly::term(qi(q(0, 1), q(1, 2)), [0, 0, 0, 1]));
        assert_eq!(p, expected);
        assert_eq!(model_restriction(&p), ModelPoly::term(qi_int(1, 0), [1, 1, 0]));
        assert_eq!(p.to_string(), "-1/2*i*z2 + 1/2*i*conj(z2)");
    }

    #[test]
    fn constant_jet() {
        let p = nirenberg_polynomial(&unit(0));
        assert_eq!(p.to_string(), "1");
        let jet: TwoJet = "1,0,0,0,0,0,0,0,0,0".parse().unwrap();
        assert_eq!(nirenberg_polynomial(&jet).to_string(), "1");
    }

    #[test]
    fn random_jets_are_matched_exactly() {
        for jet in TwoJet::random_batch(25, 11) {
            let (_, plh, matches) = verify(&jet);
            assert!(plh && matches);
        }
    }

    #[test]
    fn restriction_detects_a_wrong_coefficient() {
        let jet = TwoJet::random_batch(1, 5).remove(0);
        let mut p = nirenberg_polynomial(&jet);
        p.add_term([0, 0, 1, 0], qi(q(1, 1000), q(0, 1)));
        assert_ne!(model_restriction(&p), jet.as_polynomial());
        let bad = p.add(&AmbientPoly::term(qi_int(1, 0), [1, 0, 0, 1]));
        assert!(!is_pluriharmonic(&bad));
    }

    #[test]
    fn display_reparses_to_the_same_values() {
        for jet in TwoJet::random_batch(5, 2) {
            let p = nirenberg_polynomial(&jet);
            let e = parse(&p.to_string()).unwrap();
            let z = [Complex64::new(0.3, -0.7), Complex64::new(1.1, 0.2)];
            let direct = p.eval([z[0], z[0].conj(), z[1], z[1].conj()]);
            assert!((e.eval_value(z, [Complex64::new(0.0, 0.0); 2]) - direct).norm() < 1e-10 * direct.norm().max(1.0));
        }
    }

    #[test]
    fn complex_rational_parsing() {
        assert_eq!(parse_qi("1/2+3/4i"), Some(qi(q(1, 2), q(3, 4))));
        assert_eq!(parse_qi("-i"), Some(qi_int(0, -1)));
        assert_eq!(parse_qi("0.25-2i"), Some(qi(q(1, 4), q(-2, 1))));
        assert_eq!(parse_qi("1e-2"), Some(qi(q(1, 100), q(0, 1))));
        assert_eq!(parse_qi("2.5e1i"), Some(qi(q(0, 1), q(25, 1))));
        assert_eq!(parse_qi("x"), None);
        assert!(matches!("1,2".parse::<TwoJet>(), Err(JetParseError::Count(2))));
    }
}

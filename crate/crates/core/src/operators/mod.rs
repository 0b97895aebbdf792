//! Words of frame fields applied to test functions, and brackets.
//!
//! Every coefficient is a jet at the evaluation point, so a word is applied
//! by differentiating jets; the value of the result is its constant term.

pub mod expr;

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::dualframe::{Field, FieldName, FramePoint};
use crate::jets::{Jet, JetError};

pub use expr::{parse, EvalError, Expr, Leaf, ParseError};

/// Longest word the default jet order budget supports.
pub const MAX_WORD_LEN: usize = 3;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WordError {
    #[error("empty operator word")]
    Empty,
    #[error("operator word `{0}` is longer than {MAX_WORD_LEN}")]
    TooLong(String),
    #[error("{0}")]
    UnknownField(String),
}

/// A sequence of frame fields, applied right to left.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct OperatorWord(Vec<FieldName>);

impl OperatorWord {
    pub fn new(fields: Vec<FieldName>) -> Result<Self, WordError> {
        if fields.is_empty() {
            return Err(WordError::Empty);
        }
        if fields.len() > MAX_WORD_LEN {
            let text = fields.iter().map(|f| f.to_string()).collect::<Vec<_>>().join(".");
            return Err(WordError::TooLong(text));
        }
        Ok(OperatorWord(fields))
    }

    pub fn fields(&self) -> &[FieldName] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Conjugate word: `conj(A B C) = Ā B̄ C̄`.
    pub fn conj(&self) -> OperatorWord {
        OperatorWord(self.0.iter().map(|f| f.conj()).collect())
    }

    /// Applies the word to the jet `u`.
    pub fn apply(&self, frame: &FramePoint, u: &Jet) -> Result<Jet, JetError> {
        let fields: Vec<&Field> = self.0.iter().map(|&n| frame.field(n)).collect();
        apply_fields(&fields, u)
    }
}

impl fmt::Display for OperatorWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|n| n.to_string()).collect();
        f.write_str(&parts.join("."))
    }
}

impl FromStr for OperatorWord {
    type Err = WordError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.trim().is_empty() {
            return Err(WordError::Empty);
        }
        let fields = s.split('.').map(|p| p.parse::<FieldName>().map_err(WordError::UnknownField)).collect::<Result<Vec<_>, _>>()?;
        OperatorWord::new(fields)
    }
}

/// `A₁(A₂(⋯(A_L u)))`.
pub fn apply_fields(fields: &[&Field], u: &Jet) -> Result<Jet, JetError> {
    let mut acc = u.clone();
    for f in fields.iter().rev() {
        acc = f.apply(&acc)?;
    }
    Ok(acc)
}

/// `[A, B]_k = Σ_j (a_j ∂_j b_k − b_j ∂_j a_k)`.
pub fn bracket(a: &Field, b: &Field) -> Result<Field, JetError> {
    let comp = |k: usize| -> Result<Jet, JetError> { Ok(&a.apply(&b.c[k])? - &b.apply(&a.c[k])?) };
    Ok(Field::new([comp(0)?, comp(1)?, comp(2)?, comp(3)?]))
}

/// Bracket components found by applying `AB − BA` to the coordinate jets.
pub fn bracket_by_probing(frame: &FramePoint, a: &Field, b: &Field) -> Result<[Complex64; 4], JetError> {
    let mut out = [Complex64::new(0.0, 0.0); 4];
    for (k, coord) in frame.coords.iter().enumerate() {
        let ab = apply_fields(&[a, b], coord)?;
        let ba = apply_fields(&[b, a], coord)?;
        out[k] = ab.value() - ba.value();
    }
    Ok(out)
}

/// Residual of one pointwise identity.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IdentityResidual {
    pub label: &'static str,
    pub statement: &'static str,
    /// Residual divided by `max(1, scale)` of the fields involved.
    pub residual: f64,
}

/// Largest mismatch between the coefficient formula and coordinate probing.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BracketCrossCheck {
    pub max_discrepancy: f64,
}

/// All bracket identities of the frame at one point, plus the maximal
/// discrepancy between the two ways of computing a bracket.
pub fn bracket_identities(frame: &FramePoint) -> Result<(Vec<IdentityResidual>, BracketCrossCheck), JetError> {
    use FieldName::*;
    let i = Complex64::i();
    let s = &frame.scalars;
    let f = |n: FieldName| frame.field(n);
    let mut out = Vec::new();
    let mut cross: f64 = 0.0;

    let mut push = |label: &'static str,
                    statement: &'static str,
                    a: FieldName,
                    b: FieldName,
                    rhs: Field|
     -> Result<(), JetError> {
        let br = bracket(f(a), f(b))?;
        let diff = br.minus(&rhs).value_norm();
        let scale = (f(a).value_norm() * f(b).value_norm()).max(1.0);
        let probe = bracket_by_probing(frame, f(a), f(b))?;
        let bv = br.values();
        let disc = (0..4).map(|k| (probe[k] - bv[k]).norm()).fold(0.0, f64::max) / scale;
        cross = cross.max(disc);
        out.push(IdentityResidual { label, statement, residual: diff / scale });
        Ok(())
    };
    let c = |v: Complex64, ord: usize| Jet::constant(v, ord);
    let ord = frame.field_order();
    let r = &frame.r;

    push("bracket-xt", "[X,T] = iR", X, T, r.scaled(&c(i, ord)))?;
    push("bracket-yybar", "[Y,bar(Y)] = -i xi R", Y, YBar, r.scaled(&(&s.xi * -i)))?;
    push("bracket-vvbar", "[V,bar(V)] = i sigma R", V, VBar, r.scaled(&(&s.sigma * i)))?;
    let y_alpha = frame.y.apply(&s.alpha)?;
    push("bracket-xy", "[X,Y] = iR - (Y alpha) bar(Y)", X, Y, r.scaled(&c(i, ord)).minus(&frame.ybar.scaled(&y_alpha)))?;
    for (label, statement, name, sign) in [
        ("bracket-ry", "[R,Y] = -2iY", Y, -1.0),
        ("bracket-rybar", "[R,bar(Y)] = 2i bar(Y)", YBar, 1.0),
        ("bracket-rv", "[R,V] = 2iV", V, 1.0),
        ("bracket-rvbar", "[R,bar(V)] = -2i bar(V)", VBar, -1.0),
        ("bracket-rx", "[R,X] = 2iX", X, 1.0),
        ("bracket-rxbar", "[R,bar(X)] = -2i bar(X)", XBar, -1.0),
        ("bracket-rt", "[R,T] = -2iT", T, -1.0),
        ("bracket-rtbar", "[R,bar(T)] = 2i bar(T)", TBar, 1.0),
    ] {
        push(label, statement, R, name, f(name).scaled(&c(i * (2.0 * sign), ord)))?;
    }
    for (label, statement, scalar) in [("r-alpha", "R alpha = 0", &s.alpha), ("r-beta", "R beta = 0", &s.beta)] {
        let v = frame.r.apply(scalar)?.value().norm();
        out.push(IdentityResidual { label, statement, residual: v / scalar.value().norm().max(1.0) });
    }
    Ok((out, BracketCrossCheck { max_discrepancy: cross }))
}

/// Jet of a test function at a frame point.
pub fn eval_at(expr: &Expr, frame: &FramePoint, guard: f64) -> Result<Jet, EvalError> {
    expr.eval_jet(&frame.coords, &frame.w, guard)
}

/// Value of `word u` at a frame point.
pub fn apply_word(word: &OperatorWord, expr: &Expr, frame: &FramePoint, guard: f64) -> Result<Complex64, EvalError> {
    let u = eval_at(expr, frame, guard)?;
    Ok(word.apply(frame, &u)?.value())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dualframe::{FrameOptions, PerturbedExtension};
    use crate::jets::Wirtinger;
    use crate::surfaces::CircularSurface;

    fn surfaces() -> Vec<CircularSurface> {
        ["sphere", "hermitian:[[1,0],[0,2]]", "perturbed:[[1,0.2i],[-0.2i,1.4]];0.5"]
            .iter()
            .map(|s| CircularSurface::from_spec(s).unwrap())
            .collect()
    }

    fn word(s: &str) -> OperatorWord {
        s.parse().unwrap()
    }

    #[test]
    fn word_syntax() {
        assert_eq!(word("X.X.T").to_string(), "X.X.T");
        assert_eq!(word("bar(X).bar(X).bar(Y)"), word("X.X.Y").conj());
        assert!(matches!("X.X.T.T".parse::<OperatorWord>(), Err(WordError::TooLong(_))));
        assert!(matches!("".parse::<OperatorWord>(), Err(WordError::Empty)));
        assert!(matches!("X.Q".parse::<OperatorWord>(), Err(WordError::UnknownField(_))));
    }

    #[test]
    fn differentiation_rules() {
        for s in surfaces() {
            for p in s.random_points(10, 21) {
                let f = FramePoint::compute(&s, p.z, &FrameOptions::default()).unwrap();
                let sv = f.scalars.values();
                let (z, w) = (p.z, f.dual_point());
                let val = |wd: &str, e: &str| apply_word(&word(wd), &parse(e).unwrap(), &f, 1e-12).unwrap();
                let close = |a: Complex64, b: Complex64| assert!((a - b).norm() < 1e-11, "{a} vs {b}");
                close(val("X", "w1"), z[1]);
                close(val("X", "w2"), -z[0]);
                close(val("X", "z1"), Complex64::new(0.0, 0.0));
                close(val("X", "conj(w1)"), sv.phi * z[1].conj());
                close(val("X", "conj(z1)"), sv.alpha * w[1].conj());
                close(val("X", "conj(z2)"), -sv.alpha * w[0].conj());
                close(val("bar(Y)", "w1"), sv.xi.conj() * z[1]);
                close(val("T", "z1"), w[1]);
                close(val("T", "z2"), -w[0]);
                close(val("T", "w1"), Complex64::new(0.0, 0.0));
                close(val("T", "conj(z1)"), sv.psi * w[1].conj());
                close(val("T", "conj(w1)"), sv.beta * z[1].conj());
                close(val("T", "conj(w2)"), -sv.beta * z[0].conj());
                close(val("bar(V)", "z1"), sv.sigma.conj() * w[1]);
                close(val("Y", "conj(z1)"), Complex64::new(0.0, 0.0));
                close(val("R", "z1*w1+z2*w2"), Complex64::new(0.0, 0.0));
            }
        }
    }

    #[test]
    fn worked_example_values() {
        let e = CircularSurface::from_spec("hermitian:[[1,0],[0,2]]").unwrap();
        let u = parse("z1/w2").unwrap();
        let mut checked = 0;
        for p in e.random_points(60, 3) {
            let f = FramePoint::compute(&e, p.z, &FrameOptions::default()).unwrap();
            if f.dual_point()[1].norm() < 0.1 {
                continue;
            }
            checked += 1;
            let ttx = apply_word(&word("T.T.X"), &u, &f, 0.1).unwrap();
            let xxt = apply_word(&word("X.X.T"), &u, &f, 0.1).unwrap();
            assert!((ttx - 2.0).norm() < 1e-9, "{ttx}");
            assert!(xxt.norm() < 1e-9, "{xxt}");
        }
        assert!(checked > 40);
    }

    #[test]
    fn xxt_annihilates_sums() {
        let u = parse("z1^3*z2 - 2*z2^2 + i*z1 + w1^2*w2 + 3*w2^4 - w1*w2").unwrap();
        for s in surfaces() {
            for p in s.random_points(10, 4) {
                let f = FramePoint::compute(&s, p.z, &FrameOptions::default()).unwrap();
                let v = apply_word(&word("X.X.T"), &u, &f, 1e-12).unwrap();
                let v2 = apply_word(&word("T.T.X"), &u, &f, 1e-12).unwrap();
                assert!(v.norm() < 1e-9 && v2.norm() < 1e-9, "{} {}", v, v2);
            }
        }
    }

    #[test]
    fn second_order_operators_on_cr_functions() {
        // XTu = XYu = −z·∂u for CR u
        let u = parse("z1^2*z2 + 3*z2^3 - i*z1").unwrap();
        for s in surfaces() {
            for p in s.random_points(8, 7) {
                let f = FramePoint::compute(&s, p.z, &FrameOptions::default()).unwrap();
                let uj = eval_at(&u, &f, 1e-12).unwrap();
                let euler = -(&(&f.coords[0] * &uj.derivative(Wirtinger::Z1).unwrap())
                    + &(&f.coords[1] * &uj.derivative(Wirtinger::Z2).unwrap()));
                let xt = word("X.T").apply(&f, &uj).unwrap();
                let xy = word("X.Y").apply(&f, &uj).unwrap();
                assert!((xt.value() - euler.value()).norm() < 1e-10);
                assert!((xy.value() - euler.value()).norm() < 1e-10);
                // and the results are CR
                assert!(f.x.apply(&xt).unwrap().value().norm() < 1e-9);
                assert!(f.x.apply(&xy).unwrap().value().norm() < 1e-9);
            }
        }
    }

    #[test]
    fn bracket_suite_holds() {
        for s in surfaces() {
            for p in s.random_points(10, 13) {
                let f = FramePoint::compute(&s, p.z, &FrameOptions::default()).unwrap();
                let (ids, cross) = bracket_identities(&f).unwrap();
                assert_eq!(ids.len(), 14);
                assert!(cross.max_discrepancy < 1e-12);
                for id in ids {
                    assert!(id.residual < 1e-9, "{} on {}: {}", id.label, s, id.residual);
                }
            }
        }
    }

    #[test]
    fn word_values_independent_of_extension() {
        let s = CircularSurface::from_spec("perturbed:[[1,0],[0,1.5]];0.4").unwrap();
        let u = parse("z1^2*conj(z2) + w1/(2 + z2) + conj(w2)*z1").unwrap();
        for p in s.random_points(10, 17) {
            let a = FramePoint::compute(&s, p.z, &FrameOptions::default()).unwrap();
            let b = FramePoint::compute_with(&s, p.z, &FrameOptions::default(), &PerturbedExtension { eps: 0.3 }).unwrap();
            for w in ["X", "T.X", "X.X.T", "T.T.X", "X.X.Y", "bar(X).bar(X).bar(Y)"] {
                let va = apply_word(&word(w), &u, &a, 1e-3).unwrap();
                let vb = apply_word(&word(w), &u, &b, 1e-3).unwrap();
                assert!((va - vb).norm() < 1e-9 * va.norm().max(1.0), "{w}: {va} vs {vb}");
            }
        }
    }

    #[test]
    fn expression_jets_are_homomorphic() {
        let s = CircularSurface::from_spec("hermitian:[[1,0],[0,2]]").unwrap();
        let p = s.random_points(1, 5)[0];
        let f = FramePoint::compute(&s, p.z, &FrameOptions::default()).unwrap();
        let a = parse("z1*conj(w2) + 2").unwrap();
        let b = parse("w1^2 - conj(z2)").unwrap();
        let ja = eval_at(&a, &f, 1e-12).unwrap();
        let jb = eval_at(&b, &f, 1e-12).unwrap();
        let jab = eval_at(&(a.clone() * b.clone()), &f, 1e-12).unwrap();
        assert!((&jab - &(&ja * &jb)).norm() < 1e-13);
        let jq = eval_at(&(a.clone() / b.clone()), &f, 1e-12).unwrap();
        assert!((&(&jq * &jb) - &ja).truncate(jq.order()).norm() < 1e-12);
        let one = eval_at(&parse("z1*w1+z2*w2").unwrap(), &f, 1e-12).unwrap();
        assert!((one.value() - 1.0).norm() < 1e-12);
        let m = eval_at(&parse("conj(w1)*w1").unwrap(), &f, 1e-12).unwrap();
        assert!(m.value().re >= 0.0 && m.value().im.abs() < 1e-15);
    }

    #[test]
    fn guard_reports_path() {
        let s = CircularSurface::sphere();
        let f = FramePoint::compute(&s, [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)], &FrameOptions::default()).unwrap();
        match eval_at(&parse("z1/w2").unwrap(), &f, 0.1).unwrap_err() {
            EvalError::NearZeroDenominator { path, .. } => assert_eq!(path, "w2"),
            e => panic!("{e:?}"),
        }
    }
}

//! Dual map `w(z)`, the frame fields `Y, V, R, X, T` and the frame scalars,
//! all materialized as jets at a point of S.
//!
//! Vector fields are stored by their four component jets in the basis
//! `(∂z₁, ∂z₂, ∂z̄₁, ∂z̄₂)`. The dual map is extended off S by an
//! [`AmbientExtension`]; the canonical one is `w = q_z / q`.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::jets::{solve_linear, Jet, JetError, JetSettings, Wirtinger};
use crate::surfaces::{CircularSurface, Point};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FrameError {
    #[error(transparent)]
    Jet(#[from] JetError),
    #[error("point is not on the surface: q(z) - 1 = {0:e}")]
    OffSurface(f64),
    #[error("frame scalar {name} is not real: imaginary part {im:e}")]
    NonRealScalar { name: &'static str, im: f64 },
    #[error("frame scalar {name} vanishes: |{name}| = {value:e}")]
    VanishingScalar { name: &'static str, value: f64 },
}

/// Tangent vector field with jet coefficients in the Wirtinger basis.
#[derive(Clone, Debug, PartialEq)]
pub struct Field {
    pub c: [Jet; 4],
}

impl Field {
    pub fn new(c: [Jet; 4]) -> Self {
        Field { c }
    }

    pub fn zero(order: usize) -> Self {
        Field { c: std::array::from_fn(|_| Jet::zero(order)) }
    }

    pub fn order(&self) -> usize {
        self.c.iter().map(Jet::order).min().unwrap_or(0)
    }

    /// `Σ_k c_k ∂_k u`.
    pub fn apply(&self, u: &Jet) -> Result<Jet, JetError> {
        let mut out: Option<Jet> = None;
        for (k, ck) in self.c.iter().enumerate() {
            let d = u.derivative(Wirtinger::from_slot(k))?;
            let term = ck * &d;
            out = Some(match out {
                None => term,
                Some(acc) => &acc + &term,
            });
        }
        Ok(out.expect("four components"))
    }

    /// Conjugate field: `(Ā)_k = conj(A_{k±2})`, so that `Ā ū = conj(A u)`.
    pub fn conj(&self) -> Field {
        Field { c: std::array::from_fn(|k| self.c[(k + 2) % 4].conj()) }
    }

    pub fn scaled(&self, s: &Jet) -> Field {
        Field { c: std::array::from_fn(|k| s * &self.c[k]) }
    }

    pub fn plus(&self, other: &Field) -> Field {
        Field { c: std::array::from_fn(|k| &self.c[k] + &other.c[k]) }
    }

    pub fn minus(&self, other: &Field) -> Field {
        Field { c: std::array::from_fn(|k| &self.c[k] - &other.c[k]) }
    }

    pub fn values(&self) -> [Complex64; 4] {
        std::array::from_fn(|k| self.c[k].value())
    }

    /// Max modulus of the component values at the base point.
    pub fn value_norm(&self) -> f64 {
        self.values().iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn truncate(&self, order: usize) -> Field {
        Field { c: std::array::from_fn(|k| self.c[k].truncate(order)) }
    }
}

/// Names of the frame fields usable in operator words.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum FieldName {
    X,
    T,
    Y,
    V,
    R,
    XBar,
    TBar,
    YBar,
    VBar,
}

impl FieldName {
    pub const ALL: [FieldName; 9] = [
        FieldName::X,
        FieldName::T,
        FieldName::Y,
        FieldName::V,
        FieldName::R,
        FieldName::XBar,
        FieldName::TBar,
        FieldName::YBar,
        FieldName::VBar,
    ];

    /// The conjugate field's name (`R` is real).
    pub fn conj(self) -> FieldName {
        use FieldName::*;
        match self {
            X => XBar,
            T => TBar,
            Y => YBar,
            V => VBar,
            R => R,
            XBar => X,
            TBar => T,
            YBar => Y,
            VBar => V,
        }
    }
}

impl fmt::Display for FieldName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            FieldName::X => "X",
            FieldName::T => "T",
            FieldName::Y => "Y",
            FieldName::V => "V",
            FieldName::R => "R",
            FieldName::XBar => "bar(X)",
            FieldName::TBar => "bar(T)",
            FieldName::YBar => "bar(Y)",
            FieldName::VBar => "bar(V)",
        };
        f.write_str(s)
    }
}

impl FromStr for FieldName {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        let base = |c: &str| match c {
            "X" => Some(FieldName::X),
            "T" => Some(FieldName::T),
            "Y" => Some(FieldName::Y),
            "V" => Some(FieldName::V),
            "R" => Some(FieldName::R),
            _ => None,
        };
        if let Some(inner) = t.strip_prefix("bar(").and_then(|r| r.strip_suffix(')')) {
            return base(inner).map(FieldName::conj).ok_or_else(|| format!("unknown field `{s}`"));
        }
        base(&t).ok_or_else(|| format!("unknown field `{s}`"))
    }
}

/// An extension of the dual map off S.
pub trait AmbientExtension: Send + Sync + fmt::Debug {
    fn name(&self) -> String;
    /// Jets of `(w₁, w₂)` at `z`, from a gauge jet of order `order`
    /// (the result has order `order − 1`).
    fn dual_jets(&self, surface: &CircularSurface, z: Point, order: usize) -> Result<[Jet; 2], JetError>;
}

/// `w_j = ∂_{z_j} log q`.
#[derive(Clone, Copy, Debug, Default)]
pub struct LogGauge;

impl AmbientExtension for LogGauge {
    fn name(&self) -> String {
        "log-gauge".into()
    }

    fn dual_jets(&self, surface: &CircularSurface, z: Point, order: usize) -> Result<[Jet; 2], JetError> {
        let rho = surface.log_gauge_jet(z, order)?;
        Ok([rho.derivative(Wirtinger::Z1)?, rho.derivative(Wirtinger::Z2)?])
    }
}

/// `w_j = q_{z_j} · q^{−(1 + ε|z₁|²)}`; agrees with [`LogGauge`] on S only,
/// and its Jacobian differs from the canonical one already at first order.
#[derive(Clone, Copy, Debug)]
pub struct PerturbedExtension {
    pub eps: f64,
}

impl AmbientExtension for PerturbedExtension {
    fn name(&self) -> String {
        format!("perturbed-extension:{}", self.eps)
    }

    fn dual_jets(&self, surface: &CircularSurface, z: Point, order: usize) -> Result<[Jet; 2], JetError> {
        let q = surface.gauge_jet(z, order)?;
        let logq = q.ln()?;
        let c = Jet::coordinates(z, order);
        let expo = &(&(&c[0] * &c[2]) * self.eps) + Complex64::new(1.0, 0.0);
        let factor = (-(&expo * &logq)).exp();
        Ok([&q.derivative(Wirtinger::Z1)? * &factor, &q.derivative(Wirtinger::Z2)? * &factor])
    }
}

/// Controls for [`FramePoint::compute`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FrameOptions {
    /// Jet order of the gauge; fields come out at `order − 2`.
    pub order: usize,
    pub jet: JetSettings,
    /// Largest tolerated |Im| of ξ and σ.
    pub reality_tol: f64,
    /// Largest tolerated |q(z) − 1|.
    pub surface_tol: f64,
}

impl Default for FrameOptions {
    fn default() -> Self {
        FrameOptions { order: 5, jet: JetSettings::default(), reality_tol: 1e-8, surface_tol: 1e-10 }
    }
}

impl FrameOptions {
    pub fn with_order(order: usize) -> Self {
        FrameOptions { order, ..Default::default() }
    }
}

/// The scalars of the frame relations, as jets.
#[derive(Clone, Debug, PartialEq)]
pub struct FrameScalars {
    pub chi: Jet,
    pub sigma: Jet,
    pub kappa: Jet,
    pub xi: Jet,
    pub alpha: Jet,
    pub beta: Jet,
    pub phi: Jet,
    pub psi: Jet,
}

impl FrameScalars {
    pub fn values(&self) -> ScalarValues {
        ScalarValues {
            chi: self.chi.value(),
            sigma: self.sigma.value(),
            kappa: self.kappa.value(),
            xi: self.xi.value(),
            alpha: self.alpha.value(),
            beta: self.beta.value(),
            phi: self.phi.value(),
            psi: self.psi.value(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ScalarValues {
    pub chi: Complex64,
    pub sigma: Complex64,
    pub kappa: Complex64,
    pub xi: Complex64,
    pub alpha: Complex64,
    pub beta: Complex64,
    pub phi: Complex64,
    pub psi: Complex64,
}

impl ScalarValues {
    pub fn as_array(&self) -> [Complex64; 8] {
        [self.chi, self.sigma, self.kappa, self.xi, self.alpha, self.beta, self.phi, self.psi]
    }
}

/// Pointwise health of the frame (values at the base point).
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FrameResiduals {
    /// |z·w − 1|.
    pub duality: f64,
    /// ‖V − χY − σȲ‖ relative to ‖V‖.
    pub v_relation: f64,
    /// ‖Y − κV − ξV̄‖ relative to ‖Y‖.
    pub y_relation: f64,
    /// ‖X − αȲ‖ relative to ‖X‖.
    pub x_alpha: f64,
    /// ‖T − βV̄‖ relative to ‖T‖.
    pub t_beta: f64,
    /// max of |dρ̃(Y)|, |dρ̃(V)|, |dρ̃(R)|.
    pub tangency: f64,
}

/// The dual map and the whole frame at one point of S.
#[derive(Clone, Debug)]
pub struct FramePoint {
    pub z: Point,
    pub order: usize,
    pub extension: String,
    /// Coordinates `z₁, z₂, z̄₁, z̄₂` as jets of the gauge order.
    pub coords: [Jet; 4],
    /// `w₁, w₂, w̄₁, w̄₂`.
    pub w: [Jet; 4],
    pub y: Field,
    pub ybar: Field,
    pub v: Field,
    pub vbar: Field,
    pub r: Field,
    pub x: Field,
    pub xbar: Field,
    pub t: Field,
    pub tbar: Field,
    pub scalars: FrameScalars,
    pub residuals: FrameResiduals,
}

fn rel(diff: f64, scale: f64) -> f64 {
    diff / scale.max(f64::MIN_POSITIVE)
}

impl FramePoint {
    /// Canonical frame (log-gauge extension).
    pub fn compute(surface: &CircularSurface, z: Point, opts: &FrameOptions) -> Result<FramePoint, FrameError> {
        Self::compute_with(surface, z, opts, &LogGauge)
    }

    pub fn compute_with(
        surface: &CircularSurface,
        z: Point,
        opts: &FrameOptions,
        extension: &dyn AmbientExtension,
    ) -> Result<FramePoint, FrameError> {
        let n = opts.order;
        assert!(n >= 2, "frame needs gauge jets of order at least 2");
        let off = surface.q(z) - 1.0;
        if !(off.abs() <= opts.surface_tol) {
            return Err(FrameError::OffSurface(off));
        }
        let coords = Jet::coordinates(z, n);
        let [w1, w2] = extension.dual_jets(surface, z, n)?;
        let w = [w1.clone(), w2.clone(), w1.conj(), w2.conj()];

        let y = Field::new([w2.clone(), -&w1, Jet::zero(n - 1), Jet::zero(n - 1)]);
        let ybar = y.conj();
        let i = Complex64::i();
        let r = Field::new([&coords[0] * i, &coords[1] * i, &coords[2] * (-i), &coords[3] * (-i)]);

        // Jacobian of (w₁, w₂, w̄₁, w̄₂) in the Wirtinger coordinates, solved for
        // the field V with V w = (z₂, −z₁, 0, 0).
        let jac: Vec<Vec<Jet>> = w
            .iter()
            .map(|wa| Wirtinger::ALL.iter().map(|&v| wa.derivative(v)).collect::<Result<Vec<_>, _>>())
            .collect::<Result<_, _>>()?;
        let m = n - 2;
        let rhs = [coords[1].truncate(m), (-&coords[0]).truncate(m), Jet::zero(m), Jet::zero(m)];
        let vc = solve_linear(&jac, &rhs, &opts.jet)?;
        let v = Field::new([vc[0].clone(), vc[1].clone(), vc[2].clone(), vc[3].clone()]);
        let vbar = v.conj();

        let scalars = frame_scalars(&w, &y, &v, opts)?;
        let x = v.plus(&vbar.scaled(&scalars.phi));
        let t = y.plus(&ybar.scaled(&scalars.psi));
        let xbar = x.conj();
        let tbar = t.conj();

        let mut fp = FramePoint {
            z,
            order: n,
            extension: extension.name(),
            coords,
            w,
            y,
            ybar,
            v,
            vbar,
            r,
            x,
            xbar,
            t,
            tbar,
            scalars,
            residuals: FrameResiduals {
                duality: 0.0,
                v_relation: 0.0,
                y_relation: 0.0,
                x_alpha: 0.0,
                t_beta: 0.0,
                tangency: 0.0,
            },
        };
        fp.residuals = fp.compute_residuals(surface)?;
        Ok(fp)
    }

    fn compute_residuals(&self, surface: &CircularSurface) -> Result<FrameResiduals, FrameError> {
        let s = &self.scalars;
        let zw = self.z[0] * self.w[0].value() + self.z[1] * self.w[1].value();
        let v_rel = self.v.minus(&self.y.scaled(&s.chi)).minus(&self.ybar.scaled(&s.sigma));
        let y_rel = self.y.minus(&self.v.scaled(&s.kappa)).minus(&self.vbar.scaled(&s.xi));
        let xa = self.x.minus(&self.ybar.scaled(&s.alpha));
        let tb = self.t.minus(&self.vbar.scaled(&s.beta));
        let rho = surface.log_gauge_jet(self.z, 2)?;
        let tangency = [&self.y, &self.v, &self.r]
            .iter()
            .map(|f| Ok(f.truncate(1).apply(&rho)?.value().norm()))
            .collect::<Result<Vec<f64>, JetError>>()?
            .into_iter()
            .fold(0.0, f64::max);
        Ok(FrameResiduals {
            duality: (zw - 1.0).norm(),
            v_relation: rel(v_rel.value_norm(), self.v.value_norm()),
            y_relation: rel(y_rel.value_norm(), self.y.value_norm()),
            x_alpha: rel(xa.value_norm(), self.x.value_norm()),
            t_beta: rel(tb.value_norm(), self.t.value_norm()),
            tangency,
        })
    }

    pub fn field(&self, name: FieldName) -> &Field {
        match name {
            FieldName::X => &self.x,
            FieldName::T => &self.t,
            FieldName::Y => &self.y,
            FieldName::V => &self.v,
            FieldName::R => &self.r,
            FieldName::XBar => &self.xbar,
            FieldName::TBar => &self.tbar,
            FieldName::YBar => &self.ybar,
            FieldName::VBar => &self.vbar,
        }
    }

    /// Jet order of the field coefficients.
    pub fn field_order(&self) -> usize {
        self.order - 2
    }

    /// Dual point `(w₁, w₂)` at the base point.
    pub fn dual_point(&self) -> Point {
        [self.w[0].value(), self.w[1].value()]
    }

    /// `(∂w₂/∂z₁ − ∂w₁/∂z₂, ∂w̄₂/∂z̄₁ − ∂w̄₁/∂z̄₂)` at the base point.
    pub fn divergences(&self) -> Result<(Complex64, Complex64), JetError> {
        let d = self.w[1].derivative(Wirtinger::Z1)?.value() - self.w[0].derivative(Wirtinger::Z2)?.value();
        let db = self.w[3].derivative(Wirtinger::Zb1)?.value() - self.w[2].derivative(Wirtinger::Zb2)?.value();
        Ok((d, db))
    }

    pub fn summary(&self) -> FrameSummary {
        FrameSummary {
            z: self.z,
            w: self.dual_point(),
            y: self.y.values(),
            v: self.v.values(),
            x: self.x.values(),
            t: self.t.values(),
            r: self.r.values(),
            scalars: self.scalars.values(),
            residuals: self.residuals,
        }
    }
}

/// Serializable per-point frame table row.
#[derive(Clone, Debug, Serialize)]
pub struct FrameSummary {
    pub z: Point,
    pub w: Point,
    pub y: [Complex64; 4],
    pub v: [Complex64; 4],
    pub x: [Complex64; 4],
    pub t: [Complex64; 4],
    pub r: [Complex64; 4],
    pub scalars: ScalarValues,
    pub residuals: FrameResiduals,
}

/// `χ, σ` from the two blocks of `V = χY + σȲ`, `κ, ξ` from the normal
/// equations of `Y = κV + ξV̄`, then `α, β, φ, ψ`.
pub fn frame_scalars(w: &[Jet; 4], y: &Field, v: &Field, opts: &FrameOptions) -> Result<FrameScalars, FrameError> {
    let eps = opts.jet.eps_div;
    let wn = &(&w[0] * &w[2]) + &(&w[1] * &w[3]);
    let chi = (&(&w[3] * &v.c[0]) - &(&w[2] * &v.c[1])).div(&wn, eps)?;
    let sigma = (&(&w[1] * &v.c[2]) - &(&w[0] * &v.c[3])).div(&wn, eps)?;

    let vbar = v.conj();
    let inner = |a: &Field, b: &Field| {
        let mut acc = &a.c[0].conj() * &b.c[0];
        for k in 1..4 {
            acc += &(&a.c[k].conj() * &b.c[k]);
        }
        acc
    };
    let gram = vec![vec![inner(v, v), inner(v, &vbar)], vec![inner(&vbar, v), inner(&vbar, &vbar)]];
    let rhs = [inner(v, y), inner(&vbar, y)];
    let sol = solve_linear(&gram, &rhs, &opts.jet)?;
    let (kappa, xi) = (sol[0].clone(), sol[1].clone());

    for (name, s) in [("xi", &xi), ("sigma", &sigma)] {
        let val = s.value();
        if val.norm() <= eps {
            return Err(FrameError::VanishingScalar { name, value: val.norm() });
        }
        if val.im.abs() > opts.reality_tol * val.norm().max(1.0) {
            return Err(FrameError::NonRealScalar { name, im: val.im });
        }
    }
    let alpha = xi.conj().recip(eps)?;
    let beta = sigma.conj().recip(eps)?;
    let phi = kappa.conj().div(&xi.conj(), eps)?;
    let psi = chi.conj().div(&sigma.conj(), eps)?;
    Ok(FrameScalars { chi, sigma, kappa, xi, alpha, beta, phi, psi })
}

/// Dual point of the dual surface at `w(z)`: solves `z*·w = 1`, `z*·dw(v) = 0`
/// with `v = Y + Ȳ` spanning `H_zS` over the reals.
pub fn bidual_point(frame: &FramePoint, settings: &JetSettings) -> Result<Point, JetError> {
    let vreal = frame.y.plus(&frame.ybar);
    let d1 = vreal.apply(&frame.w[0])?.value();
    let d2 = vreal.apply(&frame.w[1])?.value();
    let w = frame.dual_point();
    let a = vec![
        vec![Jet::constant(w[0], 0), Jet::constant(w[1], 0)],
        vec![Jet::constant(d1, 0), Jet::constant(d2, 0)],
    ];
    let b = [Jet::one(0), Jet::zero(0)];
    let x = solve_linear(&a, &b, settings)?;
    Ok([x[0].value(), x[1].value()])
}

/// `min |1 − w(z)·ζ|` over probe points `ζ`.
pub fn tangent_plane_disjointness(w: Point, probes: &[Point]) -> f64 {
    probes.iter().map(|p| (Complex64::new(1.0, 0.0) - w[0] * p[0] - w[1] * p[1]).norm()).fold(f64::INFINITY, f64::min)
}

/// Probe set `{t·ζ : ζ ∈ S, t ∈ (0, t_max]}` plus the origin, with `q = t²`.
pub fn interior_probes(surface: &CircularSurface, t_max: f64, n_rays: usize, n_radii: usize, seed: u64) -> Vec<Point> {
    let mut out = vec![[Complex64::new(0.0, 0.0); 2]];
    for p in surface.random_points(n_rays, seed) {
        for k in 1..=n_radii {
            let t = t_max * k as f64 / n_radii as f64;
            out.push([p.z[0] * t, p.z[1] * t]);
        }
    }
    out
}

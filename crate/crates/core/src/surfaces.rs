//! Circular strongly convex hypersurfaces `S = {q = 1}` given by a circular,
//! degree-2 positively homogeneous gauge `q`.
//!
//! Gauges are pluggable: each family implements [`GaugeFamily`] and is looked
//! up by name in a [`GaugeRegistry`] when a surface spec string such as
//! `hermitian:[[1,0],[0,2]]` is parsed.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::sync::Arc;

use nalgebra::{Matrix3, Matrix4, Vector4};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;
use thiserror::Error;

use crate::jets::{Jet, JetError, Wirtinger};
use crate::quadrature::{gauss_legendre, periodic_trapezoid};

/// A point of C².
pub type Point = [Complex64; 2];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SurfaceError {
    #[error("invalid surface spec `{spec}`: {reason}")]
    InvalidSpec { spec: String, reason: String },
    #[error("unknown gauge family `{0}`")]
    UnknownFamily(String),
    #[error("gauge is not positive (min q on the unit sphere {0:e})")]
    NotPositive(f64),
    #[error("gauge is not circular (residual {0:e})")]
    NotCircular(f64),
    #[error("gauge is not degree-2 homogeneous (Euler residual {0:e})")]
    NotHomogeneous(f64),
    #[error("surface is not strongly convex (min tangential Hessian eigenvalue {0:e})")]
    NotConvex(f64),
    #[error(transparent)]
    Jet(#[from] JetError),
}

/// A circular, degree-2 positively homogeneous gauge.
pub trait Gauge: Send + Sync + fmt::Debug {
    /// Canonical spec string, parseable by the registry.
    fn spec(&self) -> String;

    /// Jet of `q` at `z`.
    fn jet(&self, z: Point, order: usize) -> Result<Jet, JetError>;

    /// `q(z)`; real and positive away from the origin.
    fn value(&self, z: Point) -> f64 {
        self.jet(z, 0).map(|j| j.value().re).unwrap_or(f64::NAN)
    }

    /// True when `q = |z₁|² + |z₂|²`.
    fn is_unit_sphere(&self) -> bool {
        false
    }
}

/// A named family of gauges, constructible from the argument part of a spec.
pub trait GaugeFamily: Send + Sync {
    fn name(&self) -> &'static str;
    fn usage(&self) -> &'static str;
    fn build(&self, spec: &str, args: Option<&str>) -> Result<Arc<dyn Gauge>, SurfaceError>;
}

/// Lookup table of gauge families keyed by the surface-string prefix.
pub struct GaugeRegistry {
    families: BTreeMap<&'static str, Box<dyn GaugeFamily>>,
}

impl GaugeRegistry {
    pub fn empty() -> Self {
        GaugeRegistry { families: BTreeMap::new() }
    }

    /// `sphere`, `hermitian`, `perturbed`.
    pub fn builtin() -> Self {
        let mut r = GaugeRegistry::empty();
        r.register(Box::new(SphereFamily));
        r.register(Box::new(HermitianFamily));
        r.register(Box::new(PerturbedFamily));
        r
    }

    pub fn register(&mut self, family: Box<dyn GaugeFamily>) {
        self.families.insert(family.name(), family);
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.families.keys().copied()
    }

    pub fn usage(&self) -> Vec<&'static str> {
        self.families.values().map(|f| f.usage()).collect()
    }

    pub fn parse(&self, spec: &str) -> Result<Arc<dyn Gauge>, SurfaceError> {
        let spec = spec.trim();
        let (name, args) = match spec.split_once(':') {
            Some((n, a)) => (n.trim(), Some(a.trim())),
            None => (spec, None),
        };
        let family = self.families.get(name).ok_or_else(|| SurfaceError::UnknownFamily(name.to_string()))?;
        family.build(spec, args)
    }
}

fn invalid(spec: &str, reason: impl Into<String>) -> SurfaceError {
    SurfaceError::InvalidSpec { spec: spec.to_string(), reason: reason.into() }
}

/// Parses `a`, `bi`, `a+bi`, `a-bi`, `i`, `-i`.
pub fn parse_complex(text: &str) -> Option<Complex64> {
    let t: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    if t.is_empty() {
        return None;
    }
    if let Some(body) = t.strip_suffix('i') {
        // find the split between real and imaginary parts: last +/- not after an exponent marker
        let bytes = body.as_bytes();
        let mut split = None;
        for k in (1..bytes.len()).rev() {
            if (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E') {
                split = Some(k);
                break;
            }
        }
        let (re_part, im_part) = match split {
            Some(k) => (&body[..k], &body[k..]),
            None => ("", body),
        };
        let re = if re_part.is_empty() { 0.0 } else { re_part.parse::<f64>().ok()? };
        let im = match im_part {
            "" | "+" => 1.0,
            "-" => -1.0,
            s => s.parse::<f64>().ok()?,
        };
        Some(Complex64::new(re, im))
    } else {
        t.parse::<f64>().ok().map(|re| Complex64::new(re, 0.0))
    }
}

fn format_complex(c: Complex64) -> String {
    if c.im == 0.0 {
        format!("{}", c.re)
    } else if c.re == 0.0 {
        format!("{}i", c.im)
    } else if c.im < 0.0 {
        format!("{}-{}i", c.re, -c.im)
    } else {
        format!("{}+{}i", c.re, c.im)
    }
}

/// 2×2 Hermitian positive definite matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Hermitian2 {
    pub h: [[Complex64; 2]; 2],
}

impl Hermitian2 {
    pub fn identity() -> Self {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        Hermitian2 { h: [[one, zero], [zero, one]] }
    }

    pub fn diag(a: f64, b: f64) -> Self {
        let zero = Complex64::new(0.0, 0.0);
        Hermitian2 { h: [[Complex64::new(a, 0.0), zero], [zero, Complex64::new(b, 0.0)]] }
    }

    fn parse(spec: &str, text: &str) -> Result<Self, SurfaceError> {
        let inner = text
            .trim()
            .strip_prefix("[[")
            .and_then(|s| s.strip_suffix("]]"))
            .ok_or_else(|| invalid(spec, "matrix must look like [[h11,h12],[h21,h22]]"))?;
        let rows: Vec<&str> = inner.split("],[").collect();
        if rows.len() != 2 {
            return Err(invalid(spec, "matrix must have two rows"));
        }
        let mut h = [[Complex64::new(0.0, 0.0); 2]; 2];
        for (i, row) in rows.iter().enumerate() {
            let entries: Vec<&str> = row.split(',').collect();
            if entries.len() != 2 {
                return Err(invalid(spec, "matrix rows must have two entries"));
            }
            for (k, e) in entries.iter().enumerate() {
                h[i][k] = parse_complex(e).ok_or_else(|| invalid(spec, format!("bad complex entry `{e}`")))?;
            }
        }
        let tol = 1e-12 * (1.0 + h.iter().flatten().map(|c| c.norm()).fold(0.0, f64::max));
        if h[0][0].im.abs() > tol || h[1][1].im.abs() > tol || (h[0][1] - h[1][0].conj()).norm() > tol {
            return Err(invalid(spec, "matrix is not Hermitian"));
        }
        Ok(Hermitian2 { h })
    }

    fn format(&self) -> String {
        let h = &self.h;
        format!(
            "[[{},{}],[{},{}]]",
            format_complex(h[0][0]),
            format_complex(h[0][1]),
            format_complex(h[1][0]),
            format_complex(h[1][1])
        )
    }

    fn eigenvalues(&self) -> (f64, f64) {
        let a = self.h[0][0].re;
        let d = self.h[1][1].re;
        let b = self.h[0][1].norm();
        let mean = 0.5 * (a + d);
        let rad = (0.25 * (a - d) * (a - d) + b * b).sqrt();
        (mean - rad, mean + rad)
    }

    /// `z*Hz` as a jet.
    fn jet(&self, z: Point, order: usize) -> Jet {
        let c = Jet::coordinates(z, order);
        let mut q = Jet::zero(order);
        for i in 0..2 {
            for k in 0..2 {
                if self.h[i][k] != Complex64::new(0.0, 0.0) {
                    q += &(&(&c[2 + i] * &c[k]) * self.h[i][k]);
                }
            }
        }
        q
    }

    fn value(&self, z: Point) -> f64 {
        let mut q = Complex64::new(0.0, 0.0);
        for i in 0..2 {
            for k in 0..2 {
                q += z[i].conj() * self.h[i][k] * z[k];
            }
        }
        q.re
    }
}

/// `q = z*Hz`.
#[derive(Clone, Debug)]
pub struct HermitianGauge {
    pub h: Hermitian2,
}

impl Gauge for HermitianGauge {
    fn spec(&self) -> String {
        if self.is_unit_sphere() {
            "sphere".to_string()
        } else {
            format!("hermitian:{}", self.h.format())
        }
    }

    fn jet(&self, z: Point, order: usize) -> Result<Jet, JetError> {
        Ok(self.h.jet(z, order))
    }

    fn value(&self, z: Point) -> f64 {
        self.h.value(z)
    }

    fn is_unit_sphere(&self) -> bool {
        self.h == Hermitian2::identity()
    }
}

/// `q = z*Hz + ε·|z₁|²|z₂|²/(z*Hz)`.
#[derive(Clone, Debug)]
pub struct PerturbedGauge {
    pub h: Hermitian2,
    pub eps: f64,
}

impl Gauge for PerturbedGauge {
    fn spec(&self) -> String {
        format!("perturbed:{};{}", self.h.format(), self.eps)
    }

    fn jet(&self, z: Point, order: usize) -> Result<Jet, JetError> {
        let base = self.h.jet(z, order);
        let c = Jet::coordinates(z, order);
        let num = &(&(&c[0] * &c[2]) * &(&c[1] * &c[3])) * self.eps;
        Ok(&base + &num.div(&base, 1e-300)?)
    }

    fn value(&self, z: Point) -> f64 {
        let base = self.h.value(z);
        base + self.eps * z[0].norm_sqr() * z[1].norm_sqr() / base
    }
}

struct SphereFamily;
struct HermitianFamily;
struct PerturbedFamily;

impl GaugeFamily for SphereFamily {
    fn name(&self) -> &'static str {
        "sphere"
    }
    fn usage(&self) -> &'static str {
        "sphere"
    }
    fn build(&self, spec: &str, args: Option<&str>) -> Result<Arc<dyn Gauge>, SurfaceError> {
        if args.is_some_and(|a| !a.is_empty()) {
            return Err(invalid(spec, "sphere takes no arguments"));
        }
        Ok(Arc::new(HermitianGauge { h: Hermitian2::identity() }))
    }
}

impl GaugeFamily for HermitianFamily {
    fn name(&self) -> &'static str {
        "hermitian"
    }
    fn usage(&self) -> &'static str {
        "hermitian:[[h11,h12],[h21,h22]]"
    }
    fn build(&self, spec: &str, args: Option<&str>) -> Result<Arc<dyn Gauge>, SurfaceError> {
        let h = Hermitian2::parse(spec, args.ok_or_else(|| invalid(spec, "missing matrix"))?)?;
        let (lo, _) = h.eigenvalues();
        if lo <= 0.0 {
            return Err(SurfaceError::NotPositive(lo));
        }
        Ok(Arc::new(HermitianGauge { h }))
    }
}

impl GaugeFamily for PerturbedFamily {
    fn name(&self) -> &'static str {
        "perturbed"
    }
    fn usage(&self) -> &'static str {
        "perturbed:[[h11,h12],[h21,h22]];eps"
    }
    fn build(&self, spec: &str, args: Option<&str>) -> Result<Arc<dyn Gauge>, SurfaceError> {
        let args = args.ok_or_else(|| invalid(spec, "missing arguments"))?;
        let (m, e) = args.split_once(';').ok_or_else(|| invalid(spec, "expected `H;eps`"))?;
        let h = if m.trim() == "I" || m.trim() == "identity" { Hermitian2::identity() } else { Hermitian2::parse(spec, m)? };
        let eps: f64 = e.trim().parse().map_err(|_| invalid(spec, format!("bad epsilon `{e}`")))?;
        let (lo, _) = h.eigenvalues();
        if lo <= 0.0 {
            return Err(SurfaceError::NotPositive(lo));
        }
        Ok(Arc::new(PerturbedGauge { h, eps }))
    }
}

/// Summary of the pointwise invariant checks run on a probe set.
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct SurfaceValidation {
    pub probes: usize,
    pub min_gauge_on_unit_sphere: f64,
    pub max_circularity_residual: f64,
    pub max_euler_residual: f64,
    pub min_convexity_eigenvalue: f64,
}

/// A validated circular strongly convex hypersurface.
#[derive(Clone, Debug)]
pub struct CircularSurface {
    gauge: Arc<dyn Gauge>,
    validation: SurfaceValidation,
}

/// Tolerance for the circularity and Euler residuals during validation.
pub const INVARIANT_TOL: f64 = 1e-10;
/// Smallest admissible tangential Hessian eigenvalue.
pub const CONVEXITY_TOL: f64 = 1e-9;

impl CircularSurface {
    /// Parses a spec string with the builtin registry and validates it.
    pub fn from_spec(spec: &str) -> Result<Self, SurfaceError> {
        Self::from_spec_with(&GaugeRegistry::builtin(), spec)
    }

    pub fn from_spec_with(registry: &GaugeRegistry, spec: &str) -> Result<Self, SurfaceError> {
        Self::from_gauge(registry.parse(spec)?)
    }

    pub fn sphere() -> Self {
        Self::from_spec("sphere").expect("unit sphere is valid")
    }

    /// Validates an arbitrary gauge on a coarse probe set.
    pub fn from_gauge(gauge: Arc<dyn Gauge>) -> Result<Self, SurfaceError> {
        let validation = validate(gauge.as_ref())?;
        if !(validation.min_gauge_on_unit_sphere > 0.0) {
            return Err(SurfaceError::NotPositive(validation.min_gauge_on_unit_sphere));
        }
        if !(validation.max_circularity_residual <= INVARIANT_TOL) {
            return Err(SurfaceError::NotCircular(validation.max_circularity_residual));
        }
        if !(validation.max_euler_residual <= INVARIANT_TOL) {
            return Err(SurfaceError::NotHomogeneous(validation.max_euler_residual));
        }
        if !(validation.min_convexity_eigenvalue > CONVEXITY_TOL) {
            return Err(SurfaceError::NotConvex(validation.min_convexity_eigenvalue));
        }
        Ok(CircularSurface { gauge, validation })
    }

    pub fn gauge(&self) -> &dyn Gauge {
        self.gauge.as_ref()
    }

    pub fn spec(&self) -> String {
        self.gauge.spec()
    }

    pub fn validation(&self) -> &SurfaceValidation {
        &self.validation
    }

    pub fn is_unit_sphere(&self) -> bool {
        self.gauge.is_unit_sphere()
    }

    pub fn q(&self, z: Point) -> f64 {
        self.gauge.value(z)
    }

    /// Jet of the gauge `q` at `z ≠ 0`.
    pub fn gauge_jet(&self, z: Point, order: usize) -> Result<Jet, JetError> {
        self.gauge.jet(z, order)
    }

    /// Jet of the normalized defining function `ρ̃ = log q`.
    pub fn log_gauge_jet(&self, z: Point, order: usize) -> Result<Jet, JetError> {
        self.gauge.jet(z, order)?.ln()
    }

    /// The point of S on the ray through the unit vector `ω`.
    pub fn radial_point(&self, omega: Point) -> Point {
        let r = 1.0 / self.q(omega).sqrt();
        [omega[0] * r, omega[1] * r]
    }

    /// `z(s, θ₁, θ₂) = r·(cos s e^{iθ₁}, sin s e^{iθ₂})`, `r = q(direction)^{-1/2}`.
    pub fn param_point(&self, p: [f64; 3]) -> Point {
        self.radial_point(direction(p))
    }

    /// Point and the three parametric tangent vectors `∂z/∂s, ∂z/∂θ₁, ∂z/∂θ₂`.
    pub fn param_frame(&self, p: [f64; 3]) -> Result<(Point, [Point; 3]), JetError> {
        let (s, t1, t2) = (p[0], p[1], p[2]);
        let e1 = Complex64::from_polar(1.0, t1);
        let e2 = Complex64::from_polar(1.0, t2);
        let i = Complex64::i();
        let omega = [e1 * s.cos(), e2 * s.sin()];
        let domega = [
            [-e1 * s.sin(), e2 * s.cos()],
            [i * omega[0], Complex64::new(0.0, 0.0)],
            [Complex64::new(0.0, 0.0), i * omega[1]],
        ];
        let qj = self.gauge.jet(omega, 1)?;
        let q = qj.value().re;
        let grad = [qj.coeff(&[1, 0, 0, 0]), qj.coeff(&[0, 1, 0, 0])];
        let r = q.powf(-0.5);
        let z = [omega[0] * r, omega[1] * r];
        let tangents = domega.map(|v| {
            let dq = 2.0 * (grad[0] * v[0] + grad[1] * v[1]).re;
            let dr = -0.5 * q.powf(-1.5) * dq;
            [v[0] * r + omega[0] * dr, v[1] * r + omega[1] * dr]
        });
        Ok((z, tangents))
    }

    /// Circularity residual `|i(z·q_z − z̄·q_z̄)|` and Euler residual
    /// `|z·q_z + z̄·q_z̄ − 2q|` at `z`.
    pub fn invariant_residuals(&self, z: Point) -> Result<(f64, f64), JetError> {
        residuals(self.gauge.as_ref(), z)
    }

    /// Minimum eigenvalue of the real Hessian of `q` restricted to `T_zS`.
    pub fn convexity_eigenvalue(&self, z: Point) -> Result<f64, JetError> {
        convexity_eigenvalue(self.gauge.as_ref(), z)
    }

    /// Tensor grid: Gauss–Legendre in `s ∈ (0, π/2)`, trapezoid in `θ₁, θ₂`.
    pub fn sample_grid(&self, n_s: usize, n_theta: usize) -> SampleGrid {
        SampleGrid::new(self, n_s, n_theta)
    }

    /// `n` points of S on uniformly random rays.
    pub fn random_points(&self, n: usize, seed: u64) -> Vec<SurfacePoint> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                let x: [f64; 4] = std::array::from_fn(|_| StandardNormal.sample(&mut rng));
                let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
                let omega = [Complex64::new(x[0] / norm, x[1] / norm), Complex64::new(x[2] / norm, x[3] / norm)];
                SurfacePoint::on(self, omega)
            })
            .collect()
    }
}

/// Unit direction `(cos s e^{iθ₁}, sin s e^{iθ₂})`.
pub fn direction(p: [f64; 3]) -> Point {
    [Complex64::from_polar(p[0].cos(), p[1]), Complex64::from_polar(p[0].sin(), p[2])]
}

/// Parameters `(s, θ₁, θ₂)` of the ray through `z`.
pub fn parameters_of(z: Point) -> [f64; 3] {
    let wrap = |t: f64| if t < 0.0 { t + 2.0 * PI } else { t };
    [z[1].norm().atan2(z[0].norm()), wrap(z[0].arg()), wrap(z[1].arg())]
}

/// A point of S together with its parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SurfacePoint {
    pub z: Point,
    pub params: [f64; 3],
}

impl SurfacePoint {
    pub fn on(surface: &CircularSurface, omega: Point) -> Self {
        let z = surface.radial_point(omega);
        SurfacePoint { z, params: parameters_of(z) }
    }

    pub fn from_params(surface: &CircularSurface, params: [f64; 3]) -> Self {
        SurfacePoint { z: surface.param_point(params), params }
    }
}

/// Grid node: point, parameters and product quadrature weight
/// (the parametric Jacobian is applied by the integrator).
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GridPoint {
    pub point: SurfacePoint,
    pub weight: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SampleGrid {
    pub n_s: usize,
    pub n_theta: usize,
    pub points: Vec<GridPoint>,
}

impl SampleGrid {
    fn new(surface: &CircularSurface, n_s: usize, n_theta: usize) -> Self {
        let s_rule = gauss_legendre(n_s.max(1), 0.0, FRAC_PI_2);
        let t_rule = periodic_trapezoid(n_theta.max(1));
        let mut points = Vec::with_capacity(s_rule.len() * t_rule.len() * t_rule.len());
        for &(s, ws) in &s_rule {
            for &(t1, w1) in &t_rule {
                for &(t2, w2) in &t_rule {
                    let params = [s, t1, t2];
                    points.push(GridPoint { point: SurfacePoint::from_params(surface, params), weight: ws * w1 * w2 });
                }
            }
        }
        SampleGrid { n_s, n_theta, points }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn surface_points(&self) -> Vec<SurfacePoint> {
        self.points.iter().map(|g| g.point).collect()
    }

    pub fn total_weight(&self) -> f64 {
        self.points.iter().map(|g| g.weight).sum()
    }
}

fn residuals(gauge: &dyn Gauge, z: Point) -> Result<(f64, f64), JetError> {
    let q = gauge.jet(z, 1)?;
    let qz = [q.coeff(&[1, 0, 0, 0]), q.coeff(&[0, 1, 0, 0])];
    let qzb = [q.coeff(&[0, 0, 1, 0]), q.coeff(&[0, 0, 0, 1])];
    let zq = z[0] * qz[0] + z[1] * qz[1];
    let zbq = z[0].conj() * qzb[0] + z[1].conj() * qzb[1];
    let circ = (Complex64::i() * (zq - zbq)).norm();
    let euler = (zq + zbq - 2.0 * q.value()).norm();
    Ok((circ, euler))
}

/// Wirtinger components of the real coordinate directions ∂x₁, ∂y₁, ∂x₂, ∂y₂.
fn real_directions() -> [[Complex64; 4]; 4] {
    let o = Complex64::new(1.0, 0.0);
    let z = Complex64::new(0.0, 0.0);
    let i = Complex64::i();
    [[o, z, o, z], [i, z, -i, z], [z, o, z, o], [z, i, z, -i]]
}

/// Real gradient and real Hessian of `q` at `z`, from its 2-jet.
pub fn real_gradient_hessian(gauge: &dyn Gauge, z: Point) -> Result<(Vector4<f64>, Matrix4<f64>), JetError> {
    let q = gauge.jet(z, 2)?;
    let first = |a: usize| {
        let mut idx = [0u8; 4];
        idx[a] = 1;
        q.coeff(&idx)
    };
    let second = |a: usize, b: usize| {
        let mut idx = [0u8; 4];
        idx[a] += 1;
        idx[b] += 1;
        let c = q.coeff(&idx);
        if a == b {
            c * 2.0
        } else {
            c
        }
    };
    let dirs = real_directions();
    let mut g = Vector4::zeros();
    let mut h = Matrix4::zeros();
    for k in 0..4 {
        g[k] = (0..4).map(|a| dirs[k][a] * first(a)).sum::<Complex64>().re;
        for l in 0..4 {
            let mut acc = Complex64::new(0.0, 0.0);
            for a in 0..4 {
                for b in 0..4 {
                    acc += dirs[k][a] * dirs[l][b] * second(a, b);
                }
            }
            h[(k, l)] = acc.re;
        }
    }
    Ok((g, h))
}

/// Min eigenvalue of `Hess q` on the orthogonal complement of `∇q`.
pub fn tangential_hessian_min_eigenvalue(g: &Vector4<f64>, h: &Matrix4<f64>) -> f64 {
    let n = g.normalize();
    let mut basis: Vec<Vector4<f64>> = Vec::with_capacity(3);
    for k in 0..4 {
        let mut v = Vector4::zeros();
        v[k] = 1.0;
        v -= n * n.dot(&v);
        for b in &basis {
            v -= b * b.dot(&v);
        }
        if v.norm() > 1e-6 && basis.len() < 3 {
            basis.push(v.normalize());
        }
    }
    let m = Matrix3::from_fn(|i, k| basis[i].dot(&(h * basis[k])));
    m.symmetric_eigenvalues().min()
}

fn convexity_eigenvalue(gauge: &dyn Gauge, z: Point) -> Result<f64, JetError> {
    let (g, h) = real_gradient_hessian(gauge, z)?;
    Ok(tangential_hessian_min_eigenvalue(&g, &h))
}

/// Probe-set validation: a coarse parameter grid plus random rays.
fn validate(gauge: &dyn Gauge) -> Result<SurfaceValidation, SurfaceError> {
    let mut dirs: Vec<Point> = Vec::new();
    for &(s, _) in &gauss_legendre(7, 0.0, FRAC_PI_2) {
        for &(t1, _) in &periodic_trapezoid(6) {
            for &(t2, _) in &periodic_trapezoid(6) {
                dirs.push(direction([s, t1, t2]));
            }
        }
    }
    dirs.push(direction([0.0, 0.0, 0.0]));
    dirs.push(direction([FRAC_PI_2, 0.0, 0.0]));
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    for _ in 0..64 {
        let x: [f64; 4] = std::array::from_fn(|_| StandardNormal.sample(&mut rng));
        let n = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        dirs.push([Complex64::new(x[0] / n, x[1] / n), Complex64::new(x[2] / n, x[3] / n)]);
    }

    let mut out = SurfaceValidation {
        probes: dirs.len(),
        min_gauge_on_unit_sphere: f64::INFINITY,
        max_circularity_residual: 0.0,
        max_euler_residual: 0.0,
        min_convexity_eigenvalue: f64::INFINITY,
    };
    for omega in dirs {
        let qv = gauge.value(omega);
        out.min_gauge_on_unit_sphere = out.min_gauge_on_unit_sphere.min(qv);
        if !(qv > 0.0) {
            continue;
        }
        let r = qv.powf(-0.5);
        let z = [omega[0] * r, omega[1] * r];
        let (c, e) = residuals(gauge, z)?;
        out.max_circularity_residual = out.max_circularity_residual.max(c);
        out.max_euler_residual = out.max_euler_residual.max(e);
        out.min_convexity_eigenvalue = out.min_convexity_eigenvalue.min(convexity_eigenvalue(gauge, z)?);
    }
    Ok(out)
}

impl fmt::Display for CircularSurface {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.spec())
    }
}

/// Convenience: the Wirtinger first derivatives `(q_{z₁}, q_{z₂})` at `z`.
pub fn gauge_gradient(surface: &CircularSurface, z: Point) -> Result<[Complex64; 2], JetError> {
    let q = surface.gauge_jet(z, 1)?;
    Ok([q.derivative(Wirtinger::Z1)?.value(), q.derivative(Wirtinger::Z2)?.value()])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// Independent FD Hessian of the real function q(x₁, y₁, x₂, y₂).
    fn fd_hessian(surface: &CircularSurface, z: Point) -> (Vector4<f64>, Matrix4<f64>) {
        let to_point = |x: &Vector4<f64>| [c(x[0], x[1]), c(x[2], x[3])];
        let x0 = Vector4::new(z[0].re, z[0].im, z[1].re, z[1].im);
        let f = |x: &Vector4<f64>| surface.q(to_point(x));
        let h = 1e-4;
        let mut g = Vector4::zeros();
        let mut hess = Matrix4::zeros();
        for k in 0..4 {
            let mut ek = Vector4::zeros();
            ek[k] = h;
            g[k] = (f(&(x0 + ek)) - f(&(x0 - ek))) / (2.0 * h);
            for l in 0..4 {
                let mut el = Vector4::zeros();
                el[l] = h;
                hess[(k, l)] = (f(&(x0 + ek + el)) - f(&(x0 + ek - el)) - f(&(x0 - ek + el)) + f(&(x0 - ek - el)))
                    / (4.0 * h * h);
            }
        }
        (g, hess)
    }

    #[test]
    fn sphere_spec() {
        let s = CircularSurface::from_spec("sphere").unwrap();
        assert!(s.is_unit_sphere());
        let z = [c(0.6, 0.0), c(0.0, 0.8)];
        assert!((s.q(z) - 1.0).abs() < 1e-15);
        let v = s.validation();
        assert!(v.max_circularity_residual <= 1e-12 && v.max_euler_residual <= 1e-12);
    }

    #[test]
    fn parses_complex_literals() {
        assert_eq!(parse_complex("1"), Some(c(1.0, 0.0)));
        assert_eq!(parse_complex("-2.5"), Some(c(-2.5, 0.0)));
        assert_eq!(parse_complex("0.5i"), Some(c(0.0, 0.5)));
        assert_eq!(parse_complex("1+2i"), Some(c(1.0, 2.0)));
        assert_eq!(parse_complex("1-2i"), Some(c(1.0, -2.0)));
        assert_eq!(parse_complex("i"), Some(c(0.0, 1.0)));
        assert_eq!(parse_complex("-i"), Some(c(0.0, -1.0)));
        assert_eq!(parse_complex("1e-3+2e-1i"), Some(c(1e-3, 0.2)));
        assert_eq!(parse_complex("x"), None);
    }

    #[test]
    fn ellipsoid_convexity_matches_fd_oracle() {
        let s = CircularSurface::from_spec("hermitian:[[1,0],[0,2]]").unwrap();
        for p in s.random_points(50, 3) {
            let (g, h) = real_gradient_hessian(s.gauge(), p.z).unwrap();
            let (gf, hf) = fd_hessian(&s, p.z);
            assert!((g - gf).norm() <= 1e-6 * g.norm());
            assert!((h - hf).norm() <= 1e-6 * h.norm());
            let lam = tangential_hessian_min_eigenvalue(&g, &h);
            let lam_fd = tangential_hessian_min_eigenvalue(&gf, &hf);
            assert!(lam > 0.0);
            assert!((lam - lam_fd).abs() <= 1e-6 * lam.abs().max(1.0));
        }
    }

    #[test]
    fn large_perturbation_is_not_convex() {
        let err = CircularSurface::from_spec("perturbed:[[1,0],[0,1]];10").unwrap_err();
        assert!(matches!(err, SurfaceError::NotConvex(_)), "{err:?}");
        assert!(CircularSurface::from_spec("perturbed:[[1,0],[0,1]];0.5").is_ok());
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(matches!(CircularSurface::from_spec("torus"), Err(SurfaceError::UnknownFamily(_))));
        assert!(matches!(
            CircularSurface::from_spec("hermitian:[[1,2],[3,1]]"),
            Err(SurfaceError::InvalidSpec { .. })
        ));
        assert!(matches!(CircularSurface::from_spec("hermitian:[[1,0],[0,-1]]"), Err(SurfaceError::NotPositive(_))));
    }

    #[test]
    fn gauge_jet_values() {
        let s = CircularSurface::sphere();
        let q = s.gauge_jet([c(1.0, 0.0), c(0.0, 0.0)], 2).unwrap();
        assert_eq!(q.value(), c(1.0, 0.0));
        assert_eq!(q.coeff(&[1, 0, 0, 0]), c(1.0, 0.0));

        let e = CircularSurface::from_spec("hermitian:[[1,0],[0,2]]").unwrap();
        let z = [c(0.0, 0.0), c(1.0 / 2f64.sqrt(), 0.0)];
        let q = e.gauge_jet(z, 2).unwrap();
        assert!((q.value() - c(1.0, 0.0)).norm() < 1e-15);
        assert!((q.coeff(&[0, 1, 0, 0]) - c(2f64.sqrt(), 0.0)).norm() < 1e-15);
    }

    #[test]
    fn euler_identity_as_jets() {
        let e = CircularSurface::from_spec("perturbed:[[1,0.2+0.1i],[0.2-0.1i,1.5]];0.4").unwrap();
        for p in e.random_points(20, 8) {
            let z = p.z;
            let q = e.gauge_jet(z, 4).unwrap();
            let c4 = Jet::coordinates(z, 4);
            let mut euler = Jet::zero(3);
            for k in 0..4 {
                euler += &(&c4[k] * &q.derivative(Wirtinger::from_slot(k)).unwrap());
            }
            assert!((&euler - &(&q * 2.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn radial_points() {
        let s = CircularSurface::sphere();
        let w = [c(0.6, 0.0), c(0.0, -0.8)];
        let z = s.radial_point(w);
        assert!((z[0] - w[0]).norm() < 1e-15 && (z[1] - w[1]).norm() < 1e-15);
        let e = CircularSurface::from_spec("hermitian:[[1,0],[0,2]]").unwrap();
        let z = e.radial_point([c(0.0, 0.0), c(1.0, 0.0)]);
        assert!((z[1] - c(1.0 / 2f64.sqrt(), 0.0)).norm() < 1e-15);
        let z = e.radial_point([c(1.0, 0.0), c(0.0, 0.0)]);
        assert!((z[0] - c(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn grid_points_lie_on_surface() {
        let e = CircularSurface::from_spec("hermitian:[[1,0],[0,2]]").unwrap();
        for n in [4, 8] {
            let g = e.sample_grid(5, n);
            assert_eq!(g.len(), 5 * n * n);
            for p in &g.points {
                assert!((e.q(p.point.z) - 1.0).abs() < 1e-12);
                let s = p.point.params[0];
                assert!(s > 0.0 && s < FRAC_PI_2);
                assert!(p.weight > 0.0);
            }
            assert!((g.total_weight() - 2.0 * PI.powi(3)).abs() < 1e-10);
        }
    }

    #[test]
    fn parametric_tangents_match_finite_differences() {
        let e = CircularSurface::from_spec("perturbed:[[1,0],[0,1.5]];0.3").unwrap();
        let p = [0.7, 1.1, -0.4];
        let (_, t) = e.param_frame(p).unwrap();
        let h = 1e-6;
        for k in 0..3 {
            let mut a = p;
            let mut b = p;
            a[k] += h;
            b[k] -= h;
            let za = e.param_point(a);
            let zb = e.param_point(b);
            for j in 0..2 {
                let fd = (za[j] - zb[j]) / (2.0 * h);
                assert!((fd - t[k][j]).norm() < 1e-8);
            }
        }
    }
}

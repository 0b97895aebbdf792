//! Surface integrals over S and path integrals of 1-forms along S.
//!
//! Integrals use the tensor grid of [`crate::surfaces::SampleGrid`]; the
//! parametric Jacobian enters through the tangent vectors of the
//! parametrization `(s, θ₁, θ₂) ↦ z`, whose frame order fixes the orientation.

use std::f64::consts::PI;
use std::str::FromStr;

use nalgebra::{Matrix3, Matrix3x4, Vector3, Vector4};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::dualframe::{FrameError, FrameOptions, FramePoint};
use crate::jets::{Jet, JetError, Wirtinger};
use crate::operators::{eval_at, EvalError, Expr};
use crate::quadrature::gauss_legendre;
use crate::surfaces::{CircularSurface, Point, SampleGrid, SurfacePoint};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CalculusError {
    #[error(transparent)]
    Frame(#[from] FrameError),
    #[error(transparent)]
    Jet(#[from] JetError),
    #[error("at z = ({z1}, {z2}): {source}")]
    Eval { z1: Complex64, z2: Complex64, source: EvalError },
    #[error("primitive depends on the path: residual {0:e}")]
    PathDependence(f64),
    #[error("unknown weight `{0}` (expected dS, dS/alpha, dS/alpha2, dsigma, dsigma/alpha, dsigma/alpha2)")]
    UnknownWeight(String),
}

impl CalculusError {
    pub fn eval(z: Point, source: EvalError) -> Self {
        CalculusError::Eval { z1: z[0], z2: z[1], source }
    }
}

/// Surface measures available to [`SurfaceQuadrature::weighted_integral`].
///
/// `dS` is the Euclidean measure from the parametric Gram determinant;
/// `dσ = dS/|∇ρ̃|` is the coarea measure of `ρ̃ = log q`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Weight {
    DS,
    DSOverAlpha,
    DSOverAlpha2,
    DSigma,
    DSigmaOverAlpha,
    DSigmaOverAlpha2,
}

impl FromStr for Weight {
    type Err = CalculusError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s.trim() {
            "dS" => Weight::DS,
            "dS/alpha" => Weight::DSOverAlpha,
            "dS/alpha2" | "dS/alpha^2" => Weight::DSOverAlpha2,
            "dsigma" => Weight::DSigma,
            "dsigma/alpha" => Weight::DSigmaOverAlpha,
            "dsigma/alpha2" | "dsigma/alpha^2" => Weight::DSigmaOverAlpha2,
            other => return Err(CalculusError::UnknownWeight(other.to_string())),
        })
    }
}

impl std::fmt::Display for Weight {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Weight::DS => "dS",
            Weight::DSOverAlpha => "dS/alpha",
            Weight::DSOverAlpha2 => "dS/alpha2",
            Weight::DSigma => "dsigma",
            Weight::DSigmaOverAlpha => "dsigma/alpha",
            Weight::DSigmaOverAlpha2 => "dsigma/alpha2",
        })
    }
}

/// One quadrature node with its frame and parametric tangents.
#[derive(Clone, Debug)]
pub struct Node {
    pub point: SurfacePoint,
    /// Product quadrature weight in parameter space.
    pub weight: f64,
    /// `∂z/∂s, ∂z/∂θ₁, ∂z/∂θ₂`.
    pub tangents: [Point; 3],
    pub frame: FramePoint,
    /// `ν(∂s, ∂θ₁, ∂θ₂)`.
    pub nu: Complex64,
    /// `√det G`, G the real Gram matrix of the tangents.
    pub gram: f64,
}

/// `dw_j(v)` for `v = (v₁, v₂)`, from the first-order jet coefficients of `w_j`.
fn dw(w: &Jet, v: Point) -> Result<Complex64, JetError> {
    let d = |var| w.derivative(var).map(|j| j.value());
    Ok(d(Wirtinger::Z1)? * v[0] + d(Wirtinger::Z2)? * v[1] + d(Wirtinger::Zb1)? * v[0].conj() + d(Wirtinger::Zb2)? * v[1].conj())
}

fn nu_density(frame: &FramePoint, t: &[Point; 3]) -> Result<Complex64, JetError> {
    let z = frame.z;
    let mut m = nalgebra::Matrix3::<Complex64>::zeros();
    for (p, v) in t.iter().enumerate() {
        m[(0, p)] = z[1] * v[0] - z[0] * v[1];
        m[(1, p)] = dw(&frame.w[0], *v)?;
        m[(2, p)] = dw(&frame.w[1], *v)?;
    }
    Ok(m.determinant())
}

fn real4(v: Point) -> Vector4<f64> {
    Vector4::new(v[0].re, v[0].im, v[1].re, v[1].im)
}

fn gram_density(t: &[Point; 3]) -> f64 {
    let r: Vec<Vector4<f64>> = t.iter().map(|v| real4(*v)).collect();
    Matrix3::from_fn(|i, k| r[i].dot(&r[k])).determinant().max(0.0).sqrt()
}

/// Precomputed integration nodes on a grid.
#[derive(Clone, Debug)]
pub struct SurfaceQuadrature {
    pub n_s: usize,
    pub n_theta: usize,
    pub nodes: Vec<Node>,
}

impl SurfaceQuadrature {
    /// Frames are built at jet order `order` (2 suffices for one field application).
    pub fn new(surface: &CircularSurface, grid: &SampleGrid, order: usize) -> Result<Self, CalculusError> {
        let opts = FrameOptions::with_order(order.max(2));
        let nodes = grid
            .points
            .par_iter()
            .map(|g| {
                let (z, tangents) = surface.param_frame(g.point.params)?;
                let frame = FramePoint::compute(surface, z, &opts)?;
                let nu = nu_density(&frame, &tangents)?;
                Ok(Node { point: SurfacePoint { z, params: g.point.params }, weight: g.weight, tangents, frame, nu, gram: gram_density(&tangents) })
            })
            .collect::<Result<Vec<_>, CalculusError>>()?;
        Ok(SurfaceQuadrature { n_s: grid.n_s, n_theta: grid.n_theta, nodes })
    }

    pub fn on_grid(surface: &CircularSurface, n_s: usize, n_theta: usize, order: usize) -> Result<Self, CalculusError> {
        Self::new(surface, &surface.sample_grid(n_s, n_theta), order)
    }

    /// Same nodes with the orientation of the θ₁ direction reversed.
    pub fn with_reversed_theta1(&self) -> Self {
        let mut out = self.clone();
        for n in &mut out.nodes {
            n.tangents[1] = [-n.tangents[1][0], -n.tangents[1][1]];
            n.nu = -n.nu;
        }
        out
    }

    /// `∫_S F·ν` for a pointwise integrand `F`.
    pub fn integrate_nu<F>(&self, f: F) -> Result<Complex64, CalculusError>
    where
        F: Fn(&Node) -> Result<Complex64, CalculusError> + Sync,
    {
        let terms = self.nodes.par_iter().map(|n| Ok(f(n)? * n.nu * n.weight)).collect::<Result<Vec<_>, CalculusError>>()?;
        Ok(terms.into_iter().sum())
    }

    /// `∫_S F dμ` for one of the measures in [`Weight`].
    pub fn integrate_measure<F>(&self, weight: Weight, f: F) -> Result<Complex64, CalculusError>
    where
        F: Fn(&Node) -> Result<Complex64, CalculusError> + Sync,
    {
        let terms = self
            .nodes
            .par_iter()
            .map(|n| Ok(f(n)? * density(n, weight) * n.weight))
            .collect::<Result<Vec<_>, CalculusError>>()?;
        Ok(terms.into_iter().sum())
    }

    /// `⟨⟨μ, η⟩⟩ = ∫_S μη ν`.
    pub fn pairing(&self, mu: &Expr, eta: &Expr) -> Result<Complex64, CalculusError> {
        self.integrate_nu(|n| Ok(value(mu, n)? * value(eta, n)?))
    }

    /// `⟨⟨Tγ, η⟩⟩ + ⟨⟨γ, Tη⟩⟩`.
    pub fn parts_residual(&self, gamma: &Expr, eta: &Expr) -> Result<Complex64, CalculusError> {
        self.integrate_nu(|n| {
            let (g, e) = (jet(gamma, n)?, jet(eta, n)?);
            let tg = n.frame.t.apply(&g)?.value();
            let te = n.frame.t.apply(&e)?.value();
            Ok(tg * e.value() + g.value() * te)
        })
    }

    /// `∫(Xγ)η w + ∫γ(Xη) w` for the measure `w`.
    pub fn parts_plh_residual(&self, gamma: &Expr, eta: &Expr, weight: Weight) -> Result<Complex64, CalculusError> {
        self.integrate_measure(weight, |n| {
            let (g, e) = (jet(gamma, n)?, jet(eta, n)?);
            let xg = n.frame.x.apply(&g)?.value();
            let xe = n.frame.x.apply(&e)?.value();
            Ok(xg * e.value() + g.value() * xe)
        })
    }

    pub fn weighted_integral(&self, expr: &Expr, weight: Weight) -> Result<Complex64, CalculusError> {
        self.integrate_measure(weight, |n| value(expr, n))
    }

    /// Largest `|div Y|` and `|div Ȳ|` over the nodes.
    pub fn max_divergence(&self) -> Result<(f64, f64), CalculusError> {
        let mut out = (0.0f64, 0.0f64);
        for n in &self.nodes {
            let (d, db) = n.frame.divergences()?;
            out.0 = out.0.max(d.norm());
            out.1 = out.1.max(db.norm());
        }
        Ok(out)
    }
}

fn density(n: &Node, weight: Weight) -> f64 {
    let alpha = n.frame.scalars.alpha.value().re;
    let w = n.frame.dual_point();
    let grad = 2.0 * (w[0].norm_sqr() + w[1].norm_sqr()).sqrt();
    match weight {
        Weight::DS => n.gram,
        Weight::DSOverAlpha => n.gram / alpha,
        Weight::DSOverAlpha2 => n.gram / (alpha * alpha),
        Weight::DSigma => n.gram / grad,
        Weight::DSigmaOverAlpha => n.gram / (grad * alpha),
        Weight::DSigmaOverAlpha2 => n.gram / (grad * alpha * alpha),
    }
}

fn jet(e: &Expr, n: &Node) -> Result<Jet, CalculusError> {
    eval_at(e, &n.frame, 0.0).map_err(|err| CalculusError::eval(n.point.z, err))
}

fn value(e: &Expr, n: &Node) -> Result<Complex64, CalculusError> {
    Ok(e.eval_value(n.point.z, n.frame.dual_point()))
}

/// Self-convergence of a sequence of quadrature values on refined grids:
/// ratios `|I_{k+1} − I_k| / |I_k − I_{k−1}|`.
pub fn convergence_ratios(values: &[Complex64]) -> Vec<f64> {
    values
        .windows(3)
        .map(|w| {
            let d1 = (w[1] - w[0]).norm();
            let d2 = (w[2] - w[1]).norm();
            d2 / d1.max(f64::MIN_POSITIVE)
        })
        .collect()
}

/// Wraps an angle difference into `(−π, π]`.
pub fn wrap_angle(d: f64) -> f64 {
    let mut x = d % (2.0 * PI);
    if x <= -PI {
        x += 2.0 * PI;
    } else if x > PI {
        x -= 2.0 * PI;
    }
    x
}

/// A node of a path on S: point, velocity `dz/dt` and quadrature weight.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PathNode {
    pub z: Point,
    pub params: [f64; 3],
    pub velocity: Point,
    pub weight: f64,
}

/// Piecewise straight path in parameter space, mapped to S.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SurfacePath {
    pub vertices: Vec<[f64; 3]>,
    pub nodes: Vec<PathNode>,
}

/// Parameter-space length per Gauss panel.
const PANEL: f64 = 0.35;

impl SurfacePath {
    /// Straight lines between consecutive vertices (θ steps taken the short way).
    pub fn through(surface: &CircularSurface, vertices: &[[f64; 3]], nodes_per_panel: usize) -> Result<Self, CalculusError> {
        let mut verts = vec![vertices[0]];
        let mut nodes = Vec::new();
        for pair in vertices.windows(2) {
            let a = *verts.last().expect("non-empty");
            let d = [pair[1][0] - a[0], wrap_angle(pair[1][1] - a[1]), wrap_angle(pair[1][2] - a[2])];
            let b = [a[0] + d[0], a[1] + d[1], a[2] + d[2]];
            let len = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
            let panels = ((len / PANEL).ceil() as usize).max(1);
            for k in 0..panels {
                let t0 = k as f64 / panels as f64;
                let t1 = (k + 1) as f64 / panels as f64;
                for (t, w) in gauss_legendre(nodes_per_panel, t0, t1) {
                    let p = [a[0] + t * d[0], a[1] + t * d[1], a[2] + t * d[2]];
                    let (z, tang) = surface.param_frame(p)?;
                    let mut vel = [Complex64::new(0.0, 0.0); 2];
                    for (q, dq) in d.iter().enumerate() {
                        vel[0] += tang[q][0] * *dq;
                        vel[1] += tang[q][1] * *dq;
                    }
                    nodes.push(PathNode { z, params: p, velocity: vel, weight: w });
                }
            }
            verts.push(b);
        }
        Ok(SurfacePath { vertices: verts, nodes })
    }

    /// Straight line in parameter space.
    pub fn straight(surface: &CircularSurface, from: [f64; 3], to: [f64; 3], nodes_per_panel: usize) -> Result<Self, CalculusError> {
        Self::through(surface, &[from, to], nodes_per_panel)
    }

    /// First `s`, then `θ₁`, then `θ₂`.
    pub fn l_shaped(surface: &CircularSurface, from: [f64; 3], to: [f64; 3], nodes_per_panel: usize) -> Result<Self, CalculusError> {
        let v1 = [to[0], from[1], from[2]];
        let v2 = [to[0], to[1], from[2]];
        Self::through(surface, &[from, v1, v2, to], nodes_per_panel)
    }

    /// Closed loop through the given vertices back to the first.
    pub fn closed(surface: &CircularSurface, vertices: &[[f64; 3]], nodes_per_panel: usize) -> Result<Self, CalculusError> {
        let mut v = vertices.to_vec();
        v.push(vertices[0]);
        Self::through(surface, &v, nodes_per_panel)
    }
}

/// Pointwise `(f₁, f₂)` at a point of S.
pub trait CoefficientOracle: Sync {
    fn coefficients(&self, z: Point) -> Result<(Complex64, Complex64), CalculusError>;
}

impl<F> CoefficientOracle for F
where
    F: Fn(Point) -> Result<(Complex64, Complex64), CalculusError> + Sync,
{
    fn coefficients(&self, z: Point) -> Result<(Complex64, Complex64), CalculusError> {
        self(z)
    }
}

/// `∫_path f₂ dz₁ − f₁ dz₂`.
pub fn path_integral_1form(oracle: &dyn CoefficientOracle, path: &SurfacePath) -> Result<Complex64, CalculusError> {
    let terms = path
        .nodes
        .par_iter()
        .map(|n| {
            let (f1, f2) = oracle.coefficients(n.z)?;
            Ok((f2 * n.velocity[0] - f1 * n.velocity[1]) * n.weight)
        })
        .collect::<Result<Vec<_>, CalculusError>>()?;
    Ok(terms.into_iter().sum())
}

/// Settings for [`primitive`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PrimitiveOptions {
    pub nodes_per_panel: usize,
    /// Quadrature tolerance; path dependence beyond 10× this is an error.
    pub tol: f64,
    pub check_paths: bool,
}

impl Default for PrimitiveOptions {
    fn default() -> Self {
        PrimitiveOptions { nodes_per_panel: 16, tol: 1e-9, check_paths: true }
    }
}

/// Values `f(z) = ∫_{basepoint→z} ω`, `ω = f₂dz₁ − f₁dz₂`, at the targets,
/// plus the largest disagreement between the straight and the L-shaped path.
pub fn primitive(
    oracle: &dyn CoefficientOracle,
    surface: &CircularSurface,
    basepoint: [f64; 3],
    targets: &[[f64; 3]],
    opts: &PrimitiveOptions,
) -> Result<(Vec<Complex64>, f64), CalculusError> {
    let results = targets
        .par_iter()
        .map(|&t| {
            let a = path_integral_1form(oracle, &SurfacePath::straight(surface, basepoint, t, opts.nodes_per_panel)?)?;
            let dep = if opts.check_paths {
                let b = path_integral_1form(oracle, &SurfacePath::l_shaped(surface, basepoint, t, opts.nodes_per_panel)?)?;
                (a - b).norm()
            } else {
                0.0
            };
            Ok((a, dep))
        })
        .collect::<Result<Vec<_>, CalculusError>>()?;
    let dep = results.iter().map(|r| r.1).fold(0.0, f64::max);
    if dep > 10.0 * opts.tol {
        return Err(CalculusError::PathDependence(dep));
    }
    Ok((results.into_iter().map(|r| r.0).collect(), dep))
}

/// Expresses a tangent vector (Wirtinger components) in the parametric
/// tangent basis: `v = Σ_p c_p ∂_p z` (least squares, complex coefficients).
pub fn tangent_coordinates(v: [Complex64; 4], tangents: &[Point; 3]) -> [Complex64; 3] {
    // v = a + i b with a, b real tangent vectors; solve each in R⁴.
    let basis = Matrix3x4::from_fn(|p, k| real4(tangents[p])[k]);
    let bt = basis.transpose();
    let normal = basis * bt;
    let inv = normal.try_inverse().expect("parametric tangents are independent");
    // real vector with Wirtinger components (v₁, v₂, v̄₁, v̄₂) for a real field
    let solve = |comp: Vector4<f64>| -> Vector3<f64> { inv * (basis * comp) };
    // the real and imaginary parts of the complex field v, as real vectors:
    // Re-part has (1,0) components (v₁ + conj(v₃))/2, Im-part (v₁ − conj(v₃))/(2i).
    let re_part = [(v[0] + v[2].conj()) * 0.5, (v[1] + v[3].conj()) * 0.5];
    let im_part = [(v[0] - v[2].conj()) * Complex64::new(0.0, -0.5), (v[1] - v[3].conj()) * Complex64::new(0.0, -0.5)];
    let a = solve(real4(re_part));
    let b = solve(real4(im_part));
    [Complex64::new(a[0], b[0]), Complex64::new(a[1], b[1]), Complex64::new(a[2], b[2])]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::parse;

    fn e(s: &str) -> Expr {
        parse(s).unwrap()
    }

    fn ellipsoid() -> CircularSurface {
        CircularSurface::from_spec("hermitian:[[1,0],[0,2]]").unwrap()
    }

    #[test]
    fn sphere_volume() {
        let s = CircularSurface::sphere();
        let q = SurfaceQuadrature::on_grid(&s, 12, 12, 2).unwrap();
        let v = q.weighted_integral(&e("1"), Weight::DS).unwrap();
        assert!((v.re - 2.0 * PI * PI).abs() < 1e-10, "{v}");
        assert!(v.im.abs() < 1e-14);
        let va = q.weighted_integral(&e("1"), Weight::DSOverAlpha).unwrap();
        assert!((va - v).norm() < 1e-12);
    }

    #[test]
    fn ellipsoid_volume_matches_linear_change_of_variables() {
        // z = A ζ with A = diag(1, 1/√2) maps the unit sphere onto the ellipsoid;
        // its surface area has no closed form, so compare two grids.
        let s = ellipsoid();
        let a = SurfaceQuadrature::on_grid(&s, 16, 16, 2).unwrap().weighted_integral(&e("1"), Weight::DS).unwrap();
        let b = SurfaceQuadrature::on_grid(&s, 24, 24, 2).unwrap().weighted_integral(&e("1"), Weight::DS).unwrap();
        assert!((a - b).norm() < 1e-9);
        assert!(a.re < 2.0 * PI * PI && a.re > 2.0 * PI * PI / 2.0);
    }

    #[test]
    fn pairing_of_constants_converges() {
        let s = CircularSurface::sphere();
        let one = e("1");
        let a = SurfaceQuadrature::on_grid(&s, 16, 16, 2).unwrap().pairing(&one, &one).unwrap();
        let b = SurfaceQuadrature::on_grid(&s, 32, 32, 2).unwrap().pairing(&one, &one).unwrap();
        assert!(a.norm() > 1.0);
        assert!((a - b).norm() < 1e-6 * a.norm());
    }

    #[test]
    fn orientation_reversal_negates_pairing() {
        let s = ellipsoid();
        let q = SurfaceQuadrature::on_grid(&s, 8, 8, 2).unwrap();
        let (mu, eta) = (e("1 + z1*z2"), e("w1^2 + 2"));
        let a = q.pairing(&mu, &eta).unwrap();
        let b = q.with_reversed_theta1().pairing(&mu, &eta).unwrap();
        assert!((a + b).norm() < 1e-13 * a.norm().max(1.0));
    }

    #[test]
    fn spec_orthogonality_example() {
        let s = ellipsoid();
        let q = SurfaceQuadrature::on_grid(&s, 24, 24, 2).unwrap();
        assert!(q.pairing(&e("z1*z2"), &e("w1^2")).unwrap().norm() < 1e-8);
    }

    #[test]
    fn parts_identity() {
        for spec in ["hermitian:[[1,0],[0,2]]", "perturbed:[[1,0],[0,1.5]];0.4"] {
            let s = CircularSurface::from_spec(spec).unwrap();
            let q = SurfaceQuadrature::on_grid(&s, 20, 20, 2).unwrap();
            for (g, h) in [("z1", "w2"), ("1", "1"), ("z1*w1", "z2"), ("conj(z1)*z2^2", "w1 + conj(w2)")] {
                let r = q.parts_residual(&e(g), &e(h)).unwrap();
                assert!(r.norm() < 1e-8, "{spec}: {g}, {h}: {r}");
            }
        }
    }

    #[test]
    fn parts_plh_identity_with_coarea_measure() {
        let s = ellipsoid();
        let q = SurfaceQuadrature::on_grid(&s, 24, 24, 2).unwrap();
        let r = q.parts_plh_residual(&e("z1"), &e("conj(z2)"), Weight::DSOverAlpha).unwrap();
        assert!(r.norm() < 1e-7);
        let r = q.parts_plh_residual(&e("conj(z1)"), &e("conj(z2)"), Weight::DSigmaOverAlpha).unwrap();
        assert!(r.norm() < 1e-10);
        // the Euclidean measure does not make this pair vanish
        let r = q.parts_plh_residual(&e("conj(z1)"), &e("conj(z2)"), Weight::DSOverAlpha).unwrap();
        assert!(r.norm() > 1e-3);
    }

    #[test]
    fn divergence_free_dual_frame() {
        let s = CircularSurface::from_spec("perturbed:[[1,0],[0,1.5]];0.4").unwrap();
        let q = SurfaceQuadrature::on_grid(&s, 6, 6, 3).unwrap();
        let (d, db) = q.max_divergence().unwrap();
        assert!(d < 1e-12 && db < 1e-12);
    }

    #[test]
    fn exact_form_on_closed_loop() {
        let s = ellipsoid();
        // f = z1^2 z2: ω = f₂dz₁ − f₁dz₂ = df with f₂ = ∂f/∂z₁, f₁ = −∂f/∂z₂
        let oracle = |z: Point| Ok((-(z[0] * z[0]), 2.0 * z[0] * z[1]));
        let path = SurfacePath::closed(&s, &[[0.3, 0.1, 2.0], [1.2, -2.5, 0.4], [0.7, 3.0, -1.0]], 16).unwrap();
        assert!(path_integral_1form(&oracle, &path).unwrap().norm() < 1e-10);
        let zero = |_: Point| Ok((Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)));
        assert_eq!(path_integral_1form(&zero, &path).unwrap(), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn primitive_of_dz1() {
        let s = ellipsoid();
        let oracle = |_: Point| Ok((Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)));
        let base = [0.4, 0.2, 1.0];
        let targets = [[1.1, 2.9, -0.3], [0.2, -1.0, 2.5]];
        let (vals, dep) = primitive(&oracle, &s, base, &targets, &PrimitiveOptions::default()).unwrap();
        assert!(dep < 1e-12);
        let zb = s.param_point(base);
        for (t, v) in targets.iter().zip(vals) {
            let z = s.param_point(*t);
            assert!((v - (z[0] - zb[0])).norm() < 1e-12);
        }
    }

    #[test]
    fn non_closed_form_is_path_dependent() {
        let s = ellipsoid();
        let oracle = |z: Point| Ok((Complex64::new(0.0, 0.0), z[0].conj()));
        let err = primitive(&oracle, &s, [0.4, 0.2, 1.0], &[[1.1, 2.0, -0.3]], &PrimitiveOptions::default()).unwrap_err();
        assert!(matches!(err, CalculusError::PathDependence(_)));
    }

    #[test]
    fn tangent_coordinates_reproduce_fields() {
        let s = CircularSurface::from_spec("perturbed:[[1,0],[0,1.5]];0.4").unwrap();
        let p = [0.6, 1.0, -2.0];
        let (z, t) = s.param_frame(p).unwrap();
        let f = FramePoint::compute(&s, z, &FrameOptions::default()).unwrap();
        for field in [&f.x, &f.t, &f.r, &f.ybar] {
            let v = field.values();
            let c = tangent_coordinates(v, &t);
            for j in 0..2 {
                let rebuilt: Complex64 = (0..3).map(|p| c[p] * t[p][j]).sum();
                let rebuilt_bar: Complex64 = (0..3).map(|p| c[p] * t[p][j].conj()).sum();
                assert!((rebuilt - v[j]).norm() < 1e-12);
                assert!((rebuilt_bar - v[j + 2]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn angle_wrapping() {
        assert!((wrap_angle(3.5 * PI) + 0.5 * PI).abs() < 1e-12);
        assert!((wrap_angle(-1.5 * PI) - 0.5 * PI).abs() < 1e-12);
        assert_eq!(wrap_angle(PI), PI);
    }
}

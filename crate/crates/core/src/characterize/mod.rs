//! Membership tests, decompositions and the constructive pieces built on the
//! third-order operators.

pub mod corpus;
pub mod nirenberg;

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::calculus::{self, CalculusError, PrimitiveOptions, SurfacePath};
use crate::dualframe::{Field, FieldName, FrameError, FrameOptions, FramePoint};
use crate::jets::{Jet, JetError};
use crate::operators::{eval_at, EvalError, Expr, OperatorWord};
use crate::surfaces::{CircularSurface, Point, SurfacePoint};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CharacterizeError {
    #[error(transparent)]
    Frame(#[from] FrameError),
    #[error(transparent)]
    Jet(#[from] JetError),
    #[error(transparent)]
    Calculus(#[from] CalculusError),
    #[error("at z = ({z1}, {z2}): {source}")]
    Eval { z1: Complex64, z2: Complex64, source: EvalError },
    #[error("function is not in the kernel of XX: residual {residual:e}")]
    NotInKernel { residual: f64 },
    #[error("not decomposable: {test} fails with residual {residual:e}")]
    NotDecomposable { test: String, residual: f64 },
    #[error("classical operators are defined on the unit sphere only")]
    NotSphere,
    #[error("rescaling factor vanishes at z = ({z1}, {z2})")]
    VanishingScale { z1: Complex64, z2: Complex64 },
    #[error("unknown membership test `{0}`")]
    UnknownTest(String),
    #[error("no admissible sample points")]
    NoAdmissiblePoints,
}

impl CharacterizeError {
    fn eval(z: Point, source: EvalError) -> Self {
        CharacterizeError::Eval { z1: z[0], z2: z[1], source }
    }
}

/// Which theorem form a sum or pluriharmonic test uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Compact S: the first operator alone.
    Global,
    /// Simply connected pieces: both operators.
    Local,
}

impl FromStr for Mode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "global" | "iv" => Ok(Mode::Global),
            "local" | "v" => Ok(Mode::Local),
            other => Err(format!("unknown mode `{other}` (expected global or local)")),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Global => "global",
            Mode::Local => "local",
        })
    }
}

/// Which complement of the CR part a decomposition targets.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    /// `u = f + g`, g dual-CR.
    Dual,
    /// `u = f + g`, g conjugate-CR (pluriharmonic boundary values).
    Conjugate,
}

impl FromStr for Side {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "dual" => Ok(Side::Dual),
            "conjugate" | "conj" | "plh" => Ok(Side::Conjugate),
            other => Err(format!("unknown side `{other}` (expected dual or conjugate)")),
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::Dual => "dual",
            Side::Conjugate => "conjugate",
        })
    }
}

/// Frames at a fixed set of surface points.
#[derive(Clone, Debug)]
pub struct FrameSet {
    pub points: Vec<SurfacePoint>,
    pub frames: Vec<FramePoint>,
    pub is_sphere: bool,
}

impl FrameSet {
    pub fn new(surface: &CircularSurface, points: &[SurfacePoint], opts: &FrameOptions) -> Result<Self, CharacterizeError> {
        let frames = points.par_iter().map(|p| FramePoint::compute(surface, p.z, opts)).collect::<Result<Vec<_>, _>>()?;
        Ok(FrameSet { points: points.to_vec(), frames, is_sphere: surface.is_unit_sphere() })
    }

    pub fn random(surface: &CircularSurface, n: usize, seed: u64, opts: &FrameOptions) -> Result<Self, CharacterizeError> {
        Self::new(surface, &surface.random_points(n, seed), opts)
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }
}

/// A decision procedure: per point, the values that must vanish.
pub trait MembershipTest: Send + Sync {
    fn name(&self) -> &str;
    /// Human-readable names of the operators applied.
    fn words(&self) -> Vec<String>;
    fn sphere_only(&self) -> bool {
        false
    }
    fn residuals(&self, frame: &FramePoint, u: &Jet) -> Result<Vec<Complex64>, JetError>;
}

/// Vanishing of a list of frame words.
#[derive(Clone, Debug)]
pub struct WordTest {
    name: String,
    words: Vec<OperatorWord>,
}

impl WordTest {
    pub fn new(name: &str, words: &[&str]) -> Self {
        let words = words.iter().map(|w| w.parse().expect("builtin word")).collect();
        WordTest { name: name.to_string(), words }
    }
}

impl MembershipTest for WordTest {
    fn name(&self) -> &str {
        &self.name
    }
    fn words(&self) -> Vec<String> {
        self.words.iter().map(|w| w.to_string()).collect()
    }
    fn residuals(&self, frame: &FramePoint, u: &Jet) -> Result<Vec<Complex64>, JetError> {
        self.words.iter().map(|w| Ok(w.apply(frame, u)?.value())).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ClassicalKind {
    /// `L̄_kl L̄_kl L_kl u = 0`.
    Bedford,
    /// `L_jk L_lm L̄_rs u = 0` for all index tuples.
    Audibert,
}

/// Third-order tests built from `L_kl = z_k ∂/∂z̄_l − z_l ∂/∂z̄_k`.
#[derive(Clone, Debug)]
pub struct ClassicalTest(pub ClassicalKind);

impl MembershipTest for ClassicalTest {
    fn name(&self) -> &str {
        match self.0 {
            ClassicalKind::Bedford => "bedford",
            ClassicalKind::Audibert => "audibert",
        }
    }
    fn words(&self) -> Vec<String> {
        vec![match self.0 {
            ClassicalKind::Bedford => "bar(L_kl).bar(L_kl).L_kl".into(),
            ClassicalKind::Audibert => "L_jk.L_lm.bar(L_rs)".into(),
        }]
    }
    fn sphere_only(&self) -> bool {
        true
    }
    fn residuals(&self, frame: &FramePoint, u: &Jet) -> Result<Vec<Complex64>, JetError> {
        let pairs = [(0usize, 1usize), (1, 0)];
        let mut out = Vec::new();
        match self.0 {
            ClassicalKind::Bedford => {
                for &(k, l) in &pairs {
                    let lf = classical_field(&frame.coords, k, l);
                    let lb = lf.conj();
                    out.push(lb.apply(&lb.apply(&lf.apply(u)?)?)?.value());
                }
            }
            ClassicalKind::Audibert => {
                for &(j, k) in &pairs {
                    for &(l, m) in &pairs {
                        for &(r, s) in &pairs {
                            let a = classical_field(&frame.coords, j, k);
                            let b = classical_field(&frame.coords, l, m);
                            let c = classical_field(&frame.coords, r, s).conj();
                            out.push(a.apply(&b.apply(&c.apply(u)?)?)?.value());
                        }
                    }
                }
            }
        }
        Ok(out)
    }
}

/// `L_kl` in the basis `(∂z₁, ∂z₂, ∂z̄₁, ∂z̄₂)`.
pub fn classical_field(coords: &[Jet; 4], k: usize, l: usize) -> Field {
    let order = coords[0].order();
    let mut c = [Jet::zero(order), Jet::zero(order), Jet::zero(order), Jet::zero(order)];
    if k != l {
        c[2 + l] = coords[k].clone();
        c[2 + k] = -&coords[l];
    }
    Field::new(c)
}

/// Name-indexed membership tests.
pub struct MembershipRegistry {
    tests: Vec<Box<dyn MembershipTest>>,
}

impl MembershipRegistry {
    pub fn empty() -> Self {
        MembershipRegistry { tests: Vec::new() }
    }

    pub fn builtin() -> Self {
        let mut r = Self::empty();
        r.register(Box::new(WordTest::new("cr", &["X"])));
        r.register(Box::new(WordTest::new("dual-cr", &["T"])));
        r.register(Box::new(WordTest::new("conj-cr", &["bar(X)"])));
        r.register(Box::new(WordTest::new("sum-global", &["X.X.T"])));
        r.register(Box::new(WordTest::new("sum-local", &["X.X.T", "T.T.X"])));
        r.register(Box::new(WordTest::new("plh-global", &["X.X.Y"])));
        r.register(Box::new(WordTest::new("plh-local", &["X.X.Y", "bar(X).bar(X).bar(Y)"])));
        r.register(Box::new(ClassicalTest(ClassicalKind::Bedford)));
        r.register(Box::new(ClassicalTest(ClassicalKind::Audibert)));
        r
    }

    pub fn register(&mut self, test: Box<dyn MembershipTest>) {
        self.tests.retain(|t| t.name() != test.name());
        self.tests.push(test);
    }

    pub fn names(&self) -> Vec<&str> {
        self.tests.iter().map(|t| t.name()).collect()
    }

    pub fn get(&self, name: &str) -> Result<&dyn MembershipTest, CharacterizeError> {
        self.tests.iter().find(|t| t.name() == name).map(|t| t.as_ref()).ok_or_else(|| CharacterizeError::UnknownTest(name.to_string()))
    }
}

/// Registry name of the sum test for a mode.
pub fn sum_test_name(mode: Mode) -> &'static str {
    match mode {
        Mode::Global => "sum-global",
        Mode::Local => "sum-local",
    }
}

pub fn plh_test_name(mode: Mode) -> &'static str {
    match mode {
        Mode::Global => "plh-global",
        Mode::Local => "plh-local",
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MembershipReport {
    pub test: String,
    pub words: Vec<String>,
    /// Largest residual over the words, per admissible point.
    pub residuals: Vec<f64>,
    /// Largest residual per word.
    pub word_max: Vec<f64>,
    pub max_residual: f64,
    pub mean_residual: f64,
    pub excluded_points: usize,
    /// `max |u|` over the admissible points.
    pub norm: f64,
    pub tolerance: f64,
    pub verdict: bool,
}

/// Runs a membership test. Points where a denominator of `u` is below
/// `guard` are excluded and counted.
pub fn membership(test: &dyn MembershipTest, u: &Expr, frames: &FrameSet, guard: f64, tol: f64) -> Result<MembershipReport, CharacterizeError> {
    if test.sphere_only() && !frames.is_sphere {
        return Err(CharacterizeError::NotSphere);
    }
    let per_point = frames
        .frames
        .par_iter()
        .map(|f| match eval_at(u, f, guard) {
            Ok(jet) => Ok(Some((jet.value().norm(), test.residuals(f, &jet)?))),
            Err(EvalError::NearZeroDenominator { .. }) => Ok(None),
            Err(e) => Err(CharacterizeError::eval(f.z, e)),
        })
        .collect::<Result<Vec<_>, CharacterizeError>>()?;
    let words = test.words();
    let n_words = per_point.iter().flatten().map(|(_, r)| r.len()).next().unwrap_or(words.len());
    let mut word_max = vec![0.0f64; n_words];
    let mut residuals = Vec::new();
    let mut norm = 0.0f64;
    let mut excluded = 0;
    for p in per_point {
        match p {
            None => excluded += 1,
            Some((value, r)) => {
                norm = norm.max(value);
                let mut m = 0.0f64;
                for (k, v) in r.iter().enumerate() {
                    word_max[k] = word_max[k].max(v.norm());
                    m = m.max(v.norm());
                }
                residuals.push(m);
            }
        }
    }
    if residuals.is_empty() {
        return Err(CharacterizeError::NoAdmissiblePoints);
    }
    let max_residual = residuals.iter().cloned().fold(0.0, f64::max);
    let mean_residual = residuals.iter().sum::<f64>() / residuals.len() as f64;
    Ok(MembershipReport {
        test: test.name().to_string(),
        words,
        residuals,
        word_max,
        max_residual,
        mean_residual,
        excluded_points: excluded,
        norm,
        tolerance: tol,
        verdict: max_residual <= tol,
    })
}

fn run_builtin(name: &str, u: &Expr, frames: &FrameSet, guard: f64, tol: f64) -> Result<MembershipReport, CharacterizeError> {
    let reg = MembershipRegistry::builtin();
    membership(reg.get(name)?, u, frames, guard, tol)
}

pub fn is_cr(u: &Expr, frames: &FrameSet, guard: f64, tol: f64) -> Result<MembershipReport, CharacterizeError> {
    run_builtin("cr", u, frames, guard, tol)
}

pub fn is_dual_cr(u: &Expr, frames: &FrameSet, guard: f64, tol: f64) -> Result<MembershipReport, CharacterizeError> {
    run_builtin("dual-cr", u, frames, guard, tol)
}

pub fn is_conj_cr(u: &Expr, frames: &FrameSet, guard: f64, tol: f64) -> Result<MembershipReport, CharacterizeError> {
    run_builtin("conj-cr", u, frames, guard, tol)
}

pub fn is_sum_cr_dualcr(u: &Expr, frames: &FrameSet, mode: Mode, guard: f64, tol: f64) -> Result<MembershipReport, CharacterizeError> {
    run_builtin(sum_test_name(mode), u, frames, guard, tol)
}

pub fn is_plh_boundary(u: &Expr, frames: &FrameSet, mode: Mode, guard: f64, tol: f64) -> Result<MembershipReport, CharacterizeError> {
    run_builtin(plh_test_name(mode), u, frames, guard, tol)
}

/// `f₁ = z₁h + w₂Xh`, `f₂ = z₂h − w₁Xh` for `h` with `XXh = 0`.
pub fn kernel_coefficients(h: &Jet, frame: &FramePoint, tol: f64) -> Result<(Jet, Jet), CharacterizeError> {
    let xh = frame.x.apply(h)?;
    let residual = frame.x.apply(&xh)?.value().norm();
    if residual > tol {
        return Err(CharacterizeError::NotInKernel { residual });
    }
    Ok(kernel_coefficients_unchecked(h, &xh, frame))
}

fn kernel_coefficients_unchecked(h: &Jet, xh: &Jet, frame: &FramePoint) -> (Jet, Jet) {
    let [z1, z2, ..] = &frame.coords;
    let [w1, w2, ..] = &frame.w;
    let f1 = &(z1 * h) + &(w2 * xh);
    let f2 = &(z2 * h) - &(w1 * xh);
    (f1, f2)
}

/// Ambient `∂F/∂z₁`, `∂F/∂z₂` of a CR function from tangential fields:
/// `∂/∂z₁ = z₂Y − iw₁R`, `∂/∂z₂ = −(z₁Y + iw₂R)`.
pub fn ambient_derivatives(f: &Jet, frame: &FramePoint) -> Result<(Jet, Jet), JetError> {
    let i = Complex64::i();
    let [z1, z2, ..] = &frame.coords;
    let [w1, w2, ..] = &frame.w;
    let yf = frame.y.apply(f)?;
    let rf = frame.r.apply(f)?;
    let d1 = &(z2 * &yf) - &(&(w1 * &rf) * i);
    let d2 = -(&(&(z1 * &yf) + &(&(w2 * &rf) * i)));
    Ok((d1, d2))
}

/// Kernel coefficients of the first-order datum `h = Tu` (dual) or `h = Yu`
/// (conjugate) at one frame point.
fn side_coefficients(u: &Jet, frame: &FramePoint, side: Side) -> Result<(Jet, Jet), JetError> {
    let h = match side {
        Side::Dual => frame.t.apply(u)?,
        Side::Conjugate => frame.y.apply(u)?,
    };
    let xh = frame.x.apply(&h)?;
    Ok(kernel_coefficients_unchecked(&h, &xh, frame))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SecondOperatorReport {
    pub side: Side,
    pub expression: String,
    /// `TTXu`, resp. `α⁻¹ conj(XXY) u`, from the word.
    pub direct: Vec<Complex64>,
    /// `∂f₁/∂z₁ + ∂f₂/∂z₂` from the kernel coefficients.
    pub via_kernel: Vec<Complex64>,
    pub max_discrepancy: f64,
    /// `max |XXTu|`, resp. `max |XXYu|`: the precondition.
    pub first_residual: f64,
    /// `max |X(direct)|`.
    pub cr_residual: f64,
    pub excluded_points: usize,
}

/// Evaluates the second operator directly and through the kernel coefficients.
pub fn second_operator_value(u: &Expr, frames: &FrameSet, side: Side, guard: f64) -> Result<SecondOperatorReport, CharacterizeError> {
    let first_word: OperatorWord = match side {
        Side::Dual => "X.X.T",
        Side::Conjugate => "X.X.Y",
    }
    .parse()
    .expect("builtin word");
    let direct_word: OperatorWord = match side {
        Side::Dual => "T.T.X",
        Side::Conjugate => "bar(X).bar(X).bar(Y)",
    }
    .parse()
    .expect("builtin word");
    let per_point = frames
        .frames
        .par_iter()
        .map(|f| {
            let uj = match eval_at(u, f, guard) {
                Ok(j) => j,
                Err(EvalError::NearZeroDenominator { .. }) => return Ok(None),
                Err(e) => return Err(CharacterizeError::eval(f.z, e)),
            };
            let mut direct = direct_word.apply(f, &uj)?;
            if side == Side::Conjugate {
                direct = direct.div(&f.scalars.alpha, 0.0)?;
            }
            let cr = f.x.apply(&direct)?.value().norm();
            let first = first_word.apply(f, &uj)?.value().norm();
            let (f1, f2) = side_coefficients(&uj, f, side)?;
            let (d11, _) = ambient_derivatives(&f1, f)?;
            let (_, d22) = ambient_derivatives(&f2, f)?;
            Ok(Some((direct.value(), (d11 + d22).value(), cr, first)))
        })
        .collect::<Result<Vec<_>, CharacterizeError>>()?;
    let mut out = SecondOperatorReport {
        side,
        expression: u.to_string(),
        direct: Vec::new(),
        via_kernel: Vec::new(),
        max_discrepancy: 0.0,
        first_residual: 0.0,
        cr_residual: 0.0,
        excluded_points: 0,
    };
    for p in per_point {
        match p {
            None => out.excluded_points += 1,
            Some((d, k, cr, first)) => {
                out.first_residual = out.first_residual.max(first);
                out.max_discrepancy = out.max_discrepancy.max((d - k).norm());
                out.cr_residual = out.cr_residual.max(cr);
                out.direct.push(d);
                out.via_kernel.push(k);
            }
        }
    }
    Ok(out)
}

/// Settings for [`decompose`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DecomposeOptions {
    pub guard: f64,
    /// Tolerance of the membership precondition.
    pub membership_tol: f64,
    pub primitive: PrimitiveOptions,
    /// Parameter step of the finite-difference residual stencil.
    pub fd_step: f64,
    /// Skip the stencil (residuals reported as NaN).
    pub skip_residuals: bool,
}

impl Default for DecomposeOptions {
    fn default() -> Self {
        DecomposeOptions { guard: 0.0, membership_tol: 1e-8, primitive: PrimitiveOptions::default(), fd_step: 2e-3, skip_residuals: false }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Decomposition {
    pub side: Side,
    pub basepoint: [f64; 3],
    pub targets: Vec<Point>,
    pub u: Vec<Complex64>,
    /// CR part.
    pub f: Vec<Complex64>,
    /// `u − f`.
    pub g: Vec<Complex64>,
    pub f1: Vec<Complex64>,
    pub f2: Vec<Complex64>,
    /// `max |Xf|` from finite differences of the sampled f.
    pub residual_xf: f64,
    /// `max |T g|` (dual) or `max |Y g|` (conjugate), same stencil.
    pub residual_g: f64,
    pub path_dependence: f64,
    pub convention: &'static str,
}

fn frame_at(surface: &CircularSurface, z: Point, order: usize) -> Result<FramePoint, CalculusError> {
    Ok(FramePoint::compute(surface, z, &FrameOptions::with_order(order))?)
}

/// Splits `u` into a CR part and a dual-CR (or conjugate-CR) part at the
/// target points, with `g(basepoint) = 0`.
pub fn decompose(
    u: &Expr,
    surface: &CircularSurface,
    targets: &[[f64; 3]],
    basepoint: [f64; 3],
    side: Side,
    opts: &DecomposeOptions,
) -> Result<Decomposition, CharacterizeError> {
    let target_points: Vec<SurfacePoint> = targets.iter().map(|&p| SurfacePoint::from_params(surface, p)).collect();
    let frames = FrameSet::new(surface, &target_points, &FrameOptions::default())?;
    let test = match side {
        Side::Dual => sum_test_name(Mode::Local),
        Side::Conjugate => plh_test_name(Mode::Local),
    };
    let report = run_builtin(test, u, &frames, opts.guard, opts.membership_tol)?;
    if !report.verdict || report.excluded_points > 0 {
        return Err(CharacterizeError::NotDecomposable { test: test.to_string(), residual: report.max_residual });
    }

    let guard = opts.guard;
    let oracle = |z: Point| -> Result<(Complex64, Complex64), CalculusError> {
        let f = frame_at(surface, z, 3)?;
        let uj = eval_at(u, &f, guard).map_err(|e| CalculusError::eval(z, e))?;
        let (f1, f2) = side_coefficients(&uj, &f, side)?;
        Ok((f1.value(), f2.value()))
    };
    let (integrals, dep) = calculus::primitive(&oracle, surface, basepoint, targets, &opts.primitive)?;
    let zb = surface.param_point(basepoint);
    let ub = u.eval_value(zb, frame_at(surface, zb, 2)?.dual_point());
    let f_vals: Vec<Complex64> = integrals.iter().map(|v| ub + v).collect();

    let h = opts.fd_step;
    let per_target = targets
        .par_iter()
        .zip(frames.frames.par_iter())
        .map(|(&p, frame)| {
            let uj = eval_at(u, frame, guard).map_err(|e| CalculusError::eval(frame.z, e))?;
            let (f1, f2) = side_coefficients(&uj, frame, side)?;
            if opts.skip_residuals {
                return Ok((uj.value(), f64::NAN, f64::NAN, f1.value(), f2.value()));
            }
            let (_, tangents) = surface.param_frame(p)?;
            let mut df = [Complex64::new(0.0, 0.0); 3];
            for (k, d) in df.iter_mut().enumerate() {
                let g = |t: f64| -> Result<Complex64, CalculusError> {
                    let mut q = p;
                    q[k] += t;
                    calculus::path_integral_1form(&oracle, &SurfacePath::straight(surface, p, q, 8)?)
                };
                *d = (8.0 * (g(h)? - g(-h)?) - (g(2.0 * h)? - g(-2.0 * h)?)) / (12.0 * h);
            }
            let along = |field: &Field| -> Complex64 {
                let c = calculus::tangent_coordinates(field.values(), &tangents);
                c[0] * df[0] + c[1] * df[1] + c[2] * df[2]
            };
            let side_field = match side {
                Side::Dual => &frame.t,
                Side::Conjugate => &frame.y,
            };
            let su = side_field.apply(&uj)?.value();
            Ok((uj.value(), along(&frame.x).norm(), (su - along(side_field)).norm(), f1.value(), f2.value()))
        })
        .collect::<Result<Vec<_>, CalculusError>>()?;

    let u_vals: Vec<Complex64> = per_target.iter().map(|r| r.0).collect();
    Ok(Decomposition {
        side,
        basepoint,
        targets: frames.points.iter().map(|p| p.z).collect(),
        g: u_vals.iter().zip(&f_vals).map(|(u, f)| u - f).collect(),
        u: u_vals,
        f: f_vals,
        f1: per_target.iter().map(|r| r.3).collect(),
        f2: per_target.iter().map(|r| r.4).collect(),
        residual_xf: per_target.iter().map(|r| r.1).reduce(f64::max).unwrap_or(0.0),
        residual_g: per_target.iter().map(|r| r.2).reduce(f64::max).unwrap_or(0.0),
        path_dependence: dep,
        convention: "g(basepoint) = 0",
    })
}

/// `max_k |a_k − b_k − (a_0 − b_0)|`: deviation from a constant offset.
pub fn constant_offset_spread(a: &[Complex64], b: &[Complex64]) -> f64 {
    let Some(first) = a.first().zip(b.first()).map(|(x, y)| x - y) else {
        return 0.0;
    };
    a.iter().zip(b).map(|(x, y)| (x - y - first).norm()).fold(0.0, f64::max)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClassicalReport {
    pub expression: String,
    pub bedford: MembershipReport,
    pub audibert: MembershipReport,
    pub plh_global: MembershipReport,
    pub plh_local: MembershipReport,
    /// Bedford agrees with the global test and Audibert with the local one.
    pub verdicts_agree: bool,
}

/// Classical third-order operators on the sphere, cross-checked against the
/// frame-based pluriharmonic tests.
pub fn sphere_classical_operators(u: &Expr, frames: &FrameSet, tol: f64) -> Result<ClassicalReport, CharacterizeError> {
    if !frames.is_sphere {
        return Err(CharacterizeError::NotSphere);
    }
    let bedford = run_builtin("bedford", u, frames, 0.0, tol)?;
    let audibert = run_builtin("audibert", u, frames, 0.0, tol)?;
    let plh_global = is_plh_boundary(u, frames, Mode::Global, 0.0, tol)?;
    let plh_local = is_plh_boundary(u, frames, Mode::Local, 0.0, tol)?;
    let verdicts_agree = bedford.verdict == plh_global.verdict && audibert.verdict == plh_local.verdict;
    Ok(ClassicalReport { expression: u.to_string(), bedford, audibert, plh_global, plh_local, verdicts_agree })
}

/// CR data `(f₁, f₂, f₃)` of a rescaling.
#[derive(Clone, Debug, PartialEq)]
pub struct Rescaling {
    pub f1: Expr,
    pub f2: Expr,
    pub f3: Expr,
}

/// `X̃ = f₃(f₁w₁ + f₂w₂)² X` and `T̃ = T/(f₁w₁ + f₂w₂)` at one frame point.
pub fn rescaled_fields(r: &Rescaling, frame: &FramePoint, eps: f64) -> Result<(Field, Field), CharacterizeError> {
    let ev = |e: &Expr| eval_at(e, frame, 0.0).map_err(|err| CharacterizeError::eval(frame.z, err));
    let (f1, f2, f3) = (ev(&r.f1)?, ev(&r.f2)?, ev(&r.f3)?);
    let s = &(&f1 * &frame.w[0]) + &(&f2 * &frame.w[1]);
    if s.value().norm() < eps || f3.value().norm() < eps {
        return Err(CharacterizeError::VanishingScale { z1: frame.z[0], z2: frame.z[1] });
    }
    let xs = frame.x.scaled(&(&f3 * &(&s * &s)));
    let ts = frame.t.scaled(&s.recip(0.0)?);
    Ok((xs, ts))
}

/// `max |X̃X̃T̃u|` over the frames; points where the rescaling nearly vanishes
/// (below `eps`) are excluded and counted.
pub fn rescaled_annihilation(r: &Rescaling, u: &Expr, frames: &FrameSet, eps: f64) -> Result<(f64, usize), CharacterizeError> {
    let per = frames
        .frames
        .par_iter()
        .map(|f| {
            let (xs, ts) = match rescaled_fields(r, f, eps) {
                Ok(p) => p,
                Err(CharacterizeError::VanishingScale { .. }) => return Ok(None),
                Err(e) => return Err(e),
            };
            let uj = eval_at(u, f, 0.0).map_err(|e| CharacterizeError::eval(f.z, e))?;
            Ok(Some(xs.apply(&xs.apply(&ts.apply(&uj)?)?)?.value().norm()))
        })
        .collect::<Result<Vec<_>, CharacterizeError>>()?;
    let excluded = per.iter().filter(|p| p.is_none()).count();
    Ok((per.into_iter().flatten().fold(0.0, f64::max), excluded))
}

/// Largest `‖Y − X̄‖` over the frames (a witness that `Y ≠ X̄`).
pub fn y_minus_xbar(frames: &FrameSet) -> f64 {
    frames
        .frames
        .iter()
        .map(|f| {
            let y = f.field(FieldName::Y).values();
            let xb = f.field(FieldName::XBar).values();
            y.iter().zip(xb.iter()).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt()
        })
        .fold(0.0, f64::max)
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

    fn frames(s: &CircularSurface, n: usize) -> FrameSet {
        FrameSet::random(s, n, 7, &FrameOptions::default()).unwrap()
    }

    #[test]
    fn first_order_tests() {
        for spec in ["hermitian:[[1,0],[0,2]]", "perturbed:[[1,0],[0,1.5]];0.4"] {
            let fs = frames(&CircularSurface::from_spec(spec).unwrap(), 20);
            assert!(is_cr(&e("z1^2*z2"), &fs, 0.0, 1e-10).unwrap().verdict);
            assert!(is_dual_cr(&e("w1*w2"), &fs, 0.0, 1e-10).unwrap().verdict);
            let r = is_cr(&e("w1*w2"), &fs, 0.0, 1e-10).unwrap();
            assert!(!r.verdict && r.max_residual > 1e-2);
            assert!(is_conj_cr(&e("conj(z1)"), &fs, 0.0, 1e-10).unwrap().verdict);
        }
        let sphere = frames(&CircularSurface::sphere(), 20);
        assert!(is_dual_cr(&e("conj(z1)"), &sphere, 0.0, 1e-10).unwrap().verdict);
        let ell = frames(&ellipsoid(), 20);
        // conj(z1) = w1 on this ellipsoid, but conj(z2) = w2/2 + ...; both dual-CR since w is linear in z̄
        assert!(is_dual_cr(&e("conj(z2)"), &ell, 0.0, 1e-10).unwrap().verdict);
        let pert = frames(&CircularSurface::from_spec("perturbed:[[1,0],[0,1.5]];0.4").unwrap(), 20);
        assert!(!is_dual_cr(&e("conj(z1)"), &pert, 0.0, 1e-6).unwrap().verdict);
    }

    #[test]
    fn sum_examples() {
        let fs = frames(&ellipsoid(), 40);
        for mode in [Mode::Global, Mode::Local] {
            assert!(is_sum_cr_dualcr(&e("z1*z2 + w1^2"), &fs, mode, 0.0, 1e-9).unwrap().verdict);
            assert!(!is_sum_cr_dualcr(&e("z1*conj(z1)"), &fs, mode, 0.0, 1e-6).unwrap().verdict);
        }
        let g = is_sum_cr_dualcr(&e("z1/w2"), &fs, Mode::Global, 0.1, 1e-8).unwrap();
        assert!(g.verdict);
        let l = is_sum_cr_dualcr(&e("z1/w2"), &fs, Mode::Local, 0.1, 1e-8).unwrap();
        assert!(!l.verdict);
        assert!((l.word_max[1] - 2.0).abs() < 1e-8);
        assert!(l.residuals.iter().all(|r| (r - 2.0).abs() < 1e-8));
    }

    #[test]
    fn plh_examples() {
        let fs = frames(&CircularSurface::from_spec("perturbed:[[1,0],[0,1.5]];0.4").unwrap(), 30);
        for mode in [Mode::Global, Mode::Local] {
            assert!(is_plh_boundary(&e("z1*z2 + conj(z1*z2)"), &fs, mode, 0.0, 1e-9).unwrap().verdict);
            assert!(is_plh_boundary(&e("z1 + conj(z2)^2"), &fs, mode, 0.0, 1e-9).unwrap().verdict);
            let r = is_plh_boundary(&e("z2*conj(z2)"), &fs, mode, 0.0, 1e-9).unwrap();
            assert!(r.max_residual > 1e-3);
        }
    }

    #[test]
    fn kernel_coefficient_examples() {
        let s = CircularSurface::from_spec("perturbed:[[1,0],[0,1.5]];0.4").unwrap();
        let fs = frames(&s, 10);
        for f in &fs.frames {
            let check = |h: &str, a: &str, b: &str| {
                let (f1, f2) = kernel_coefficients(&eval_at(&e(h), f, 0.0).unwrap(), f, 1e-10).unwrap();
                let (ea, eb) = (eval_at(&e(a), f, 0.0).unwrap(), eval_at(&e(b), f, 0.0).unwrap());
                assert!((f1.value() - ea.value()).norm() < 1e-12, "{h}");
                assert!((f2.value() - eb.value()).norm() < 1e-12, "{h}");
                assert!(f.x.apply(&f1).unwrap().value().norm() < 1e-10);
            };
            check("w1", "1", "0");
            check("w2", "0", "1");
            check("3*w1 + z1*z2*w2", "3", "z1*z2");
            let err = kernel_coefficients(&eval_at(&e("conj(z1)*z2"), f, 0.0).unwrap(), f, 1e-10).unwrap_err();
            assert!(matches!(err, CharacterizeError::NotInKernel { .. }));
        }
    }

    #[test]
    fn second_operator_examples() {
        let fs = frames(&ellipsoid(), 30);
        let r = second_operator_value(&e("z1/w2"), &fs, Side::Dual, 0.1).unwrap();
        assert!(r.direct.iter().all(|v| (v - 2.0).norm() < 1e-8));
        assert!(r.max_discrepancy < 1e-8 && r.cr_residual < 1e-8);
        let r = second_operator_value(&e("z1 + w1"), &fs, Side::Dual, 0.0).unwrap();
        assert!(r.direct.iter().chain(&r.via_kernel).all(|v| v.norm() < 1e-10));
        let pert = frames(&CircularSurface::from_spec("perturbed:[[1,0],[0,1.5]];0.4").unwrap(), 30);
        for u in ["z1^2*z2 + w2^3 + z1/w2", "z1*z2^2 + w1*w2"] {
            let r = second_operator_value(&e(u), &pert, Side::Dual, 0.05).unwrap();
            assert!(r.first_residual < 1e-9);
            assert!(r.max_discrepancy < 1e-8, "{u}: {}", r.max_discrepancy);
        }
        for u in ["z1^3 + conj(z2*z1)", "z1/w2"] {
            let r = second_operator_value(&e(u), &fs, Side::Conjugate, 0.1).unwrap();
            assert!(r.max_discrepancy < 1e-8, "{u}: {}", r.max_discrepancy);
            assert!(r.cr_residual < 1e-8);
        }
    }

    #[test]
    fn decomposition_examples() {
        let s = ellipsoid();
        let targets = [[0.4, 1.0, -2.0], [1.1, -0.5, 0.3], [0.8, 2.7, 1.9]];
        let base = [0.7, 0.2, 0.4];
        let opts = DecomposeOptions::default();
        let d = decompose(&e("z1^2 + w2"), &s, &targets, base, Side::Dual, &opts).unwrap();
        let truth: Vec<Complex64> = d.targets.iter().map(|z| z[0] * z[0]).collect();
        assert!(constant_offset_spread(&d.f, &truth) < 1e-9);
        assert!(d.residual_xf < 1e-7 && d.residual_g < 1e-7);
        for ((u, f), g) in d.u.iter().zip(&d.f).zip(&d.g) {
            assert!((f + g - u).norm() <= 1e-15 * u.norm().max(1.0));
        }
        let d = decompose(&e("5"), &s, &targets, base, Side::Dual, &opts).unwrap();
        assert!(d.f.iter().all(|f| (f - 5.0).norm() < 1e-12) && d.g.iter().all(|g| g.norm() < 1e-12));

        let sphere = CircularSurface::sphere();
        let d = decompose(&e("z2 + conj(z1)*conj(z2)"), &sphere, &targets, base, Side::Conjugate, &opts).unwrap();
        let truth: Vec<Complex64> = d.targets.iter().map(|z| z[1]).collect();
        assert!(constant_offset_spread(&d.f, &truth) < 1e-9);
        assert!(d.residual_xf < 1e-7 && d.residual_g < 1e-7);

        let err = decompose(&e("z1*conj(z1)"), &s, &targets, base, Side::Dual, &opts).unwrap_err();
        assert!(matches!(err, CharacterizeError::NotDecomposable { .. }));
    }

    #[test]
    fn classical_operators_on_the_sphere() {
        let fs = frames(&CircularSurface::sphere(), 20);
        for (u, plh) in [("z1*conj(z2) + conj(z1)*z2", false), ("z1^2 + conj(z2)", true), ("z1*conj(z1)", false)] {
            let r = sphere_classical_operators(&e(u), &fs, 1e-8).unwrap();
            assert!(r.verdicts_agree, "{u}");
            assert_eq!(r.bedford.verdict, plh, "{u}");
        }
        let err = sphere_classical_operators(&e("z1"), &frames(&ellipsoid(), 3), 1e-8).unwrap_err();
        assert_eq!(err, CharacterizeError::NotSphere);
    }

    #[test]
    fn rescalings() {
        let fs = frames(&ellipsoid(), 30);
        let zero = Rescaling { f1: e("0"), f2: e("0"), f3: e("1") };
        assert!(matches!(rescaled_fields(&zero, &fs.frames[0], 1e-8), Err(CharacterizeError::VanishingScale { .. })));
        let simple = Rescaling { f1: e("1"), f2: e("0"), f3: e("1") };
        let (res, _) = rescaled_annihilation(&simple, &e("z1 + w2"), &fs, 0.05).unwrap();
        assert!(res < 1e-8);
        let r = Rescaling { f1: e("z2"), f2: e("z1"), f3: e("2") };
        for u in ["z1*z2 + w1^2", "z2^3 - 2*w1*w2"] {
            let (res, _) = rescaled_annihilation(&r, &e(u), &fs, 1e-3).unwrap();
            assert!(res < 1e-8, "{u}: {res}");
        }
    }

    #[test]
    fn y_differs_from_xbar_on_the_ellipsoid() {
        assert!(y_minus_xbar(&frames(&ellipsoid(), 10)) > 1e-3);
        assert!(y_minus_xbar(&frames(&CircularSurface::sphere(), 10)) < 1e-12);
    }

    #[test]
    fn registry_lookup() {
        let r = MembershipRegistry::builtin();
        assert_eq!(r.names().len(), 9);
        assert!(matches!(r.get("nope"), Err(CharacterizeError::UnknownTest(_))));
    }
}

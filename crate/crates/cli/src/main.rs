//! `crlab`: command-line front end for the dual CR toolkit.
//!
//! Every command writes a JSON report (stdout or `--out`). Exit status is 0
//! when all verdicts pass, 1 on a numerical failure and 2 on a usage error.

mod report;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use crlab::calculus::{SurfaceQuadrature, Weight};
use crlab::certify::{CertifyContext, CheckRecord, CriterionRegistry};
use crlab::characterize::nirenberg::{self, TwoJet};
use crlab::characterize::{self, DecomposeOptions, FrameSet, MembershipRegistry, Mode, Side};
use crlab::config::{load_config, RunConfig};
use crlab::dualframe::FrameOptions;
use crlab::operators::{parse, Expr, OperatorWord};
use crlab::CircularSurface;
use serde_json::json;

use report::Report;

#[derive(Parser, Debug)]
#[command(name = "crlab", version, about = "Dual CR structures on circular convex hypersurfaces in C²")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Surface spec: `sphere`, `hermitian:[[a,b],[c,d]]`, `perturbed:<matrix>;<eps>`.
    #[arg(long, default_value = "sphere")]
    surface: String,
    /// Grid size `N` or `N_SxN_THETA`.
    #[arg(long)]
    grid: Option<String>,
    /// Number of random surface points for pointwise commands.
    #[arg(long)]
    points: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    tol: Option<f64>,
    /// Excluded neighbourhood radius around poles of the test function.
    #[arg(long)]
    delta_sing: Option<f64>,
    /// TOML run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the check table as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Parse and validate a surface spec.
    ValidateSurface(Common),
    /// Frame fields and scalars at sample points.
    Frames(Common),
    /// Apply an operator word to a test function.
    Apply {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        expr: String,
        /// Dot-separated fields, e.g. `X.X.T` or `bar(X).T`.
        #[arg(long)]
        word: String,
    },
    /// Membership test for a test function (or the config corpus).
    Check {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        expr: Option<String>,
        /// cr, dual-cr, conj-cr, sum, plh, bedford, audibert.
        #[arg(long, default_value = "sum")]
        test: String,
        /// global (compact S, first operator) or local (both operators).
        #[arg(long, default_value = "global")]
        mode: String,
    },
    /// The pairing ⟨⟨μ, η⟩⟩ over the grid.
    Pairing {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        expr: String,
        #[arg(long, default_value = "1")]
        eta: String,
    },
    /// Weighted surface integral.
    Integrate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        expr: String,
        /// dS, dS/alpha, dS/alpha2, dsigma, dsigma/alpha, dsigma/alpha2.
        #[arg(long, default_value = "dS")]
        weight: String,
    },
    /// Split u into a CR part and a dual-CR (or conjugate-CR) part.
    Decompose {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        expr: String,
        #[arg(long, default_value = "dual")]
        side: String,
    },
    /// Pluriharmonic polynomial matching a 2-jet on Im z₂ = |z₁|².
    Nirenberg {
        #[command(flatten)]
        common: Common,
        /// Ten coefficients A..J, comma separated (`1/2+3i` style).
        #[arg(long)]
        jet: String,
    },
    /// Run the acceptance suite.
    Certify {
        #[command(flatten)]
        common: Common,
        /// Comma-separated criterion ids (default: all).
        #[arg(long)]
        only: Option<String>,
    },
}

enum Failure {
    Usage(String),
    Numerical(String),
}

type Outcome = Result<(), Failure>;

fn usage<E: std::fmt::Display>(e: E) -> Failure {
    Failure::Usage(e.to_string())
}

fn numerical<E: std::fmt::Display>(e: E) -> Failure {
    Failure::Numerical(e.to_string())
}

fn parse_grid(text: &str) -> Result<(usize, usize), Failure> {
    let parts: Vec<&str> = text.split(['x', 'X', '×']).collect();
    let n = |s: &str| s.trim().parse::<usize>().map_err(|_| Failure::Usage(format!("bad grid `{text}` (expected N or NxM)")));
    let (a, b) = match parts.as_slice() {
        [a] => (n(a)?, n(a)?),
        [a, b] => (n(a)?, n(b)?),
        _ => return Err(Failure::Usage(format!("bad grid `{text}` (expected N or NxM)"))),
    };
    if a < 2 || b < 2 {
        return Err(Failure::Usage("grid needs at least 2 nodes per direction".into()));
    }
    Ok((a, b))
}

fn expr(text: &str) -> Result<Expr, Failure> {
    parse(text).map_err(|e| Failure::Usage(format!("`{text}`: {e}")))
}

/// Configuration with command-line overrides applied.
fn resolve(common: &Common) -> Result<RunConfig, Failure> {
    let mut cfg = match &common.config {
        Some(p) => load_config(p).map_err(usage)?,
        None => RunConfig::default(),
    };
    if let Some(g) = &common.grid {
        let (a, b) = parse_grid(g)?;
        cfg.grid_s = a;
        cfg.grid_theta = b;
    }
    if let Some(p) = common.points {
        if p == 0 {
            return Err(Failure::Usage("--points must be positive".into()));
        }
        cfg.points = p;
    }
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if let Some(d) = common.delta_sing {
        cfg.delta_sing = d;
    }
    Ok(cfg)
}

struct Run<'a> {
    common: &'a Common,
    cfg: RunConfig,
    report: Report,
}

impl<'a> Run<'a> {
    fn surface(&mut self) -> Result<CircularSurface, Failure> {
        let s = CircularSurface::from_spec(&self.common.surface).map_err(usage)?;
        self.report.surface = Some(s.spec());
        Ok(s)
    }

    fn frames(&self, s: &CircularSurface, points: usize) -> Result<FrameSet, Failure> {
        FrameSet::random(s, points, self.cfg.seed, &FrameOptions::default()).map_err(numerical)
    }

    fn grid(&mut self) -> (usize, usize) {
        self.report.grid = Some(format!("{}x{}", self.cfg.grid_s, self.cfg.grid_theta));
        (self.cfg.grid_s, self.cfg.grid_theta)
    }
}

fn validate_surface(run: &mut Run) -> Outcome {
    let s = run.surface()?;
    let v = s.validation().clone();
    let spec = s.spec();
    run.report.checks.push(CheckRecord::le(0, "max circularity residual", "circularity", &spec, v.max_circularity_residual, crlab::surfaces::INVARIANT_TOL));
    run.report.checks.push(CheckRecord::le(0, "max Euler residual", "homogeneity", &spec, v.max_euler_residual, crlab::surfaces::INVARIANT_TOL));
    run.report.checks.push(CheckRecord::ge(0, "min tangential Hessian eigenvalue", "convexity", &spec, v.min_convexity_eigenvalue, crlab::surfaces::CONVEXITY_TOL));
    run.report.data = json!({ "validation": v });
    Ok(())
}

fn frames(run: &mut Run) -> Outcome {
    let s = run.surface()?;
    let n = run.common.points.unwrap_or(8);
    let fs = run.frames(&s, n)?;
    let spec = s.spec();
    let rows: Vec<_> = fs.frames.iter().map(|f| f.summary()).collect();
    let max = |pick: fn(&crlab::dualframe::FrameResiduals) -> f64| rows.iter().map(|r| pick(&r.residuals)).fold(0.0, f64::max);
    let tol = run.common.tol.unwrap_or(1e-10);
    run.report.checks.push(CheckRecord::le(0, "max |z·w − 1|", "duality", &spec, max(|r| r.duality), tol));
    run.report.checks.push(CheckRecord::le(0, "max ‖X − αȲ‖", "x-alpha", &spec, max(|r| r.x_alpha), tol));
    run.report.checks.push(CheckRecord::le(0, "max ‖T − βV̄‖", "t-beta", &spec, max(|r| r.t_beta), tol));
    run.report.data = json!({ "frames": rows });
    Ok(())
}

fn apply(run: &mut Run, text: &str, word_text: &str) -> Outcome {
    let s = run.surface()?;
    let u = expr(text)?;
    let word: OperatorWord = word_text.parse().map_err(usage)?;
    let fs = run.frames(&s, run.common.points.unwrap_or(8))?;
    let mut rows = Vec::new();
    let mut excluded = 0;
    for f in &fs.frames {
        match crlab::operators::apply_word(&word, &u, f, run.cfg.delta_sing) {
            Ok(v) => rows.push(json!({ "z": f.z, "value": v })),
            Err(crlab::operators::EvalError::NearZeroDenominator { .. }) => excluded += 1,
            Err(e) => return Err(numerical(e)),
        }
    }
    run.report.data = json!({ "expr": u.to_string(), "word": word.to_string(), "excluded_points": excluded, "values": rows });
    Ok(())
}

fn membership_test_name(test: &str, mode: Mode) -> String {
    match test {
        "sum" => characterize::sum_test_name(mode).to_string(),
        "plh" => characterize::plh_test_name(mode).to_string(),
        other => other.to_string(),
    }
}

fn check(run: &mut Run, text: Option<&str>, test: &str, mode_text: &str) -> Outcome {
    let s = run.surface()?;
    let mode: Mode = mode_text.parse().map_err(Failure::Usage)?;
    let tol = run.common.tol.unwrap_or(run.cfg.tolerances.membership);
    let registry = MembershipRegistry::builtin();
    let mut cases: Vec<(Expr, String, Option<bool>)> = Vec::new();
    match text {
        Some(t) => cases.push((expr(t)?, membership_test_name(test, mode), None)),
        None => {
            if run.cfg.corpus.is_empty() {
                return Err(Failure::Usage("give --expr or a --config with a [[corpus]] list".into()));
            }
            for c in &run.cfg.corpus {
                cases.push((expr(&c.expr)?, membership_test_name(&c.test, mode), Some(c.expect)));
            }
        }
    }
    let fs = run.frames(&s, run.cfg.points)?;
    let spec = s.spec();
    let mut reports = Vec::new();
    for (u, name, expect) in &cases {
        let t = registry.get(name).map_err(usage)?;
        let r = characterize::membership(t, u, &fs, run.cfg.delta_sing, tol).map_err(|e| match e {
            characterize::CharacterizeError::NotSphere => usage(e),
            other => numerical(other),
        })?;
        let record = match expect {
            None => CheckRecord::le(0, &format!("{name}: {u}"), name, &spec, r.max_residual, tol),
            Some(true) => CheckRecord::le(0, &format!("{name}: {u} (expected member)"), name, &spec, r.max_residual, tol),
            Some(false) => CheckRecord::ge(0, &format!("{name}: {u} (expected non-member)"), name, &spec, r.max_residual, tol),
        };
        run.report.checks.push(record.excluding(r.excluded_points));
        reports.push(json!({
            "expr": u.to_string(),
            "test": r.test,
            "words": r.words,
            "word_max": r.word_max,
            "max_residual": r.max_residual,
            "mean_residual": r.mean_residual,
            "excluded_points": r.excluded_points,
            "verdict": r.verdict,
        }));
    }
    run.report.data = json!({ "mode": mode, "tolerance": tol, "results": reports });
    Ok(())
}

fn pairing(run: &mut Run, mu: &str, eta: &str) -> Outcome {
    let s = run.surface()?;
    let (a, b) = run.grid();
    let (mu, eta) = (expr(mu)?, expr(eta)?);
    let q = SurfaceQuadrature::on_grid(&s, a, b, 2).map_err(numerical)?;
    let v = q.pairing(&mu, &eta).map_err(numerical)?;
    if let Some(tol) = run.common.tol {
        run.report.checks.push(CheckRecord::le(0, &format!("|⟨⟨{mu}, {eta}⟩⟩|"), "pairing", &s.spec(), v.norm(), tol));
    }
    run.report.data = json!({ "mu": mu.to_string(), "eta": eta.to_string(), "value": v });
    Ok(())
}

fn integrate(run: &mut Run, text: &str, weight: &str) -> Outcome {
    let s = run.surface()?;
    let (a, b) = run.grid();
    let u = expr(text)?;
    let w: Weight = weight.parse().map_err(usage)?;
    let q = SurfaceQuadrature::on_grid(&s, a, b, 2).map_err(numerical)?;
    let v = q.weighted_integral(&u, w).map_err(numerical)?;
    run.report.data = json!({ "expr": u.to_string(), "weight": w.to_string(), "value": v });
    Ok(())
}

fn decompose(run: &mut Run, text: &str, side_text: &str) -> Outcome {
    let s = run.surface()?;
    let u = expr(text)?;
    let side: Side = side_text.parse().map_err(Failure::Usage)?;
    let tol = run.common.tol.unwrap_or(run.cfg.tolerances.decompose_residual);
    let n = run.common.points.unwrap_or(6);
    let targets: Vec<[f64; 3]> = s
        .random_points(n, run.cfg.seed)
        .into_iter()
        .map(|p| p.params)
        .filter(|p| p[0] > 0.2 && p[0] < std::f64::consts::FRAC_PI_2 - 0.2)
        .collect();
    if targets.is_empty() {
        return Err(Failure::Usage("no interior target points; raise --points".into()));
    }
    let opts = DecomposeOptions { guard: run.cfg.delta_sing, membership_tol: run.cfg.tolerances.membership, ..DecomposeOptions::default() };
    let d = characterize::decompose(&u, &s, &targets, [0.7, 0.3, -0.4], side, &opts).map_err(numerical)?;
    let spec = s.spec();
    run.report.checks.push(CheckRecord::le(0, "max |Xf|", "decompose-residual-xf", &spec, d.residual_xf, tol));
    run.report.checks.push(CheckRecord::le(0, "max residual of g", "decompose-residual-g", &spec, d.residual_g, tol));
    run.report.data = serde_json::to_value(&d).expect("decomposition serializes");
    Ok(())
}

fn nirenberg(run: &mut Run, jet_text: &str) -> Outcome {
    let jet: TwoJet = jet_text.parse().map_err(usage)?;
    let (p, plh, matches) = nirenberg::verify(&jet);
    run.report.surface = Some("model: Im z2 = |z1|^2".into());
    run.report.checks.push(CheckRecord::le(12, "mixed second derivatives vanish", "nirenberg-pluriharmonic", "model", if plh { 0.0 } else { 1.0 }, 0.0));
    run.report.checks.push(CheckRecord::le(12, "restricted 2-jet equals input", "nirenberg-jet", "model", if matches { 0.0 } else { 1.0 }, 0.0));
    run.report.data = json!({ "polynomial": p.to_string(), "restriction": nirenberg::model_restriction(&p).to_string() });
    Ok(())
}

fn certify(run: &mut Run, only: Option<&str>) -> Outcome {
    let s = run.surface()?;
    run.grid();
    let mut cfg = run.cfg.clone();
    cfg.surfaces = vec![s.spec()];
    let ctx = CertifyContext::new(cfg).map_err(usage)?;
    let registry = CriterionRegistry::builtin();
    let ids: Vec<u32> = match only {
        None => registry.ids(),
        Some(list) => list.split(',').map(|t| t.trim().parse::<u32>().map_err(|_| Failure::Usage(format!("bad criterion id `{t}`")))).collect::<Result<_, _>>()?,
    };
    let mut summary = Vec::new();
    for id in ids {
        let c = registry.get(id).ok_or_else(|| Failure::Usage(format!("no criterion {id}")))?;
        let r = registry.run_one(c, &ctx);
        eprintln!("criterion {:>2} {}  {}", r.id, if r.passed { "PASS" } else { "FAIL" }, r.title);
        summary.push(json!({ "id": r.id, "title": r.title, "passed": r.passed, "error": r.error }));
        if let Some(e) = &r.error {
            if run.report.error.is_none() {
                run.report.error = Some(format!("criterion {id}: {e}"));
            }
        }
        run.report.checks.extend(r.checks);
    }
    run.report.data = json!({ "criteria": summary });
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let start = Instant::now();
    let (name, common) = match &cli.command {
        Command::ValidateSurface(c) => ("validate-surface", c),
        Command::Frames(c) => ("frames", c),
        Command::Apply { common, .. } => ("apply", common),
        Command::Check { common, .. } => ("check", common),
        Command::Pairing { common, .. } => ("pairing", common),
        Command::Integrate { common, .. } => ("integrate", common),
        Command::Decompose { common, .. } => ("decompose", common),
        Command::Nirenberg { common, .. } => ("nirenberg", common),
        Command::Certify { common, .. } => ("certify", common),
    };
    let cfg = match resolve(common) {
        Ok(c) => c,
        Err(Failure::Usage(m)) | Err(Failure::Numerical(m)) => {
            eprintln!("error: {m}");
            return ExitCode::from(2);
        }
    };
    let mut run = Run { common, report: Report::new(name, cfg.seed), cfg };
    let outcome = match &cli.command {
        Command::ValidateSurface(_) => validate_surface(&mut run),
        Command::Frames(_) => frames(&mut run),
        Command::Apply { expr, word, .. } => apply(&mut run, expr, word),
        Command::Check { expr, test, mode, .. } => check(&mut run, expr.as_deref(), test, mode),
        Command::Pairing { expr, eta, .. } => pairing(&mut run, expr, eta),
        Command::Integrate { expr, weight, .. } => integrate(&mut run, expr, weight),
        Command::Decompose { expr, side, .. } => decompose(&mut run, expr, side),
        Command::Nirenberg { jet, .. } => nirenberg(&mut run, jet),
        Command::Certify { only, .. } => certify(&mut run, only.as_deref()),
    };
    if let Err(Failure::Usage(m)) = &outcome {
        eprintln!("error: {m}");
        return ExitCode::from(2);
    }
    if let Err(Failure::Numerical(m)) = &outcome {
        eprintln!("numerical failure: {m}");
        run.report.error = Some(m.clone());
    }
    run.report.wall_time_seconds = start.elapsed().as_secs_f64();
    if let Err(e) = run.report.emit(run.common.out.as_deref()) {
        eprintln!("error: cannot write report: {e}");
        return ExitCode::from(2);
    }
    if let Some(p) = &run.common.csv {
        if let Err(e) = run.report.write_csv(p) {
            eprintln!("error: cannot write csv: {e}");
            return ExitCode::from(2);
        }
    }
    if run.report.passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

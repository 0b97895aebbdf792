//! Acceptance criteria 1 to 13 on the default rig (unit sphere and the
//! ellipsoid diag(1,2), 200 random points, 24³ grids).
//!
//! Prints one line per criterion followed by its checks; exits non-zero if
//! any criterion fails.

use std::process::ExitCode;
use std::time::Instant;

use crlab::certify::{CertifyContext, CriterionRegistry};
use crlab::config::RunConfig;

fn main() -> ExitCode {
    let ctx = CertifyContext::new(RunConfig::default()).expect("default rig surfaces are valid");
    let registry = CriterionRegistry::builtin();
    let start = Instant::now();
    let mut failed = Vec::new();
    for id in registry.ids() {
        let c = registry.get(id).expect("registered");
        let t = Instant::now();
        let result = registry.run_one(c, &ctx);
        print!("{}", crlab_verify::render(&result, t.elapsed().as_secs_f64()));
        if !result.passed {
            failed.push(id);
        }
    }
    println!("acceptance: {} of {} criteria pass in {:.1} s", registry.ids().len() - failed.len(), registry.ids().len(), start.elapsed().as_secs_f64());
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("failing criteria: {failed:?}");
        ExitCode::FAILURE
    }
}

//! Plain-text rendering of acceptance results, one line per criterion and
//! one indented line per check.

use std::fmt::Write;

use crlab::certify::{CheckRecord, CriterionResult, Relation};

pub fn check_line(r: &CheckRecord) -> String {
    let tag = match (r.informational, r.verdict) {
        (true, _) => "info",
        (false, true) => "ok",
        (false, false) => "FAIL",
    };
    let rel = match r.relation {
        Relation::Le => "<=",
        Relation::Ge => ">=",
    };
    let excl = if r.excluded_points > 0 { format!("  [{} excluded]", r.excluded_points) } else { String::new() };
    format!("    [{tag:>4}] {:<30} {:<26} {:>11.3e} {rel} {:.1e}{excl}", r.label, r.surface, r.max_residual, r.tolerance)
}

/// Criterion header, optional error line and check lines. `seconds` is the wall time.
pub fn render(result: &CriterionResult, seconds: f64) -> String {
    let verdict = if result.passed { "PASS" } else { "FAIL" };
    let mut out = format!("criterion {:>2} {verdict}  {}  ({seconds:.1} s)\n", result.id, result.title);
    if let Some(e) = &result.error {
        let _ = writeln!(out, "    error: {e}");
    }
    for r in &result.checks {
        let _ = writeln!(out, "{}", check_line(r));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lines() {
        let ok = CheckRecord::le(1, "max |z·w − 1|", "duality", "sphere", 2e-16, 1e-12);
        let bad = CheckRecord::le(9, "orthogonality", "pairing-orthogonality", "sphere", 14.2, 1e-8).excluding(3);
        let r = CriterionResult { id: 9, title: "pairing".into(), checks: vec![ok, bad], error: None, passed: false };
        let text = render(&r, 1.25);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "criterion  9 FAIL  pairing  (1.2 s)");
        assert!(lines[1].starts_with("    [  ok] duality") && lines[1].contains("<= 1.0e-12"));
        assert!(lines[2].starts_with("    [FAIL] pairing-orthogonality") && lines[2].ends_with("[3 excluded]"));
    }
}

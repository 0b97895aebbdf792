//! Versioned JSON report and its CSV flattening.

use std::io::Write;
use std::path::Path;

use crlab::certify::CheckRecord;
use serde::Serialize;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub schema_version: u32,
    pub tool_version: &'static str,
    pub command: String,
    pub surface: Option<String>,
    pub grid: Option<String>,
    pub seed: u64,
    pub checks: Vec<CheckRecord>,
    /// Command-specific payload.
    pub data: serde_json::Value,
    pub error: Option<String>,
    pub wall_time_seconds: f64,
}

impl Report {
    pub fn new(command: &str, seed: u64) -> Self {
        Report {
            schema_version: SCHEMA_VERSION,
            tool_version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            surface: None,
            grid: None,
            seed,
            checks: Vec::new(),
            data: serde_json::Value::Null,
            error: None,
            wall_time_seconds: 0.0,
        }
    }

    /// Every non-informational check passes and no error was recorded.
    pub fn passed(&self) -> bool {
        self.error.is_none() && self.checks.iter().filter(|c| !c.informational).all(|c| c.verdict)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn write_csv(&self, path: &Path) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["criterion", "name", "label", "surface", "max_residual", "tolerance", "relation", "excluded_points", "verdict", "informational"])?;
        for c in &self.checks {
            let relation = match c.relation {
                crlab::certify::Relation::Le => "le",
                crlab::certify::Relation::Ge => "ge",
            };
            w.write_record([
                c.criterion.to_string(),
                c.name.clone(),
                c.label.clone(),
                c.surface.clone(),
                format!("{:e}", c.max_residual),
                format!("{:e}", c.tolerance),
                relation.to_string(),
                c.excluded_points.to_string(),
                c.verdict.to_string(),
                c.informational.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn emit(&self, out: Option<&Path>) -> std::io::Result<()> {
        match out {
            Some(p) => std::fs::write(p, self.to_json() + "\n"),
            None => {
                let mut stdout = std::io::stdout().lock();
                writeln!(stdout, "{}", self.to_json())
            }
        }
    }
}

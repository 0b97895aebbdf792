//! Run configuration: tolerances, grid sizes, corpus sizes and seeds.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::operators::parse;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("{path}: cannot read: {message}")]
    Read { path: PathBuf, message: String },
    #[error("{path}: field `{field}`: {message}")]
    Field { path: PathBuf, field: String, message: String },
}

/// Pinned acceptance tolerances.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub duality: f64,
    pub sphere_dual_map: f64,
    pub sphere_scalars: f64,
    pub brackets: f64,
    pub reality: f64,
    pub counterexample: f64,
    pub membership: f64,
    /// Non-members must reach at least this multiple of `‖u‖`.
    pub non_member_ratio: f64,
    pub separation_orders: f64,
    pub decompose_recovery: f64,
    pub decompose_residual: f64,
    pub decompose_uniqueness: f64,
    pub second_operator: f64,
    pub pairing: f64,
    pub parts: f64,
    pub parts_plh: f64,
    pub convergence_ratio: f64,
    pub biduality: f64,
    pub divergence: f64,
    pub extension: f64,
    pub rescaled: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            duality: 1e-12,
            sphere_dual_map: 1e-12,
            sphere_scalars: 1e-10,
            brackets: 1e-8,
            reality: 1e-10,
            counterexample: 1e-8,
            membership: 1e-8,
            non_member_ratio: 1e-3,
            separation_orders: 5.0,
            decompose_recovery: 1e-6,
            decompose_residual: 1e-7,
            decompose_uniqueness: 1e-7,
            second_operator: 1e-8,
            pairing: 1e-8,
            parts: 1e-7,
            parts_plh: 1e-7,
            convergence_ratio: 0.3,
            biduality: 1e-8,
            divergence: 1e-10,
            extension: 1e-8,
            rescaled: 1e-8,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorpusSizes {
    pub members: usize,
    pub non_members: usize,
    pub kernel: usize,
    pub classical: usize,
    pub triples: usize,
    pub nirenberg: usize,
    pub decompose_members: usize,
    pub decompose_targets: usize,
    pub pairing_pairs: usize,
    pub biduality_points: usize,
}

impl Default for CorpusSizes {
    fn default() -> Self {
        CorpusSizes {
            members: 50,
            non_members: 50,
            kernel: 20,
            classical: 20,
            triples: 5,
            nirenberg: 100,
            decompose_members: 50,
            decompose_targets: 4,
            pairing_pairs: 10,
            biduality_points: 100,
        }
    }
}

/// A user corpus entry: `expr` must give verdict `expect` under `test`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusSpec {
    pub expr: String,
    pub test: String,
    pub expect: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    /// Random surface points for pointwise identities.
    pub points: usize,
    pub grid_s: usize,
    pub grid_theta: usize,
    /// Points closer than this to a pole of the test function are excluded.
    pub delta_sing: f64,
    /// Surfaces of the certify rig.
    pub surfaces: Vec<String>,
    pub tolerances: Tolerances,
    pub sizes: CorpusSizes,
    pub corpus: Vec<CorpusSpec>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 7,
            points: 200,
            grid_s: 24,
            grid_theta: 24,
            delta_sing: 0.1,
            surfaces: vec!["sphere".into(), "hermitian:[[1,0],[0,2]]".into()],
            tolerances: Tolerances::default(),
            sizes: CorpusSizes::default(),
            corpus: Vec::new(),
        }
    }
}

fn field_of(message: &str) -> String {
    // toml reports unknown or mistyped keys inside backticks
    message.split('`').nth(1).map(str::to_string).unwrap_or_else(|| "<document>".into())
}

impl RunConfig {
    pub fn from_toml_str(text: &str, path: &Path) -> Result<Self, ConfigError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| {
            let message = e.message().to_string();
            ConfigError::Field { path: path.to_path_buf(), field: field_of(&message), message }
        })?;
        cfg.validate(path)?;
        Ok(cfg)
    }

    fn validate(&self, path: &Path) -> Result<(), ConfigError> {
        let bad = |field: &str, message: String| Err(ConfigError::Field { path: path.to_path_buf(), field: field.into(), message });
        if self.points == 0 {
            return bad("points", "must be positive".into());
        }
        if self.grid_s < 2 || self.grid_theta < 2 {
            return bad("grid", "needs at least 2 nodes per direction".into());
        }
        if !(self.delta_sing >= 0.0) {
            return bad("delta_sing", "must be non-negative".into());
        }
        for (k, entry) in self.corpus.iter().enumerate() {
            if let Err(e) = parse(&entry.expr) {
                return bad(&format!("corpus[{k}].expr"), format!("`{}`: {e}", entry.expr));
            }
        }
        Ok(())
    }
}

/// Reads a TOML configuration; missing fields take their defaults.
pub fn load_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Read { path: path.to_path_buf(), message: e.to_string() })?;
    RunConfig::from_toml_str(&text, path)
}

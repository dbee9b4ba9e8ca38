//! Run reports: everything a run measured, serialized deterministically.

use serde::{Deserialize, Serialize};

use solspace::engine::BracketRow;
use solspace::verify::InvariantResult;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChainSummary {
    pub dims: Vec<usize>,
    pub classification: String,
    pub final_dim: usize,
    pub kernel_dim: usize,
    pub iterations: usize,
    /// σ_min/σ_max of Ω_∞ (0 when the final form is identically zero).
    pub omega_condition: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProjectorSummary {
    pub rank: usize,
    pub idempotency_residual: f64,
    pub range_residual: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrajectorySummary {
    pub n_steps: usize,
    pub dt: f64,
    pub energy_initial: f64,
    pub energy_max_drift: f64,
    pub section_json: Option<String>,
    pub section_binary: Option<String>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Timings {
    pub build_s: f64,
    pub command_s: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    /// Build version (git describe when available).
    pub version: String,
    /// SHA-256 of the canonical config.
    pub config_hash: String,
    pub command: String,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub chain: Option<ChainSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub projector: Option<ProjectorSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub helmholtz_residual: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub brackets: Option<Vec<BracketRow>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub invariants: Option<Vec<InvariantResult>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trajectory: Option<TrajectorySummary>,
    pub timings: Timings,
}

impl RunReport {
    pub fn new(command: &str, version: &str, config_hash: String, seed: u64) -> Self {
        Self {
            version: version.to_string(),
            config_hash,
            command: command.to_string(),
            seed,
            chain: None,
            projector: None,
            helmholtz_residual: None,
            brackets: None,
            invariants: None,
            trajectory: None,
            timings: Timings::default(),
        }
    }

    /// Zero out wall-clock data for byte-stable regression baselines.
    pub fn stabilize(&mut self) {
        self.timings = Timings::default();
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn all_invariants_pass(&self) -> bool {
        self.invariants
            .as_ref()
            .map(|v| v.iter().all(|r| r.pass))
            .unwrap_or(true)
    }
}

//! Run configuration: a JSON key-value tree with a strict schema.
//!
//! ```json
//! {
//!   "model": {"kind": "vector_boson", "mass": 1.0, "r": 1, "shape": [4,4,4], "h": 1.0},
//!   "time": {"dt": 0.1, "n_steps": 40, "sigma_index": 0},
//!   "observables": [{"component": "phi:0", "site": [0,0,0], "t": 1.5}],
//!   "tolerances": {"rank_rtol": 1e-10, "bracket_tol": 1e-8},
//!   "output": {"dir": "out", "formats": ["json", "csv"]},
//!   "seed": 7
//! }
//! ```
//!
//! Component syntax: `q`/`p` (free particle), `phi:a`/`p0:a` (vector boson),
//! `a:k`/`a_t:k`/`p:k` with k ∈ 1..=3 (electrodynamics; `a_t` is the
//! transverse projection, the gauge-invariant choice).

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use solspace::engine::{FieldComponent, Observable};
use solspace::pipeline::ModelConfig;
use solspace::verify::FaultInjection;

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeConfig {
    pub dt: f64,
    pub n_steps: usize,
    pub sigma_index: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObservableConfig {
    pub component: String,
    #[serde(default)]
    pub site: Vec<usize>,
    pub t: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    pub rank_rtol: f64,
    pub bracket_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            rank_rtol: 1e-10,
            bracket_tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: String,
    pub formats: Vec<String>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: "out".into(),
            formats: vec!["json".into()],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub time: TimeConfig,
    #[serde(default)]
    pub observables: Vec<ObservableConfig>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub seed: u64,
    /// Test hook: deliberately corrupt internal data to exercise the
    /// validation paths in `verify`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inject: Option<String>,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = serde_json::from_str(text)
            .map_err(|e| CliError::Validation(format!("config parse error: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Canonical emission; `parse(emit(c)) == c`.
    pub fn emit(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// SHA-256 of the canonical form, hex.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.emit().as_bytes());
        let out = h.finalize();
        out.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let fail = |field: &str, reason: String| {
            Err(CliError::Validation(format!("config field `{field}`: {reason}")))
        };
        match &self.model {
            ModelConfig::FreeParticle { mass } => {
                if !(*mass > 0.0) {
                    return fail("model.mass", "must be positive".into());
                }
            }
            ModelConfig::VectorBoson { mass, r, shape, h } => {
                if !(*mass > 0.0) {
                    return fail("model.mass", "must be positive".into());
                }
                if *r == 0 {
                    return fail("model.r", "must be >= 1".into());
                }
                if shape.is_empty() || shape.iter().any(|&n| n < 2) {
                    return fail("model.shape", "entries must be >= 2".into());
                }
                if !(*h > 0.0) {
                    return fail("model.h", "must be positive".into());
                }
            }
            ModelConfig::Electrodynamics { shape, h } => {
                if shape.len() != 3 || shape.iter().any(|&n| n < 2) {
                    return fail("model.shape", "need a d = 3 shape with entries >= 2".into());
                }
                if !(*h > 0.0) {
                    return fail("model.h", "must be positive".into());
                }
            }
        }
        if !(self.time.dt > 0.0) {
            return fail("time.dt", "must be positive".into());
        }
        if self.time.n_steps == 0 {
            return fail("time.n_steps", "must be >= 1".into());
        }
        if self.time.sigma_index > self.time.n_steps {
            return fail(
                "time.sigma_index",
                format!("outside window (n_steps = {})", self.time.n_steps),
            );
        }
        let horizon = self.window_halfwidth();
        for (i, obs) in self.observables.iter().enumerate() {
            self.parse_component(&obs.component)
                .map_err(|e| CliError::Validation(format!("observables[{i}].component: {e}")))?;
            let d = self.spatial_dim();
            if obs.site.len() != d {
                return fail(
                    &format!("observables[{i}].site"),
                    format!("need a {d}-tuple"),
                );
            }
            if obs.t.abs() > horizon {
                return fail(
                    &format!("observables[{i}].t"),
                    format!("outside the evolution window [−{horizon}, {horizon}]"),
                );
            }
        }
        if !(self.tolerances.rank_rtol > 0.0 && self.tolerances.rank_rtol < 1.0) {
            return fail("tolerances.rank_rtol", "must lie in (0, 1)".into());
        }
        for f in &self.output.formats {
            if f != "json" && f != "csv" {
                return fail("output.formats", format!("unknown format `{f}`"));
            }
        }
        if let Some(inj) = &self.inject {
            if inj != "omega_asymmetry" {
                return fail("inject", format!("unknown fault `{inj}`"));
            }
        }
        Ok(())
    }

    pub fn spatial_dim(&self) -> usize {
        match &self.model {
            ModelConfig::FreeParticle { .. } => 0,
            ModelConfig::VectorBoson { shape, .. } => shape.len(),
            ModelConfig::Electrodynamics { .. } => 3,
        }
    }

    /// Evolution window half-width T: field-point times live in [−T, T].
    pub fn window_halfwidth(&self) -> f64 {
        self.time.dt * self.time.n_steps as f64
    }

    pub fn sigma_time(&self) -> f64 {
        self.time.dt * self.time.sigma_index as f64
    }

    pub fn fault_injection(&self) -> Option<FaultInjection> {
        self.inject
            .as_deref()
            .map(|_| FaultInjection::OmegaAsymmetry)
    }

    fn parse_component(&self, text: &str) -> Result<(FieldComponent, bool), String> {
        let (name, idx) = match text.split_once(':') {
            Some((n, i)) => {
                let idx: usize = i
                    .parse()
                    .map_err(|_| format!("bad component index in `{text}`"))?;
                (n, idx)
            }
            None => (text, 0),
        };
        match (&self.model, name) {
            (ModelConfig::FreeParticle { .. }, "q") => Ok((FieldComponent::Field(0), false)),
            (ModelConfig::FreeParticle { .. }, "p") => {
                Ok((FieldComponent::MomentumTime(0), false))
            }
            (ModelConfig::VectorBoson { r, .. }, "phi") if idx < *r => {
                Ok((FieldComponent::Field(idx), false))
            }
            (ModelConfig::VectorBoson { r, .. }, "p0") if idx < *r => {
                Ok((FieldComponent::MomentumTime(idx), false))
            }
            (ModelConfig::Electrodynamics { .. }, "a") if (1..=3).contains(&idx) => {
                Ok((FieldComponent::Field(idx), false))
            }
            (ModelConfig::Electrodynamics { .. }, "a_t") if (1..=3).contains(&idx) => {
                Ok((FieldComponent::Field(idx), true))
            }
            (ModelConfig::Electrodynamics { .. }, "p") if (1..=3).contains(&idx) => {
                Ok((FieldComponent::MomentumTime(idx), false))
            }
            _ => Err(format!("component `{text}` not valid for this model")),
        }
    }

    /// Instantiate the observables listed in the config.
    pub fn build_observables(&self) -> Result<Vec<Observable<f64>>, CliError> {
        self.observables
            .iter()
            .enumerate()
            .map(|(i, o)| {
                let (component, transverse) = self.parse_component(&o.component).map_err(|e| {
                    CliError::Validation(format!("observables[{i}].component: {e}"))
                })?;
                let label = format!("{}@({:?},t={})", o.component, o.site, o.t);
                Ok(if transverse {
                    Observable::transverse_field_point(component, o.site.clone(), o.t, label)
                } else {
                    Observable::field_point(component, o.site.clone(), o.t, label)
                })
            })
            .collect()
    }
}

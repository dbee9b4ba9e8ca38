//! End-to-end assembly: field theory → slice system → constraint chain →
//! connection (gauge case) → spectral flow → bracket engine.

use serde::{Deserialize, Serialize};

use crate::connection::{coulomb_projector, ConnectionProjector};
use crate::ddw::FieldTheorySpec;
use crate::engine::{build_flow, BracketEngine, FlowOperator, TimeWindow};
use crate::error::Result;
use crate::lattice::SpatialLattice;
use crate::presymp::{Classification, ConstraintChainResult};
use crate::scalar::Real;
use crate::slicing::{build_slice_system, SliceModel};

/// Which built-in model to assemble. Serialized form uses a `kind` tag:
/// `{"kind": "vector_boson", "mass": 1.0, "r": 1, "shape": [8,8,8], "h": 1.0}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelConfig {
    FreeParticle {
        mass: f64,
    },
    VectorBoson {
        mass: f64,
        r: usize,
        shape: Vec<usize>,
        h: f64,
    },
    Electrodynamics {
        shape: Vec<usize>,
        h: f64,
    },
}

impl ModelConfig {
    pub fn spec<S: Real>(&self) -> Result<FieldTheorySpec<S>> {
        match self {
            ModelConfig::FreeParticle { mass } => FieldTheorySpec::free_particle(S::of(*mass)),
            ModelConfig::VectorBoson { mass, r, shape, .. } => {
                FieldTheorySpec::vector_boson(S::of(*mass), *r, shape.len())
            }
            ModelConfig::Electrodynamics { .. } => Ok(FieldTheorySpec::electrodynamics()),
        }
    }

    pub fn spatial<S: Real>(&self) -> Result<SpatialLattice<S>> {
        match self {
            ModelConfig::FreeParticle { .. } => Ok(SpatialLattice::point()),
            ModelConfig::VectorBoson { shape, h, .. }
            | ModelConfig::Electrodynamics { shape, h } => {
                SpatialLattice::cubic(shape.clone(), S::of(*h))
            }
        }
    }
}

/// Everything needed to evolve data and evaluate brackets for one model.
pub struct Pipeline<S: Real> {
    pub model: SliceModel<S>,
    pub chain: ConstraintChainResult<S>,
    pub projector: Option<ConnectionProjector<S>>,
    pub flow: FlowOperator<S>,
    pub engine: BracketEngine<S>,
}

/// Assemble the full pipeline for a model configuration.
pub fn build_pipeline<S: Real>(
    cfg: &ModelConfig,
    window: TimeWindow<S>,
    rank_rtol: S,
    max_iter: usize,
) -> Result<Pipeline<S>> {
    let spec = cfg.spec::<S>()?;
    let spatial = cfg.spatial::<S>()?;
    let model = build_slice_system(&spec, &spatial)?;
    let chain = model.analyze(rank_rtol, max_iter)?;
    let projector = match chain.classification {
        Classification::Gauge => Some(coulomb_projector(&chain, &model)?),
        Classification::Symplectic => None,
    };
    let flow = build_flow(&model, &chain, projector.as_ref(), window)?;
    let engine = BracketEngine::new(&chain, projector.as_ref())?;
    Ok(Pipeline {
        model,
        chain,
        projector,
        flow,
        engine,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn model_config_round_trips_through_json() {
        let cfg = ModelConfig::VectorBoson {
            mass: 1.0,
            r: 1,
            shape: vec![4, 4, 4],
            h: 1.0,
        };
        let s = serde_json::to_string(&cfg).unwrap();
        assert!(s.contains("\"kind\":\"vector_boson\""));
        let back: ModelConfig = serde_json::from_str(&s).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn electrodynamics_pipeline_builds_with_projector() {
        let cfg = ModelConfig::Electrodynamics {
            shape: vec![2, 2, 2],
            h: 1.0,
        };
        let p = build_pipeline::<f64>(&cfg, TimeWindow::new(-5.0, 5.0), 1e-10, 64).unwrap();
        assert_eq!(p.chain.classification, Classification::Gauge);
        assert!(p.projector.is_some());
    }
}

//! Discrete Helmholtz decomposition and the Coulomb connection projector.
//!
//! On a periodic lattice every vector field splits exactly into a
//! divergence-free (transverse) part and a gradient (longitudinal) part,
//! because the forward-difference gradient and its adjoint divergence make
//! the Laplacian a genuine Gram operator. The Coulomb connection is the
//! idempotent that extracts the longitudinal a-block directions — precisely
//! ker Ω_∞ of the gauge-classified chain — and annihilates everything
//! horizontal. It has constant coefficients, so the horizontal distribution
//! it defines is integrable (a flat connection).

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{PoissonSolver, SpatialLattice};
use crate::linalg;
use crate::presymp::{Classification, ConstraintChainResult};
use crate::scalar::Real;
use crate::slicing::SliceModel;

/// Idempotent projector onto ker Ω_∞ in final-subspace coordinates.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound = "S: Real")]
pub struct ConnectionProjector<S: Real> {
    #[serde(with = "crate::matio::mat")]
    matrix: Array2<S>,
    /// dim(range P) = dim ker Ω_∞.
    pub rank: usize,
    /// Measured ‖P² − P‖_max.
    pub idempotency_residual: f64,
    /// Measured ‖Ω_∞ P‖_max.
    pub range_residual: f64,
}

impl<S: Real> ConnectionProjector<S> {
    /// Validate and wrap a projector matrix against the form it must
    /// annihilate. Both checks are carried as diagnostics.
    pub fn from_matrix(matrix: Array2<S>, omega_final: &Array2<S>) -> Result<Self> {
        let n = matrix.nrows();
        if matrix.ncols() != n || omega_final.nrows() != n || omega_final.ncols() != n {
            return Err(Error::DimensionMismatch {
                context: "ConnectionProjector",
                expected: n,
                got: matrix.ncols().max(omega_final.nrows()),
            });
        }
        let idem = linalg::max_abs(&(matrix.dot(&matrix) - &matrix));
        let scale_p = {
            let m = linalg::max_abs(&matrix);
            if m > S::one() {
                m
            } else {
                S::one()
            }
        };
        if idem > S::of(1e-12) * scale_p {
            return Err(Error::InvalidValue {
                field: "projector".into(),
                reason: format!("not idempotent: |P²−P| = {:e}", idem.as_f64()),
            });
        }
        let range = linalg::max_abs(&omega_final.dot(&matrix));
        let scale_w = {
            let m = linalg::max_abs(omega_final);
            if m > S::one() {
                m
            } else {
                S::one()
            }
        };
        if range > S::of(1e-12) * scale_w {
            return Err(Error::InvalidValue {
                field: "projector".into(),
                reason: format!("range not in ker Ω: |ΩP| = {:e}", range.as_f64()),
            });
        }
        let rank = linalg::rank(&matrix, S::of(1e-8))?;
        Ok(Self {
            matrix,
            rank,
            idempotency_residual: idem.as_f64(),
            range_residual: range.as_f64(),
        })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &Array2<S> {
        &self.matrix
    }

    pub fn apply(&self, v: &Array1<S>) -> Array1<S> {
        self.matrix.dot(v)
    }

    /// ‖P v‖_max, the vertical content of a tangent vector.
    pub fn vertical_norm(&self, v: &Array1<S>) -> S {
        linalg::max_abs_vec(&self.apply(v))
    }

    /// Orthonormal basis of the horizontal subspace ker P.
    pub fn horizontal_basis(&self) -> Result<Array2<S>> {
        linalg::null_space(&self.matrix, S::of(1e-8))
    }
}

/// Split `[N_sites × d]` vector fields into transverse (divergence-free) and
/// longitudinal (gradient) parts: longitudinal = grad(Δ⁻¹ div v) with the
/// mean-zero pseudo-inverse, transverse = v − longitudinal.
pub fn helmholtz_decompose<S: Real>(
    lattice: &SpatialLattice<S>,
    vector_field: &Array2<S>,
) -> Result<(Array2<S>, Array2<S>)> {
    let n = lattice.n_sites();
    let d = lattice.ndim();
    if d == 0 {
        return Err(Error::UnsupportedSpec(
            "helmholtz decomposition needs d >= 1".into(),
        ));
    }
    if vector_field.dim() != (n, d) {
        return Err(Error::ShapeMismatch {
            context: "helmholtz vector_field",
            expected: vec![n, d],
            got: vector_field.shape().to_vec(),
        });
    }
    // component-major flat copy
    let mut flat = Array1::zeros(d * n);
    for j in 0..d {
        for s in 0..n {
            flat[j * n + s] = vector_field[[s, j]];
        }
    }
    let g = lattice.grad_matrix();
    let div_v = -g.t().dot(&flat);
    let solver = PoissonSolver::new(lattice)?;
    let psi = solver.solve(&div_v);
    let long_flat = g.dot(&psi);
    let mut longitudinal = Array2::zeros((n, d));
    let mut transverse = Array2::zeros((n, d));
    for j in 0..d {
        for s in 0..n {
            let l = long_flat[j * n + s];
            longitudinal[[s, j]] = l;
            transverse[[s, j]] = vector_field[[s, j]] - l;
        }
    }
    Ok((transverse, longitudinal))
}

/// Build the Coulomb connection for a gauge-classified slice model: the
/// orthogonal projector (in final-subspace coordinates) onto the discrete
/// gradient directions of the a-block. Fails with `KernelMismatch` when those
/// directions do not span ker Ω_∞, which would signal a modeling bug.
pub fn coulomb_projector<S: Real>(
    chain: &ConstraintChainResult<S>,
    model: &SliceModel<S>,
) -> Result<ConnectionProjector<S>> {
    if chain.classification != Classification::Gauge {
        return Err(Error::NotGauge);
    }
    let lattice = &model.spatial;
    let n = lattice.n_sites();
    let ambient = model.dim();
    let final_sub = chain.final_subspace();
    if final_sub.ambient_dim() != ambient {
        return Err(Error::DimensionMismatch {
            context: "coulomb_projector chain",
            expected: ambient,
            got: final_sub.ambient_dim(),
        });
    }
    // Gradient directions of the configuration block, embedded in the
    // ambient layout.
    let grads = linalg::range_space(&lattice.grad_matrix(), S::of(1e-10))?;
    let n_grad = grads.ncols();
    if n_grad != n - 1 {
        return Err(Error::KernelMismatch {
            detail: format!("gradient space has dim {n_grad}, expected {}", n - 1),
        });
    }
    let cfg = model.layout.config.clone();
    if cfg.len() != grads.nrows() {
        return Err(Error::KernelMismatch {
            detail: "config block does not match gradient field size".into(),
        });
    }
    let mut emb = Array2::zeros((ambient, n_grad));
    for c in 0..n_grad {
        for (row_local, row_amb) in cfg.clone().enumerate() {
            emb[[row_amb, c]] = grads[[row_local, c]];
        }
    }
    // The gradient directions must be tangent to the final subspace.
    let b = final_sub.basis();
    let coords = b.t().dot(&emb);
    let back = b.dot(&coords);
    let tangent_residual = linalg::max_abs(&(&back - &emb));
    if tangent_residual > S::of(1e-8) {
        return Err(Error::KernelMismatch {
            detail: format!(
                "gradient directions leave the final subspace (residual {:e})",
                tangent_residual.as_f64()
            ),
        });
    }
    let q = linalg::orthonormalize(&coords)?;
    // Span check against ker Ω_∞.
    let kb = chain.kernel_final.basis();
    if kb.ncols() != n_grad {
        return Err(Error::KernelMismatch {
            detail: format!(
                "ker Ω_∞ has dim {}, gradient block has dim {n_grad}",
                kb.ncols()
            ),
        });
    }
    let pg = q.dot(&q.t());
    let pk = kb.dot(&kb.t());
    let span_dev = linalg::max_abs(&(&pg - &pk));
    if span_dev > S::of(1e-8) {
        return Err(Error::KernelMismatch {
            detail: format!("ker Ω_∞ ≠ gradient block (deviation {:e})", span_dev.as_f64()),
        });
    }
    ConnectionProjector::from_matrix(pg, &chain.omega_final)
}

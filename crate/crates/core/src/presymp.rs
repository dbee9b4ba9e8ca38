//! Finite-dimensional linear pre-symplectic Hamiltonian systems.
//!
//! A system is a triple (ℝⁿ, ω, H): an antisymmetric coordinate matrix ω for
//! the 2-form and a quadratic Hamiltonian H(z) = ½ zᵀQz + bᵀz + c. The flat
//! map ♭ sends a vector X to the 1-form ω(X, ·); where ω is degenerate the
//! canonical equation i_Γ ω = dH only makes sense on the subset carved out by
//! the constraint algorithm below.
//!
//! Sign convention, fixed once for the whole crate: `flat_solve(ω, c)`
//! returns the X with ω(X, ·) = c, i.e. the matrix equation ωᵀX = c. With
//! ω = [[0, 1], [−1, 0]] on (q, p) and c = dq this gives X = −∂/∂p, which is
//! the convention the free-particle bracket {q(t₂), q(t₁)} = (t₁ − t₂)/m
//! pins down.

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::connection::ConnectionProjector;
use crate::error::{Error, Result};
use crate::linalg;
use crate::matio;
use crate::scalar::Real;

/// Default relative singular-value cutoff for rank decisions.
pub const DEFAULT_RANK_RTOL: f64 = 1e-10;
/// Default iteration cap for the constraint algorithm.
pub const DEFAULT_MAX_ITER: usize = 64;

/// Absolute tolerance on ‖ω + ωᵀ‖_max before a form is rejected.
const ANTISYM_TOL: f64 = 1e-10;
/// Absolute tolerance on ‖Q − Qᵀ‖_max before a Hamiltonian is rejected.
const SYM_TOL: f64 = 1e-12;
/// Tolerance on ‖BᵀB − I‖_max for subspace bases.
const ORTHO_TOL: f64 = 1e-10;
/// Relative tolerance under which a constraint row counts as holding
/// identically on the current subspace.
const STABILITY_RTOL: f64 = 1e-10;

/// H(z) = ½ zᵀQz + bᵀz + c with symmetric Q.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound = "S: Real")]
pub struct QuadraticHamiltonian<S: Real> {
    #[serde(with = "matio::mat")]
    q: Array2<S>,
    #[serde(with = "matio::vec")]
    b: Array1<S>,
    c: S,
}

impl<S: Real> QuadraticHamiltonian<S> {
    pub fn new(q: Array2<S>, b: Array1<S>, c: S) -> Result<Self> {
        if q.nrows() != q.ncols() {
            return Err(Error::DimensionMismatch {
                context: "QuadraticHamiltonian Q",
                expected: q.nrows(),
                got: q.ncols(),
            });
        }
        if b.len() != q.nrows() {
            return Err(Error::DimensionMismatch {
                context: "QuadraticHamiltonian b",
                expected: q.nrows(),
                got: b.len(),
            });
        }
        let asym = linalg::max_abs(&(&q - &q.t()));
        if asym > S::tol(SYM_TOL, 1e2) {
            return Err(Error::NonSymmetric {
                max_violation: asym.as_f64(),
            });
        }
        // Symmetrize exactly so downstream identities hold to machine precision.
        let q = (&q + &q.t()) * S::of(0.5);
        Ok(Self { q, b, c })
    }

    /// Zero Hamiltonian on `dim` coordinates.
    pub fn zero(dim: usize) -> Self {
        Self {
            q: Array2::zeros((dim, dim)),
            b: Array1::zeros(dim),
            c: S::zero(),
        }
    }

    pub fn dim(&self) -> usize {
        self.q.nrows()
    }

    pub fn q(&self) -> &Array2<S> {
        &self.q
    }

    pub fn b(&self) -> &Array1<S> {
        &self.b
    }

    pub fn constant(&self) -> S {
        self.c
    }

    pub fn value(&self, z: &Array1<S>) -> S {
        let qz = self.q.dot(z);
        S::of(0.5) * z.dot(&qz) + self.b.dot(z) + self.c
    }

    /// ∇H(z) = Qz + b.
    pub fn gradient(&self, z: &Array1<S>) -> Array1<S> {
        self.q.dot(z) + &self.b
    }

    /// Pull back through the affine map z = Bw + o.
    pub fn pull_back(&self, basis: &Array2<S>, offset: &Array1<S>) -> Self {
        let qb = self.q.dot(basis);
        let q = basis.t().dot(&qb);
        let grad_o = self.q.dot(offset) + &self.b;
        let b = basis.t().dot(&grad_o);
        let c = self.value(offset);
        Self { q, b, c }
    }
}

/// (ℝⁿ, ω, H) with antisymmetric ω.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound = "S: Real")]
pub struct PresymplecticSystem<S: Real> {
    #[serde(with = "matio::mat")]
    omega: Array2<S>,
    hamiltonian: QuadraticHamiltonian<S>,
    /// Free-form coordinate labels, one per dimension (may be empty).
    pub metadata: Vec<String>,
}

impl<S: Real> PresymplecticSystem<S> {
    pub fn new(
        omega: Array2<S>,
        hamiltonian: QuadraticHamiltonian<S>,
        metadata: Vec<String>,
    ) -> Result<Self> {
        check_antisymmetric(&omega)?;
        if hamiltonian.dim() != omega.nrows() {
            return Err(Error::DimensionMismatch {
                context: "PresymplecticSystem hamiltonian",
                expected: omega.nrows(),
                got: hamiltonian.dim(),
            });
        }
        Ok(Self {
            omega,
            hamiltonian,
            metadata,
        })
    }

    pub fn dim(&self) -> usize {
        self.omega.nrows()
    }

    pub fn omega(&self) -> &Array2<S> {
        &self.omega
    }

    pub fn hamiltonian(&self) -> &QuadraticHamiltonian<S> {
        &self.hamiltonian
    }
}

fn check_antisymmetric<S: Real>(omega: &Array2<S>) -> Result<()> {
    if omega.nrows() != omega.ncols() {
        return Err(Error::DimensionMismatch {
            context: "omega",
            expected: omega.nrows(),
            got: omega.ncols(),
        });
    }
    let v = linalg::max_abs(&(omega + &omega.t()));
    if v > S::tol(ANTISYM_TOL, 1e2) {
        return Err(Error::NonAntisymmetric {
            max_violation: v.as_f64(),
        });
    }
    Ok(())
}

/// Affine subspace {Bw + o : w ∈ ℝᵏ} of ℝⁿ with orthonormal B.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound = "S: Real")]
pub struct LinearSubspace<S: Real> {
    #[serde(with = "matio::mat")]
    basis: Array2<S>,
    #[serde(with = "matio::vec")]
    offset: Array1<S>,
}

impl<S: Real> LinearSubspace<S> {
    pub fn new(basis: Array2<S>, offset: Array1<S>) -> Result<Self> {
        if basis.ncols() > basis.nrows() {
            return Err(Error::DimensionMismatch {
                context: "LinearSubspace basis",
                expected: basis.nrows(),
                got: basis.ncols(),
            });
        }
        if offset.len() != basis.nrows() {
            return Err(Error::DimensionMismatch {
                context: "LinearSubspace offset",
                expected: basis.nrows(),
                got: offset.len(),
            });
        }
        let gram = basis.t().dot(&basis);
        let dev = linalg::max_abs(&(gram - Array2::eye(basis.ncols())));
        if dev > S::tol(ORTHO_TOL, 1e3) {
            return Err(Error::NonOrthonormalBasis {
                max_violation: dev.as_f64(),
            });
        }
        Ok(Self { basis, offset })
    }

    /// The whole ambient space.
    pub fn full(ambient_dim: usize) -> Self {
        Self {
            basis: Array2::eye(ambient_dim),
            offset: Array1::zeros(ambient_dim),
        }
    }

    /// Span of the given (orthonormalized) columns through the origin.
    pub fn span(columns: Array2<S>) -> Result<Self> {
        let n = columns.nrows();
        let basis = linalg::orthonormalize(&columns)?;
        Self::new(basis, Array1::zeros(n))
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn basis(&self) -> &Array2<S> {
        &self.basis
    }

    pub fn offset(&self) -> &Array1<S> {
        &self.offset
    }

    /// z = Bw + o.
    pub fn embed(&self, coords: &Array1<S>) -> Array1<S> {
        self.basis.dot(coords) + &self.offset
    }

    /// w = Bᵀ(z − o).
    pub fn coords(&self, point: &Array1<S>) -> Array1<S> {
        self.basis.t().dot(&(point - &self.offset))
    }

    /// Orthogonal projection of an ambient point onto the affine subspace.
    pub fn project(&self, point: &Array1<S>) -> Array1<S> {
        self.embed(&self.coords(point))
    }

    /// Max-norm distance between a point and its projection.
    pub fn distance(&self, point: &Array1<S>) -> S {
        linalg::max_abs_vec(&(point - &self.project(point)))
    }
}

/// Symplectic vs gauge outcome of the constraint algorithm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Classification {
    /// Ω_∞ nondegenerate on the final subspace.
    Symplectic,
    /// Ω_∞ keeps a nontrivial kernel; a connection is needed for brackets.
    Gauge,
}

/// Output of [`constraint_algorithm`]: the descending chain M₀ ⊇ M₁ ⊇ … ⊇ M_∞
/// with the pulled-back form and Hamiltonian on the final subspace.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound = "S: Real")]
pub struct ConstraintChainResult<S: Real> {
    /// M₀ … M_∞ as ambient affine subspaces.
    pub chain: Vec<LinearSubspace<S>>,
    /// Ω_∞ = BᵀωB in final-subspace coordinates.
    #[serde(with = "matio::mat")]
    pub omega_final: Array2<S>,
    /// H_∞(w) = H(Bw + o).
    pub hamiltonian_final: QuadraticHamiltonian<S>,
    /// ker Ω_∞, expressed inside the final-subspace coordinates.
    pub kernel_final: LinearSubspace<S>,
    pub classification: Classification,
    /// Number of strict restriction steps performed.
    pub iterations: usize,
}

impl<S: Real> ConstraintChainResult<S> {
    pub fn final_subspace(&self) -> &LinearSubspace<S> {
        self.chain.last().expect("chain is never empty")
    }

    pub fn final_dim(&self) -> usize {
        self.final_subspace().dim()
    }

    pub fn kernel_dim(&self) -> usize {
        self.kernel_final.dim()
    }

    /// Dimensions along the chain, M₀ first.
    pub fn dims(&self) -> Vec<usize> {
        self.chain.iter().map(|m| m.dim()).collect()
    }

    /// σ_min/σ_max of Ω_∞; zero for an identically degenerate or empty form.
    pub fn omega_condition(&self) -> Result<S> {
        if self.omega_final.nrows() == 0 {
            return Ok(S::zero());
        }
        let sv = linalg::singular_values(&self.omega_final)?;
        let smax = sv[0];
        if smax == S::zero() {
            return Ok(S::zero());
        }
        Ok(sv[sv.len() - 1] / smax)
    }
}

/// Orthonormal basis of ker ω.
///
/// Singular values at or below `rank_rtol · σ_max` are treated as zero.
pub fn kernel<S: Real>(omega: &Array2<S>, rank_rtol: S) -> Result<LinearSubspace<S>> {
    check_antisymmetric(omega)?;
    let basis = linalg::null_space(omega, rank_rtol)?;
    LinearSubspace::new(basis, Array1::zeros(omega.nrows()))
}

/// Orthosymplectic complement {X : ω(X, Y) = 0 ∀ Y ∈ subspace}, i.e. the
/// null space of Bᵀωᵀ for the subspace basis B.
pub fn orthosymplectic_complement<S: Real>(
    system: &PresymplecticSystem<S>,
    subspace: &LinearSubspace<S>,
    rank_rtol: S,
) -> Result<LinearSubspace<S>> {
    if subspace.ambient_dim() != system.dim() {
        return Err(Error::DimensionMismatch {
            context: "orthosymplectic_complement subspace",
            expected: system.dim(),
            got: subspace.ambient_dim(),
        });
    }
    // ω(X, By) = Xᵀ(ωB)y for all y  ⇔  (ωB)ᵀX = 0.
    let wb = if linalg::is_identity(subspace.basis()) {
        system.omega().clone()
    } else {
        system.omega().dot(subspace.basis())
    };
    let basis = linalg::null_space(&wb.t().to_owned(), rank_rtol)?;
    LinearSubspace::new(basis, Array1::zeros(system.dim()))
}

/// Pre-symplectic constraint algorithm started from the full space.
///
/// Iterates Mₙ = {m ∈ Mₙ₋₁ : dH(m)·X = 0 ∀ X ∈ T Mₙ₋₁^⊥}. For quadratic H
/// the step condition is the affine-linear system Pᵀ(Qz + b) = 0 with P a
/// basis of the orthosymplectic complement, intersected with Mₙ₋₁. The loop
/// stops when the conditions hold identically on the current subspace.
pub fn constraint_algorithm<S: Real>(
    system: &PresymplecticSystem<S>,
    rank_rtol: S,
    max_iter: usize,
) -> Result<ConstraintChainResult<S>> {
    constraint_algorithm_seeded(system, LinearSubspace::full(system.dim()), rank_rtol, max_iter)
}

/// Constraint algorithm started from a given initial submanifold M₀.
///
/// The gauge-fixed electrodynamics pipeline seeds {a₀ = 0}; everything else
/// uses the full space.
pub fn constraint_algorithm_seeded<S: Real>(
    system: &PresymplecticSystem<S>,
    seed: LinearSubspace<S>,
    rank_rtol: S,
    max_iter: usize,
) -> Result<ConstraintChainResult<S>> {
    if seed.ambient_dim() != system.dim() {
        return Err(Error::DimensionMismatch {
            context: "constraint_algorithm seed",
            expected: system.dim(),
            got: seed.ambient_dim(),
        });
    }
    if max_iter == 0 {
        return Err(Error::InvalidValue {
            field: "max_iter".into(),
            reason: "must be >= 1".into(),
        });
    }
    let q = system.hamiltonian().q();
    let b = system.hamiltonian().b();
    let cond_scale = {
        let qs = linalg::max_abs(q);
        let bs = linalg::max_abs_vec(b);
        let one = S::one();
        let m = if qs > bs { qs } else { bs };
        if m > one {
            m
        } else {
            one
        }
    };
    let tol_identical = S::tol(STABILITY_RTOL, 1e3) * cond_scale;

    let mut chain = vec![seed];
    let mut iterations = 0usize;
    loop {
        let current = chain.last().unwrap();
        let comp = orthosymplectic_complement(system, current, rank_rtol)?;
        // Condition rows on current coordinates w (z = Bw + o):
        //   (PᵀQB) w = −Pᵀ(Qo + b).
        let qb = if linalg::is_identity(current.basis()) {
            q.clone()
        } else {
            q.dot(current.basis())
        };
        let lhs = comp.basis().t().dot(&qb);
        let rhs = -comp.basis().t().dot(&(q.dot(current.offset()) + b));
        let holds_identically =
            linalg::max_abs(&lhs) <= tol_identical && linalg::max_abs_vec(&rhs) <= tol_identical;
        if holds_identically {
            break;
        }
        if iterations >= max_iter {
            return Err(Error::NoConvergence { max_iter });
        }
        // Intersect: minimum-norm particular solution plus null space,
        // from a single factorization.
        let (w0, null, resid) = linalg::affine_kernel_solve(&lhs, &rhs, rank_rtol)?;
        if resid > tol_identical * (S::one() + linalg::max_abs_vec(&rhs)) {
            return Err(Error::EmptyFinalManifold);
        }
        let product = if linalg::is_identity(current.basis()) {
            null
        } else {
            current.basis().dot(&null)
        };
        let new_basis = linalg::orthonormalize(&product)?;
        let new_offset = current.embed(&w0);
        let next = LinearSubspace::new(new_basis, new_offset)?;
        // A step that removes nothing while conditions still fail numerically
        // would loop forever; treat it as stabilized.
        let stalled = next.dim() == current.dim();
        chain.push(next);
        iterations += 1;
        if stalled {
            break;
        }
    }

    let final_sub = chain.last().unwrap();
    let omega_final = final_sub
        .basis()
        .t()
        .dot(&system.omega().dot(final_sub.basis()));
    // Clean antisymmetry up to roundoff so downstream checks see an exact form.
    let omega_final = (&omega_final - &omega_final.t()) * S::of(0.5);
    let hamiltonian_final = system
        .hamiltonian()
        .pull_back(final_sub.basis(), final_sub.offset());
    let kernel_final = kernel(&omega_final, rank_rtol)?;
    let classification = if kernel_final.dim() == 0 {
        Classification::Symplectic
    } else {
        Classification::Gauge
    };
    Ok(ConstraintChainResult {
        chain,
        omega_final,
        hamiltonian_final,
        kernel_final,
        classification,
        iterations,
    })
}

/// Solve ω(X, ·) = covector for X, optionally constrained to the horizontal
/// subspace of a connection.
///
/// In matrix form the equation is ωᵀX = c. For nondegenerate ω the solution
/// is unique. For degenerate ω a [`ConnectionProjector`] must be supplied;
/// the covector must annihilate ker ω and the returned X is the unique
/// solution with P·X = 0.
pub fn flat_solve<S: Real>(
    omega_final: &Array2<S>,
    covector: &Array1<S>,
    horizontal: Option<&ConnectionProjector<S>>,
) -> Result<Array1<S>> {
    flat_solve_with(omega_final, covector, horizontal, S::of(DEFAULT_RANK_RTOL))
}

pub fn flat_solve_with<S: Real>(
    omega_final: &Array2<S>,
    covector: &Array1<S>,
    horizontal: Option<&ConnectionProjector<S>>,
    rank_rtol: S,
) -> Result<Array1<S>> {
    let n = omega_final.nrows();
    if covector.len() != n {
        return Err(Error::DimensionMismatch {
            context: "flat_solve covector",
            expected: n,
            got: covector.len(),
        });
    }
    if n == 0 {
        return Ok(Array1::zeros(0));
    }
    let sv = linalg::singular_values(omega_final)?;
    let smax = sv[0];
    let degenerate = smax == S::zero() || sv[n - 1] <= rank_rtol * smax;

    match (degenerate, horizontal) {
        (false, _) => {
            // ωᵀX = c  ⇔  ωX = −c.
            use ndarray_linalg::Solve;
            let rhs = covector.mapv(|x| -x);
            let x = omega_final.solve(&rhs)?;
            Ok(x)
        }
        (true, None) => Err(Error::DegenerateWithoutConnection),
        (true, Some(proj)) => {
            if proj.dim() != n {
                return Err(Error::DimensionMismatch {
                    context: "flat_solve projector",
                    expected: n,
                    got: proj.dim(),
                });
            }
            let ker = kernel(omega_final, rank_rtol)?;
            let overlap = linalg::max_abs_vec(&ker.basis().t().dot(covector));
            let scale = S::one() + linalg::max_abs_vec(covector);
            if overlap > S::of(1e-10) * scale {
                return Err(Error::InconsistentCovector {
                    overlap: overlap.as_f64(),
                });
            }
            // Restrict to the horizontal complement: X = Hy with H a basis of
            // ker P, then solve the (consistent) overdetermined system
            // (ωᵀH) y = c in least squares.
            let h = linalg::null_space(proj.matrix(), rank_rtol)?;
            let a = omega_final.t().dot(&h);
            let (y, _) = linalg::lstsq(&a, covector)?;
            let x = h.dot(&y);
            let resid = linalg::max_abs_vec(&(omega_final.t().dot(&x) - covector));
            if resid > S::of(1e-10) * scale {
                return Err(Error::InconsistentCovector {
                    overlap: resid.as_f64(),
                });
            }
            Ok(x)
        }
    }
}

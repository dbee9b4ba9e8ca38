//! Periodic spatial lattices and their difference operators.
//!
//! Conventions used throughout the crate:
//!
//! * sites are indexed row-major over the shape `(n₁, …, n_d)`;
//! * vector fields are stored component-major: entry `j·N + s` is the j-th
//!   component at site `s`;
//! * the gradient is the forward difference `(f(x+h eⱼ) − f(x))/hⱼ` with
//!   periodic wrap, and the divergence is its negative adjoint (a backward
//!   difference), so `⟨grad f, v⟩ = −⟨f, div v⟩` holds exactly and the
//!   discrete Laplacian `div∘grad` is symmetric negative semidefinite with
//!   kernel spanned by the constants;
//! * centered differences are kept separate; they discretize the field
//!   equations for residual evaluation, never the slice constraints.

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Guard against accidentally enormous lattices (dense operators ahead).
const MAX_SITES: usize = 1 << 20;

/// Periodic spatial lattice with per-axis spacing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Real")]
pub struct SpatialLattice<S: Real> {
    shape: Vec<usize>,
    spacing: Vec<S>,
}

impl<S: Real> SpatialLattice<S> {
    pub fn new(shape: Vec<usize>, spacing: Vec<S>) -> Result<Self> {
        if shape.len() != spacing.len() {
            return Err(Error::DimensionMismatch {
                context: "SpatialLattice spacing",
                expected: shape.len(),
                got: spacing.len(),
            });
        }
        for &n in &shape {
            if n < 2 {
                return Err(Error::InvalidValue {
                    field: "shape".into(),
                    reason: "each axis needs at least 2 sites".into(),
                });
            }
        }
        for &h in &spacing {
            if !(h > S::zero()) {
                return Err(Error::InvalidValue {
                    field: "spacing".into(),
                    reason: "spacing must be positive".into(),
                });
            }
        }
        let n: usize = shape.iter().product();
        if n == 0 || n > MAX_SITES {
            return Err(Error::InvalidValue {
                field: "shape".into(),
                reason: format!("total site count {n} outside (0, {MAX_SITES}]"),
            });
        }
        Ok(Self { shape, spacing })
    }

    /// Uniform spacing on every axis.
    pub fn cubic(shape: Vec<usize>, h: S) -> Result<Self> {
        let d = shape.len();
        Self::new(shape, vec![h; d])
    }

    /// The d = 0 lattice of a point-particle theory: one site, no axes.
    pub fn point() -> Self {
        Self {
            shape: vec![],
            spacing: vec![],
        }
    }

    pub fn ndim(&self) -> usize {
        self.shape.len()
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn spacing(&self) -> &[S] {
        &self.spacing
    }

    pub fn n_sites(&self) -> usize {
        self.shape.iter().product()
    }

    /// Cell volume ∏ hⱼ (1 for d = 0).
    pub fn cell_volume(&self) -> S {
        self.spacing.iter().fold(S::one(), |a, &h| a * h)
    }

    pub fn site_index(&self, multi: &[usize]) -> usize {
        debug_assert_eq!(multi.len(), self.ndim());
        let mut idx = 0;
        for (a, &m) in multi.iter().enumerate() {
            idx = idx * self.shape[a] + (m % self.shape[a]);
        }
        idx
    }

    pub fn site_coords(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.ndim()];
        for a in (0..self.ndim()).rev() {
            out[a] = index % self.shape[a];
            index /= self.shape[a];
        }
        out
    }

    /// Index of the site shifted by ±1 along `axis` (periodic).
    pub fn neighbor(&self, index: usize, axis: usize, step: isize) -> usize {
        let mut c = self.site_coords(index);
        let n = self.shape[axis] as isize;
        c[axis] = ((c[axis] as isize + step).rem_euclid(n)) as usize;
        self.site_index(&c)
    }

    /// Dense forward-difference matrix along `axis` (N×N).
    pub fn forward_diff(&self, axis: usize) -> Array2<S> {
        let n = self.n_sites();
        let h_inv = S::one() / self.spacing[axis];
        let mut m = Array2::zeros((n, n));
        for s in 0..n {
            let sp = self.neighbor(s, axis, 1);
            m[[s, sp]] += h_inv;
            m[[s, s]] -= h_inv;
        }
        m
    }

    /// Dense centered-difference matrix along `axis` (N×N).
    pub fn centered_diff(&self, axis: usize) -> Array2<S> {
        let n = self.n_sites();
        let half = S::of(0.5) / self.spacing[axis];
        let mut m = Array2::zeros((n, n));
        for s in 0..n {
            let sp = self.neighbor(s, axis, 1);
            let sm = self.neighbor(s, axis, -1);
            m[[s, sp]] += half;
            m[[s, sm]] -= half;
        }
        m
    }

    /// Stacked forward gradient: (d·N)×N, component-major rows.
    pub fn grad_matrix(&self) -> Array2<S> {
        let n = self.n_sites();
        let d = self.ndim();
        let mut g = Array2::zeros((d * n, n));
        for axis in 0..d {
            let da = self.forward_diff(axis);
            g.slice_mut(ndarray::s![axis * n..(axis + 1) * n, ..])
                .assign(&da);
        }
        g
    }

    /// Backward divergence, the exact negative adjoint of [`Self::grad_matrix`]:
    /// N×(d·N), `div = −gradᵀ`.
    pub fn div_matrix(&self) -> Array2<S> {
        -self.grad_matrix().t().to_owned()
    }

    /// Discrete Laplacian `div∘grad`: symmetric, negative semidefinite,
    /// kernel = constants.
    pub fn laplacian_matrix(&self) -> Array2<S> {
        let g = self.grad_matrix();
        -g.t().dot(&g)
    }

    /// Discrete curl into upper-triangle pair components (d = 3 only):
    /// row block for the pair (j, k), j < k, holds ∂ₖaⱼ − ∂ⱼaₖ (forward
    /// differences). The pair ordering is (1,2), (1,3), (2,3).
    pub fn curl_matrix(&self) -> Result<Array2<S>> {
        if self.ndim() != 3 {
            return Err(Error::UnsupportedSpec(format!(
                "curl needs d = 3, lattice has d = {}",
                self.ndim()
            )));
        }
        let n = self.n_sites();
        let d_mats: Vec<Array2<S>> = (0..3).map(|a| self.forward_diff(a)).collect();
        let mut c = Array2::zeros((3 * n, 3 * n));
        for (row, &(j, k)) in PAIRS_3D.iter().enumerate() {
            // β_{jk} = ∂ₖ aⱼ − ∂ⱼ aₖ
            c.slice_mut(ndarray::s![row * n..(row + 1) * n, j * n..(j + 1) * n])
                .assign(&d_mats[k]);
            c.slice_mut(ndarray::s![row * n..(row + 1) * n, k * n..(k + 1) * n])
                .assign(&d_mats[j].mapv(|x| -x));
        }
        Ok(c)
    }

    /// Integer wavevector tuples (n₁, …, n_d) with nⱼ ∈ [0, Nⱼ).
    pub fn wavevectors(&self) -> Vec<Vec<usize>> {
        let n = self.n_sites();
        (0..n).map(|i| self.site_coords(i)).collect()
    }
}

/// Antisymmetric index pairs for d = 3, in storage order.
pub const PAIRS_3D: [(usize, usize); 3] = [(0, 1), (0, 2), (1, 2)];

/// Pseudo-inverse of the discrete Laplacian via its eigendecomposition,
/// with the constant zero mode projected out.
#[derive(Debug, Clone)]
pub struct PoissonSolver<S: Real> {
    evecs: Array2<S>,
    inv_evals: Array1<S>,
}

impl<S: Real> PoissonSolver<S> {
    pub fn new(lattice: &SpatialLattice<S>) -> Result<Self> {
        use ndarray_linalg::{Eigh, UPLO};
        let lap = lattice.laplacian_matrix();
        let (evals, evecs) = lap.eigh(UPLO::Lower)?;
        let max_mag = evals.iter().fold(S::zero(), |m, &x| {
            let a = x.abs();
            if a > m {
                a
            } else {
                m
            }
        });
        let cutoff = S::of(1e-10) * if max_mag > S::zero() { max_mag } else { S::one() };
        let inv_evals = evals.mapv(|l| if l.abs() > cutoff { S::one() / l } else { S::zero() });
        Ok(Self { evecs, inv_evals })
    }

    /// Minimum-norm solution of Δx = rhs (the mean of x is zero; any mean
    /// component of rhs is annihilated).
    pub fn solve(&self, rhs: &Array1<S>) -> Array1<S> {
        let y = self.evecs.t().dot(rhs);
        let y = &y * &self.inv_evals;
        self.evecs.dot(&y)
    }
}

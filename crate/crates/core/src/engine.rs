//! Evolution of Cauchy data, observable pullback, Hamiltonian vector fields
//! and covariant Poisson brackets on the final constraint manifold.
//!
//! Everything here works in F_∞ coordinates, i.e. the coordinates of the
//! final subspace returned by the constraint algorithm. The reduced dynamics
//! is run in natural (configuration, momentum) block coordinates where it
//! decomposes into independent modes of the spatial operator:
//!
//! ```text
//! ċ = π/μ ,   π̇ = −K c      ⇒      per eigenmode ω² = λ/μ:
//! c(t) = c cos ωt + π sin ωt/(μω),  π(t) = −c μω sin ωt + π cos ωt
//! ```
//!
//! with the ω → 0 drift limit c(t) = c + π t/μ. The spectral flow is exact
//! (up to the symmetric eigensolve) and symplectic; a leapfrog integrator is
//! kept only to demonstrate that brackets are integrator-independent within
//! O(dt²).
//!
//! Brackets follow the flat-map convention fixed in [`crate::presymp`]:
//! X_f solves Ω_∞(X_f, ·) = df and `bracket(f, g) = dg(X_f)`, which for the
//! free particle gives {q(t₂), q(t₁)} = (t₁ − t₂)/m.

use ndarray::{Array1, Array2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::connection::ConnectionProjector;
use crate::ddw::DensityModel;
use crate::error::{Error, Result};
use crate::lattice::PoissonSolver;
use crate::linalg;
use crate::presymp::{Classification, ConstraintChainResult};
use crate::scalar::Real;
use crate::slicing::SliceModel;

/// Which entry of the slice data a field-point observable reads.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FieldComponent {
    /// Configuration component: φ^a (vector boson, 0-based) or a_k
    /// (electrodynamics, k ∈ 1..=3). The free particle uses 0.
    Field(usize),
    /// Time-component momentum: P⁰_a, or p^k = P^{k0} for electrodynamics.
    MomentumTime(usize),
}

/// Observable on the solution space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Real")]
pub enum ObservableKind<S: Real> {
    /// Linear functional on F_∞ coordinates.
    CauchyLinear {
        #[serde(with = "crate::matio::vec")]
        coefficients: Array1<S>,
    },
    /// Field evaluation at a lattice site and a spacetime time.
    FieldPoint {
        component: FieldComponent,
        site: Vec<usize>,
        t: S,
        /// Electrodynamics only: project the a-field onto its transverse
        /// part before evaluating (the gauge-invariant choice).
        transverse: bool,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Real")]
pub struct Observable<S: Real> {
    pub kind: ObservableKind<S>,
    pub label: String,
}

impl<S: Real> Observable<S> {
    pub fn cauchy_linear(coefficients: Array1<S>, label: impl Into<String>) -> Self {
        Self {
            kind: ObservableKind::CauchyLinear { coefficients },
            label: label.into(),
        }
    }

    pub fn field_point(
        component: FieldComponent,
        site: Vec<usize>,
        t: S,
        label: impl Into<String>,
    ) -> Self {
        Self {
            kind: ObservableKind::FieldPoint {
                component,
                site,
                t,
                transverse: false,
            },
            label: label.into(),
        }
    }

    pub fn transverse_field_point(
        component: FieldComponent,
        site: Vec<usize>,
        t: S,
        label: impl Into<String>,
    ) -> Self {
        Self {
            kind: ObservableKind::FieldPoint {
                component,
                site,
                t,
                transverse: true,
            },
            label: label.into(),
        }
    }
}

/// Evolution window for field-point observables.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeWindow<S> {
    pub t_min: S,
    pub t_max: S,
}

impl<S: Real> TimeWindow<S> {
    pub fn new(t_min: S, t_max: S) -> Self {
        Self { t_min, t_max }
    }

    pub fn contains(&self, t: S) -> bool {
        t >= self.t_min && t <= self.t_max
    }
}

#[derive(Debug, Clone)]
enum FlowKind<S: Real> {
    /// Exact per-mode evolution.
    Spectral,
    /// Fixed-step kick-drift-kick integrator.
    Leapfrog { dt: S },
}

/// Linear flow on F_∞ built from the slice model structure.
#[derive(Debug, Clone)]
pub struct FlowOperator<S: Real> {
    kind: FlowKind<S>,
    window: TimeWindow<S>,
    /// Chain basis B: ambient × k.
    basis: Array2<S>,
    /// Config/momentum block ranges in the ambient layout.
    config: std::ops::Range<usize>,
    mom: std::ops::Range<usize>,
    beta: Option<std::ops::Range<usize>>,
    /// β = G c on the constraint surface.
    constraint_map: Option<Array2<S>>,
    /// Orthonormal mode basis V (config dim × n_modes) and frequencies.
    modes: Array2<S>,
    omegas: Array1<S>,
    /// ċ = π/μ.
    velocity_mass: S,
    /// Stiffness K (for the leapfrog path).
    stiffness: Array2<S>,
    /// Horizontality checks for gauge systems.
    projector: Option<ConnectionProjector<S>>,
    /// Transverse projector on the config block (electrodynamics).
    transverse_projector: Option<Array2<S>>,
    /// Lattice shape for site indexing.
    spatial_shape: Vec<usize>,
    fiber: usize,
    electro: bool,
}

/// Exactness threshold below which a mode is treated as a drift (ω = 0).
const DRIFT_RTOL: f64 = 1e-10;

/// Relative horizontality tolerance for gauge-case states.
const HORIZONTAL_TOL: f64 = 1e-9;

/// Construct the (spectral) flow for a chain result.
///
/// Gauge-classified chains need the Coulomb projector; the flow then acts on
/// the horizontal modes only. `NonDiagonalizable` is never produced by the
/// built-in models (their stiffness operators are symmetric); callers wanting
/// the integrator fallback use [`build_flow_leapfrog`].
pub fn build_flow<S: Real>(
    model: &SliceModel<S>,
    chain: &ConstraintChainResult<S>,
    projector: Option<&ConnectionProjector<S>>,
    window: TimeWindow<S>,
) -> Result<FlowOperator<S>> {
    build_flow_impl(model, chain, projector, window, FlowKind::Spectral)
}

/// Leapfrog variant of [`build_flow`], for integrator-independence checks.
pub fn build_flow_leapfrog<S: Real>(
    model: &SliceModel<S>,
    chain: &ConstraintChainResult<S>,
    projector: Option<&ConnectionProjector<S>>,
    window: TimeWindow<S>,
    dt: S,
) -> Result<FlowOperator<S>> {
    if !(dt > S::zero()) {
        return Err(Error::InvalidValue {
            field: "dt".into(),
            reason: "leapfrog step must be positive".into(),
        });
    }
    build_flow_impl(model, chain, projector, window, FlowKind::Leapfrog { dt })
}

fn build_flow_impl<S: Real>(
    model: &SliceModel<S>,
    chain: &ConstraintChainResult<S>,
    projector: Option<&ConnectionProjector<S>>,
    window: TimeWindow<S>,
    kind: FlowKind<S>,
) -> Result<FlowOperator<S>> {
    use ndarray_linalg::{Eigh, UPLO};

    if chain.classification == Classification::Gauge && projector.is_none() {
        return Err(Error::MissingProjector);
    }
    let blocks = model.flow_blocks()?;
    let (modes, lambdas) = match &blocks.momentum_subspace {
        None => {
            let (l, v) = blocks.stiffness.eigh(UPLO::Lower)?;
            (v, l)
        }
        Some(h) => {
            let k_red = h.t().dot(&blocks.stiffness.dot(h));
            let k_red = (&k_red + &k_red.t()) * S::of(0.5);
            let (l, w) = k_red.eigh(UPLO::Lower)?;
            (h.dot(&w), l)
        }
    };
    let lam_max = lambdas.iter().fold(S::zero(), |m, &x| {
        let a = x.abs();
        if a > m {
            a
        } else {
            m
        }
    });
    let cut = S::of(DRIFT_RTOL) * if lam_max > S::zero() { lam_max } else { S::one() };
    let omegas = lambdas.mapv(|l| if l > cut { (l / blocks.velocity_mass).sqrt() } else { S::zero() });

    let transverse_projector = match &model.spec.density {
        DensityModel::Electrodynamics => {
            let lat = &model.spatial;
            let n = lat.n_sites();
            let g = lat.grad_matrix();
            let solver = PoissonSolver::new(lat)?;
            // L = grad ∘ Δ⁺ ∘ div, column by column; T = I − L.
            let div = lat.div_matrix();
            let mut t_mat = Array2::eye(3 * n);
            for col in 0..3 * n {
                let d_col = div.column(col).to_owned();
                let psi = solver.solve(&d_col);
                let l_col = g.dot(&psi);
                for row in 0..3 * n {
                    t_mat[[row, col]] -= l_col[row];
                }
            }
            Some(t_mat)
        }
        _ => None,
    };

    Ok(FlowOperator {
        kind,
        window,
        basis: chain.final_subspace().basis().clone(),
        config: model.layout.config.clone(),
        mom: model.layout.mom.clone(),
        beta: model.layout.beta.clone(),
        constraint_map: blocks.constraint_map,
        modes,
        omegas,
        velocity_mass: blocks.velocity_mass,
        stiffness: blocks.stiffness,
        projector: projector.cloned(),
        transverse_projector,
        spatial_shape: model.spatial.shape().to_vec(),
        fiber: model.layout.config.len() / model.spatial.n_sites().max(1),
        electro: matches!(model.spec.density, DensityModel::Electrodynamics),
    })
}

impl<S: Real> FlowOperator<S> {
    pub fn window(&self) -> TimeWindow<S> {
        self.window
    }

    pub fn final_dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn is_spectral(&self) -> bool {
        matches!(self.kind, FlowKind::Spectral)
    }

    fn nat_dim(&self) -> usize {
        self.config.len()
    }

    /// Natural (config, momentum) blocks of an embedded chain state.
    fn extract(&self, w: &Array1<S>) -> (Array1<S>, Array1<S>) {
        let z = self.basis.dot(w);
        (
            z.slice(ndarray::s![self.config.clone()]).to_owned(),
            z.slice(ndarray::s![self.mom.clone()]).to_owned(),
        )
    }

    /// Chain coordinates of natural data (β filled from the constraint).
    fn reembed(&self, c: &Array1<S>, p: &Array1<S>) -> Array1<S> {
        let mut z = Array1::zeros(self.basis.nrows());
        z.slice_mut(ndarray::s![self.config.clone()]).assign(c);
        z.slice_mut(ndarray::s![self.mom.clone()]).assign(p);
        if let (Some(beta), Some(g)) = (&self.beta, &self.constraint_map) {
            z.slice_mut(ndarray::s![beta.clone()]).assign(&g.dot(c));
        }
        self.basis.t().dot(&z)
    }

    /// Spectral rotation of natural data by time `t`.
    fn rotate(&self, c: &Array1<S>, p: &Array1<S>, t: S) -> (Array1<S>, Array1<S>) {
        let mu = self.velocity_mass;
        let chat = self.modes.t().dot(c);
        let phat = self.modes.t().dot(p);
        let mut chat2 = chat.clone();
        let mut phat2 = phat.clone();
        for i in 0..self.omegas.len() {
            let w = self.omegas[i];
            if w == S::zero() {
                chat2[i] = chat[i] + phat[i] * t / mu;
                phat2[i] = phat[i];
            } else {
                let (swt, cwt) = {
                    let wt = w * t;
                    (wt.sin(), wt.cos())
                };
                chat2[i] = chat[i] * cwt + phat[i] * swt / (mu * w);
                phat2[i] = -chat[i] * mu * w * swt + phat[i] * cwt;
            }
        }
        let c2 = c + &self.modes.dot(&(&chat2 - &chat));
        let p2 = p + &self.modes.dot(&(&phat2 - &phat));
        (c2, p2)
    }

    /// Transposed spectral rotation applied to a natural covector.
    fn rotate_transpose(&self, ec: &Array1<S>, ep: &Array1<S>, t: S) -> (Array1<S>, Array1<S>) {
        let mu = self.velocity_mass;
        let echat = self.modes.t().dot(ec);
        let ephat = self.modes.t().dot(ep);
        let mut echat2 = echat.clone();
        let mut ephat2 = ephat.clone();
        for i in 0..self.omegas.len() {
            let w = self.omegas[i];
            if w == S::zero() {
                // Rᵀ for the drift block [[1, t/μ], [0, 1]].
                echat2[i] = echat[i];
                ephat2[i] = echat[i] * t / mu + ephat[i];
            } else {
                let wt = w * t;
                let (swt, cwt) = (wt.sin(), wt.cos());
                echat2[i] = echat[i] * cwt - ephat[i] * mu * w * swt;
                ephat2[i] = echat[i] * swt / (mu * w) + ephat[i] * cwt;
            }
        }
        let ec2 = ec + &self.modes.dot(&(&echat2 - &echat));
        let ep2 = ep + &self.modes.dot(&(&ephat2 - &ephat));
        (ec2, ep2)
    }

    fn leapfrog_steps(&self, c: &Array1<S>, p: &Array1<S>, t: S, dt: S) -> (Array1<S>, Array1<S>) {
        let n = (t / dt).abs().as_f64().round() as usize;
        let h = if t >= S::zero() { dt } else { -dt };
        let mu = self.velocity_mass;
        let half = S::of(0.5);
        let mut c = c.clone();
        let mut p = p.clone();
        for _ in 0..n {
            let p_half = &p - &(self.stiffness.dot(&c) * (half * h));
            c = &c + &(&p_half * (h / mu));
            p = &p_half - &(self.stiffness.dot(&c) * (half * h));
        }
        (c, p)
    }

    fn check_horizontal(&self, w: &Array1<S>) -> Result<()> {
        if let Some(proj) = &self.projector {
            let scale = S::one() + linalg::max_abs_vec(w);
            let v = proj.vertical_norm(w);
            if v > S::of(HORIZONTAL_TOL) * scale {
                return Err(Error::NotHorizontal {
                    residual: v.as_f64(),
                    tolerance: HORIZONTAL_TOL * scale.as_f64(),
                });
            }
        }
        Ok(())
    }

    fn site_index(&self, site: &[usize]) -> Result<usize> {
        if site.len() != self.spatial_shape.len() {
            return Err(Error::ShapeMismatch {
                context: "observable site",
                expected: self.spatial_shape.to_vec(),
                got: site.to_vec(),
            });
        }
        let mut idx = 0;
        for (a, &m) in site.iter().enumerate() {
            if m >= self.spatial_shape[a] {
                return Err(Error::IndexOutOfRange {
                    index: m,
                    extent: self.spatial_shape[a],
                });
            }
            idx = idx * self.spatial_shape[a] + m;
        }
        Ok(idx)
    }

    /// Natural-coordinate evaluation covector of a field-point observable at
    /// its own time slice.
    fn evaluation_covector(
        &self,
        component: FieldComponent,
        site: &[usize],
        transverse: bool,
    ) -> Result<(Array1<S>, Array1<S>)> {
        let n_sites: usize = self.spatial_shape.iter().product::<usize>().max(1);
        let nc = self.nat_dim();
        let mut ec = Array1::zeros(nc);
        let mut ep = Array1::zeros(nc);
        let slot = |comp: usize, site_idx: usize| -> Result<usize> {
            let idx = comp * n_sites + site_idx;
            if comp >= self.fiber {
                return Err(Error::InvalidValue {
                    field: "component".into(),
                    reason: format!("component {comp} outside fiber of size {}", self.fiber),
                });
            }
            Ok(idx)
        };
        let s = self.site_index(site)?;
        match component {
            FieldComponent::Field(a) => {
                let a = self.natural_component(a)?;
                ec[slot(a, s)?] = S::one();
            }
            FieldComponent::MomentumTime(a) => {
                let a = self.natural_component(a)?;
                ep[slot(a, s)?] = S::one();
            }
        }
        if transverse {
            let t = self.transverse_projector.as_ref().ok_or_else(|| {
                Error::UnsupportedSpec("transverse observables need electrodynamics".into())
            })?;
            // functional v ↦ e·(T v) has covector Tᵀe.
            ec = t.t().dot(&ec);
            ep = t.t().dot(&ep);
        }
        Ok((ec, ep))
    }

    /// Map an electrodynamics component index (a_k, k ∈ 1..=3) to the natural
    /// config block; other models use the index as-is.
    fn natural_component(&self, a: usize) -> Result<usize> {
        if self.electro {
            // a ∈ 1..=3 → 0..3; a₀ is pinned to zero by the gauge choice.
            if a == 0 || a > 3 {
                return Err(Error::InvalidValue {
                    field: "component".into(),
                    reason: "electrodynamics field components are 1..=3 (a₀ is gauge-fixed to 0)"
                        .into(),
                });
            }
            Ok(a - 1)
        } else {
            Ok(a)
        }
    }
}

/// Evolve a Cauchy datum (chain coordinates) by time `t`.
///
/// Gauge case: the state must be horizontal (gauge-fixed Cauchy data live on
/// the leaf through the origin); see [`evolve_any`] for evolution on other
/// leaves.
pub fn evolve<S: Real>(flow: &FlowOperator<S>, state: &Array1<S>, t: S) -> Result<Array1<S>> {
    flow.check_horizontal(state)?;
    evolve_any(flow, state, t)
}

/// Evolve an arbitrary final-subspace datum. The flow is horizontal, so the
/// vertical (pure-gauge) part of the state is carried along unchanged.
pub fn evolve_any<S: Real>(flow: &FlowOperator<S>, state: &Array1<S>, t: S) -> Result<Array1<S>> {
    if state.len() != flow.final_dim() {
        return Err(Error::DimensionMismatch {
            context: "evolve state",
            expected: flow.final_dim(),
            got: state.len(),
        });
    }
    let (c, p) = flow.extract(state);
    let (c2, p2) = match flow.kind {
        FlowKind::Spectral => flow.rotate(&c, &p, t),
        FlowKind::Leapfrog { dt } => flow.leapfrog_steps(&c, &p, t, dt),
    };
    Ok(flow.reembed(&c2, &p2))
}

/// Pull a field-point observable back to the slice at `sigma_time`, giving
/// its linear coefficients on F_∞.
pub fn pullback_observable<S: Real>(
    obs: &Observable<S>,
    flow: &FlowOperator<S>,
    _model: &SliceModel<S>,
    sigma_time: S,
) -> Result<Observable<S>> {
    match &obs.kind {
        ObservableKind::CauchyLinear { .. } => Ok(obs.clone()),
        ObservableKind::FieldPoint {
            component,
            site,
            t,
            transverse,
        } => {
            if !flow.window.contains(*t) {
                return Err(Error::OutOfWindow {
                    t: t.as_f64(),
                    t_min: flow.window.t_min.as_f64(),
                    t_max: flow.window.t_max.as_f64(),
                });
            }
            if !flow.window.contains(sigma_time) {
                return Err(Error::OutOfWindow {
                    t: sigma_time.as_f64(),
                    t_min: flow.window.t_min.as_f64(),
                    t_max: flow.window.t_max.as_f64(),
                });
            }
            let (ec, ep) = flow.evaluation_covector(*component, site, *transverse)?;
            let dt = *t - sigma_time;
            let (ec2, ep2) = match flow.kind {
                FlowKind::Spectral => flow.rotate_transpose(&ec, &ep, dt),
                FlowKind::Leapfrog { dt: step } => {
                    // Fᵀ via the materialized natural flow is avoided; run the
                    // adjoint recursion instead: (F₁F₂…)ᵀ = …F₂ᵀF₁ᵀ, and a
                    // single leapfrog step is symmetric enough to transpose
                    // blockwise.
                    flow.leapfrog_transpose(&ec, &ep, dt, step)
                }
            };
            // Ambient covector (β and a₀ slots empty), then chain coordinates.
            let mut e_amb = Array1::zeros(flow.basis.nrows());
            e_amb
                .slice_mut(ndarray::s![flow.config.clone()])
                .assign(&ec2);
            e_amb.slice_mut(ndarray::s![flow.mom.clone()]).assign(&ep2);
            let coeffs = flow.basis.t().dot(&e_amb);
            Ok(Observable::cauchy_linear(
                coeffs,
                format!("{}@sigma", obs.label),
            ))
        }
    }
}

impl<S: Real> FlowOperator<S> {
    fn leapfrog_transpose(
        &self,
        ec: &Array1<S>,
        ep: &Array1<S>,
        t: S,
        dt: S,
    ) -> (Array1<S>, Array1<S>) {
        let n = (t / dt).abs().as_f64().round() as usize;
        let h = if t >= S::zero() { dt } else { -dt };
        let mu = self.velocity_mass;
        let half = S::of(0.5);
        // One step: c' = c + (h/μ)(p − (h/2)Kc); p' = p − (h/2)Kc − (h/2)Kc'.
        // The transpose propagates covectors through the same affine maps in
        // reverse composition order.
        let mut ec = ec.clone();
        let mut ep = ep.clone();
        for _ in 0..n {
            // Forward step structure: kick A, drift B, kick A; transpose is
            // Aᵀ Bᵀ Aᵀ with Aᵀ: ec ← ec − (h/2)K ep̃ pattern. Since K is
            // symmetric, each elementary transpose is explicit:
            // kick: p ← p − (h/2)Kc  ⇒  (ec, ep) ← (ec − (h/2)K ep, ep)
            let ec_new = &ec - &(self.stiffness.dot(&ep) * (half * h));
            // drift: c ← c + (h/μ)p  ⇒  (ec, ep) ← (ec, ep + (h/μ) ec)
            let ep_new = &ep + &(&ec_new * (h / mu));
            let ec2 = ec_new;
            // second kick
            let ec_final = &ec2 - &(self.stiffness.dot(&ep_new) * (half * h));
            ec = ec_final;
            ep = ep_new;
        }
        (ec, ep)
    }
}

/// Reusable flat-map solver for one chain result.
#[derive(Debug)]
pub struct BracketEngine<S: Real> {
    omega_final: Array2<S>,
    kernel_basis: Array2<S>,
    solver: SolverKind<S>,
}

#[derive(Debug)]
enum SolverKind<S: Real> {
    /// Nondegenerate: X = −Ω⁻¹ c.
    Inverse(Array2<S>),
    /// Gauge: X = H · pinv(ΩᵀH) · c with H the horizontal basis.
    Horizontal { h: Array2<S>, pinv: Array2<S> },
}

impl<S: Real> BracketEngine<S> {
    pub fn new(
        chain: &ConstraintChainResult<S>,
        projector: Option<&ConnectionProjector<S>>,
    ) -> Result<Self> {
        use ndarray_linalg::Inverse;
        let omega = chain.omega_final.clone();
        let kernel_basis = chain.kernel_final.basis().clone();
        let solver = match chain.classification {
            Classification::Symplectic => SolverKind::Inverse(omega.inv()?),
            Classification::Gauge => {
                let proj = projector.ok_or(Error::MissingProjector)?;
                if proj.dim() != omega.nrows() {
                    return Err(Error::DimensionMismatch {
                        context: "BracketEngine projector",
                        expected: omega.nrows(),
                        got: proj.dim(),
                    });
                }
                let h = proj.horizontal_basis()?;
                let a = omega.t().dot(&h);
                let pinv = linalg::pinv(&a, S::of(1e-12))?;
                SolverKind::Horizontal { h, pinv }
            }
        };
        Ok(Self {
            omega_final: omega,
            kernel_basis,
            solver,
        })
    }

    pub fn omega_final(&self) -> &Array2<S> {
        &self.omega_final
    }

    /// X_f with Ω_∞(X_f, ·) = df (and P X_f = 0 in the gauge case).
    ///
    /// Matches `presymp::flat_solve` exactly; the factorizations are simply
    /// cached for repeated use.
    pub fn hamiltonian_vector_field(&self, coefficients: &Array1<S>) -> Result<Array1<S>> {
        if coefficients.len() != self.omega_final.nrows() {
            return Err(Error::DimensionMismatch {
                context: "hamiltonian_vector_field coefficients",
                expected: self.omega_final.nrows(),
                got: coefficients.len(),
            });
        }
        match &self.solver {
            SolverKind::Inverse(inv) => Ok(-inv.dot(coefficients)),
            SolverKind::Horizontal { h, pinv } => {
                let overlap = linalg::max_abs_vec(&self.kernel_basis.t().dot(coefficients));
                let scale = S::one() + linalg::max_abs_vec(coefficients);
                if overlap > S::of(1e-10) * scale {
                    return Err(Error::GaugeVariantObservable {
                        overlap: overlap.as_f64(),
                    });
                }
                Ok(h.dot(&pinv.dot(coefficients)))
            }
        }
    }

    fn coefficients_of<'a>(&self, obs: &'a Observable<S>) -> Result<&'a Array1<S>> {
        match &obs.kind {
            ObservableKind::CauchyLinear { coefficients } => Ok(coefficients),
            ObservableKind::FieldPoint { .. } => Err(Error::InvalidValue {
                field: "observable".into(),
                reason: "field-point observables must be pulled back first".into(),
            }),
        }
    }

    /// Poisson pairing: `bracket(f, g) = dg(X_f) = Ω_∞(X_g, X_f)`,
    /// the paper-ordered {g, f}.
    pub fn bracket(&self, f: &Observable<S>, g: &Observable<S>) -> Result<S> {
        let cf = self.coefficients_of(f)?;
        let cg = self.coefficients_of(g)?;
        let xf = self.hamiltonian_vector_field(cf)?;
        // In the gauge case g must also be admissible for the pairing to be
        // well defined (and antisymmetric).
        if matches!(self.solver, SolverKind::Horizontal { .. }) {
            let overlap = linalg::max_abs_vec(&self.kernel_basis.t().dot(cg));
            let scale = S::one() + linalg::max_abs_vec(cg);
            if overlap > S::of(1e-10) * scale {
                return Err(Error::GaugeVariantObservable {
                    overlap: overlap.as_f64(),
                });
            }
        }
        Ok(cg.dot(&xf))
    }
}

/// Spacetime bracket {G, F} of two field-point observables: pull both back
/// to `sigma_time` and apply the Poisson pairing. In debug builds the value
/// is cross-checked against the tangent-lift route (propagate X_f to G's
/// time, evaluate G there).
pub fn bracket_spacetime<S: Real>(
    f_obs: &Observable<S>,
    g_obs: &Observable<S>,
    flow: &FlowOperator<S>,
    model: &SliceModel<S>,
    sigma_time: S,
    engine: &BracketEngine<S>,
) -> Result<S> {
    let f = pullback_observable(f_obs, flow, model, sigma_time)?;
    let g = pullback_observable(g_obs, flow, model, sigma_time)?;
    let value = engine.bracket(&f, &g)?;

    #[cfg(debug_assertions)]
    {
        // Tangent-lift route: evolve X_f to the time of G and evaluate the
        // instantaneous functional of G on it.
        if let ObservableKind::FieldPoint { t: tg, .. } = &g_obs.kind {
            let cf = match &f.kind {
                ObservableKind::CauchyLinear { coefficients } => coefficients.clone(),
                _ => unreachable!(),
            };
            let xf = engine.hamiltonian_vector_field(&cf)?;
            let xf_t = evolve(flow, &xf, *tg - sigma_time)?;
            let g_inst = pullback_observable(g_obs, flow, model, *tg)?;
            let cg = match &g_inst.kind {
                ObservableKind::CauchyLinear { coefficients } => coefficients.clone(),
                _ => unreachable!(),
            };
            let alt = cg.dot(&xf_t);
            let scale = S::one() + value.abs();
            debug_assert!(
                (alt - value).abs() <= S::of(1e-10) * scale,
                "bracket route mismatch: {} vs {}",
                value.as_f64(),
                alt.as_f64()
            );
        }
    }

    Ok(value)
}

/// Batch bracket evaluation; result order matches input order.
pub fn bracket_pairs<S: Real>(
    pairs: &[(Observable<S>, Observable<S>)],
    flow: &FlowOperator<S>,
    model: &SliceModel<S>,
    sigma_time: S,
    engine: &BracketEngine<S>,
) -> Vec<Result<S>> {
    pairs
        .par_iter()
        .map(|(f, g)| bracket_spacetime(f, g, flow, model, sigma_time, engine))
        .collect()
}

/// One row of an exported bracket table.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BracketRow {
    pub pair_id: usize,
    pub f_label: String,
    pub g_label: String,
    /// Value, or None with `error` set.
    pub value: Option<f64>,
    pub error: Option<String>,
}

/// CSV export: `pair_id,f_label,g_label,value` with errors in the value
/// column as `error:<kind>`.
pub fn write_bracket_csv(rows: &[BracketRow], w: impl std::io::Write) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["pair_id", "f_label", "g_label", "value"])
        .map_err(|e| Error::InvalidValue {
            field: "csv".into(),
            reason: e.to_string(),
        })?;
    for row in rows {
        let value = match (&row.value, &row.error) {
            (Some(v), _) => format!("{v:.17e}"),
            (None, Some(e)) => format!("error:{e}"),
            (None, None) => "error:unknown".into(),
        };
        wtr.write_record([
            row.pair_id.to_string(),
            row.f_label.clone(),
            row.g_label.clone(),
            value,
        ])
        .map_err(|e| Error::InvalidValue {
            field: "csv".into(),
            reason: e.to_string(),
        })?;
    }
    wtr.flush()?;
    Ok(())
}

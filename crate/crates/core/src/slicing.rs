//! Slice pre-symplectic systems (𝓕^Σ, Ω^Σ, 𝓗) on a spatial lattice, the
//! restriction map to a time slice, and its inverse (curve → section).
//!
//! State layouts, component-major with N lattice sites per sub-block:
//!
//! * free particle: `(q | p)`, dimension 2;
//! * vector boson:  `(φ^a | p_a | β^j_a)`, dimension (2 + d)·r·N;
//! * electrodynamics: `(a₀ | a_k | p^k | β^{jk})`, dimension 10·N, with a₀
//!   carried as an inert gauge block that the analysis pipeline pins to 0.
//!
//! Ω^Σ pairs the configuration block with the momentum block at weight h^d
//! (the cell volume); every β and a₀ entry sits in the kernel. The slice
//! Hamiltonian generates the time evolution that matches the covariant
//! Hamilton equations:
//!
//! * vector boson: 𝓗 = Σ h^d [½ p² − ½ Σⱼ(β^j)² + ½ m²φ² − Σⱼ β^j·∂ⱼφ],
//!   whose β-stationarity gives β^j_a = η^{jk}∂ₖφ^a and whose reduced flow is
//!   φ̇ = p, ṗ = Δφ − m²φ;
//! * electrodynamics: 𝓗 = Σ h³ [p·∇a₀ + Σ_{j<k}(β^{jk}(∂ₖa_j − ∂ⱼa_k) −
//!   ½(β^{jk})²) + ½p²], which yields the magnetic constraint
//!   β^{jk} = ∂ₖa_j − ∂ⱼa_k, the Gauss law ∇·p = 0 from the a₀ directions,
//!   and the wave flow ȧ = p, ṗ = Δa − ∇(∇·a).
//!
//! Spatial derivatives are forward differences with periodic wrap, so the
//! Gauss constraint and the Helmholtz split are exact in finite precision.

use std::ops::Range;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::ddw::{DensityModel, DiscretizedSection, FieldTheorySpec, SpacetimeLattice};
use crate::error::{Error, Result};
use crate::lattice::SpatialLattice;
use crate::presymp::{
    constraint_algorithm_seeded, ConstraintChainResult, LinearSubspace, PresymplecticSystem,
    QuadraticHamiltonian,
};
use crate::scalar::Real;

/// Block ranges into the slice state vector.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockLayout {
    /// Inert a₀ block (electrodynamics only).
    pub a0: Option<Range<usize>>,
    /// Configuration block (q, φ^a or a_k).
    pub config: Range<usize>,
    /// Momentum block (p, p_a or p^k).
    pub mom: Range<usize>,
    /// Spatial-momentum block (β), absent for d = 0.
    pub beta: Option<Range<usize>>,
    /// Total state dimension.
    pub dim: usize,
}

/// Data the bracket engine needs to run the reduced flow in natural
/// (configuration, momentum) coordinates.
#[derive(Debug, Clone)]
pub struct FlowBlocks<S: Real> {
    /// Config-space stiffness: π̇ = −K c. Symmetric positive semidefinite.
    pub stiffness: Array2<S>,
    /// ċ = π / velocity_mass.
    pub velocity_mass: S,
    /// β = G·c on the constraint surface (None when there is no β block).
    pub constraint_map: Option<Array2<S>>,
    /// For gauge systems: both c and π evolve inside this subspace of the
    /// config block (the divergence-free fields); None for symplectic models.
    pub momentum_subspace: Option<Array2<S>>,
}

/// A field theory assembled on a slice: layout + pre-symplectic system.
#[derive(Debug, Clone)]
pub struct SliceModel<S: Real> {
    pub spec: FieldTheorySpec<S>,
    pub spatial: SpatialLattice<S>,
    pub layout: BlockLayout,
    system: PresymplecticSystem<S>,
}

/// Slice state χ_Σ = (φ, p, β[, a₀]) in the model layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Real")]
pub struct SliceState<S: Real> {
    #[serde(with = "crate::matio::vec")]
    pub data: Array1<S>,
}

impl<S: Real> SliceState<S> {
    pub fn zeros(dim: usize) -> Self {
        Self {
            data: Array1::zeros(dim),
        }
    }
}

/// Assemble the slice pre-symplectic system for a built-in field theory.
pub fn build_slice_system<S: Real>(
    spec: &FieldTheorySpec<S>,
    spatial: &SpatialLattice<S>,
) -> Result<SliceModel<S>> {
    match &spec.density {
        DensityModel::FreeParticle { mass } => {
            if spatial.ndim() != 0 {
                return Err(Error::UnsupportedSpec(
                    "free particle needs the d = 0 point lattice".into(),
                ));
            }
            let mut omega = Array2::zeros((2, 2));
            omega[[0, 1]] = S::one();
            omega[[1, 0]] = -S::one();
            let mut q = Array2::zeros((2, 2));
            q[[1, 1]] = S::one() / *mass;
            let ham = QuadraticHamiltonian::new(q, Array1::zeros(2), S::zero())?;
            let layout = BlockLayout {
                a0: None,
                config: 0..1,
                mom: 1..2,
                beta: None,
                dim: 2,
            };
            let system =
                PresymplecticSystem::new(omega, ham, vec!["q".into(), "p".into()])?;
            Ok(SliceModel {
                spec: spec.clone(),
                spatial: spatial.clone(),
                layout,
                system,
            })
        }
        DensityModel::VectorBoson { mass, r } => {
            let d = spatial.ndim();
            if d < 1 {
                return Err(Error::UnsupportedSpec(
                    "vector boson slice needs d >= 1".into(),
                ));
            }
            if spec.spatial_dim() != d {
                return Err(Error::UnsupportedSpec(format!(
                    "spec has d = {}, lattice has d = {}",
                    spec.spatial_dim(),
                    d
                )));
            }
            let n = spatial.n_sites();
            let r = *r;
            let nc = r * n;
            let dim = (2 + d) * nc;
            let layout = BlockLayout {
                a0: None,
                config: 0..nc,
                mom: nc..2 * nc,
                beta: Some(2 * nc..dim),
                dim,
            };
            let vol = spatial.cell_volume();
            let mut omega = Array2::zeros((dim, dim));
            for i in 0..nc {
                omega[[i, nc + i]] = vol;
                omega[[nc + i, i]] = -vol;
            }
            let mut q = Array2::zeros((dim, dim));
            let m2 = *mass * *mass;
            for i in 0..nc {
                q[[i, i]] = vol * m2; // ½ m² φ²
                q[[nc + i, nc + i]] = vol; // ½ p²
            }
            for j in 0..d {
                let dj = spatial.forward_diff(j);
                for a in 0..r {
                    let beta_off = 2 * nc + (j * r + a) * n;
                    let phi_off = a * n;
                    for row in 0..n {
                        q[[beta_off + row, beta_off + row]] = -vol; // −½ (β^j)²
                        for col in 0..n {
                            let v = -vol * dj[[row, col]]; // −β^j·∂ⱼφ
                            q[[beta_off + row, phi_off + col]] += v;
                            q[[phi_off + col, beta_off + row]] += v;
                        }
                    }
                }
            }
            let ham = QuadraticHamiltonian::new(q, Array1::zeros(dim), S::zero())?;
            let labels = vb_labels(r, n, d);
            let system = PresymplecticSystem::new(omega, ham, labels)?;
            Ok(SliceModel {
                spec: spec.clone(),
                spatial: spatial.clone(),
                layout,
                system,
            })
        }
        DensityModel::Electrodynamics => {
            if spatial.ndim() != 3 {
                return Err(Error::UnsupportedSpec(
                    "electrodynamics slice needs d = 3".into(),
                ));
            }
            let n = spatial.n_sites();
            let dim = 10 * n;
            let layout = BlockLayout {
                a0: Some(0..n),
                config: n..4 * n,
                mom: 4 * n..7 * n,
                beta: Some(7 * n..10 * n),
                dim,
            };
            let vol = spatial.cell_volume();
            let mut omega = Array2::zeros((dim, dim));
            for i in 0..3 * n {
                omega[[n + i, 4 * n + i]] = vol;
                omega[[4 * n + i, n + i]] = -vol;
            }
            let mut q = Array2::zeros((dim, dim));
            // p·∇a₀
            for k in 0..3 {
                let dk = spatial.forward_diff(k);
                for row in 0..n {
                    for col in 0..n {
                        let v = vol * dk[[row, col]];
                        q[[4 * n + k * n + row, col]] += v;
                        q[[col, 4 * n + k * n + row]] += v;
                    }
                }
            }
            // Σ_{j<k} β^{jk}(∂ₖa_j − ∂ⱼa_k)  and  −½ (β^{jk})²,  +½ p²
            let curl = spatial.curl_matrix()?;
            for row in 0..3 * n {
                q[[7 * n + row, 7 * n + row]] = -vol;
                q[[4 * n + row, 4 * n + row]] = vol;
                for col in 0..3 * n {
                    let v = vol * curl[[row, col]];
                    q[[7 * n + row, n + col]] += v;
                    q[[n + col, 7 * n + row]] += v;
                }
            }
            let ham = QuadraticHamiltonian::new(q, Array1::zeros(dim), S::zero())?;
            let labels = ed_labels(n);
            let system = PresymplecticSystem::new(omega, ham, labels)?;
            Ok(SliceModel {
                spec: spec.clone(),
                spatial: spatial.clone(),
                layout,
                system,
            })
        }
    }
}

fn vb_labels(r: usize, n: usize, d: usize) -> Vec<String> {
    let mut out = Vec::with_capacity((2 + d) * r * n);
    for a in 0..r {
        for s in 0..n {
            out.push(format!("phi[a={a},x={s}]"));
        }
    }
    for a in 0..r {
        for s in 0..n {
            out.push(format!("p[a={a},x={s}]"));
        }
    }
    for j in 0..d {
        for a in 0..r {
            for s in 0..n {
                out.push(format!("beta[j={},a={a},x={s}]", j + 1));
            }
        }
    }
    out
}

fn ed_labels(n: usize) -> Vec<String> {
    let mut out = Vec::with_capacity(10 * n);
    for s in 0..n {
        out.push(format!("a0[x={s}]"));
    }
    for k in 0..3 {
        for s in 0..n {
            out.push(format!("a[k={},x={s}]", k + 1));
        }
    }
    for k in 0..3 {
        for s in 0..n {
            out.push(format!("p[k={},x={s}]", k + 1));
        }
    }
    for (j, k) in crate::lattice::PAIRS_3D {
        for s in 0..n {
            out.push(format!("beta[jk={}{},x={s}]", j + 1, k + 1));
        }
    }
    out
}

impl<S: Real> SliceModel<S> {
    pub fn system(&self) -> &PresymplecticSystem<S> {
        &self.system
    }

    pub fn dim(&self) -> usize {
        self.layout.dim
    }

    pub fn n_sites(&self) -> usize {
        self.spatial.n_sites()
    }

    /// Initial submanifold for the constraint analysis: electrodynamics pins
    /// the inert a₀ block to zero (the representative gauge choice), other
    /// models start from the full space.
    pub fn initial_subspace(&self) -> LinearSubspace<S> {
        match &self.layout.a0 {
            None => LinearSubspace::full(self.dim()),
            Some(a0) => {
                let dim = self.dim();
                let k = dim - (a0.end - a0.start);
                let mut basis = Array2::zeros((dim, k));
                let mut col = 0;
                for i in 0..dim {
                    if !a0.contains(&i) {
                        basis[[i, col]] = S::one();
                        col += 1;
                    }
                }
                LinearSubspace::new(basis, Array1::zeros(dim)).expect("unit basis")
            }
        }
    }

    /// Run the pre-symplectic constraint algorithm for this model.
    pub fn analyze(&self, rank_rtol: S, max_iter: usize) -> Result<ConstraintChainResult<S>> {
        constraint_algorithm_seeded(&self.system, self.initial_subspace(), rank_rtol, max_iter)
    }

    /// Copy the slice of a section at `t_index` into the state layout.
    pub fn restrict_to_slice(
        &self,
        section: &DiscretizedSection<S>,
        t_index: usize,
        lattice: &SpacetimeLattice<S>,
    ) -> Result<SliceState<S>> {
        section.check_shapes(&self.spec, lattice)?;
        if t_index >= lattice.time_extent {
            return Err(Error::IndexOutOfRange {
                index: t_index,
                extent: lattice.time_extent,
            });
        }
        let n = self.n_sites();
        let mut z = Array1::zeros(self.dim());
        match &self.spec.density {
            DensityModel::FreeParticle { .. } => {
                z[0] = section.phi[[t_index, 0, 0]];
                z[1] = section.momenta[[t_index, 0, 0]];
            }
            DensityModel::VectorBoson { r, .. } => {
                let r = *r;
                let d = self.spatial.ndim();
                for a in 0..r {
                    for s in 0..n {
                        z[a * n + s] = section.phi[[t_index, s, a]];
                        z[r * n + a * n + s] = section.momenta[[t_index, s, a]];
                        for j in 0..d {
                            z[2 * r * n + (j * r + a) * n + s] =
                                section.momenta[[t_index, s, (j + 1) * r + a]];
                        }
                    }
                }
            }
            DensityModel::Electrodynamics => {
                for s in 0..n {
                    z[s] = section.phi[[t_index, s, 0]];
                    for k in 0..3 {
                        z[n + k * n + s] = section.phi[[t_index, s, k + 1]];
                        // p^k = P^{k0} = −(stored pair (0, k+1))
                        z[4 * n + k * n + s] = -section.momenta[[t_index, s, k]];
                    }
                    // spatial pairs (1,2),(1,3),(2,3) sit at storage 3,4,5
                    for m in 0..3 {
                        z[7 * n + m * n + s] = section.momenta[[t_index, s, 3 + m]];
                    }
                }
            }
        }
        Ok(SliceState { data: z })
    }

    /// Inverse of [`Self::restrict_to_slice`] applied per time index.
    pub fn curve_to_section(
        &self,
        states: &[SliceState<S>],
        lattice: &SpacetimeLattice<S>,
    ) -> Result<DiscretizedSection<S>> {
        if states.len() != lattice.time_extent {
            return Err(Error::LengthMismatch {
                expected: lattice.time_extent,
                got: states.len(),
            });
        }
        let n = self.n_sites();
        let mut sec = DiscretizedSection::zeros(&self.spec, lattice);
        for (t, st) in states.iter().enumerate() {
            if st.data.len() != self.dim() {
                return Err(Error::DimensionMismatch {
                    context: "curve_to_section state",
                    expected: self.dim(),
                    got: st.data.len(),
                });
            }
            let z = &st.data;
            match &self.spec.density {
                DensityModel::FreeParticle { .. } => {
                    sec.phi[[t, 0, 0]] = z[0];
                    sec.momenta[[t, 0, 0]] = z[1];
                }
                DensityModel::VectorBoson { r, .. } => {
                    let r = *r;
                    let d = self.spatial.ndim();
                    for a in 0..r {
                        for s in 0..n {
                            sec.phi[[t, s, a]] = z[a * n + s];
                            sec.momenta[[t, s, a]] = z[r * n + a * n + s];
                            for j in 0..d {
                                sec.momenta[[t, s, (j + 1) * r + a]] =
                                    z[2 * r * n + (j * r + a) * n + s];
                            }
                        }
                    }
                }
                DensityModel::Electrodynamics => {
                    for s in 0..n {
                        sec.phi[[t, s, 0]] = z[s];
                        for k in 0..3 {
                            sec.phi[[t, s, k + 1]] = z[n + k * n + s];
                            sec.momenta[[t, s, k]] = -z[4 * n + k * n + s];
                        }
                        for m in 0..3 {
                            sec.momenta[[t, s, 3 + m]] = z[7 * n + m * n + s];
                        }
                    }
                }
            }
        }
        Ok(sec)
    }

    /// Natural-coordinate flow data for the bracket engine.
    pub fn flow_blocks(&self) -> Result<FlowBlocks<S>> {
        match &self.spec.density {
            DensityModel::FreeParticle { mass } => Ok(FlowBlocks {
                stiffness: Array2::zeros((1, 1)),
                velocity_mass: *mass,
                constraint_map: None,
                momentum_subspace: None,
            }),
            DensityModel::VectorBoson { mass, r } => {
                let n = self.n_sites();
                let d = self.spatial.ndim();
                let r = *r;
                let neg_lap = {
                    let l = self.spatial.laplacian_matrix();
                    -l
                };
                let m2 = *mass * *mass;
                let mut k = Array2::zeros((r * n, r * n));
                for a in 0..r {
                    for row in 0..n {
                        for col in 0..n {
                            k[[a * n + row, a * n + col]] = neg_lap[[row, col]];
                        }
                        k[[a * n + row, a * n + row]] += m2;
                    }
                }
                // β^j_a = −∂ⱼφ^a  (forward difference)
                let mut g = Array2::zeros((d * r * n, r * n));
                for j in 0..d {
                    let dj = self.spatial.forward_diff(j);
                    for a in 0..r {
                        for row in 0..n {
                            for col in 0..n {
                                g[[(j * r + a) * n + row, a * n + col]] = -dj[[row, col]];
                            }
                        }
                    }
                }
                Ok(FlowBlocks {
                    stiffness: k,
                    velocity_mass: S::one(),
                    constraint_map: Some(g),
                    momentum_subspace: None,
                })
            }
            DensityModel::Electrodynamics => {
                let curl = self.spatial.curl_matrix()?;
                let k = curl.t().dot(&curl);
                let div = self.spatial.div_matrix();
                let t_basis = crate::linalg::null_space(&div, S::of(1e-10))?;
                Ok(FlowBlocks {
                    stiffness: k,
                    velocity_mass: S::one(),
                    constraint_map: Some(curl),
                    momentum_subspace: Some(t_basis),
                })
            }
        }
    }

    /// Embed natural (config, momentum) data into the full state layout
    /// (β from the constraint map, a₀ = 0).
    pub fn embed_natural(&self, config: &Array1<S>, mom: &Array1<S>) -> Result<SliceState<S>> {
        let blocks = self.flow_blocks()?;
        let nc = self.layout.config.len();
        if config.len() != nc || mom.len() != nc {
            return Err(Error::DimensionMismatch {
                context: "embed_natural",
                expected: nc,
                got: config.len().max(mom.len()),
            });
        }
        let mut z = Array1::zeros(self.dim());
        z.slice_mut(ndarray::s![self.layout.config.clone()])
            .assign(config);
        z.slice_mut(ndarray::s![self.layout.mom.clone()]).assign(mom);
        if let (Some(beta), Some(g)) = (&self.layout.beta, &blocks.constraint_map) {
            z.slice_mut(ndarray::s![beta.clone()]).assign(&g.dot(config));
        }
        Ok(SliceState { data: z })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg;
    use crate::presymp::{kernel, Classification};

    fn vb_model(shape: Vec<usize>, h: f64, mass: f64) -> SliceModel<f64> {
        let d = shape.len();
        let spec = FieldTheorySpec::vector_boson(mass, 1, d).unwrap();
        let lat = SpatialLattice::cubic(shape, h).unwrap();
        build_slice_system(&spec, &lat).unwrap()
    }

    #[test]
    fn free_particle_slice_is_the_plane() {
        let spec = FieldTheorySpec::<f64>::free_particle(2.0).unwrap();
        let model = build_slice_system(&spec, &SpatialLattice::point()).unwrap();
        assert_eq!(model.dim(), 2);
        let expected = ndarray::array![[0.0, 1.0], [-1.0, 0.0]];
        assert!(linalg::max_abs(&(model.system().omega() - &expected)) == 0.0);
        // H = p²/2m
        let z = ndarray::array![0.7, 1.2];
        let h = model.system().hamiltonian().value(&z);
        assert!((h - 1.2 * 1.2 / 4.0).abs() < 1e-15);
    }

    #[test]
    fn vector_boson_on_two_sites_has_rank_four_omega() {
        let model = vb_model(vec![2], 1.0, 1.0);
        assert_eq!(model.dim(), 6);
        assert_eq!(linalg::rank(model.system().omega(), 1e-10).unwrap(), 4);
    }

    #[test]
    fn slice_kernel_is_the_beta_block() {
        let model = vb_model(vec![3], 1.0, 1.0);
        let k = kernel(model.system().omega(), 1e-10).unwrap();
        let beta = model.layout.beta.clone().unwrap();
        assert_eq!(k.dim(), beta.len());
        // Every kernel vector is supported on the β block.
        for col in k.basis().columns() {
            for (i, &v) in col.iter().enumerate() {
                if !beta.contains(&i) {
                    assert!(v.abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn electrodynamics_beta_rows_of_omega_vanish() {
        let spec = FieldTheorySpec::electrodynamics();
        let lat = SpatialLattice::cubic(vec![2, 2, 2], 1.0).unwrap();
        let model = build_slice_system(&spec, &lat).unwrap();
        let beta = model.layout.beta.clone().unwrap();
        let a0 = model.layout.a0.clone().unwrap();
        let omega = model.system().omega();
        for i in beta.chain(a0) {
            for j in 0..model.dim() {
                assert_eq!(omega[[i, j]], 0.0);
                assert_eq!(omega[[j, i]], 0.0);
            }
        }
    }

    #[test]
    fn vector_boson_chain_one_step_symplectic() {
        // M₁ = {β^j_a = η^{jk}∂ₖφ^a}: one restriction eliminating d·r·N dofs.
        let model = vb_model(vec![3], 0.5, 1.3);
        let r = model.analyze(1e-10, 64).unwrap();
        assert_eq!(r.iterations, 1);
        assert_eq!(r.dims(), vec![9, 6]);
        assert_eq!(r.classification, Classification::Symplectic);
        // Constraint content: β = −∂φ on the final subspace.
        let blocks = model.flow_blocks().unwrap();
        let g = blocks.constraint_map.unwrap();
        for col in r.final_subspace().basis().columns() {
            let phi = col.slice(ndarray::s![0..3]).to_owned();
            let beta = col.slice(ndarray::s![6..9]).to_owned();
            let expect = g.dot(&phi);
            assert!(linalg::max_abs_vec(&(&beta - &expect)) < 1e-10);
        }
    }

    #[test]
    fn electrodynamics_chain_gauss_law_and_gauge_class() {
        let spec = FieldTheorySpec::electrodynamics();
        let lat = SpatialLattice::cubic(vec![2, 2, 2], 1.0).unwrap();
        let model = build_slice_system(&spec, &lat).unwrap();
        let n = model.n_sites();
        let r = model.analyze(1e-10, 64).unwrap();
        assert_eq!(r.classification, Classification::Gauge);
        assert_eq!(r.kernel_dim(), n - 1);
        // 9N seeded start → a + div-free p
        assert_eq!(r.dims(), vec![9 * n, 3 * n + 2 * n + 1]);
        // Gauss law: div p = 0 along the final subspace.
        let div = model.spatial.div_matrix();
        for col in r.final_subspace().basis().columns() {
            let p = col.slice(ndarray::s![4 * n..7 * n]).to_owned();
            assert!(linalg::max_abs_vec(&div.dot(&p)) < 1e-10);
        }
        // a₀ stays pinned at zero.
        for col in r.final_subspace().basis().columns() {
            let a0 = col.slice(ndarray::s![0..n]).to_owned();
            assert!(linalg::max_abs_vec(&a0) < 1e-12);
        }
    }

    #[test]
    fn restrict_and_rebuild_round_trip_exactly() {
        let spec = FieldTheorySpec::vector_boson(1.0, 2, 2).unwrap();
        let spatial = SpatialLattice::cubic(vec![3, 2], 1.0).unwrap();
        let model = build_slice_system(&spec, &spatial).unwrap();
        let lat = SpacetimeLattice::new(4, 0.1, spatial).unwrap();
        let mut sec = DiscretizedSection::zeros(&spec, &lat);
        for (i, x) in sec.phi.iter_mut().enumerate() {
            *x = i as f64 * 0.01 - 0.3;
        }
        for (i, x) in sec.momenta.iter_mut().enumerate() {
            *x = i as f64 * -0.02 + 0.5;
        }
        let states: Vec<_> = (0..lat.time_extent)
            .map(|t| model.restrict_to_slice(&sec, t, &lat).unwrap())
            .collect();
        let back = model.curve_to_section(&states, &lat).unwrap();
        assert_eq!(back, sec);
    }

    #[test]
    fn electrodynamics_restrict_momentum_signs() {
        let spec = FieldTheorySpec::electrodynamics();
        let spatial = SpatialLattice::cubic(vec![2, 2, 2], 1.0).unwrap();
        let model = build_slice_system(&spec, &spatial).unwrap();
        let lat = SpacetimeLattice::new(2, 0.1, spatial).unwrap();
        let mut sec = DiscretizedSection::zeros(&spec, &lat);
        let n = model.n_sites();
        // P^{01} = 0.25 at site 0 → p^1 = P^{10} = −0.25.
        sec.momenta[[0, 0, 0]] = 0.25;
        // spatial pair (1,2) → β^{12} slot.
        sec.momenta[[0, 0, 3]] = -0.75;
        let st = model.restrict_to_slice(&sec, 0, &lat).unwrap();
        assert_eq!(st.data[4 * n], -0.25);
        assert_eq!(st.data[7 * n], -0.75);
        let back = model.curve_to_section(&[st.clone(), st], &lat).unwrap();
        assert_eq!(back.momenta[[0, 0, 0]], 0.25);
        assert_eq!(back.momenta[[0, 0, 3]], -0.75);
    }

    #[test]
    fn restrict_rejects_out_of_range_index() {
        let spec = FieldTheorySpec::free_particle(1.0).unwrap();
        let model = build_slice_system(&spec, &SpatialLattice::point()).unwrap();
        let lat = SpacetimeLattice::new(3, 0.1, SpatialLattice::point()).unwrap();
        let sec = DiscretizedSection::zeros(&spec, &lat);
        assert!(matches!(
            model.restrict_to_slice(&sec, 3, &lat),
            Err(Error::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn curve_length_must_match() {
        let spec = FieldTheorySpec::free_particle(1.0).unwrap();
        let model = build_slice_system(&spec, &SpatialLattice::point()).unwrap();
        let lat = SpacetimeLattice::new(3, 0.1, SpatialLattice::point()).unwrap();
        let st = SliceState::<f64>::zeros(2);
        assert!(matches!(
            model.curve_to_section(&[st], &lat),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn hamiltonian_q_is_symmetric_by_construction() {
        let model = vb_model(vec![2, 2], 0.7, 0.9);
        let q = model.system().hamiltonian().q();
        assert!(linalg::max_abs(&(q - &q.t())) == 0.0);
    }

    #[test]
    fn multi_component_vector_boson_chain() {
        // r = 2 on a d = 2 lattice: one restriction step removes d·r·N
        // spatial momenta, leaving the 2rN-dimensional symplectic space.
        let spec = FieldTheorySpec::vector_boson(0.8, 2, 2).unwrap();
        let lat = SpatialLattice::cubic(vec![2, 3], 0.5).unwrap();
        let model = build_slice_system(&spec, &lat).unwrap();
        let n = 6;
        assert_eq!(model.dim(), (2 + 2) * 2 * n);
        let r = model.analyze(1e-10, 64).unwrap();
        assert_eq!(r.iterations, 1);
        assert_eq!(r.dims(), vec![8 * n, 4 * n]);
        assert_eq!(r.classification, Classification::Symplectic);
    }

    #[test]
    fn system_round_trips_through_matrix_json() {
        let model = vb_model(vec![3], 1.0, 1.0);
        let text = serde_json::to_string(model.system()).unwrap();
        assert!(text.contains("\"rows\":9"));
        let back: crate::presymp::PresymplecticSystem<f64> =
            serde_json::from_str(&text).unwrap();
        assert_eq!(back.omega(), model.system().omega());
        assert_eq!(
            back.hamiltonian().q(),
            model.system().hamiltonian().q()
        );
    }
}

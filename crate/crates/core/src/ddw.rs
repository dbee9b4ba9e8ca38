//! Covariant first-order field models, discretized sections, action values
//! and covariant-Hamilton-equation residuals.
//!
//! The equations of motion in coordinates (x, u, ρ) are
//!
//! ```text
//! ∂_μ φ^a = ∂H/∂ρ^μ_a ,      ∂_μ ρ^μ_a = −∂H/∂u^a ,
//! ```
//!
//! discretized with centered differences in time (interior slices only) and
//! periodic centered differences in space. Built-in densities:
//!
//! * free particle on the line: H = p²/2m, the d = 0 case;
//! * vector boson, r components: H = ½(η_{μν}δ^{ab}ρ^μ_a ρ^ν_b + m²δ_{ab}u^a u^b),
//!   signature (+,−,…,−), whose configuration fields solve Klein-Gordon;
//! * free electrodynamics on n = 4 with antisymmetric momenta P^{μν}; the
//!   on-shell relation is P^{μν} = ∂_ν A_μ − ∂_μ A_ν together with
//!   Σ_μ ∂_μ P^{μν} = 0, matching the slice-level magnetic constraint and
//!   Gauss law used elsewhere in the crate.

use ndarray::Array3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::SpatialLattice;
use crate::scalar::Real;

/// Index pairs (μ < ν) for antisymmetric spacetime momenta, n = 4.
pub const PAIRS_4D: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];

/// Layout of the momentum fiber.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MomentaShape {
    /// ρ^μ_a, stored μ-major: component index = μ·r + a.
    Plain,
    /// Antisymmetric ρ^{μν}; upper-triangle pairs stored in [`PAIRS_4D`] order.
    Antisymmetric2,
}

/// Built-in Hamiltonian densities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum DensityModel<S> {
    FreeParticle { mass: S },
    VectorBoson { mass: S, r: usize },
    Electrodynamics,
}

/// Covariant model description: spacetime dimension, fiber, density.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound = "S: Real")]
pub struct FieldTheorySpec<S: Real> {
    /// n = 1 + d.
    pub base_dim: usize,
    /// Number of configuration components r.
    pub fiber_dim: usize,
    pub momenta_shape: MomentaShape,
    pub density: DensityModel<S>,
}

impl<S: Real> FieldTheorySpec<S> {
    pub fn free_particle(mass: S) -> Result<Self> {
        if !(mass > S::zero()) {
            return Err(Error::InvalidValue {
                field: "mass".into(),
                reason: "must be positive".into(),
            });
        }
        Ok(Self {
            base_dim: 1,
            fiber_dim: 1,
            momenta_shape: MomentaShape::Plain,
            density: DensityModel::FreeParticle { mass },
        })
    }

    pub fn vector_boson(mass: S, r: usize, spatial_dim: usize) -> Result<Self> {
        if !(mass > S::zero()) {
            return Err(Error::InvalidValue {
                field: "mass".into(),
                reason: "must be positive".into(),
            });
        }
        if r == 0 {
            return Err(Error::InvalidValue {
                field: "r".into(),
                reason: "fiber dimension must be >= 1".into(),
            });
        }
        Ok(Self {
            base_dim: 1 + spatial_dim,
            fiber_dim: r,
            momenta_shape: MomentaShape::Plain,
            density: DensityModel::VectorBoson { mass, r },
        })
    }

    pub fn electrodynamics() -> Self {
        Self {
            base_dim: 4,
            fiber_dim: 4,
            momenta_shape: MomentaShape::Antisymmetric2,
            density: DensityModel::Electrodynamics,
        }
    }

    pub fn spatial_dim(&self) -> usize {
        self.base_dim - 1
    }

    /// Number of stored momentum components per site.
    pub fn momenta_components(&self) -> usize {
        match self.momenta_shape {
            MomentaShape::Plain => self.base_dim * self.fiber_dim,
            MomentaShape::Antisymmetric2 => PAIRS_4D.len(),
        }
    }

    /// Density value at one spacetime point. `x` carries the coordinates
    /// (t, x¹, …, x^d); the built-in densities do not depend on it, but the
    /// signature keeps the explicit dependence available for extensions.
    /// `u` has r entries, `rho` has [`Self::momenta_components`] entries.
    pub fn density_value(&self, _x: &[S], u: &[S], rho: &[S]) -> S {
        match &self.density {
            DensityModel::FreeParticle { mass } => {
                S::of(0.5) * rho[0] * rho[0] / *mass
            }
            DensityModel::VectorBoson { mass, r } => {
                let mut acc = S::zero();
                for mu in 0..self.base_dim {
                    let eta = if mu == 0 { S::one() } else { -S::one() };
                    for a in 0..*r {
                        let x = rho[mu * r + a];
                        acc += eta * x * x;
                    }
                }
                for a in 0..*r {
                    acc += *mass * *mass * u[a] * u[a];
                }
                S::of(0.5) * acc
            }
            DensityModel::Electrodynamics => {
                // H(ρ) = −½ Σ_{μ<ν} (ρ^{μν})²; its Euler-Lagrange relation is
                // P^{μν} = ∂_ν A_μ − ∂_μ A_ν, the lattice form of the
                // field-strength constraint.
                let mut acc = S::zero();
                for x in rho.iter().take(PAIRS_4D.len()) {
                    acc += *x * *x;
                }
                -S::of(0.5) * acc
            }
        }
    }

    /// ∂H/∂u at one spacetime point.
    pub fn density_du(&self, _x: &[S], u: &[S], _rho: &[S]) -> Vec<S> {
        match &self.density {
            DensityModel::FreeParticle { .. } => vec![S::zero()],
            DensityModel::VectorBoson { mass, r } => {
                (0..*r).map(|a| *mass * *mass * u[a]).collect()
            }
            DensityModel::Electrodynamics => vec![S::zero(); 4],
        }
    }

    /// ∂H/∂ρ at one spacetime point (same storage layout as the momenta).
    pub fn density_drho(&self, _x: &[S], _u: &[S], rho: &[S]) -> Vec<S> {
        match &self.density {
            DensityModel::FreeParticle { mass } => vec![rho[0] / *mass],
            DensityModel::VectorBoson { r, .. } => {
                let mut out = vec![S::zero(); self.base_dim * r];
                for mu in 0..self.base_dim {
                    let eta = if mu == 0 { S::one() } else { -S::one() };
                    for a in 0..*r {
                        out[mu * r + a] = eta * rho[mu * r + a];
                    }
                }
                out
            }
            DensityModel::Electrodynamics => {
                rho.iter().take(PAIRS_4D.len()).map(|&x| -x).collect()
            }
        }
    }
}

/// Time × periodic-space lattice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Real")]
pub struct SpacetimeLattice<S: Real> {
    pub time_extent: usize,
    pub dt: S,
    pub spatial: SpatialLattice<S>,
}

impl<S: Real> SpacetimeLattice<S> {
    pub fn new(time_extent: usize, dt: S, spatial: SpatialLattice<S>) -> Result<Self> {
        if time_extent < 2 {
            return Err(Error::InvalidValue {
                field: "time_extent".into(),
                reason: "need at least 2 time slices".into(),
            });
        }
        if !(dt > S::zero()) {
            return Err(Error::InvalidValue {
                field: "dt".into(),
                reason: "dt must be positive".into(),
            });
        }
        Ok(Self {
            time_extent,
            dt,
            spatial,
        })
    }

    pub fn n_sites(&self) -> usize {
        self.spatial.n_sites()
    }

    /// Physical time of slice `i` (slice 0 sits at t = 0).
    pub fn time_of(&self, index: usize) -> S {
        S::of(index as f64) * self.dt
    }
}

/// Sampled pair χ = (φ, P) on a spacetime lattice.
///
/// `phi`: `[N_t, N_sites, r]`; `momenta`: `[N_t, N_sites, momenta_components]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Real")]
pub struct DiscretizedSection<S: Real> {
    pub phi: Array3<S>,
    pub momenta: Array3<S>,
}

impl<S: Real> DiscretizedSection<S> {
    pub fn zeros(spec: &FieldTheorySpec<S>, lattice: &SpacetimeLattice<S>) -> Self {
        let nt = lattice.time_extent;
        let ns = lattice.n_sites();
        Self {
            phi: Array3::zeros((nt, ns, spec.fiber_dim)),
            momenta: Array3::zeros((nt, ns, spec.momenta_components())),
        }
    }

    pub fn check_shapes(
        &self,
        spec: &FieldTheorySpec<S>,
        lattice: &SpacetimeLattice<S>,
    ) -> Result<()> {
        let nt = lattice.time_extent;
        let ns = lattice.n_sites();
        let want_phi = [nt, ns, spec.fiber_dim];
        if self.phi.shape() != want_phi {
            return Err(Error::ShapeMismatch {
                context: "section phi",
                expected: want_phi.to_vec(),
                got: self.phi.shape().to_vec(),
            });
        }
        let want_mom = [nt, ns, spec.momenta_components()];
        if self.momenta.shape() != want_mom {
            return Err(Error::ShapeMismatch {
                context: "section momenta",
                expected: want_mom.to_vec(),
                got: self.momenta.shape().to_vec(),
            });
        }
        Ok(())
    }

    /// Full antisymmetric P^{μν} at one site from the stored pairs.
    pub fn antisym_momentum(&self, t: usize, site: usize) -> [[S; 4]; 4] {
        let mut p = [[S::zero(); 4]; 4];
        for (c, &(mu, nu)) in PAIRS_4D.iter().enumerate() {
            let v = self.momenta[[t, site, c]];
            p[mu][nu] = v;
            p[nu][mu] = -v;
        }
        p
    }
}

/// Residuals of the covariant Hamilton equations at interior time slices.
///
/// Time axis runs over slices 1 … N_t−2 (centered time differences; the
/// one-sided ends are excluded from residual norms by construction).
#[derive(Debug, Clone)]
pub struct DdwResidual<S> {
    /// `[N_t−2, N_sites, base_dim·r]` for Plain momenta (μ-major), or
    /// `[N_t−2, N_sites, 6]` pair components for antisymmetric momenta.
    pub res_phi: Array3<S>,
    /// `[N_t−2, N_sites, r]` (Plain) or `[N_t−2, N_sites, 4]` (antisymmetric).
    pub res_mom: Array3<S>,
}

impl<S: Real> DdwResidual<S> {
    pub fn max_norm(&self) -> S {
        let m1 = self.res_phi.iter().fold(S::zero(), |m, &x| {
            let a = x.abs();
            if a > m {
                a
            } else {
                m
            }
        });
        self.res_mom.iter().fold(m1, |m, &x| {
            let a = x.abs();
            if a > m {
                a
            } else {
                m
            }
        })
    }
}

struct Diff<'a, S: Real> {
    lattice: &'a SpacetimeLattice<S>,
}

impl<'a, S: Real> Diff<'a, S> {
    /// Centered time derivative of phi component `a` at (t, site); t interior.
    fn dt_phi(&self, sec: &DiscretizedSection<S>, t: usize, site: usize, a: usize) -> S {
        (sec.phi[[t + 1, site, a]] - sec.phi[[t - 1, site, a]])
            / (S::of(2.0) * self.lattice.dt)
    }

    fn dt_mom(&self, sec: &DiscretizedSection<S>, t: usize, site: usize, c: usize) -> S {
        (sec.momenta[[t + 1, site, c]] - sec.momenta[[t - 1, site, c]])
            / (S::of(2.0) * self.lattice.dt)
    }

    /// Centered periodic spatial derivative along axis `j` (0-based).
    fn dx_phi(&self, sec: &DiscretizedSection<S>, t: usize, site: usize, j: usize, a: usize) -> S {
        let sp = self.lattice.spatial.neighbor(site, j, 1);
        let sm = self.lattice.spatial.neighbor(site, j, -1);
        (sec.phi[[t, sp, a]] - sec.phi[[t, sm, a]])
            / (S::of(2.0) * self.lattice.spatial.spacing()[j])
    }

    fn dx_mom(&self, sec: &DiscretizedSection<S>, t: usize, site: usize, j: usize, c: usize) -> S {
        let sp = self.lattice.spatial.neighbor(site, j, 1);
        let sm = self.lattice.spatial.neighbor(site, j, -1);
        (sec.momenta[[t, sp, c]] - sec.momenta[[t, sm, c]])
            / (S::of(2.0) * self.lattice.spatial.spacing()[j])
    }
}

/// Spacetime coordinates (t, x¹, …, x^d) of a lattice point.
fn point_coords<S: Real>(lattice: &SpacetimeLattice<S>, t: usize, site: usize) -> Vec<S> {
    let mut out = Vec::with_capacity(1 + lattice.spatial.ndim());
    out.push(lattice.time_of(t));
    for (axis, c) in lattice.spatial.site_coords(site).into_iter().enumerate() {
        out.push(S::of(c as f64) * lattice.spatial.spacing()[axis]);
    }
    out
}

/// Covariant Hamilton equation residuals with centered differences.
pub fn ddw_residual<S: Real>(
    spec: &FieldTheorySpec<S>,
    lattice: &SpacetimeLattice<S>,
    section: &DiscretizedSection<S>,
) -> Result<DdwResidual<S>> {
    section.check_shapes(spec, lattice)?;
    let nt = lattice.time_extent;
    let ns = lattice.n_sites();
    if nt < 3 {
        return Err(Error::InvalidValue {
            field: "time_extent".into(),
            reason: "need at least 3 slices for interior residuals".into(),
        });
    }
    let d = Diff { lattice };
    match spec.momenta_shape {
        MomentaShape::Plain => {
            let r = spec.fiber_dim;
            let n = spec.base_dim;
            let mut res_phi = Array3::zeros((nt - 2, ns, n * r));
            let mut res_mom = Array3::zeros((nt - 2, ns, r));
            for t in 1..nt - 1 {
                for s in 0..ns {
                    let x = point_coords(lattice, t, s);
                    let u: Vec<S> = (0..r).map(|a| section.phi[[t, s, a]]).collect();
                    let rho: Vec<S> =
                        (0..n * r).map(|c| section.momenta[[t, s, c]]).collect();
                    let dh_drho = spec.density_drho(&x, &u, &rho);
                    let dh_du = spec.density_du(&x, &u, &rho);
                    for a in 0..r {
                        // time component
                        res_phi[[t - 1, s, a]] =
                            d.dt_phi(section, t, s, a) - dh_drho[a];
                        // spatial components
                        for j in 0..n - 1 {
                            res_phi[[t - 1, s, (j + 1) * r + a]] =
                                d.dx_phi(section, t, s, j, a) - dh_drho[(j + 1) * r + a];
                        }
                        let mut div = d.dt_mom(section, t, s, a);
                        for j in 0..n - 1 {
                            div += d.dx_mom(section, t, s, j, (j + 1) * r + a);
                        }
                        res_mom[[t - 1, s, a]] = div + dh_du[a];
                    }
                }
            }
            Ok(DdwResidual { res_phi, res_mom })
        }
        MomentaShape::Antisymmetric2 => {
            let mut res_phi = Array3::zeros((nt - 2, ns, PAIRS_4D.len()));
            let mut res_mom = Array3::zeros((nt - 2, ns, 4));
            for t in 1..nt - 1 {
                for s in 0..ns {
                    // dA[μ][ν] = ∂_μ A_ν
                    let mut da = [[S::zero(); 4]; 4];
                    for nu in 0..4 {
                        da[0][nu] = d.dt_phi(section, t, s, nu);
                        for j in 0..3 {
                            da[j + 1][nu] = d.dx_phi(section, t, s, j, nu);
                        }
                    }
                    let x = point_coords(lattice, t, s);
                    let u: Vec<S> = (0..4).map(|a| section.phi[[t, s, a]]).collect();
                    let rho: Vec<S> = (0..PAIRS_4D.len())
                        .map(|c| section.momenta[[t, s, c]])
                        .collect();
                    let dh_drho = spec.density_drho(&x, &u, &rho);
                    for (c, &(mu, nu)) in PAIRS_4D.iter().enumerate() {
                        res_phi[[t - 1, s, c]] = da[mu][nu] - da[nu][mu] - dh_drho[c];
                    }
                    // res_mom[ν] = Σ_μ ∂_μ P^{μν}, expanding the stored upper
                    // pairs to the full antisymmetric tensor.
                    for nu in 0..4 {
                        let mut acc = S::zero();
                        for mu in 0..4 {
                            if mu == nu {
                                continue;
                            }
                            let (sign, c) = pair_index::<S>(mu, nu);
                            let deriv = if mu == 0 {
                                d.dt_mom(section, t, s, c)
                            } else {
                                d.dx_mom(section, t, s, mu - 1, c)
                            };
                            acc += sign * deriv;
                        }
                        res_mom[[t - 1, s, nu]] = acc;
                    }
                }
            }
            Ok(DdwResidual { res_phi, res_mom })
        }
    }
}

/// Storage index and sign for P^{μν} in terms of the stored upper pairs.
fn pair_index<S: Real>(mu: usize, nu: usize) -> (S, usize) {
    debug_assert_ne!(mu, nu);
    let (a, b, sign) = if mu < nu {
        (mu, nu, S::one())
    } else {
        (nu, mu, -S::one())
    };
    let c = PAIRS_4D
        .iter()
        .position(|&p| p == (a, b))
        .expect("valid pair");
    (sign, c)
}

/// Discrete action Σ_cells vol·[P^μ_a ∂_μφ^a − H]: trapezoidal in time
/// (one-sided time differences at the ends), centered elsewhere.
pub fn evaluate_action<S: Real>(
    spec: &FieldTheorySpec<S>,
    lattice: &SpacetimeLattice<S>,
    section: &DiscretizedSection<S>,
) -> Result<S> {
    section.check_shapes(spec, lattice)?;
    let nt = lattice.time_extent;
    let ns = lattice.n_sites();
    let dt = lattice.dt;
    let vol = lattice.spatial.cell_volume();
    let d = Diff { lattice };

    let dt_phi_any = |t: usize, s: usize, a: usize| -> S {
        if t == 0 {
            (section.phi[[1, s, a]] - section.phi[[0, s, a]]) / dt
        } else if t == nt - 1 {
            (section.phi[[nt - 1, s, a]] - section.phi[[nt - 2, s, a]]) / dt
        } else {
            d.dt_phi(section, t, s, a)
        }
    };

    let mut action = S::zero();
    for t in 0..nt {
        let w = if t == 0 || t == nt - 1 {
            S::of(0.5)
        } else {
            S::one()
        };
        let mut slice_sum = S::zero();
        for s in 0..ns {
            let r = spec.fiber_dim;
            let u: Vec<S> = (0..r).map(|a| section.phi[[t, s, a]]).collect();
            let rho: Vec<S> = (0..spec.momenta_components())
                .map(|c| section.momenta[[t, s, c]])
                .collect();
            let mut kinetic = S::zero();
            match spec.momenta_shape {
                MomentaShape::Plain => {
                    for a in 0..r {
                        kinetic += rho[a] * dt_phi_any(t, s, a);
                        for j in 0..spec.base_dim - 1 {
                            kinetic += rho[(j + 1) * r + a] * d.dx_phi(section, t, s, j, a);
                        }
                    }
                }
                MomentaShape::Antisymmetric2 => {
                    // Σ_{μ<ν} P^{μν}(∂_μA_ν − ∂_νA_μ)
                    let mut da = [[S::zero(); 4]; 4];
                    for nu in 0..4 {
                        da[0][nu] = dt_phi_any(t, s, nu);
                        for j in 0..3 {
                            da[j + 1][nu] = d.dx_phi(section, t, s, j, nu);
                        }
                    }
                    for (c, &(mu, nu)) in PAIRS_4D.iter().enumerate() {
                        kinetic += rho[c] * (da[mu][nu] - da[nu][mu]);
                    }
                }
            }
            let x = point_coords(lattice, t, s);
            slice_sum += kinetic - spec.density_value(&x, &u, &rho);
        }
        action += w * slice_sum;
    }
    Ok(action * dt * vol)
}

/// Binary section format: eight u64 little-endian header words
/// `[magic, version, n_t, n_sites, r, momenta_components, dtype_bits, reserved]`
/// followed by the row-major f64 payload of `phi` then `momenta`.
const SECTION_MAGIC: u64 = 0x5353_4543_5430_3146; // "SSECT01F"

pub fn write_section_binary<S: Real>(
    section: &DiscretizedSection<S>,
    mut w: impl std::io::Write,
) -> Result<()> {
    let sh = section.phi.shape();
    let mh = section.momenta.shape();
    let header = [
        SECTION_MAGIC,
        1u64,
        sh[0] as u64,
        sh[1] as u64,
        sh[2] as u64,
        mh[2] as u64,
        64u64,
        0u64,
    ];
    for word in header {
        w.write_all(&word.to_le_bytes())?;
    }
    for &x in section.phi.iter() {
        w.write_all(&x.as_f64().to_le_bytes())?;
    }
    for &x in section.momenta.iter() {
        w.write_all(&x.as_f64().to_le_bytes())?;
    }
    Ok(())
}

pub fn read_section_binary<S: Real>(mut r: impl std::io::Read) -> Result<DiscretizedSection<S>> {
    let mut word = [0u8; 8];
    let mut header = [0u64; 8];
    for h in header.iter_mut() {
        r.read_exact(&mut word)?;
        *h = u64::from_le_bytes(word);
    }
    if header[0] != SECTION_MAGIC || header[1] != 1 || header[6] != 64 {
        return Err(Error::InvalidValue {
            field: "section header".into(),
            reason: "bad magic, version or dtype".into(),
        });
    }
    let (nt, ns, rr, mc) = (
        header[2] as usize,
        header[3] as usize,
        header[4] as usize,
        header[5] as usize,
    );
    let mut read_block = |len: usize| -> Result<Vec<S>> {
        let mut out = Vec::with_capacity(len);
        for _ in 0..len {
            r.read_exact(&mut word)?;
            out.push(S::of(f64::from_le_bytes(word)));
        }
        Ok(out)
    };
    let phi = Array3::from_shape_vec((nt, ns, rr), read_block(nt * ns * rr)?)
        .map_err(|e| Error::InvalidValue {
            field: "section phi".into(),
            reason: e.to_string(),
        })?;
    let momenta = Array3::from_shape_vec((nt, ns, mc), read_block(nt * ns * mc)?)
        .map_err(|e| Error::InvalidValue {
            field: "section momenta".into(),
            reason: e.to_string(),
        })?;
    Ok(DiscretizedSection { phi, momenta })
}

/// Free-particle solution section q(t) = q̄ + p̄·t/m, p(t) = p̄.
pub fn free_particle_solution<S: Real>(
    spec: &FieldTheorySpec<S>,
    lattice: &SpacetimeLattice<S>,
    q0: S,
    p0: S,
) -> DiscretizedSection<S> {
    let mass = match &spec.density {
        DensityModel::FreeParticle { mass } => *mass,
        _ => panic!("free_particle_solution needs a free-particle spec"),
    };
    let mut sec = DiscretizedSection::zeros(spec, lattice);
    for t in 0..lattice.time_extent {
        let time = lattice.time_of(t);
        sec.phi[[t, 0, 0]] = q0 + p0 * time / mass;
        sec.momenta[[t, 0, 0]] = p0;
    }
    sec
}

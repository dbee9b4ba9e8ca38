//! Linear pre-symplectic Hamiltonian systems and covariant Poisson brackets
//! on the solution space of first-order field theories.
//!
//! The pipeline implemented here:
//!
//! ```text
//! field theory (free particle, vector boson, electrodynamics)
//!   └─ slice system (𝓕^Σ, Ω^Σ, 𝓗) on a spatial lattice          [slicing]
//!        └─ pre-symplectic constraint algorithm → (F_∞, Ω_∞, H_∞)  [presymp]
//!             ├─ Symplectic: Ω_∞ nondegenerate
//!             └─ Gauge: Coulomb connection fixes the kernel        [connection]
//!                  └─ spectral flow, observable pullback, brackets [engine]
//! ```
//!
//! All systems are linear (affine constraint sets, quadratic Hamiltonians), so
//! the constraint algorithm is exact linear algebra and flows have closed
//! forms. Core math is generic over the scalar type (see [`scalar::Real`]);
//! the aliases below fix the `f64` instantiation used by the CLI and tests.

pub mod connection;
pub mod ddw;
pub mod engine;
pub mod error;
pub mod lattice;
mod linalg;
pub mod matio;
pub mod pipeline;
pub mod presymp;
pub mod scalar;
pub mod slicing;
pub mod verify;

pub use error::{Error, Result};
pub use scalar::Real;

/// Dense matrix at the default scalar type.
pub type Mat = ndarray::Array2<f64>;
/// Dense vector at the default scalar type.
pub type Vec1 = ndarray::Array1<f64>;

pub type QuadraticHamiltonian = presymp::QuadraticHamiltonian<f64>;
pub type PresymplecticSystem = presymp::PresymplecticSystem<f64>;
pub type LinearSubspace = presymp::LinearSubspace<f64>;
pub type ConstraintChainResult = presymp::ConstraintChainResult<f64>;
pub type ConnectionProjector = connection::ConnectionProjector<f64>;
pub type FieldTheorySpec = ddw::FieldTheorySpec<f64>;
pub type SpacetimeLattice = ddw::SpacetimeLattice<f64>;
pub type DiscretizedSection = ddw::DiscretizedSection<f64>;
pub type SliceModel = slicing::SliceModel<f64>;
pub type SliceState = slicing::SliceState<f64>;
pub type Observable = engine::Observable<f64>;
pub type FlowOperator = engine::FlowOperator<f64>;

//! Numerical toolkit for controlled Hamiltonian systems on Poisson manifolds.
//!
//! All numerics are generic over [`Real`] (`f32` or `f64`); the `*64`
//! aliases below pin the double-precision instantiation used by the CLI.
//!
//! Module map:
//! - [`pointlin`]: subspaces at a point (annihilators, `B♯` images, sums, intersections)
//! - [`poisson`]: tensors, brackets, Hamiltonian fields, Jacobi and Casimir checks
//! - [`chsys`]: controlled Hamiltonian systems, vertical lifts, integration
//! - [`reduce`]: submanifolds, distributions, reducibility and classification
//! - [`equiv`]: cotangent lifts, matching conditions and control-law recovery
//! - [`symmetry`]: catalog group actions, momentum maps, singular reduction

pub mod chsys;
pub mod equiv;
pub mod error;
pub mod field;
pub mod pointlin;
pub mod poisson;
pub mod reduce;
pub mod sampling;
pub mod scalar;
pub mod symmetry;
pub mod tol;
pub mod verdict;

pub use error::{Error, Result};
pub use field::{ScalarField, VectorField, VectorMap};
pub use pointlin::Subspace;
pub use poisson::PoissonStructure;
pub use scalar::Real;
pub use tol::{LinTol, Tolerances};
pub use verdict::Verdict;

pub type Subspace64 = pointlin::Subspace<f64>;
pub type ScalarField64 = field::ScalarField<f64>;
pub type VectorField64 = field::VectorField<f64>;
pub type VectorMap64 = field::VectorMap<f64>;
pub type PoissonStructure64 = poisson::PoissonStructure<f64>;
pub type Submanifold64 = reduce::Submanifold<f64>;
pub type Distribution64 = reduce::Distribution<f64>;
pub type FiberMap64 = chsys::FiberMap<f64>;
pub type CHSystem64 = chsys::CHSystem<f64>;
pub type Trajectory64 = chsys::Trajectory<f64>;
pub type CotangentLiftMap64 = equiv::CotangentLiftMap<f64>;
pub type GroupAction64 = symmetry::GroupAction<f64>;
pub type MomentumMap64 = symmetry::MomentumMap<f64>;
pub type Tolerances64 = tol::Tolerances<f64>;

pub type Subspace32 = pointlin::Subspace<f32>;
pub type PoissonStructure32 = poisson::PoissonStructure<f32>;

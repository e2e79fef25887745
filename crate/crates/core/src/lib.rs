//! Clamped Euler–Bernoulli beam with a rigid tip payload under nonlinear
//! spring/damper boundary feedback.
//!
//! * [`model`]: parameters, feedback laws, the Lyapunov energy and the state inner product.
//! * [`spectral`]: eigen-wavenumbers and mode shapes of the conservative and
//!   the payload-free boundary problems, the exceptional inertia set and its nodal modes.
//! * [`fem`]: Hermite cubic discretization and an implicit-midpoint integrator.
//! * [`asymptotics`]: the projection onto the non-decaying set, the predicted
//!   periodic limit and classification of simulated trajectories.

pub mod asymptotics;
pub mod error;
pub mod fem;
pub mod model;
pub mod quadrature;
pub mod spectral;

pub use error::{Error, Result};
pub use model::{BeamParams, BeamState, Law, Mesh, NonlinearLaws};

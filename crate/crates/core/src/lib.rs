//! Moment-level simulation of nonreciprocal sensing networks.
//!
//! A probe mode `a` is driven with unknown amplitude `ξ` and read out
//! through one or more modes `b_j`, coupled either reciprocally or through a
//! balanced coherent-plus-dissipative link that makes the coupling one-way.
//! Everything is linear and Gaussian, so first and second moments describe
//! the state completely:
//!
//! - [`model`] builds complex-mode and quadrature Langevin systems,
//! - [`moments`] propagates and solves for means and covariances,
//! - [`fisher`] turns moments into Fisher information and homodyne precision,
//! - [`closedform`] holds the analytic comparison formulas,
//! - [`trajectory`] is an independent Monte Carlo check,
//! - [`verify`] runs the numeric-versus-analytic cross-checks.

// `!(x > 0.0)` rejects NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod closedform;
pub mod error;
pub mod fisher;
pub mod model;
pub mod moments;
pub mod trajectory;
pub mod verify;

pub use error::{Error, Result};
pub use model::{Coupling, LinearSystem, ModelSpec, QuadratureSystem, StarConvention, Topology};
pub use moments::MomentState;

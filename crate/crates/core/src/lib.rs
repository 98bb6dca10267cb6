//! Constructive loss-landscape paths for wide feedforward networks.
//!
//! Given a parameter of a network `x ↦ Θ^l f^l[Θ^{l-1} ⋯ f^1[Θ^0 x]]` and a
//! (global) minimizer of the empirical risk, the crate builds an explicit
//! piecewise-affine path between them along which the risk never increases,
//! and checks every piece of it numerically. See the `examples/` directory
//! for one runnable program per building block.

pub mod blocks;
pub mod caratheodory;
pub mod cli;
pub mod error;
pub mod globalmin;
pub mod netcore;
pub mod objective;
pub mod paths;
pub mod verify;

pub use error::{Error, Result};
pub use netcore::{ActivationKind, Architecture, Dataset, NetworkParams, Permutation};
pub use objective::{ConstraintSpec, LossKind};

//! Quasi-stationary distributions of finite absorbing Markov chains:
//! exact linear-algebra solvers, five seeded particle-simulation schemes
//! driven by occupation measures, and statistical validation of their
//! limit theorems.
//!
//! The layers, bottom up:
//!
//! - [`chain`]: validated absorbing chains and the interaction kernel that
//!   redirects absorption mass along a distribution.
//! - [`theory`]: the exact QSD, stationary distributions, Poisson
//!   solutions, drift Jacobian and stability margin, noise covariances,
//!   and the Lyapunov equations of the central limit theorems.
//! - [`schemes`]: the simulation engines (single, independent,
//!   interacting, branching, and the uniformly-refreshed population) with
//!   exact particle-movement accounting and counter-based randomness.
//! - [`analysis`]: seeded replication, total-variation convergence traces,
//!   empirical CLT reports, and the two built-in benchmark experiments.

pub mod analysis;
pub mod chain;
pub mod dist;
pub mod error;
pub mod output;
pub mod schemes;
pub mod theory;

pub use chain::AbsorbingChain;
pub use dist::{tv_distance, Distribution, TangentVector};
pub use error::{QsdError, Result};

#[cfg(test)]
pub(crate) mod testutil;

//! Exact and analytic quantities: QSD, interaction-kernel stationarity,
//! Poisson solutions, drift Jacobian, stability margin, noise covariances,
//! and the Lyapunov equations behind the limit theorems.

pub mod clt;
pub mod jacobian;
pub mod lyapunov;
pub mod noise;
pub mod stationary;

pub use clt::{clt_covariance, clt_covariance_with, iid_alpha_star, matrix_rows, CltTheory, CltVariant};
pub use jacobian::{jacobian_h, stability_l, JacobianMode, StabilityReport};
pub use lyapunov::{lyapunov_residual, lyapunov_solve};
pub use noise::{noise_f, u_star};
pub use stationary::{drift_h, exact_qsd, invariant_pi, poisson_q, QsdSolution};

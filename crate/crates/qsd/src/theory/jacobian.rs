//! Jacobian of the drift and the stability margin of its tangent-space
//! spectrum.
//!
//! The drift maps the simplex into its tangent space, so its derivative is
//! only meaningful along tangent directions. Both computation modes below
//! produce the canonical d x d extension that agrees with the directional
//! derivatives on the tangent space and annihilates the all-ones direction;
//! every column of that extension sums to zero.

use nalgebra::DMatrix;

use crate::chain::AbsorbingChain;
use crate::dist::Distribution;
use crate::error::{QsdError, Result};
use crate::theory::stationary::{exact_qsd, poisson_of_kernel, stationary_of_kernel};

/// How to compute the Jacobian.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum JacobianMode {
    /// Differentiate the stationarity equation through the centered
    /// resolvent: on tangent vectors the derivative acts as
    /// `c Q[theta]^T - I` with `c` the stationary absorption rate.
    Analytic,
    /// Central differences along the tangent directions `e_j - e_d`,
    /// staying on the affine hull so no renormalization is needed.
    FiniteDifference { eta: f64 },
}

impl JacobianMode {
    pub fn finite_difference() -> Self {
        JacobianMode::FiniteDifference { eta: 1e-6 }
    }
}

/// Drift evaluated on a raw (possibly off-simplex) point of the affine hull.
fn drift_raw(chain: &AbsorbingChain, nu: &[f64]) -> Result<Vec<f64>> {
    let d = chain.dim();
    let k = DMatrix::from_fn(d, d, |x, y| chain.kernel_entry(x, y, nu));
    let pi = stationary_of_kernel(&k)?;
    Ok((0..d).map(|y| pi[y] - nu[y]).collect())
}

/// Canonical extension of tangent directional derivatives to a d x d matrix
/// killing the all-ones direction: `G (e_j - e_d) = D_j` and `G 1 = 0`.
fn extend_tangent_columns(cols: &[Vec<f64>], d: usize) -> DMatrix<f64> {
    let mut g = DMatrix::zeros(d, d);
    if d == 1 {
        return g;
    }
    let mut last = vec![0.0; d];
    for col in cols {
        for (i, v) in col.iter().enumerate() {
            last[i] -= v;
        }
    }
    for v in last.iter_mut() {
        *v /= d as f64;
    }
    for j in 0..d - 1 {
        for i in 0..d {
            g[(i, j)] = cols[j][i] + last[i];
        }
    }
    for i in 0..d {
        g[(i, d - 1)] = last[i];
    }
    g
}

/// Jacobian of the drift at `theta`.
pub fn jacobian_h(
    chain: &AbsorbingChain,
    theta: &Distribution,
    mode: JacobianMode,
) -> Result<DMatrix<f64>> {
    let d = chain.dim();
    assert_eq!(theta.dim(), d);
    match mode {
        JacobianMode::Analytic => {
            let k = chain.kernel(theta);
            let pi = stationary_of_kernel(&k)?;
            let q = poisson_of_kernel(&k, &pi)?;
            let c: f64 = (0..d).map(|x| pi[x] * chain.absorb(x)).sum();
            // (c Q^T - I) restricted to the tangent space, extended by zero
            // along the all-ones direction.
            let mut cols = Vec::with_capacity(d.saturating_sub(1));
            for j in 0..d.saturating_sub(1) {
                let col: Vec<f64> = (0..d)
                    .map(|i| {
                        let qv = q[(j, i)] - q[(d - 1, i)];
                        let e = (j == i) as u8 as f64 - (d - 1 == i) as u8 as f64;
                        c * qv - e
                    })
                    .collect();
                cols.push(col);
            }
            Ok(extend_tangent_columns(&cols, d))
        }
        JacobianMode::FiniteDifference { eta } => {
            assert!(eta > 0.0, "perturbation step must be positive");
            let w = theta.weights();
            let mut cols = Vec::with_capacity(d.saturating_sub(1));
            for j in 0..d.saturating_sub(1) {
                let mut plus = w.to_vec();
                let mut minus = w.to_vec();
                plus[j] += eta;
                plus[d - 1] -= eta;
                minus[j] -= eta;
                minus[d - 1] += eta;
                let hp = drift_raw(chain, &plus)?;
                let hm = drift_raw(chain, &minus)?;
                let col: Vec<f64> = (0..d).map(|i| (hp[i] - hm[i]) / (2.0 * eta)).collect();
                cols.push(col);
            }
            Ok(extend_tangent_columns(&cols, d))
        }
    }
}

/// Stability margin of the drift at the QSD.
#[derive(Debug, Clone, Copy)]
pub struct StabilityReport {
    /// Negated largest real part of the tangent-space spectrum; infinite
    /// when d = 1 and the tangent space is trivial.
    pub l: f64,
    /// CLT step-size threshold `1/L` (0 when `l` is infinite).
    pub gamma_star_min: f64,
}

/// Basis `{e_1 - e_d, ..., e_{d-1} - e_d}` of the tangent space as columns.
pub fn tangent_basis_differences(d: usize) -> DMatrix<f64> {
    let mut b = DMatrix::zeros(d, d.saturating_sub(1));
    for j in 0..d.saturating_sub(1) {
        b[(j, j)] = 1.0;
        b[(d - 1, j)] = -1.0;
    }
    b
}

/// Orthonormal basis of the tangent space (Helmert contrasts) as columns.
pub fn tangent_basis_orthonormal(d: usize) -> DMatrix<f64> {
    let mut b = DMatrix::zeros(d, d.saturating_sub(1));
    for k in 1..d {
        let norm = (k as f64 * (k as f64 + 1.0)).sqrt();
        for i in 0..k {
            b[(i, k - 1)] = 1.0 / norm;
        }
        b[(k, k - 1)] = -(k as f64) / norm;
    }
    b
}

/// Spectrum of a matrix restricted to the tangent space: eigenvalues of the
/// (d-1) x (d-1) matrix of its action in the difference basis. Since the
/// first d-1 coordinates of a tangent vector determine it, the restriction
/// is just the leading rows of `G B`.
pub fn tangent_restriction(g: &DMatrix<f64>) -> DMatrix<f64> {
    let d = g.nrows();
    let b = tangent_basis_differences(d);
    let gb = g * b;
    gb.rows(0, d - 1).into_owned()
}

/// Computes the stability margin `L` and the threshold `1/L` at the QSD.
pub fn stability_l(chain: &AbsorbingChain) -> Result<StabilityReport> {
    let d = chain.dim();
    if d == 1 {
        return Ok(StabilityReport {
            l: f64::INFINITY,
            gamma_star_min: 0.0,
        });
    }
    let sol = exact_qsd(chain, 1e-12)?;
    let g = jacobian_h(chain, &sol.theta_star, JacobianMode::Analytic)?;
    let m = tangent_restriction(&g);
    let eigs = m.complex_eigenvalues();
    let max_re = eigs.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
    let l = -max_re;
    if !(l > 0.0) {
        return Err(QsdError::NotHurwitz { max_re });
    }
    Ok(StabilityReport {
        l,
        gamma_star_min: 1.0 / l,
    })
}

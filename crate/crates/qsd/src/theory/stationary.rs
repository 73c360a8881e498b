//! Exact quantities attached to the chain: the QSD itself, the invariant
//! distribution of the interaction kernel, the drift, and the centered
//! solution of the kernel's Poisson equation.

use nalgebra::{DMatrix, DVector};

use crate::chain::AbsorbingChain;
use crate::dist::{Distribution, TangentVector};
use crate::error::{QsdError, Result};

/// Iteration cap for the power method.
const POWER_ITER_CAP: usize = 1_000_000;

/// The left Perron pair of the substochastic restriction.
#[derive(Debug, Clone)]
pub struct QsdSolution {
    pub theta_star: Distribution,
    pub lambda: f64,
    pub residual: f64,
}

/// Left Perron eigenvector of the restriction, normalized to the simplex,
/// by power iteration on the transpose with a Rayleigh-quotient eigenvalue
/// and sup-norm residual stopping rule.
pub fn exact_qsd(chain: &AbsorbingChain, tol: f64) -> Result<QsdSolution> {
    assert!(tol > 0.0, "tolerance must be positive");
    let d = chain.dim();
    let p = chain.sub_matrix();
    let pt = p.transpose();

    let mut v = DVector::from_element(d, 1.0 / d as f64);
    let mut residual = f64::INFINITY;
    for _ in 0..POWER_ITER_CAP {
        let w = &pt * &v;
        let lambda = v.dot(&w) / v.dot(&v);
        let sum = w.sum();
        if !(sum > 0.0) {
            return Err(QsdError::SingularSystem);
        }
        v = w / sum;
        residual = (0..d)
            .map(|y| {
                let mut s = 0.0;
                for x in 0..d {
                    s += v[x] * p[(x, y)];
                }
                (s - lambda * v[y]).abs()
            })
            .fold(0.0_f64, f64::max);
        if residual <= tol {
            let theta_star = Distribution::new(v.iter().copied().collect())?;
            if !(lambda > 0.0 && lambda < 1.0) {
                return Err(QsdError::NoAbsorption);
            }
            return Ok(QsdSolution {
                theta_star,
                lambda,
                residual,
            });
        }
    }
    Err(QsdError::NoConvergence { residual })
}

/// Stationary distribution of an arbitrary irreducible stochastic matrix,
/// by a direct linear solve with one row replaced by the normalization.
pub fn stationary_of_kernel(k: &DMatrix<f64>) -> Result<Vec<f64>> {
    let d = k.nrows();
    assert_eq!(d, k.ncols());
    let mut a = k.transpose() - DMatrix::<f64>::identity(d, d);
    for y in 0..d {
        a[(d - 1, y)] = 1.0;
    }
    let mut b = DVector::zeros(d);
    b[d - 1] = 1.0;
    let lu = a.lu();
    let pi = lu.solve(&b).ok_or(QsdError::SingularSystem)?;
    let mut w: Vec<f64> = pi.iter().copied().collect();
    // The solve can leave tiny negative round-off on entries near zero.
    for x in w.iter_mut() {
        if *x < 0.0 {
            if *x < -1e-9 {
                return Err(QsdError::SingularSystem);
            }
            *x = 0.0;
        }
    }
    let sum: f64 = w.iter().sum();
    if !(sum > 0.0) {
        return Err(QsdError::SingularSystem);
    }
    for x in w.iter_mut() {
        *x /= sum;
    }
    Ok(w)
}

/// Invariant distribution of the interaction kernel at `nu`.
pub fn invariant_pi(chain: &AbsorbingChain, nu: &Distribution) -> Result<Distribution> {
    let k = chain.kernel(nu);
    Distribution::new(stationary_of_kernel(&k)?)
}

/// Drift of the mean-field flow: `pi(nu) - nu`.
pub fn drift_h(chain: &AbsorbingChain, nu: &Distribution) -> Result<TangentVector> {
    let pi = invariant_pi(chain, nu)?;
    let comps: Vec<f64> = pi
        .weights()
        .iter()
        .zip(nu.weights())
        .map(|(a, b)| a - b)
        .collect();
    TangentVector::new(comps)
}

/// Centered Poisson solution for an arbitrary irreducible stochastic matrix
/// with stationary distribution `pi`: the unique `Q` with
/// `(I - K) Q = Q (I - K) = I - Pi` and `Pi Q = Q Pi = 0`, computed as
/// `(I - K + Pi)^{-1} - Pi`.
pub fn poisson_of_kernel(k: &DMatrix<f64>, pi: &[f64]) -> Result<DMatrix<f64>> {
    let d = k.nrows();
    let pi_mat = DMatrix::from_fn(d, d, |_, y| pi[y]);
    let m = DMatrix::<f64>::identity(d, d) - k + &pi_mat;
    let inv = m.lu().try_inverse().ok_or(QsdError::SingularSystem)?;
    Ok(inv - pi_mat)
}

/// Centered Poisson solution of the interaction kernel at `nu`.
pub fn poisson_q(chain: &AbsorbingChain, nu: &Distribution) -> Result<DMatrix<f64>> {
    let k = chain.kernel(nu);
    let pi = stationary_of_kernel(&k)?;
    poisson_of_kernel(&k, &pi)
}

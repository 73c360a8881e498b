//! Per-step noise covariance of the occupation-measure recursions and its
//! stationary aggregate.

use nalgebra::DMatrix;

use crate::chain::AbsorbingChain;
use crate::dist::Distribution;
use crate::error::Result;
use crate::theory::stationary::{exact_qsd, poisson_of_kernel, stationary_of_kernel};

/// Noise covariance read off a kernel and its centered Poisson solution:
/// entrywise
/// `sum_u K[z,u] Q[u,x] Q[u,y] - (KQ)[z,y] (KQ)[z,x]`.
pub fn noise_f_of_kernel(k: &DMatrix<f64>, q: &DMatrix<f64>, z: usize) -> DMatrix<f64> {
    let d = k.nrows();
    let kq = k * q;
    DMatrix::from_fn(d, d, |x, y| {
        let mut s = 0.0;
        for u in 0..d {
            s += k[(z, u)] * q[(u, x)] * q[(u, y)];
        }
        s - kq[(z, y)] * kq[(z, x)]
    })
}

/// Noise covariance of the interaction kernel at `theta`, conditioned on a
/// particle sitting at 0-based state `z`.
pub fn noise_f(chain: &AbsorbingChain, theta: &Distribution, z: usize) -> Result<DMatrix<f64>> {
    assert!(z < chain.dim(), "state index out of range");
    let k = chain.kernel(theta);
    let pi = stationary_of_kernel(&k)?;
    let q = poisson_of_kernel(&k, &pi)?;
    Ok(noise_f_of_kernel(&k, &q, z))
}

/// Stationary per-step noise covariance: the QSD-weighted sum of the
/// conditional covariances.
pub fn u_star(chain: &AbsorbingChain) -> Result<DMatrix<f64>> {
    let sol = exact_qsd(chain, 1e-12)?;
    u_star_at(chain, &sol.theta_star)
}

/// Same aggregate with the weights taken at an explicit point.
pub fn u_star_at(chain: &AbsorbingChain, theta: &Distribution) -> Result<DMatrix<f64>> {
    let d = chain.dim();
    let k = chain.kernel(theta);
    let pi = stationary_of_kernel(&k)?;
    let q = poisson_of_kernel(&k, &pi)?;
    let mut u = DMatrix::zeros(d, d);
    for w in 0..d {
        let f = noise_f_of_kernel(&k, &q, w);
        u += f * theta.weights()[w];
    }
    Ok(u)
}

/// Stationary noise aggregate for an arbitrary irreducible stochastic
/// matrix, weighted by its own stationary distribution.
pub fn u_star_of_kernel(k: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let d = k.nrows();
    let pi = stationary_of_kernel(k)?;
    let q = poisson_of_kernel(k, &pi)?;
    let mut u = DMatrix::zeros(d, d);
    for w in 0..d {
        let f = noise_f_of_kernel(k, &q, w);
        u += f * pi[w];
    }
    Ok(u)
}

//! Shared fixtures and independent oracles for the unit tests.

use nalgebra::{DMatrix, DVector};

use crate::chain::AbsorbingChain;

/// Minimal legal chain: one live state, absorption probability 0.2.
pub fn chain1() -> AbsorbingChain {
    AbsorbingChain::validate(&[vec![1.0, 0.0], vec![0.2, 0.8]]).unwrap()
}

/// The three-state reference chain.
pub fn chain3() -> AbsorbingChain {
    AbsorbingChain::preset("paper-3state").unwrap()
}

/// The ten-state reference chain with three sticky states.
pub fn chain10() -> AbsorbingChain {
    AbsorbingChain::preset("paper-10state").unwrap()
}

/// Two live states with a doubly stochastic restriction; the QSD is uniform.
pub fn symmetric2() -> AbsorbingChain {
    AbsorbingChain::validate(&[
        vec![1.0, 0.0, 0.0],
        vec![0.2, 0.4, 0.4],
        vec![0.2, 0.4, 0.4],
    ])
    .unwrap()
}

/// Independent dense route for `U + A V + V A^T + c V = 0`: vectorize into
/// `(I kron A + A kron I + c I) vec(V) = -vec(U)` (column-major) and solve.
pub fn kronecker_lyapunov_oracle(u: &DMatrix<f64>, a: &DMatrix<f64>, c: f64) -> DMatrix<f64> {
    let d = a.nrows();
    let n = d * d;
    let mut m = DMatrix::<f64>::zeros(n, n);
    for j in 0..d {
        for i in 0..d {
            let row = j * d + i;
            for k in 0..d {
                m[(row, j * d + k)] += a[(i, k)];
            }
            for k in 0..d {
                m[(row, k * d + i)] += a[(j, k)];
            }
            m[(row, row)] += c;
        }
    }
    let mut rhs = DVector::<f64>::zeros(n);
    for j in 0..d {
        for i in 0..d {
            rhs[j * d + i] = -u[(i, j)];
        }
    }
    let sol = m.lu().solve(&rhs).expect("oracle system is invertible");
    DMatrix::from_fn(d, d, |i, j| sol[j * d + i])
}

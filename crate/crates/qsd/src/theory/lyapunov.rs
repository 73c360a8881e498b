//! Dense solver for the shifted Lyapunov equation
//! `U + A V + V A^T + c V = 0`.
//!
//! The shift folds into `A' = A + (c/2) I`, leaving a standard continuous
//! Lyapunov equation solved by the Schur (Bartels-Stewart) method: reduce
//! `A'` to real quasi-triangular form and back-substitute over its 1x1 and
//! 2x2 diagonal blocks.

use nalgebra::{DMatrix, DVector};

use crate::error::{QsdError, Result};

/// Residual of a candidate solution, in the Frobenius norm.
pub fn lyapunov_residual(u: &DMatrix<f64>, a: &DMatrix<f64>, c: f64, v: &DMatrix<f64>) -> f64 {
    (u + a * v + v * a.transpose() + v * c).norm()
}

/// Solves `U + A V + V A^T + c V = 0` for symmetric `U`.
///
/// Requires `A + (c/2) I` to be Hurwitz; otherwise returns `NotStable`.
pub fn lyapunov_solve(u: &DMatrix<f64>, a: &DMatrix<f64>, c: f64) -> Result<DMatrix<f64>> {
    let d = a.nrows();
    if a.ncols() != d || u.nrows() != d || u.ncols() != d {
        return Err(QsdError::DimensionMismatch(format!(
            "lyapunov_solve: A is {}x{}, U is {}x{}",
            a.nrows(),
            a.ncols(),
            u.nrows(),
            u.ncols()
        )));
    }
    let shifted = a + DMatrix::<f64>::identity(d, d) * (c / 2.0);
    let max_re = shifted
        .complex_eigenvalues()
        .iter()
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max);
    if !(max_re < 0.0) {
        return Err(QsdError::NotStable { max_re });
    }

    let (z, t) = nalgebra::linalg::Schur::new(shifted).unpack();
    let rhs = -(z.transpose() * u * &z);
    let y = solve_quasi_triangular_lyapunov(&t, &rhs)?;
    let v = &z * y * z.transpose();
    // Symmetrize: the exact solution is symmetric for symmetric U.
    Ok((&v + v.transpose()) * 0.5)
}

/// Solves `T Y + Y T^T = R` for quasi-upper-triangular `T`.
fn solve_quasi_triangular_lyapunov(t: &DMatrix<f64>, r: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let d = t.nrows();
    // Diagonal block boundaries: a nonzero subdiagonal entry marks a 2x2 block.
    let mut blocks: Vec<(usize, usize)> = Vec::new();
    let mut i = 0;
    while i < d {
        if i + 1 < d && t[(i + 1, i)] != 0.0 {
            blocks.push((i, 2));
            i += 2;
        } else {
            blocks.push((i, 1));
            i += 1;
        }
    }
    let nb = blocks.len();
    let mut y = DMatrix::<f64>::zeros(d, d);

    for bi in (0..nb).rev() {
        let (i0, p) = blocks[bi];
        for bj in (0..nb).rev() {
            let (j0, q) = blocks[bj];
            // RHS for this block: R_IJ - sum_{K>I} T_IK Y_KJ - sum_{K>J} Y_IK T_JK^T
            let mut rhs = r.view((i0, j0), (p, q)).into_owned();
            for &(k0, s) in &blocks[bi + 1..] {
                let tik = t.view((i0, k0), (p, s));
                let ykj = y.view((k0, j0), (s, q));
                rhs -= tik * ykj;
            }
            for &(k0, s) in &blocks[bj + 1..] {
                let yik = y.view((i0, k0), (p, s));
                let tjk = t.view((j0, k0), (q, s));
                rhs -= yik * tjk.transpose();
            }
            let w = solve_small_sylvester(
                &t.view((i0, i0), (p, p)).into_owned(),
                &t.view((j0, j0), (q, q)).into_owned(),
                &rhs,
            )?;
            y.view_mut((i0, j0), (p, q)).copy_from(&w);
        }
    }
    Ok(y)
}

/// Solves `A W + W B^T = R` for blocks of size at most 2, by vectorizing
/// into a dense system of size at most 4.
fn solve_small_sylvester(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    r: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    let p = a.nrows();
    let q = b.nrows();
    let n = p * q;
    // Column-major vec: vec(A W) = (I_q kron A) vec W, vec(W B^T) = (B kron I_p) vec W.
    let mut m = DMatrix::<f64>::zeros(n, n);
    for j in 0..q {
        for i in 0..p {
            let row = j * p + i;
            for k in 0..p {
                m[(row, j * p + k)] += a[(i, k)];
            }
            for k in 0..q {
                m[(row, k * p + i)] += b[(j, k)];
            }
        }
    }
    let mut rv = DVector::<f64>::zeros(n);
    for j in 0..q {
        for i in 0..p {
            rv[j * p + i] = r[(i, j)];
        }
    }
    let sol = m.lu().solve(&rv).ok_or(QsdError::SingularSystem)?;
    Ok(DMatrix::from_fn(p, q, |i, j| sol[j * p + i]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::kronecker_lyapunov_oracle;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    #[test]
    fn scalar_case_in_closed_form() {
        // 1 - 2v + 0.5v = 0  =>  v = 2/3
        let u = DMatrix::from_element(1, 1, 1.0);
        let a = DMatrix::from_element(1, 1, -1.0);
        let v = lyapunov_solve(&u, &a, 0.5).unwrap();
        assert!((v[(0, 0)] - 2.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn zero_source_gives_zero_solution() {
        let a = DMatrix::from_row_slice(2, 2, &[-1.0, 0.3, -0.2, -2.0]);
        let u = DMatrix::zeros(2, 2);
        let v = lyapunov_solve(&u, &a, 0.1).unwrap();
        assert!(v.norm() < 1e-14);
    }

    #[test]
    fn rejects_unstable_operator() {
        let a = DMatrix::from_row_slice(1, 1, &[-0.1]);
        let u = DMatrix::from_element(1, 1, 1.0);
        // Shift c/2 = 0.5 pushes the eigenvalue to +0.4.
        assert!(matches!(
            lyapunov_solve(&u, &a, 1.0),
            Err(QsdError::NotStable { .. })
        ));
    }

    #[test]
    fn matches_kronecker_oracle_on_random_stable_instances() {
        let mut rng = StdRng::seed_from_u64(0x1b57);
        for trial in 0..100 {
            let d = rng.gen_range(2..=6);
            let mut a = DMatrix::from_fn(d, d, |_, _| rng.gen_range(-1.0..1.0));
            // Diagonal dominance makes the matrix safely Hurwitz.
            for i in 0..d {
                a[(i, i)] = -(2.0 + d as f64);
            }
            let b = DMatrix::from_fn(d, d, |_, _| rng.gen_range(-1.0..1.0));
            let u = &b * b.transpose();
            let c = rng.gen_range(0.0..1.0);
            let v = lyapunov_solve(&u, &a, c).unwrap();
            assert!((&v - v.transpose()).norm() < 1e-11);
            let res = lyapunov_residual(&u, &a, c, &v);
            assert!(res <= 1e-10, "trial {trial}: residual {res}");
            let oracle = kronecker_lyapunov_oracle(&u, &a, c);
            assert!(
                (&v - &oracle).norm() <= 1e-9,
                "trial {trial}: oracle gap {}",
                (&v - &oracle).norm()
            );
        }
    }

    #[test]
    fn handles_complex_eigenvalue_blocks() {
        // Rotation-dominated matrix has a complex pair; exercise the 2x2
        // Schur block path explicitly.
        let a = DMatrix::from_row_slice(2, 2, &[-0.5, 10.0, -10.0, -0.5]);
        let u = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let c = 0.3;
        let v = lyapunov_solve(&u, &a, c).unwrap();
        assert!(lyapunov_residual(&u, &a, c, &v) < 1e-10);
        let oracle = kronecker_lyapunov_oracle(&u, &a, c);
        assert!((&v - &oracle).norm() < 1e-9);
    }
}

//! Empirical validation of the limit theorems: scaled-error covariance of a
//! replication set against the theoretical Lyapunov solution, and the
//! independent-copies demonstration of the occupation CLT.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::ReplicationSet;
use crate::chain::AbsorbingChain;
use crate::error::{QsdError, Result};
use crate::schemes::rng::{derive_seed, sample_row, Lane, RunRng};
use crate::schemes::{GrowthSchedule, Scheme};
use crate::theory::clt::{clt_covariance, iid_alpha_star, matrix_irreducible, CltVariant};
use crate::theory::noise::u_star_of_kernel;
use crate::theory::stationary::stationary_of_kernel;

/// Empirical scaled-error statistics next to the theoretical covariance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CltReport {
    /// Scaling applied to the final error, `sqrt(a(n) / gamma_n)` at the
    /// executed step count.
    pub sigma_n: f64,
    pub scaled_mean: Vec<f64>,
    /// Sample covariance of the scaled errors, row-major.
    pub empirical_cov: Vec<Vec<f64>>,
    /// Lyapunov covariance of the matching variant, row-major.
    #[serde(rename = "theoretical_V")]
    pub theoretical_v: Vec<Vec<f64>>,
    /// Relative Frobenius distance between the two, restricted to the
    /// tangent space.
    pub frobenius_rel_error: f64,
    /// Norm of the scaled mean over the standard error of the mean.
    pub mean_norm_over_se: f64,
    pub replications: usize,
    pub steps_executed: u64,
    /// Set when the empirical covariance carries (numerically) no mass, in
    /// which case the ratio fields are conventions rather than statistics.
    pub degenerate: bool,
}

fn to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

/// Projector onto the tangent space (kills the all-ones direction).
fn tangent_projector(d: usize) -> DMatrix<f64> {
    DMatrix::from_fn(d, d, |i, j| {
        (if i == j { 1.0 } else { 0.0 }) - 1.0 / d as f64
    })
}

/// Compares the empirical covariance of the scaled final errors against the
/// variant's theoretical covariance.
///
/// The variant must match the scheme that produced the runs: the
/// constant-population covariance for `interacting`, the growing-population
/// one for `branching`.
pub fn clt_report(
    chain: &AbsorbingChain,
    reps: &ReplicationSet,
    variant: CltVariant,
) -> Result<CltReport> {
    match (reps.template.scheme, variant) {
        (Scheme::Interacting, CltVariant::AlgI) => {}
        (Scheme::Branching, CltVariant::AlgII { .. }) => {}
        (s, v) => {
            return Err(QsdError::Config(format!(
                "variant {v:?} does not match scheme {}",
                s.name()
            )))
        }
    }
    let d = chain.dim();
    let r = reps.results.len();
    let steps = reps.results[0].steps_executed;
    if reps.results.iter().any(|x| x.steps_executed != steps) {
        return Err(QsdError::GridMismatch);
    }
    let theory = clt_covariance(chain, reps.template.steps.gamma_star, variant)?;
    let a_n = reps.template.growth.a_of(steps);
    let sigma = (a_n as f64 / reps.template.steps.gamma(steps)).sqrt();

    let theta_star = theory.qsd.theta_star.weights();
    let errors: Vec<Vec<f64>> = reps
        .results
        .iter()
        .map(|run| {
            run.estimate
                .weights()
                .iter()
                .zip(theta_star)
                .map(|(e, t)| sigma * (e - t))
                .collect()
        })
        .collect();

    let mut mean = vec![0.0; d];
    for e in &errors {
        for (m, v) in mean.iter_mut().zip(e) {
            *m += v;
        }
    }
    for m in mean.iter_mut() {
        *m /= r as f64;
    }
    let mut cov = DMatrix::<f64>::zeros(d, d);
    if r > 1 {
        for e in &errors {
            for x in 0..d {
                for y in 0..d {
                    cov[(x, y)] += (e[x] - mean[x]) * (e[y] - mean[y]);
                }
            }
        }
        cov /= (r - 1) as f64;
    }

    let pt = tangent_projector(d);
    let cov_t = &pt * &cov * &pt;
    let v_t = &pt * &theory.v * &pt;
    let gap = (&cov_t - &v_t).norm();
    let denom = v_t.norm();
    let frobenius_rel_error = if denom > 1e-300 {
        gap / denom
    } else if gap <= 1e-12 {
        0.0
    } else {
        f64::INFINITY
    };

    let var_mass = cov_t.trace();
    let degenerate = !(var_mass > 1e-300);
    let mean_norm = mean.iter().map(|x| x * x).sum::<f64>().sqrt();
    let mean_norm_over_se = if degenerate {
        if mean_norm <= 1e-12 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        mean_norm / (var_mass / r as f64).sqrt()
    };

    Ok(CltReport {
        sigma_n: sigma,
        scaled_mean: mean,
        empirical_cov: to_rows(&cov),
        theoretical_v: to_rows(&theory.v),
        frobenius_rel_error,
        mean_norm_over_se,
        replications: r,
        steps_executed: steps,
        degenerate,
    })
}

/// Copy-count law for the independent-copies demonstration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DemoGrowth {
    /// Any sublinear schedule.
    Schedule { growth: GrowthSchedule },
    /// `a(n) = a_star * n`, the regime with a nonzero asymptotic mean.
    Linear { a_star: u64 },
}

/// Outcome of the independent-copies demonstration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IidCltReport {
    pub copies: u64,
    pub horizon: u64,
    pub replications: usize,
    pub scaled_mean: Vec<f64>,
    /// Expected limit of the scaled mean: zero for sublinear growth, the
    /// explicit drift vector for linear growth.
    pub target: Vec<f64>,
    /// Componentwise standard error of the scaled mean.
    pub se: Vec<f64>,
    /// Largest componentwise deviation from the target in SE units.
    pub max_abs_z: f64,
    pub sample_cov: Vec<Vec<f64>>,
    /// Theoretical limit covariance of the scaled statistic.
    #[serde(rename = "theoretical_U")]
    pub theoretical_u: Vec<Vec<f64>>,
}

/// Simulates `a(n)` independent copies of an irreducible chain `k0` from
/// row `x0` for `n` steps each and scales the centered occupation average
/// by `sqrt(a(n) * n)`.
pub fn iid_clt_demo(
    k0: &DMatrix<f64>,
    x0: usize,
    growth: DemoGrowth,
    n: u64,
    r: u32,
    master_seed: u64,
    parallelism: usize,
) -> Result<IidCltReport> {
    let d = k0.nrows();
    if k0.ncols() != d || x0 >= d {
        return Err(QsdError::DimensionMismatch(format!(
            "iid_clt_demo: {}x{} kernel, x0 = {x0}",
            k0.nrows(),
            k0.ncols()
        )));
    }
    if !matrix_irreducible(k0) {
        return Err(QsdError::Reducible);
    }
    if r < 2 || n < 1 {
        return Err(QsdError::Config("need n >= 1 and r >= 2".into()));
    }
    let copies = match growth {
        DemoGrowth::Schedule { growth } => {
            growth.validate()?;
            growth.a_of(n)
        }
        DemoGrowth::Linear { a_star } => {
            if a_star < 1 {
                return Err(QsdError::Config("a_star must be at least 1".into()));
            }
            a_star * n
        }
    };
    let theta_star = stationary_of_kernel(k0)?;
    let target = match growth {
        DemoGrowth::Schedule { .. } => vec![0.0; d],
        DemoGrowth::Linear { a_star } => iid_alpha_star(k0, x0, a_star as f64)?,
    };
    let rows: Vec<Vec<f64>> = (0..d)
        .map(|x| (0..d).map(|y| k0[(x, y)]).collect())
        .collect();

    let scale = ((copies * n) as f64).sqrt();
    let run_one = |rep: u64| -> Vec<f64> {
        let mut rng = RunRng::new(derive_seed(master_seed, rep));
        let mut counts = vec![0u64; d];
        for i in 0..copies {
            let mut pos = x0;
            for k in 0..n {
                let u = rng.u01(Lane::Move, k, i);
                pos = sample_row(&rows[pos], u);
                counts[pos] += 1;
            }
        }
        let inv = 1.0 / (n * copies) as f64;
        (0..d)
            .map(|y| scale * (counts[y] as f64 * inv - theta_star[y]))
            .collect()
    };
    let stats: Vec<Vec<f64>> = if parallelism == 1 {
        (0..r as u64).map(run_one).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(parallelism)
            .build()
            .map_err(|e| QsdError::Config(format!("thread pool: {e}")))?;
        pool.install(|| (0..r as u64).into_par_iter().map(run_one).collect())
    };

    let mut mean = vec![0.0; d];
    for s in &stats {
        for (m, v) in mean.iter_mut().zip(s) {
            *m += v;
        }
    }
    for m in mean.iter_mut() {
        *m /= r as f64;
    }
    let mut cov = DMatrix::<f64>::zeros(d, d);
    for s in &stats {
        for x in 0..d {
            for y in 0..d {
                cov[(x, y)] += (s[x] - mean[x]) * (s[y] - mean[y]);
            }
        }
    }
    cov /= (r as f64) - 1.0;
    let se: Vec<f64> = (0..d).map(|x| (cov[(x, x)] / r as f64).sqrt()).collect();
    let max_abs_z = (0..d)
        .map(|x| {
            let dev = (mean[x] - target[x]).abs();
            if se[x] > 0.0 {
                dev / se[x]
            } else if dev == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        })
        .fold(0.0_f64, f64::max);

    Ok(IidCltReport {
        copies,
        horizon: n,
        replications: r as usize,
        scaled_mean: mean,
        target,
        se,
        max_abs_z,
        sample_cov: to_rows(&cov),
        theoretical_u: to_rows(&u_star_of_kernel(k0)?),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::replicate;
    use crate::schemes::{SchemeConfig, StepSchedule};
    use crate::testutil::{chain1, chain3};

    #[test]
    fn degenerate_chain_gives_zero_report() {
        let chain = chain1();
        let cfg = SchemeConfig {
            scheme: Scheme::Interacting,
            horizon_n: 30,
            growth: GrowthSchedule::Constant { value: 3 },
            steps: StepSchedule::new(1.0).unwrap(),
            initial_states: vec![1; 3],
            seed: 0,
            trace_stride: u64::MAX,
        };
        let reps = replicate(&chain, &cfg, 5, 3, 1).unwrap();
        let rep = clt_report(&chain, &reps, CltVariant::AlgI).unwrap();
        assert!(rep.degenerate);
        assert_eq!(rep.mean_norm_over_se, 0.0);
        assert_eq!(rep.frobenius_rel_error, 0.0);
        assert!(rep.scaled_mean[0].abs() < 1e-12);
    }

    #[test]
    fn sigma_follows_the_schedules() {
        let chain = chain3();
        let cfg = SchemeConfig {
            scheme: Scheme::Interacting,
            horizon_n: 50,
            growth: GrowthSchedule::Constant { value: 7 },
            steps: StepSchedule::new(2.0).unwrap(),
            initial_states: vec![1; 7],
            seed: 0,
            trace_stride: u64::MAX,
        };
        let reps = replicate(&chain, &cfg, 3, 1, 1).unwrap();
        let rep = clt_report(&chain, &reps, CltVariant::AlgI).unwrap();
        let expect = (7.0 / cfg.steps.gamma(50)).sqrt();
        assert_eq!(rep.sigma_n, expect);
        assert_eq!(rep.steps_executed, 50);
    }

    #[test]
    fn empirical_covariance_is_symmetric_psd_in_the_tangent() {
        let chain = chain3();
        let cfg = SchemeConfig {
            scheme: Scheme::Interacting,
            horizon_n: 400,
            growth: GrowthSchedule::Constant { value: 5 },
            steps: StepSchedule::new(2.0).unwrap(),
            initial_states: vec![1; 5],
            seed: 0,
            trace_stride: u64::MAX,
        };
        let reps = replicate(&chain, &cfg, 60, 11, 1).unwrap();
        let rep = clt_report(&chain, &reps, CltVariant::AlgI).unwrap();
        let d = 2;
        for x in 0..d {
            for y in 0..d {
                assert!((rep.empirical_cov[x][y] - rep.empirical_cov[y][x]).abs() <= 1e-9);
            }
            // Scaled errors live in the tangent space, so covariance rows
            // sum to (numerically) zero.
            let s: f64 = rep.empirical_cov[x].iter().sum();
            assert!(s.abs() <= 1e-6, "row sum {s}");
        }
        let m = DMatrix::from_fn(d, d, |x, y| rep.empirical_cov[x][y]);
        for e in m.symmetric_eigen().eigenvalues.iter() {
            assert!(*e >= -1e-9);
        }
        assert!(!rep.degenerate);
    }

    #[test]
    fn variant_must_match_scheme() {
        let chain = chain3();
        let cfg = SchemeConfig {
            scheme: Scheme::Interacting,
            horizon_n: 10,
            growth: GrowthSchedule::Constant { value: 2 },
            steps: StepSchedule::new(2.0).unwrap(),
            initial_states: vec![1, 2],
            seed: 0,
            trace_stride: u64::MAX,
        };
        let reps = replicate(&chain, &cfg, 2, 1, 1).unwrap();
        assert!(clt_report(&chain, &reps, CltVariant::AlgII { zeta: 0.5 }).is_err());
    }

    #[test]
    fn iid_demo_flat_kernel_centers_at_zero() {
        // All rows equal: every step is an independent draw from the same
        // distribution, and the drift vector vanishes.
        let k0 = DMatrix::from_row_slice(2, 2, &[0.4, 0.6, 0.4, 0.6]);
        let rep = iid_clt_demo(
            &k0,
            0,
            DemoGrowth::Linear { a_star: 1 },
            200,
            200,
            12345,
            1,
        )
        .unwrap();
        assert!(rep.target.iter().all(|t| t.abs() < 1e-12));
        assert!(rep.max_abs_z <= 4.0, "z = {}", rep.max_abs_z);
    }

    #[test]
    fn iid_demo_rejects_reducible_kernels() {
        let k0 = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.5, 0.5]);
        assert!(matches!(
            iid_clt_demo(
                &k0,
                0,
                DemoGrowth::Schedule {
                    growth: GrowthSchedule::Constant { value: 1 }
                },
                10,
                5,
                1,
                1
            ),
            Err(QsdError::Reducible)
        ));
    }
}

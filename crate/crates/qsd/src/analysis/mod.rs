//! Replicated experiments: seeded replication sets, total-variation
//! convergence traces, empirical limit-theorem validation, and the two
//! built-in benchmark experiments.

pub mod experiments;
pub mod report;

pub use experiments::{run_experiment, ExperimentId, ExperimentOutcome};
pub use report::{clt_report, iid_clt_demo, CltReport, DemoGrowth, IidCltReport};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chain::AbsorbingChain;
use crate::dist::{tv_distance, Distribution};
use crate::error::{QsdError, Result};
use crate::schemes::{derive_seed, run_scheme, RunResult, SchemeConfig};

/// An ordered batch of seeded runs sharing one configuration template.
#[derive(Debug, Clone)]
pub struct ReplicationSet {
    pub template: SchemeConfig,
    pub master_seed: u64,
    pub results: Vec<RunResult>,
}

/// Runs `r` replications; replication `i` uses the seed derived from
/// `(master_seed, i)`. Results are ordered by replication index no matter
/// how many workers execute them.
pub fn replicate(
    chain: &AbsorbingChain,
    template: &SchemeConfig,
    r: u32,
    master_seed: u64,
    parallelism: usize,
) -> Result<ReplicationSet> {
    replicate_with(chain, template, r, master_seed, parallelism, |_, _| {})
}

/// Like [`replicate`] but lets the caller adjust each replication's
/// configuration (e.g. rotating a single starting state through a multiset).
/// The tweak must be a pure function of the replication index.
pub fn replicate_with<F>(
    chain: &AbsorbingChain,
    template: &SchemeConfig,
    r: u32,
    master_seed: u64,
    parallelism: usize,
    tweak: F,
) -> Result<ReplicationSet>
where
    F: Fn(u64, &mut SchemeConfig) + Sync,
{
    if r < 1 {
        return Err(QsdError::Config("need at least one replication".into()));
    }
    let run_one = |rep: u64| -> Result<RunResult> {
        let mut cfg = template.clone();
        cfg.seed = derive_seed(master_seed, rep);
        tweak(rep, &mut cfg);
        run_scheme(chain, &cfg)
    };
    let results: Result<Vec<RunResult>> = if parallelism == 1 {
        (0..r as u64).map(run_one).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(parallelism)
            .build()
            .map_err(|e| QsdError::Config(format!("thread pool: {e}")))?;
        pool.install(|| (0..r as u64).into_par_iter().map(run_one).collect())
    };
    Ok(ReplicationSet {
        template: template.clone(),
        master_seed,
        results: results?,
    })
}

/// Per-grid-point summary of the distance to the target across replications.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceStat {
    pub moves: u64,
    pub mean_tv: f64,
    pub median_tv: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTrace {
    pub points: Vec<TraceStat>,
}

/// Aggregates the total-variation distance to `theta_star` over a
/// replication set whose runs share one trace grid.
pub fn aggregate_trace(
    reps: &ReplicationSet,
    theta_star: &Distribution,
) -> Result<ConvergenceTrace> {
    let first = &reps.results[0];
    for run in &reps.results[1..] {
        if run.trace.len() != first.trace.len()
            || run
                .trace
                .iter()
                .zip(&first.trace)
                .any(|(a, b)| a.moves != b.moves)
        {
            return Err(QsdError::GridMismatch);
        }
    }
    let mut points = Vec::with_capacity(first.trace.len());
    let mut tvs = vec![0.0f64; reps.results.len()];
    for i in 0..first.trace.len() {
        for (t, run) in tvs.iter_mut().zip(&reps.results) {
            *t = tv_distance(&run.trace[i].estimate, theta_star)?;
        }
        let mean = tvs.iter().sum::<f64>() / tvs.len() as f64;
        let mut sorted = tvs.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let median = if sorted.len() % 2 == 1 {
            sorted[sorted.len() / 2]
        } else {
            0.5 * (sorted[sorted.len() / 2 - 1] + sorted[sorted.len() / 2])
        };
        points.push(TraceStat {
            moves: first.trace[i].moves,
            mean_tv: mean,
            median_tv: median,
        });
    }
    Ok(ConvergenceTrace { points })
}

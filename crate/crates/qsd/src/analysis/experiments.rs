//! The two built-in benchmark experiments on the ten-state chain: all five
//! schemes on equal movement budgets, replicated, with convergence traces
//! and a machine-readable summary.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::analysis::{aggregate_trace, replicate_with, ConvergenceTrace};
use crate::chain::AbsorbingChain;
use crate::dist::Distribution;
use crate::error::{QsdError, Result};
use crate::output::{fmt17, write_json_file};
use crate::schemes::rng::{Lane, RunRng};
use crate::schemes::{GrowthSchedule, Scheme, SchemeConfig, StepSchedule};
use crate::theory::exact_qsd;

/// The two reference experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentId {
    /// `a(n) = floor(n^0.75)`, `n = 1000`, starts drawn uniformly from
    /// states {4, 5, 6}.
    One,
    /// `a(n) = floor(n^0.5)`, `n = 2000`, every particle started at the
    /// stickiest state 5.
    Two,
}

impl ExperimentId {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "one" | "1" => Some(ExperimentId::One),
            "two" | "2" => Some(ExperimentId::Two),
            _ => None,
        }
    }
}

/// Scheme-level outcome of an experiment.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SchemeSummary {
    pub final_mean_tv: f64,
    pub final_median_tv: f64,
    pub moves_used: u64,
    pub seed: u64,
    pub params: ExperimentParams,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentParams {
    pub horizon_n: u64,
    pub growth: GrowthSchedule,
    pub gamma_star: f64,
    pub replications: u32,
    pub trace_stride: u64,
}

/// Full outcome: per-scheme traces plus the summary map.
#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub id: ExperimentId,
    pub theta_star: Distribution,
    pub initial_states: Vec<usize>,
    pub traces: Vec<(Scheme, ConvergenceTrace)>,
    pub summary: BTreeMap<String, SchemeSummary>,
}

impl ExperimentOutcome {
    pub fn final_mean_tv(&self, scheme: Scheme) -> f64 {
        self.summary[scheme.name()].final_mean_tv
    }

    /// Mean TV at the last grid point not beyond `moves`.
    pub fn mean_tv_at(&self, scheme: Scheme, moves: u64) -> f64 {
        let trace = &self
            .traces
            .iter()
            .find(|(s, _)| *s == scheme)
            .expect("scheme present")
            .1;
        trace
            .points
            .iter()
            .take_while(|p| p.moves <= moves)
            .last()
            .expect("nonempty trace")
            .mean_tv
    }
}

/// Experiment geometry: horizon and growth law.
pub fn experiment_geometry(id: ExperimentId) -> (u64, GrowthSchedule) {
    match id {
        ExperimentId::One => (1000, GrowthSchedule::Power { zeta: 0.75 }),
        ExperimentId::Two => (2000, GrowthSchedule::Power { zeta: 0.5 }),
    }
}

/// The initial-state multiset: experiment one draws `a(n)` labels uniformly
/// from {4, 5, 6} once from the master seed (shared by every replication),
/// experiment two pins every particle to state 5.
pub fn experiment_initial_states(id: ExperimentId, master_seed: u64) -> Vec<usize> {
    let (n, growth) = experiment_geometry(id);
    let particles = growth.a_of(n) as usize;
    match id {
        ExperimentId::One => {
            let mut rng = RunRng::new(master_seed);
            (0..particles)
                .map(|i| {
                    let set = [4usize, 5, 6];
                    set[rng.index(Lane::Init, 0, i as u64, 3) as usize]
                })
                .collect()
        }
        ExperimentId::Two => vec![5; particles],
    }
}

/// Runs one experiment across all five schemes.
///
/// Single-particle schemes rotate their starting state through the multiset
/// round-robin over replications, keeping the start distribution
/// proportionate to the multiparticle schemes'.
pub fn run_experiment(
    chain: &AbsorbingChain,
    id: ExperimentId,
    replications: u32,
    master_seed: u64,
    parallelism: usize,
    out_dir: Option<&Path>,
) -> Result<ExperimentOutcome> {
    let (n, growth) = experiment_geometry(id);
    let gamma_star = 4.17;
    let steps = StepSchedule::new(gamma_star)?;
    let theta_star = exact_qsd(chain, 1e-12)?.theta_star;
    let multiset = experiment_initial_states(id, master_seed);
    let budget = n * growth.a_of(n);

    let mut traces = Vec::new();
    let mut summary = BTreeMap::new();
    for scheme in Scheme::all() {
        let per_particle = matches!(scheme, Scheme::Single | Scheme::Branching);
        let stride = match scheme {
            Scheme::Single | Scheme::FlemingViot => (budget / 1000).max(1),
            Scheme::Independent | Scheme::Interacting => (n / 1000).max(1),
            Scheme::Branching => (growth.xi_budget(n) / 1000).max(1),
        };
        let template = SchemeConfig {
            scheme,
            horizon_n: n,
            growth,
            steps,
            initial_states: if per_particle {
                vec![multiset[0]]
            } else {
                multiset.clone()
            },
            seed: 0,
            trace_stride: stride,
        };
        let reps = replicate_with(
            chain,
            &template,
            replications,
            master_seed,
            parallelism,
            |rep, cfg| {
                if per_particle {
                    cfg.initial_states = vec![multiset[rep as usize % multiset.len()]];
                }
            },
        )?;
        let trace = aggregate_trace(&reps, &theta_star)?;
        let last = trace.points.last().ok_or(QsdError::GridMismatch)?;
        summary.insert(
            scheme.name().to_string(),
            SchemeSummary {
                final_mean_tv: last.mean_tv,
                final_median_tv: last.median_tv,
                moves_used: reps.results[0].moves_used,
                seed: master_seed,
                params: ExperimentParams {
                    horizon_n: n,
                    growth,
                    gamma_star,
                    replications,
                    trace_stride: stride,
                },
            },
        );
        traces.push((scheme, trace));
    }

    let outcome = ExperimentOutcome {
        id,
        theta_star,
        initial_states: multiset,
        traces,
        summary,
    };
    if let Some(dir) = out_dir {
        write_experiment_files(&outcome, dir)?;
    }
    Ok(outcome)
}

/// One CSV per scheme (`moves,mean_tv,median_tv`) plus `summary.json`.
pub fn write_experiment_files(outcome: &ExperimentOutcome, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    for (scheme, trace) in &outcome.traces {
        let path = dir.join(format!("{}.csv", scheme.name()));
        std::fs::write(&path, trace_csv(trace))?;
    }
    write_json_file(&dir.join("summary.json"), &outcome.summary)?;
    Ok(())
}

pub fn trace_csv(trace: &ConvergenceTrace) -> String {
    let mut out = String::from("moves,mean_tv,median_tv\n");
    for p in &trace.points {
        out.push_str(&format!(
            "{},{},{}\n",
            p.moves,
            fmt17(p.mean_tv),
            fmt17(p.median_tv)
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::chain10;

    #[test]
    fn geometry_matches_the_published_budgets() {
        let (n, g) = experiment_geometry(ExperimentId::One);
        assert_eq!(n * g.a_of(n), 177_000);
        let (n, g) = experiment_geometry(ExperimentId::Two);
        assert_eq!(n * g.a_of(n), 88_000);
    }

    #[test]
    fn initial_states_are_deterministic_and_in_range() {
        let a = experiment_initial_states(ExperimentId::One, 9);
        let b = experiment_initial_states(ExperimentId::One, 9);
        assert_eq!(a, b);
        assert_eq!(a.len(), 177);
        assert!(a.iter().all(|s| (4..=6).contains(s)));
        let c = experiment_initial_states(ExperimentId::One, 10);
        assert_ne!(a, c);
        let two = experiment_initial_states(ExperimentId::Two, 0);
        assert!(two.iter().all(|&s| s == 5));
        assert_eq!(two.len(), 44);
    }

    #[test]
    fn smoke_run_writes_all_outputs() {
        let chain = chain10();
        let dir = tempfile::tempdir().unwrap();
        let out = run_experiment(&chain, ExperimentId::Two, 2, 7, 1, Some(dir.path()))
            .unwrap();
        assert_eq!(out.summary.len(), 5);
        for scheme in Scheme::all() {
            assert!(dir.path().join(format!("{}.csv", scheme.name())).exists());
            let s = &out.summary[scheme.name()];
            assert!(s.final_mean_tv >= 0.0 && s.final_mean_tv <= 1.0);
            if scheme == Scheme::Branching {
                assert!(s.moves_used >= 88_000);
            } else {
                assert_eq!(s.moves_used, 88_000);
            }
        }
        let summary = std::fs::read_to_string(dir.path().join("summary.json")).unwrap();
        assert!(summary.contains("fleming_viot"));
        let csv = std::fs::read_to_string(dir.path().join("single.csv")).unwrap();
        assert!(csv.starts_with("moves,mean_tv,median_tv\n"));
    }
}

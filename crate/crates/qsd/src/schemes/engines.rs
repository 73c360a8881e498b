//! The simulation engines.
//!
//! All schemes except the uniformly-refreshed one advance every particle
//! once per step, conditionally independently, each sampling its kernel row
//! at the current occupation estimate; the estimate then takes a convex
//! step toward the new empirical measure. Randomness is addressed by
//! (lane, step, particle), so traces are reproducible bit for bit.

use crate::chain::AbsorbingChain;
use crate::dist::Distribution;
use crate::error::Result;
use crate::schemes::rng::{sample_row, Lane, RunRng};
use crate::schemes::{RunResult, Scheme, SchemeConfig, TracePoint};

pub fn run_scheme(chain: &AbsorbingChain, cfg: &SchemeConfig) -> Result<RunResult> {
    cfg.validate(chain)?;
    Ok(match cfg.scheme {
        Scheme::Single => run_single(chain, cfg),
        Scheme::Independent => run_independent(chain, cfg),
        Scheme::Interacting => run_interacting(chain, cfg),
        Scheme::Branching => run_branching(chain, cfg),
        Scheme::FlemingViot => run_fleming_viot(chain, cfg),
    })
}

/// Sample the kernel row of state `x` at occupation estimate `theta`.
#[inline]
fn sample_kernel_row(chain: &AbsorbingChain, x: usize, theta: &[f64], u: f64) -> usize {
    let d = chain.dim();
    let mut cum = 0.0;
    for y in 0..d {
        cum += chain.kernel_entry(x, y, theta);
        if u < cum {
            return y;
        }
    }
    d - 1
}

/// Convex step of the occupation estimate toward an empirical measure
/// given as counts over `n` particles. The incremental form keeps fixed
/// points of the update exact.
#[inline]
fn step_theta(theta: &mut [f64], counts: &[u64], n: u64, g: f64) {
    for (t, &c) in theta.iter_mut().zip(counts) {
        *t += g * (c as f64 / n as f64 - *t);
    }
}

struct TraceRec {
    stride: u64,
    batch: u64,
    points: Vec<TracePoint>,
}

impl TraceRec {
    fn new(stride: u64, initial: &[f64]) -> Self {
        Self {
            stride,
            batch: 0,
            points: vec![TracePoint {
                moves: 0,
                estimate: Distribution::new(initial.to_vec()).expect("valid estimate"),
            }],
        }
    }

    #[inline]
    fn record(&mut self, moves: u64, estimate: &[f64]) {
        self.batch += 1;
        if self.batch.is_multiple_of(self.stride) {
            self.points.push(TracePoint {
                moves,
                estimate: Distribution::new(estimate.to_vec()).expect("valid estimate"),
            });
        }
    }

    fn finish(mut self, moves: u64, estimate: &[f64]) -> Vec<TracePoint> {
        if self.points.last().map(|p| p.moves) != Some(moves) {
            self.points.push(TracePoint {
                moves,
                estimate: Distribution::new(estimate.to_vec()).expect("valid estimate"),
            });
        }
        self.points
    }
}

/// Occupation-measure recursion shared by the constant-population schemes:
/// `particles` positions move each step, the estimate steps toward their
/// empirical measure.
fn run_occupation(
    chain: &AbsorbingChain,
    cfg: &SchemeConfig,
    mut positions: Vec<usize>,
    n_steps: u64,
) -> RunResult {
    let d = chain.dim();
    let n_particles = positions.len();
    let mut theta = Distribution::empirical(d, &positions).into_weights();
    let mut counts = vec![0u64; d];
    let mut rng = RunRng::new(cfg.seed);
    let mut trace = TraceRec::new(cfg.trace_stride, &theta);
    let mut moves: u64 = 0;

    for k in 0..n_steps {
        let g = cfg.steps.gamma(k + 1);
        counts.fill(0);
        for (i, pos) in positions.iter_mut().enumerate() {
            let u = rng.u01(Lane::Move, k, i as u64);
            *pos = sample_kernel_row(chain, *pos, &theta, u);
            counts[*pos] += 1;
        }
        moves += n_particles as u64;
        step_theta(&mut theta, &counts, n_particles as u64, g);
        trace.record(moves, &theta);
    }

    RunResult {
        estimate: Distribution::new(theta.clone()).expect("simplex preserved"),
        moves_used: moves,
        steps_executed: n_steps,
        trace: trace.finish(moves, &theta),
    }
}

/// One particle, `n * a(n)` steps.
pub(crate) fn run_single(chain: &AbsorbingChain, cfg: &SchemeConfig) -> RunResult {
    let positions = cfg.internal_initial();
    let n_steps = cfg.horizon_n * cfg.growth.a_of(cfg.horizon_n);
    run_occupation(chain, cfg, positions, n_steps)
}

/// `a(n)` particles coupled through the shared occupation measure, `n` steps.
pub(crate) fn run_interacting(chain: &AbsorbingChain, cfg: &SchemeConfig) -> RunResult {
    let positions = cfg.internal_initial();
    run_occupation(chain, cfg, positions, cfg.horizon_n)
}

/// `a(n)` single-particle recursions with disjoint randomness; the estimate
/// averages the copies' occupation measures.
pub(crate) fn run_independent(chain: &AbsorbingChain, cfg: &SchemeConfig) -> RunResult {
    let d = chain.dim();
    let mut positions = cfg.internal_initial();
    let copies = positions.len();
    let mut thetas: Vec<Vec<f64>> = positions
        .iter()
        .map(|&p| {
            let mut t = vec![0.0; d];
            t[p] = 1.0;
            t
        })
        .collect();
    let mut rng = RunRng::new(cfg.seed);

    let mean = |thetas: &[Vec<f64>]| -> Vec<f64> {
        let mut m = vec![0.0; d];
        for t in thetas {
            for (a, b) in m.iter_mut().zip(t) {
                *a += b;
            }
        }
        let inv = 1.0 / thetas.len() as f64;
        for a in m.iter_mut() {
            *a *= inv;
        }
        m
    };

    let mut trace = TraceRec::new(cfg.trace_stride, &mean(&thetas));
    let mut moves: u64 = 0;
    for k in 0..cfg.horizon_n {
        let g = cfg.steps.gamma(k + 1);
        for c in 0..copies {
            let u = rng.u01(Lane::Move, k, c as u64);
            let next = sample_kernel_row(chain, positions[c], &thetas[c], u);
            positions[c] = next;
            for (y, t) in thetas[c].iter_mut().enumerate() {
                let e = (y == next) as u8 as f64;
                *t += g * (e - *t);
            }
        }
        moves += copies as u64;
        // The pooled mean is only materialized at stride hits.
        trace.batch += 1;
        if trace.batch.is_multiple_of(trace.stride) {
            let m = mean(&thetas);
            trace.points.push(TracePoint {
                moves,
                estimate: Distribution::new(m).expect("valid estimate"),
            });
        }
    }
    let final_mean = mean(&thetas);
    RunResult {
        estimate: Distribution::new(final_mean.clone()).expect("simplex preserved"),
        moves_used: moves,
        steps_executed: cfg.horizon_n,
        trace: trace.finish(moves, &final_mean),
    }
}

/// Growing population: one particle initially, at most one added per step,
/// run for the minimal horizon whose cumulative movements reach `n * a(n)`.
pub(crate) fn run_branching(chain: &AbsorbingChain, cfg: &SchemeConfig) -> RunResult {
    let d = chain.dim();
    let mut positions = cfg.internal_initial();
    debug_assert_eq!(positions.len(), 1);
    let horizon = cfg.growth.xi_budget(cfg.horizon_n);
    let mut theta = Distribution::empirical(d, &positions).into_weights();
    let mut counts = vec![0u64; d];
    let mut rng = RunRng::new(cfg.seed);
    let mut trace = TraceRec::new(cfg.trace_stride, &theta);
    let mut moves: u64 = 0;

    for m in 0..horizon {
        let live = positions.len() as u64;
        assert_eq!(live, cfg.growth.a_of(m + 1), "population off schedule");
        let will_branch = cfg.growth.a_of(m + 2) == live + 1;
        let g = cfg.steps.gamma(m + 1);

        // The replicated particle is chosen uniformly among live particles
        // and contributes its pre-move state to the newcomer's first draw.
        let spawn_src = if will_branch {
            let idx = rng.index(Lane::Pick, m, 0, live) as usize;
            Some(positions[idx])
        } else {
            None
        };

        counts.fill(0);
        for (i, pos) in positions.iter_mut().enumerate() {
            let u = rng.u01(Lane::Move, m, i as u64);
            *pos = sample_kernel_row(chain, *pos, &theta, u);
            counts[*pos] += 1;
        }
        moves += live;

        // The newcomer samples the kernel row of the replicated particle's
        // pre-move state at the current estimate; it is counted by the
        // estimate only from the next step on.
        let newborn = spawn_src.map(|src| {
            let u = rng.u01(Lane::Spawn, m, 0);
            moves += 1;
            sample_kernel_row(chain, src, &theta, u)
        });

        step_theta(&mut theta, &counts, live, g);
        if let Some(p) = newborn {
            positions.push(p);
        }
        trace.record(moves, &theta);
    }

    RunResult {
        estimate: Distribution::new(theta.clone()).expect("simplex preserved"),
        moves_used: moves,
        steps_executed: horizon,
        trace: trace.finish(moves, &theta),
    }
}

/// Uniformly-refreshed population: one uniformly chosen particle moves per
/// tick by the raw chain; an absorbed particle jumps to another particle's
/// position, and the pair of events costs a single movement. The estimate
/// is the empirical measure of the current positions.
pub(crate) fn run_fleming_viot(chain: &AbsorbingChain, cfg: &SchemeConfig) -> RunResult {
    let d = chain.dim();
    let mut positions = cfg.internal_initial();
    let n_particles = positions.len() as u64;
    let ticks = cfg.horizon_n * cfg.growth.a_of(cfg.horizon_n);
    let mut rng = RunRng::new(cfg.seed);
    let empirical = |positions: &[usize]| Distribution::empirical(d, positions).into_weights();
    let mut trace = TraceRec::new(cfg.trace_stride, &empirical(&positions));

    for t in 0..ticks {
        let pick = rng.index(Lane::Pick, t, 0, n_particles) as usize;
        let u = rng.u01(Lane::Move, t, 0);
        let full = chain.full_row(positions[pick]);
        let dest = sample_row(full, u);
        if dest == 0 {
            let o = rng.index(Lane::Relocate, t, 0, n_particles - 1) as usize;
            let other = if o >= pick { o + 1 } else { o };
            positions[pick] = positions[other];
        } else {
            positions[pick] = dest - 1;
        }
        trace.batch += 1;
        if trace.batch.is_multiple_of(trace.stride) {
            trace.points.push(TracePoint {
                moves: t + 1,
                estimate: Distribution::new(empirical(&positions)).expect("valid"),
            });
        }
    }

    let est = empirical(&positions);
    RunResult {
        estimate: Distribution::new(est.clone()).expect("valid"),
        moves_used: ticks,
        steps_executed: ticks,
        trace: trace.finish(ticks, &est),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::AbsorbingChain;
    use crate::dist::tv_distance;
    use crate::error::QsdError;
    use crate::schemes::schedule::{GrowthSchedule, StepSchedule};
    use crate::testutil::{chain1, chain10, symmetric2};

    fn cfg(scheme: Scheme, horizon: u64, growth: GrowthSchedule, inits: Vec<usize>) -> SchemeConfig {
        SchemeConfig {
            scheme,
            horizon_n: horizon,
            growth,
            steps: StepSchedule::new(2.0).unwrap(),
            initial_states: inits,
            seed: 99,
            trace_stride: 1,
        }
    }

    #[test]
    fn degenerate_chain_pins_every_estimate() {
        let chain = chain1();
        for scheme in [Scheme::Single, Scheme::Interacting, Scheme::Branching] {
            let growth = GrowthSchedule::Power { zeta: 0.5 };
            let inits = match scheme {
                Scheme::Single | Scheme::Branching => vec![1],
                _ => vec![1; growth.a_of(50) as usize],
            };
            let r = run_scheme(&chain, &cfg(scheme, 50, growth, inits)).unwrap();
            assert_eq!(r.estimate.weights(), &[1.0], "{}", scheme.name());
            for p in &r.trace {
                assert_eq!(p.estimate.weights(), &[1.0], "{}", scheme.name());
            }
        }
        let r = run_scheme(
            &chain,
            &cfg(
                Scheme::FlemingViot,
                20,
                GrowthSchedule::Constant { value: 2 },
                vec![1, 1],
            ),
        )
        .unwrap();
        assert_eq!(r.estimate.weights(), &[1.0]);
        assert_eq!(r.moves_used, 40);
    }

    #[test]
    fn reruns_are_bit_identical() {
        let chain = chain10();
        let growth = GrowthSchedule::Power { zeta: 0.5 };
        let n = 200;
        let n_particles = growth.a_of(n) as usize;
        for scheme in Scheme::all() {
            let inits = match scheme {
                Scheme::Single | Scheme::Branching => vec![5],
                _ => (0..n_particles).map(|i| 1 + (i % 9)).collect(),
            };
            let c = cfg(scheme, n, growth, inits);
            let a = run_scheme(&chain, &c).unwrap();
            let b = run_scheme(&chain, &c).unwrap();
            assert_eq!(a, b, "{} not deterministic", scheme.name());
        }
    }

    #[test]
    fn movement_budgets_are_exact() {
        let chain = chain10();
        let growth = GrowthSchedule::Power { zeta: 0.75 };
        let n = 100;
        let budget = n * growth.a_of(n);
        let n_particles = growth.a_of(n) as usize;
        for scheme in [
            Scheme::Single,
            Scheme::Independent,
            Scheme::Interacting,
            Scheme::FlemingViot,
        ] {
            let inits = match scheme {
                Scheme::Single => vec![5],
                _ => vec![5; n_particles],
            };
            let r = run_scheme(&chain, &cfg(scheme, n, growth, inits)).unwrap();
            assert_eq!(r.moves_used, budget, "{}", scheme.name());
        }
        let r = run_scheme(&chain, &cfg(Scheme::Branching, n, growth, vec![5])).unwrap();
        let xi = growth.xi_budget(n);
        let expect: u64 = (1..=xi).map(|i| growth.a_of(i + 1)).sum();
        assert_eq!(r.moves_used, expect);
        assert!(r.moves_used >= budget);
        assert_eq!(r.steps_executed, xi);
    }

    #[test]
    fn branching_small_budget_hand_check() {
        // zeta = 0.5, n = 4: horizon 5 steps, movements 1+1+2+2+2 = 8.
        let chain = symmetric2();
        let growth = GrowthSchedule::Power { zeta: 0.5 };
        let r = run_scheme(&chain, &cfg(Scheme::Branching, 4, growth, vec![1])).unwrap();
        assert_eq!(r.steps_executed, 5);
        assert_eq!(r.moves_used, 8);
    }

    #[test]
    fn every_snapshot_is_a_distribution() {
        let chain = chain10();
        let growth = GrowthSchedule::Power { zeta: 0.6 };
        let n = 300;
        let n_particles = growth.a_of(n) as usize;
        for scheme in Scheme::all() {
            let inits = match scheme {
                Scheme::Single | Scheme::Branching => vec![2],
                _ => (0..n_particles).map(|i| 1 + (i % 9)).collect(),
            };
            let r = run_scheme(&chain, &cfg(scheme, n, growth, inits)).unwrap();
            for p in &r.trace {
                let sum: f64 = p.estimate.weights().iter().sum();
                assert!((sum - 1.0).abs() <= 1e-12, "{}", scheme.name());
            }
            // Trace moves strictly increase.
            for w in r.trace.windows(2) {
                assert!(w[0].moves < w[1].moves);
            }
        }
    }

    #[test]
    fn identical_seeds_make_independent_copies_identical() {
        // Two copies of the independent scheme started identically but with
        // per-copy randomness differ; averaging equal copies is checked on
        // the degenerate chain where all copies coincide.
        let chain = chain1();
        let growth = GrowthSchedule::Constant { value: 4 };
        let r = run_scheme(
            &chain,
            &cfg(Scheme::Independent, 50, growth, vec![1; 4]),
        )
        .unwrap();
        assert_eq!(r.estimate.weights(), &[1.0]);
        assert_eq!(r.moves_used, 200);
    }

    #[test]
    fn fleming_viot_requires_two_particles() {
        let chain = symmetric2();
        let growth = GrowthSchedule::Constant { value: 1 };
        let err = run_scheme(&chain, &cfg(Scheme::FlemingViot, 10, growth, vec![1]))
            .unwrap_err();
        assert!(matches!(err, QsdError::Config(_)));
    }

    #[test]
    fn fleming_viot_without_absorption_is_plain_walks() {
        // With zero absorption the relocation branch can never fire; the
        // final empirical measure must match a direct simulation of the
        // same driving draws on the restriction.
        let rows = vec![
            vec![1.0, 0.0, 0.0],
            vec![0.0, 0.5, 0.5],
            vec![0.0, 0.4, 0.6],
        ];
        let chain = AbsorbingChain::from_rows_unchecked(&rows);
        let growth = GrowthSchedule::Constant { value: 3 };
        let c = cfg(Scheme::FlemingViot, 50, growth, vec![1, 2, 1]);
        let r = run_fleming_viot(&chain, &c);
        assert_eq!(r.moves_used, 150);

        let mut pos = vec![0usize, 1, 0];
        let mut rng = RunRng::new(c.seed);
        for t in 0..150u64 {
            let pick = rng.index(Lane::Pick, t, 0, 3) as usize;
            let u = rng.u01(Lane::Move, t, 0);
            let dest = sample_row(chain.full_row(pos[pick]), u);
            assert_ne!(dest, 0, "absorption is impossible here");
            pos[pick] = dest - 1;
        }
        assert_eq!(
            r.estimate,
            Distribution::empirical(2, &pos),
            "relocation branch must not have fired"
        );
    }

    #[test]
    fn interacting_converges_on_the_symmetric_chain() {
        // Small-sample statistical check: TV to the uniform QSD below 0.1
        // in at least 90% of 200 seeds at n = 500 with 10 particles.
        let chain = symmetric2();
        let target = Distribution::new(vec![0.5, 0.5]).unwrap();
        let growth = GrowthSchedule::Constant { value: 10 };
        let mut ok = 0;
        for seed in 0..200u64 {
            let mut c = cfg(
                Scheme::Interacting,
                500,
                growth,
                (0..10).map(|i| 1 + (i % 2)).collect(),
            );
            c.seed = seed;
            c.trace_stride = u64::MAX;
            let r = run_scheme(&chain, &c).unwrap();
            if tv_distance(&r.estimate, &target).unwrap() < 0.1 {
                ok += 1;
            }
        }
        assert!(ok >= 180, "only {ok}/200 runs were within 0.1");
    }
}

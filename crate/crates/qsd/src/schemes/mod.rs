//! The five seeded particle-simulation engines with exact movement
//! accounting.
//!
//! Every scheme is driven by the same primitives: the step schedule, the
//! growth schedule, counter-based randomness, and inverse-CDF sampling of
//! kernel rows. A movement is one particle transition; schemes are compared
//! on equal movement budgets.

pub mod engines;
pub mod rng;
pub mod schedule;

pub use engines::run_scheme;
pub use rng::{derive_seed, sample_row, Lane, RunRng};
pub use schedule::{GrowthSchedule, StepSchedule};

use serde::{Deserialize, Serialize};

use crate::chain::AbsorbingChain;
use crate::dist::Distribution;
use crate::error::{QsdError, Result};

/// Which estimator to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Hash)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// One reinforced particle run for `n * a(n)` steps.
    Single,
    /// `a(n)` reinforced particles evolving with no interaction; the
    /// estimate averages their occupation measures.
    Independent,
    /// `a(n)` particles coupled through the shared occupation measure.
    Interacting,
    /// One particle growing to `a(n)` by unit additions, coupled through
    /// the shared occupation measure.
    Branching,
    /// `a(n)` particles moved one at a time by the raw chain; absorptions
    /// jump to a uniformly chosen other particle.
    FlemingViot,
}

impl Scheme {
    pub fn name(&self) -> &'static str {
        match self {
            Scheme::Single => "single",
            Scheme::Independent => "independent",
            Scheme::Interacting => "interacting",
            Scheme::Branching => "branching",
            Scheme::FlemingViot => "fleming_viot",
        }
    }

    pub fn all() -> [Scheme; 5] {
        [
            Scheme::Single,
            Scheme::Independent,
            Scheme::Interacting,
            Scheme::Branching,
            Scheme::FlemingViot,
        ]
    }
}

/// A fully specified run: scheme, horizon, schedules, starting states,
/// seed, and trace resolution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemeConfig {
    pub scheme: Scheme,
    /// Time horizon `n`; the movement budget of every scheme is `n * a(n)`.
    pub horizon_n: u64,
    pub growth: GrowthSchedule,
    pub steps: StepSchedule,
    /// Starting states as 1-based labels (state 0 is the absorbing one).
    /// One entry for `single`/`branching`, `a(n)` entries otherwise.
    pub initial_states: Vec<usize>,
    pub seed: u64,
    /// Record a trace point every this many movement batches.
    pub trace_stride: u64,
}

impl SchemeConfig {
    /// Particle population the scheme reaches at the horizon.
    pub fn particles(&self) -> u64 {
        self.growth.a_of(self.horizon_n)
    }

    pub fn validate(&self, chain: &AbsorbingChain) -> Result<()> {
        self.growth.validate()?;
        if self.horizon_n < 1 {
            return Err(QsdError::Config("horizon must be at least 1".into()));
        }
        if self.trace_stride < 1 {
            return Err(QsdError::Config("trace_stride must be at least 1".into()));
        }
        let d = chain.dim();
        for &s in &self.initial_states {
            if s < 1 || s > d {
                return Err(QsdError::Config(format!(
                    "initial state label {s} outside 1..={d}"
                )));
            }
        }
        let n_particles = self.particles() as usize;
        match self.scheme {
            Scheme::Single => {
                if self.initial_states.len() != 1 {
                    return Err(QsdError::Config(
                        "single scheme takes exactly one initial state".into(),
                    ));
                }
            }
            Scheme::Branching => {
                if self.initial_states.len() != 1 {
                    return Err(QsdError::Config(
                        "branching scheme takes exactly one initial state".into(),
                    ));
                }
                if !matches!(self.growth, GrowthSchedule::Power { .. }) {
                    return Err(QsdError::Config(
                        "branching scheme requires power growth".into(),
                    ));
                }
            }
            Scheme::Independent | Scheme::Interacting => {
                if self.initial_states.len() != n_particles {
                    return Err(QsdError::Config(format!(
                        "{} scheme needs {} initial states, got {}",
                        self.scheme.name(),
                        n_particles,
                        self.initial_states.len()
                    )));
                }
            }
            Scheme::FlemingViot => {
                if n_particles < 2 {
                    return Err(QsdError::Config(
                        "fleming_viot needs at least 2 particles".into(),
                    ));
                }
                if self.initial_states.len() != n_particles {
                    return Err(QsdError::Config(format!(
                        "fleming_viot needs {} initial states, got {}",
                        n_particles,
                        self.initial_states.len()
                    )));
                }
            }
        }
        Ok(())
    }

    /// Starting positions as 0-based indices.
    pub(crate) fn internal_initial(&self) -> Vec<usize> {
        self.initial_states.iter().map(|&s| s - 1).collect()
    }
}

/// One point of a run's trace, keyed by cumulative particle movements.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub moves: u64,
    pub estimate: Distribution,
}

/// Outcome of one seeded run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub estimate: Distribution,
    /// Total particle transitions consumed.
    pub moves_used: u64,
    /// Number of algorithm steps executed (movement ticks for the
    /// uniformly-refreshed scheme).
    pub steps_executed: u64,
    pub trace: Vec<TracePoint>,
}

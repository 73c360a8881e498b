//! Step-size and particle-growth schedules shared by the simulation schemes.

use serde::{Deserialize, Serialize};

use crate::error::{QsdError, Result};

/// Step sizes `gamma_k = gamma_star / (k - 1 + N_star)` with
/// `N_star = floor(gamma_star) + 1`, so `gamma_1 <= 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepSchedule {
    pub gamma_star: f64,
    pub n_star: u64,
}

impl StepSchedule {
    pub fn new(gamma_star: f64) -> Result<Self> {
        if !(gamma_star > 0.0) || !gamma_star.is_finite() {
            return Err(QsdError::Config(format!(
                "gamma_star = {gamma_star} must be positive and finite"
            )));
        }
        Ok(Self {
            gamma_star,
            n_star: gamma_star.floor() as u64 + 1,
        })
    }

    /// The k-th step size, k >= 1.
    #[inline]
    pub fn gamma(&self, k: u64) -> f64 {
        debug_assert!(k >= 1);
        self.gamma_star / (k - 1 + self.n_star) as f64
    }
}

/// Particle-count law: either constant or `a(m) = max(1, floor(m^zeta))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GrowthSchedule {
    Constant { value: u64 },
    Power { zeta: f64 },
}

impl GrowthSchedule {
    pub fn validate(&self) -> Result<()> {
        match self {
            GrowthSchedule::Constant { value } => {
                if *value >= 1 {
                    Ok(())
                } else {
                    Err(QsdError::Config("constant growth needs value >= 1".into()))
                }
            }
            GrowthSchedule::Power { zeta } => {
                if *zeta > 0.0 && *zeta < 1.0 {
                    Ok(())
                } else {
                    Err(QsdError::Config(format!(
                        "power growth needs zeta in (0, 1), got {zeta}"
                    )))
                }
            }
        }
    }

    /// Particle count at time `m`.
    pub fn a_of(&self, m: u64) -> u64 {
        match self {
            GrowthSchedule::Constant { value } => *value,
            GrowthSchedule::Power { zeta } => {
                if m == 0 {
                    return 1;
                }
                let v = (m as f64).powf(*zeta);
                let mut k = v.floor();
                // powf can land a hair below an exact integer power; when the
                // next integer is within relative 1e-9, take it.
                if (k + 1.0) - v < 1e-9 * (k + 1.0) {
                    k += 1.0;
                }
                (k as u64).max(1)
            }
        }
    }

    /// First time at which the count reaches `j`; 0 for `j = 1`.
    ///
    /// Only meaningful for growing schedules.
    pub fn b_of(&self, j: u64) -> Result<u64> {
        match self {
            GrowthSchedule::Constant { .. } => Err(QsdError::Config(
                "arrival times are defined for power growth only".into(),
            )),
            GrowthSchedule::Power { zeta } => {
                assert!(j >= 1);
                // a_of is nondecreasing with unit steps, so the first hitting
                // time of j is the first m with a_of(m) >= j: binary search.
                let mut hi = ((j as f64).powf(1.0 / zeta).ceil() as u64).max(1);
                while self.a_of(hi) < j {
                    hi = hi.saturating_mul(2).max(hi + 1);
                }
                let mut lo = 0u64;
                while lo < hi {
                    let mid = lo + (hi - lo) / 2;
                    if self.a_of(mid) >= j {
                        hi = mid;
                    } else {
                        lo = mid + 1;
                    }
                }
                Ok(lo)
            }
        }
    }

    /// Minimal horizon whose cumulative per-step particle counts
    /// `sum_{i=1}^{k} a(i+1)` reach the movement budget `n * a(n)`.
    pub fn xi_budget(&self, n: u64) -> u64 {
        assert!(n >= 1);
        let budget = n as u128 * self.a_of(n) as u128;
        let mut sum: u128 = 0;
        let mut k = 0u64;
        while sum < budget {
            k += 1;
            sum += self.a_of(k + 1) as u128;
        }
        k
    }
}

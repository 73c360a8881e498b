//! Points on the probability simplex over the non-absorbed states and
//! vectors of its tangent space.

use serde::{Deserialize, Serialize};

use crate::error::{QsdError, Result};

/// Sum tolerance enforced on construction.
pub const SIMPLEX_TOL: f64 = 1e-12;

/// A probability distribution over the non-absorbed states `1..=d`,
/// stored as a dense weight vector indexed from 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Distribution {
    weights: Vec<f64>,
}

impl Distribution {
    /// Validates non-negativity and that the weights sum to 1 within
    /// [`SIMPLEX_TOL`].
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(QsdError::InvalidDistribution("empty weight vector".into()));
        }
        for (i, &w) in weights.iter().enumerate() {
            if !(w >= 0.0) {
                return Err(QsdError::InvalidDistribution(format!(
                    "weight {w:.17e} at index {i} is negative or NaN"
                )));
            }
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_TOL {
            return Err(QsdError::InvalidDistribution(format!(
                "weights sum to {sum:.17e}"
            )));
        }
        Ok(Self { weights })
    }

    /// Rescales a non-negative vector onto the simplex.
    pub fn normalized(mut weights: Vec<f64>) -> Result<Self> {
        let sum: f64 = weights.iter().sum();
        if !(sum > 0.0) {
            return Err(QsdError::InvalidDistribution(format!(
                "cannot normalize vector with sum {sum:.17e}"
            )));
        }
        for w in &mut weights {
            *w /= sum;
        }
        Self::new(weights)
    }

    /// The point mass on 0-based index `index`.
    pub fn point(dim: usize, index: usize) -> Self {
        assert!(index < dim, "point index out of range");
        let mut weights = vec![0.0; dim];
        weights[index] = 1.0;
        Self { weights }
    }

    pub fn uniform(dim: usize) -> Self {
        assert!(dim > 0);
        Self {
            weights: vec![1.0 / dim as f64; dim],
        }
    }

    /// Empirical measure of 0-based particle positions. Integer counts are
    /// divided once, so the weights sum to 1 exactly.
    pub fn empirical(dim: usize, positions: &[usize]) -> Self {
        assert!(!positions.is_empty());
        let mut counts = vec![0u64; dim];
        for &p in positions {
            assert!(p < dim, "position out of range");
            counts[p] += 1;
        }
        let n = positions.len() as f64;
        Self {
            weights: counts.iter().map(|&c| c as f64 / n).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn into_weights(self) -> Vec<f64> {
        self.weights
    }
}

/// An element of the tangent space of the simplex: coordinates sum to 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TangentVector {
    components: Vec<f64>,
}

impl TangentVector {
    pub fn new(components: Vec<f64>) -> Result<Self> {
        let sum: f64 = components.iter().sum();
        if sum.abs() > SIMPLEX_TOL {
            return Err(QsdError::InvalidDistribution(format!(
                "tangent components sum to {sum:.17e}"
            )));
        }
        Ok(Self { components })
    }

    pub fn components(&self) -> &[f64] {
        &self.components
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn sup_norm(&self) -> f64 {
        self.components.iter().fold(0.0, |m, x| m.max(x.abs()))
    }
}

/// Total variation distance, one half of the l1 distance.
pub fn tv_distance(p: &Distribution, q: &Distribution) -> Result<f64> {
    if p.dim() != q.dim() {
        return Err(QsdError::DimensionMismatch(format!(
            "tv_distance: {} vs {}",
            p.dim(),
            q.dim()
        )));
    }
    let sum: f64 = p
        .weights()
        .iter()
        .zip(q.weights())
        .map(|(a, b)| (a - b).abs())
        .sum();
    Ok(0.5 * sum)
}

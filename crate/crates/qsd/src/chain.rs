//! The absorbing Markov chain, its validation, and the interaction kernel.
//!
//! States are labeled `0..=d` where 0 is the unique absorbing state and
//! `1..=d` are the non-absorbed states. Internally the non-absorbed states
//! are indexed `0..d`.

use nalgebra::DMatrix;

use crate::dist::Distribution;
use crate::error::{QsdError, Result};

/// Input row sums may deviate from 1 by at most this much; accepted rows
/// are rescaled so the stored matrix is stochastic to machine precision.
pub const ROW_SUM_TOL: f64 = 1e-9;

/// A validated `(d+1) x (d+1)` row-stochastic matrix with absorbing state 0,
/// irreducible restriction to the non-absorbed states, and at least one
/// state with positive absorption probability.
#[derive(Debug, Clone, PartialEq)]
pub struct AbsorbingChain {
    d: usize,
    /// Full (d+1)x(d+1) matrix, row-major.
    full: Vec<f64>,
    /// Restriction to states 1..=d, row-major d x d.
    sub: Vec<f64>,
    /// Absorption column: P[x, 0] for x in 1..=d.
    absorb: Vec<f64>,
}

impl AbsorbingChain {
    /// Validates a raw square matrix given as rows.
    ///
    /// Checks, in order: shape, entry signs, row sums (within
    /// [`ROW_SUM_TOL`], then rescaled), absorption at state 0,
    /// irreducibility of the restriction, and positive absorption from at
    /// least one non-absorbed state.
    pub fn validate(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if n < 2 {
            return Err(QsdError::BadShape(format!("{n} rows")));
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(QsdError::BadShape(format!(
                    "row {i} has {} entries, expected {n}",
                    row.len()
                )));
            }
            for (j, &v) in row.iter().enumerate() {
                if !v.is_finite() || v < 0.0 {
                    return Err(QsdError::NegativeEntry {
                        row: i,
                        col: j,
                        value: v,
                    });
                }
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > ROW_SUM_TOL {
                return Err(QsdError::NonStochasticRow { row: i, sum });
            }
        }
        // Absorption at 0 is checked on the raw input, then stored exactly.
        if (rows[0][0] - 1.0).abs() > 1e-12 || rows[0][1..].iter().any(|&v| v > 1e-12) {
            return Err(QsdError::NotAbsorbing);
        }

        let d = n - 1;
        let mut full = vec![0.0; n * n];
        full[0] = 1.0;
        for i in 1..n {
            let sum: f64 = rows[i].iter().sum();
            for j in 0..n {
                full[i * n + j] = rows[i][j] / sum;
            }
        }

        let chain = {
            let mut sub = vec![0.0; d * d];
            let mut absorb = vec![0.0; d];
            for x in 0..d {
                absorb[x] = full[(x + 1) * n];
                for y in 0..d {
                    sub[x * d + y] = full[(x + 1) * n + (y + 1)];
                }
            }
            Self {
                d,
                full,
                sub,
                absorb,
            }
        };

        if !chain.sub_irreducible() {
            return Err(QsdError::Reducible);
        }
        if chain.absorb.iter().all(|&p| p == 0.0) {
            return Err(QsdError::NoAbsorption);
        }
        Ok(chain)
    }

    /// Number of non-absorbed states.
    pub fn dim(&self) -> usize {
        self.d
    }

    /// Entry of the full matrix; indices over `0..=d`.
    pub fn p(&self, x: usize, y: usize) -> f64 {
        self.full[x * (self.d + 1) + y]
    }

    /// Row of the full matrix for a non-absorbed state (0-based index into
    /// `1..=d`); the returned slice has length `d + 1` with the absorption
    /// probability first.
    pub fn full_row(&self, x: usize) -> &[f64] {
        let n = self.d + 1;
        &self.full[(x + 1) * n..(x + 2) * n]
    }

    /// Row of the restriction, 0-based.
    pub fn sub_row(&self, x: usize) -> &[f64] {
        &self.sub[x * self.d..(x + 1) * self.d]
    }

    /// Absorption probability of 0-based state `x`.
    pub fn absorb(&self, x: usize) -> f64 {
        self.absorb[x]
    }

    /// Restriction to the non-absorbed states as a dense matrix.
    pub fn sub_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.d, self.d, |x, y| self.sub[x * self.d + y])
    }

    /// The interaction kernel: absorption mass redirected according to `nu`,
    /// entrywise `P[x,y] + P[x,0] * nu[y]`.
    pub fn kernel(&self, nu: &Distribution) -> DMatrix<f64> {
        assert_eq!(nu.dim(), self.d, "kernel measure has wrong dimension");
        let w = nu.weights();
        DMatrix::from_fn(self.d, self.d, |x, y| {
            self.sub[x * self.d + y] + self.absorb[x] * w[y]
        })
    }

    /// One kernel entry without materializing the matrix.
    #[inline]
    pub fn kernel_entry(&self, x: usize, y: usize, nu: &[f64]) -> f64 {
        self.sub[x * self.d + y] + self.absorb[x] * nu[y]
    }

    fn sub_irreducible(&self) -> bool {
        // Strong connectivity of the positive-entry digraph: forward and
        // backward reachability from state 0.
        let d = self.d;
        let reach = |transpose: bool| -> usize {
            let mut seen = vec![false; d];
            let mut stack = vec![0usize];
            seen[0] = true;
            let mut count = 1;
            while let Some(x) = stack.pop() {
                for y in 0..d {
                    let v = if transpose {
                        self.sub[y * d + x]
                    } else {
                        self.sub[x * d + y]
                    };
                    if v > 0.0 && !seen[y] {
                        seen[y] = true;
                        count += 1;
                        stack.push(y);
                    }
                }
            }
            count
        };
        reach(false) == d && reach(true) == d
    }

    /// Parses the plain-text matrix format: first line the state count
    /// `d + 1`, then `d + 1` whitespace-separated rows.
    pub fn parse_text(text: &str) -> Result<Self> {
        let mut tokens = text.split_whitespace();
        let n: usize = tokens
            .next()
            .ok_or_else(|| QsdError::BadShape("empty chain file".into()))?
            .parse()
            .map_err(|e| QsdError::BadShape(format!("bad state count: {e}")))?;
        if n < 2 {
            return Err(QsdError::BadShape(format!("state count {n}")));
        }
        let mut rows = Vec::with_capacity(n);
        for i in 0..n {
            let mut row = Vec::with_capacity(n);
            for j in 0..n {
                let tok = tokens.next().ok_or_else(|| {
                    QsdError::BadShape(format!("matrix ends early at row {i}, col {j}"))
                })?;
                let v: f64 = tok
                    .parse()
                    .map_err(|e| QsdError::BadShape(format!("bad entry at ({i}, {j}): {e}")))?;
                row.push(v);
            }
            rows.push(row);
        }
        if tokens.next().is_some() {
            return Err(QsdError::BadShape("trailing tokens after matrix".into()));
        }
        Self::validate(&rows)
    }

    /// Renders the plain-text matrix format.
    pub fn to_text(&self) -> String {
        let n = self.d + 1;
        let mut out = format!("{n}\n");
        for i in 0..n {
            let row: Vec<String> = (0..n).map(|j| format!("{:.16e}", self.p(i, j))).collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        out
    }

    /// Built-in example chains addressable by name.
    ///
    /// `paper-3state` is a small three-state chain; `paper-10state` has three
    /// sticky interior states and is the harder benchmark.
    pub fn preset(name: &str) -> Option<Self> {
        let rows: Vec<Vec<f64>> = match name {
            "paper-3state" => vec![
                vec![1.0, 0.0, 0.0],
                vec![0.2, 0.5, 0.3],
                vec![0.3, 0.3, 0.4],
            ],
            "paper-10state" => vec![
                vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
                vec![0.2, 0.1, 0.7, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
                vec![0.0, 0.1, 0.8, 0.1, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
                vec![0.0, 0.0, 0.8, 0.1, 0.1, 0.0, 0.0, 0.0, 0.0, 0.0],
                vec![0.0, 0.0, 0.0, 0.8, 0.1, 0.1, 0.0, 0.0, 0.0, 0.0],
                vec![0.0, 0.0, 0.0, 0.0, 0.01, 0.98, 0.01, 0.0, 0.0, 0.0],
                vec![0.0, 0.0, 0.0, 0.0, 0.0, 0.1, 0.1, 0.8, 0.0, 0.0],
                vec![0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.1, 0.1, 0.8, 0.0],
                vec![0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.1, 0.8, 0.1],
                vec![0.2, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.7, 0.1],
            ],
            _ => return None,
        };
        Some(Self::validate(&rows).expect("preset chains are valid"))
    }

    pub fn preset_names() -> &'static [&'static str] {
        &["paper-3state", "paper-10state"]
    }

    /// Test-only constructor that skips validation; used to exercise code
    /// paths on chains the validator rejects (e.g. zero absorption).
    #[cfg(test)]
    pub(crate) fn from_rows_unchecked(rows: &[Vec<f64>]) -> Self {
        let n = rows.len();
        let d = n - 1;
        let mut full = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                full[i * n + j] = rows[i][j];
            }
        }
        let mut sub = vec![0.0; d * d];
        let mut absorb = vec![0.0; d];
        for x in 0..d {
            absorb[x] = full[(x + 1) * n];
            for y in 0..d {
                sub[x * d + y] = full[(x + 1) * n + (y + 1)];
            }
        }
        Self {
            d,
            full,
            sub,
            absorb,
        }
    }
}

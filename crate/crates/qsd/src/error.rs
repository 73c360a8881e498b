use thiserror::Error;

/// Errors shared by every layer of the crate.
///
/// Validation failures carry enough context to name the offending row or
/// value; numerical failures signal violated model assumptions rather than
/// bugs in the caller.
#[derive(Debug, Error)]
pub enum QsdError {
    #[error("transition matrix must be square with at least 2 states, got {0}")]
    BadShape(String),
    #[error("row {row} sums to {sum:.17e}, expected 1 (tolerance 1e-9)")]
    NonStochasticRow { row: usize, sum: f64 },
    #[error("negative entry {value:.17e} at ({row}, {col})")]
    NegativeEntry { row: usize, col: usize, value: f64 },
    #[error("state 0 is not absorbing: row 0 must be (1, 0, ..., 0)")]
    NotAbsorbing,
    #[error("the non-absorbed states do not form one irreducible class")]
    Reducible,
    #[error("no non-absorbed state has positive absorption probability")]
    NoAbsorption,
    #[error("iteration budget exhausted before tolerance, residual {residual:.3e}")]
    NoConvergence { residual: f64 },
    #[error("singular linear system; inputs violate the standing assumptions")]
    SingularSystem,
    #[error("drift Jacobian is not Hurwitz on the tangent space (max Re = {max_re:.6e})")]
    NotHurwitz { max_re: f64 },
    #[error("Lyapunov operator unstable: max Re eigenvalue {max_re:.6e} after shift")]
    NotStable { max_re: f64 },
    #[error("gamma_star = {gamma_star} does not exceed the threshold 1/L = {threshold}")]
    BelowThreshold { gamma_star: f64, threshold: f64 },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("replication trace grids differ; runs must share stride and budget")]
    GridMismatch,
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, QsdError>;

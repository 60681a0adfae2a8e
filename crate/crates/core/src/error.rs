use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix is not Hermitian: max |A - A^dagger| = {deviation:.3e}")]
    NotHermitian { deviation: f64 },

    #[error("invalid density operator: {0}")]
    InvalidDensity(String),

    #[error("invalid POM: {0}")]
    InvalidPom(String),

    #[error("grid too small: completeness correction {correction:.3e} exceeds limit {limit:.3e}")]
    GridTooSmall { correction: f64, limit: f64 },

    #[error("Fock truncation tail {tail:.3e} for outcome {outcome} exceeds {limit:.1e}")]
    TruncationTail {
        outcome: usize,
        tail: f64,
        limit: f64,
    },

    #[error("invalid spin POM: {0}")]
    SpinPom(String),

    #[error("unitary completion failed: residual norm {residual:.3e} at column {column}")]
    CompletionFailure { column: usize, residual: f64 },

    #[error("squared statistical deviation is negative ({value:.3e}); positivity violated")]
    NegativeDeviation { value: f64 },

    #[error("outcome {index} has zero trace")]
    ZeroTraceOutcome { index: usize },

    #[error("bias operator is neither scalar nor spin-linear (residual {residual:.3e})")]
    NotCorrectable { residual: f64 },

    #[error("outcome kets {a_index} and {m_index} have overlap {overlap:.3e}; kets must be neither proportional nor orthogonal")]
    ProportionalKets {
        a_index: usize,
        m_index: usize,
        overlap: f64,
    },

    #[error("observables do not commute: ||[A, M]|| = {norm:.3e}")]
    NotCommuting { norm: f64 },

    #[error("estimate is not universally unbiased: residual {residual:.3e}")]
    NotUnbiased { residual: f64 },

    #[error("estimators refer to different POMs")]
    PomMismatch,

    #[error("grid resolution insufficient for {what}: discrepancy {discrepancy:.3e}")]
    GridResolution { what: &'static str, discrepancy: f64 },

    #[error("beta * spread(H) = {exponent:.1} exceeds {limit}")]
    Overflow { exponent: f64, limit: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

use thiserror::Error;

/// Errors raised by the operator calculus and the protocols built on it.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("matrix must be square with dim >= 1, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix entry ({row}, {col}) is not finite")]
    NonFinite { row: usize, col: usize },

    #[error("dimension {dim} exceeds the configured maximum {max}")]
    DimensionOverflow { dim: usize, max: usize },

    #[error("invalid tolerance: {0}")]
    InvalidTolerance(String),

    #[error("operator is not Hermitian (defect {defect:.3e})")]
    NotHermitian { defect: f64 },

    #[error("operator is not a projection (Hermitian defect {hermitian:.3e}, idempotency defect {idempotent:.3e})")]
    NotProjection { hermitian: f64, idempotent: f64 },

    #[error("operator is not a density operator: {0}")]
    NotAState(String),

    #[error("events do not commute (commutator {commutator:.3e}); their meet and join carry no interpretation")]
    IncompatiblePair { commutator: f64 },

    #[error("conditioning event has probability {prob:.3e}; conditional probability is undefined")]
    ConditionOnNull { prob: f64 },

    #[error("the zero event has no transition probabilities")]
    ZeroEvent,

    #[error("event has rank {rank}, an atom has rank 1")]
    NotAnAtom { rank: usize },

    #[error("rank {rank} invalid for dimension {dim}")]
    InvalidRank { dim: usize, rank: usize },

    #[error("transition probability is not state independent (residual {residual:.3e})")]
    TransitionNotStateIndependent { residual: f64 },

    #[error("argument outside its domain: {0}")]
    Domain(String),

    #[error("b-elements span only {rank} dimensions")]
    BasisDegenerate { rank: usize },

    #[error("protocol violation: {0}")]
    ProtocolViolation(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("matrix file: {0}")]
    MatrixFile(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

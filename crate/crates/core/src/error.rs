use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("field modulus mismatch: {left} vs {right}")]
    FieldMismatch { left: u32, right: u32 },
    #[error("division by zero")]
    DivisionByZero,
    #[error("modulus {0} is not prime")]
    InvalidModulus(u32),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("matrix is singular (rank-deficient)")]
    Singular,
    #[error("linear system has no solution")]
    NoSolution,
    #[error("duplicate evaluation point {0}")]
    DuplicatePoint(u32),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("code construction infeasible: {0}")]
    ConstructionInfeasible(String),
    #[error("(s={s}, t={t}) is infeasible for these parameters: {reason}")]
    Infeasible { s: usize, t: usize, reason: String },

    #[error("wrong payload length: expected {expected}, got {got}")]
    WrongLength { expected: usize, got: usize },
    #[error("node id {0} out of range")]
    InvalidNode(usize),
    #[error("duplicate node id {0} in response set")]
    DuplicateNode(usize),
    #[error("expected {expected} responses, got {got}")]
    ConnectivityMismatch { expected: usize, got: usize },

    #[error("decoding failed: {0}")]
    DecodeFailure(String),
    #[error("decoder found two distinct consistent candidates")]
    AmbiguousDecode,
    #[error("repair of node {node} failed: {reason}")]
    RepairFailed { node: usize, reason: String },
    #[error("reconstruction failed: {0}")]
    ReconstructionFailed(String),

    #[error("node {0} is already failed")]
    AlreadyFailed(usize),
    #[error("node {0} is not failed")]
    NotFailed(usize),
    #[error("malformed scenario: {0}")]
    Scenario(String),
}

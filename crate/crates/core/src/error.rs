use thiserror::Error;

/// Errors raised by the simulation library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("subsystem `{0}` not present in the Hilbert space")]
    UnknownSubsystem(String),
    #[error("duplicate subsystem label `{0}`")]
    DuplicateLabel(String),
    #[error("subsystem `{0}` has zero dimension")]
    ZeroDimension(String),
    #[error("total dimension {0} exceeds the cap of {1}")]
    DimensionCap(usize, usize),
    #[error("level index {index} out of range for `{label}` (dim {dim})")]
    LevelOutOfRange {
        label: String,
        index: usize,
        dim: usize,
    },
    #[error("subsystem `{label}` needs dimension >= 2 for a ladder operator, got {dim}")]
    DimensionTooSmall { label: String, dim: usize },
    #[error("operands live on different Hilbert spaces")]
    SpaceMismatch,
    #[error("state has norm {0}, expected a normalized state")]
    NotNormalized(f64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("state became non-finite at t = {time} ns (step too large?)")]
    NonFiniteState { time: f64 },
    #[error("norm grew from {before} to {after} during a step at t = {time} ns")]
    NormGrowth { time: f64, before: f64, after: f64 },
    #[error("all jump weights vanished at t = {time} ns")]
    ZeroJumpWeights { time: f64 },
    #[error("{failed} of {total} trajectories aborted (limit 1%); first failure: {first}")]
    TooManyFailures {
        failed: usize,
        total: usize,
        first: String,
    },
    #[error("insufficient statistics: {got} herald events, need at least {need}")]
    InsufficientStatistics { got: usize, need: usize },
    #[error("non-positive transfer delay {0} ns; check the rate reference time")]
    NonPositiveDelay(f64),
    #[error("density matrix is not a valid state: {0}")]
    InvalidDensityMatrix(String),
    #[error("time-bin qubit invalid: {0}")]
    InvalidQubit(String),
}

pub type Result<T> = std::result::Result<T, Error>;

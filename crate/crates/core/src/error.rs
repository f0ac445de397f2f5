use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LabError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("entry count {got} does not match shape {rows}x{cols}")]
    Shape { rows: usize, cols: usize, got: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("state vector is not normalized (norm = {0})")]
    NotNormalized(f64),

    #[error("dimension {0} is not a power of two")]
    NotQubitDimension(usize),

    #[error("not a spin projector: {0}")]
    NotSpinProjector(String),

    #[error("invalid direction: {0}")]
    InvalidDirection(String),

    #[error("party {party} out of range 1..={n_parties}")]
    PartyOutOfRange { party: usize, n_parties: usize },

    #[error("correlation needs observables on distinct parties (both on party {0})")]
    SameParty(usize),

    #[error("source annihilates state: no partner projector exists")]
    SourceAnnihilatesState,

    #[error("operation requires {expected} parties, got {got}")]
    PartyCount { expected: usize, got: usize },

    #[error("correlation criterion forms disagree: vector residual^2 = {vector_sq:e}, inner = {inner:e}")]
    FormDisagreement { vector_sq: f64, inner: f64 },

    #[error("hardy construction failed at link {link}: {reason}")]
    HardyLink { link: usize, reason: String },

    #[error("invalid chain: {0}")]
    InvalidChain(String),

    #[error("ambiguous chain extension at {0}: two distinct partners, inconsistent correlation set")]
    AmbiguousExtension(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("correlation set is not closed under the complement-dual rule")]
    NotDualClosed,

    #[error("unknown observable: {0}")]
    UnknownObservable(String),

    #[error("{0} observables exceed the exhaustive search limit of {1}")]
    SearchTooLarge(usize, usize),

    #[error("invalid derivation trace: {0}")]
    InvalidTrace(String),
}

pub type Result<T> = std::result::Result<T, LabError>;

use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("vector has a non-finite coordinate")]
    NonFinite,

    #[error("direction projects to norm {norm:e} inside the affine hull")]
    DegenerateDirection { norm: f64 },

    #[error("shrink parameter {0} outside [0, 1)")]
    InvalidDelta(f64),

    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("operation unsupported: {0}")]
    Unsupported(String),

    #[error("infeasible projection did not terminate within {cap} oracle calls")]
    IterationCapExceeded { cap: u64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("block already holds {block_len} gradients")]
    BlockOverflow { block_len: usize },

    #[error("block closed after {fed} of {block_len} gradients")]
    BlockIncomplete { fed: usize, block_len: usize },

    #[error("numeric overflow: {0}")]
    NumericOverflow(String),

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("no feasible hindsight point: worst violation {violation:e}")]
    InfeasibleCertificate { violation: f64 },

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),
}

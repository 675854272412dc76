use thiserror::Error;

/// Errors surfaced by the simulator library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("graph has no agents")]
    EmptyGraph,

    #[error("edge ({0}, {1}) is a self-loop or references an agent outside 0..{2}")]
    InvalidEdge(usize, usize, usize),

    #[error("eta must lie in (0, 1), got {0}")]
    InvalidEta(f64),

    #[error("mixing entry ({row}, {col}) = {value} is below eta = {eta}")]
    EtaViolation {
        row: usize,
        col: usize,
        value: f64,
        eta: f64,
    },

    #[error("step size must be positive, got {0}")]
    NonPositiveStep(f64),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("dataset is empty")]
    EmptyData,

    #[error("agents hold unequal sample counts ({0} vs {1})")]
    UnequalSplit(usize, usize),

    #[error("prefix length k = {k} outside 1..={n}")]
    BadK { k: usize, n: usize },

    #[error("non-finite iterate at agent {agent}, epoch {epoch}, inner step {inner}")]
    NonFiniteIterate {
        agent: usize,
        epoch: usize,
        inner: usize,
    },

    #[error("forward deviation requested but inner averages were not recorded")]
    MissingInnerTrace,

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("line {line}: label {label} is not -1 or +1")]
    Label { line: usize, label: String },

    #[error("need at least {needed} samples, found {found}")]
    TooFewSamples { needed: usize, found: usize },

    #[error(
        "reference solver stopped after {} iterations with gradient-mapping norm {:e}",
        .best.iterations,
        .best.mapping_norm
    )]
    NoConvergence {
        best: Box<crate::reference::ReferenceSolution>,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

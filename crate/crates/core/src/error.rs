use thiserror::Error;

/// Errors raised by model construction, validation and evaluation.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("alphabet is empty")]
    EmptyAlphabet,
    #[error("duplicate symbol label `{0}`")]
    DuplicateLabel(String),
    #[error("unknown symbol label `{0}`")]
    UnknownLabel(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("incidence entry ({row}, {col}) is {value}, expected 0 or 1")]
    NotBinary { row: usize, col: usize, value: u8 },
    #[error("symbol `{0}` has no outgoing or no incoming transition")]
    StrandedSymbol(String),
    #[error("word length must be at least {min}, got {got}")]
    WordTooShort { min: usize, got: usize },
    #[error("transition {from} -> {to} is not allowed")]
    Inadmissible { from: String, to: String },
    #[error("prefixes agree on their whole common length; distance undetermined")]
    Undetermined,
    #[error("incidence matrix is not primitive")]
    NotPrimitive,
    #[error("invalid transition matrix: {0}")]
    InvalidTransition(String),
    #[error("invalid projection: {0}")]
    InvalidProjection(String),
    #[error("matrix row {0} is identically zero")]
    ZeroRow(usize),
    #[error("simplex point must be finite and strictly positive (coordinate {0})")]
    NotInSimplex(usize),
    #[error("hypothesis not satisfied: {0}")]
    Hypothesis(String),
    #[error("no convergence: {0}")]
    NoConvergence(String),
    #[error("unsupported setting: {0}")]
    Setting(String),
    #[error("model file: {0}")]
    ModelFile(String),
    #[error("option `{name}` = {value} outside {range}")]
    OptionRange {
        name: String,
        value: f64,
        range: String,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

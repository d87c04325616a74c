use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NetError {
    #[error("shape mismatch: expected {expected} values, got {actual}")]
    ShapeMismatch { expected: usize, actual: usize },
    #[error("architecture mismatch: {0}")]
    ArchitectureMismatch(String),
    #[error("embedding key {key} out of range for table with {rows} rows")]
    KeyOutOfRange { key: usize, rows: usize },
    #[error("malformed snapshot: {0}")]
    Snapshot(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DefinitionError {
    #[error("invalid range [{lo}, {hi}] for `{name}`: lo must be below hi")]
    InvalidRange { name: String, lo: f64, hi: f64 },
    #[error("categorical output needs at least 2 categories, got {0}")]
    TooFewCategories(usize),
    #[error("`{name}`: shape must be at least 1")]
    EmptyShape { name: String },
    #[error("output shape {0} is not supported; only scalar outputs are")]
    UnsupportedShape(usize),
    #[error("duplicate observation name `{0}`")]
    DuplicateObservation(String),
    #[error("learner does not match output definition: {0}")]
    LearnerMismatch(String),
    #[error("invalid learner configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Net(#[from] NetError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ObservationError {
    #[error("observation `{0}` was not declared")]
    Undeclared(String),
    #[error("observation `{name}` expects {expected}")]
    WrongKind { name: String, expected: &'static str },
}

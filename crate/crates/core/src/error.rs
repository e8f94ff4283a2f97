use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("line {line}: record `{id}` scores sum to {sum}, expected 1 within 1e-6")]
    NotNormalized { line: usize, id: String, sum: f64 },

    #[error("line {line}: record `{id}` has label {label}, outside 0..{num_classes}")]
    LabelRange {
        line: usize,
        id: String,
        label: usize,
        num_classes: usize,
    },

    #[error("line {line}: duplicate record id `{id}`")]
    DuplicateId { line: usize, id: String },

    #[error("line {line}: expected {expected} scores, found {found}")]
    InconsistentClasses {
        line: usize,
        expected: usize,
        found: usize,
    },

    #[error("pool is empty")]
    EmptyPool,

    #[error("record `{id}` is missing attribute `{attribute}`")]
    MissingAttribute { id: String, attribute: String },

    #[error("invalid cost matrix: {0}")]
    CostMatrix(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("no eligible groups remain")]
    NoEligibleGroups,

    #[error("record `{0}` has no label")]
    MissingLabel(String),

    #[error("record `{0}` was already queried")]
    AlreadyQueried(String),

    #[error("unknown record `{0}`")]
    UnknownRecord(String),

    #[error("oracle exhausted: every record has been queried")]
    OracleExhausted,

    #[error("no pending query matches record `{found}`")]
    NotPending { found: String },

    #[error("outcome {outcome} out of range 0..{limit}")]
    OutcomeRange { outcome: usize, limit: usize },

    #[error("ground truth required but absent")]
    MissingTruth,

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

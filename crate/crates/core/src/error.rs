use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors shared by every module of the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension must lie in 1..=8, got {0}")]
    BadDimension(usize),

    #[error("matrix is not orthogonal within 1e-9")]
    NotOrthogonal,

    #[error("operands belong to different groups")]
    MixedGroups,

    #[error("group of kind `{0}` cannot be enumerated")]
    UnsupportedEnumeration(String),

    #[error("generated closure exceeded cap of {cap} elements")]
    ClosureCapExceeded { cap: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("vertex index {vertex} out of range for {vertices} vertices")]
    BadVertex { vertex: usize, vertices: usize },

    #[error("edge index {edge} out of range for {edges} edges")]
    BadEdge { edge: usize, edges: usize },

    #[error("not a valid gain map: {0}")]
    InvalidGainMap(String),

    #[error("graph is not ({k},{l})-tight")]
    NotTight { k: i64, l: i64 },

    #[error("graph has {vertices} vertices, exceeding the exhaustive-check cap of {cap}")]
    SizeCapExceeded { vertices: usize, cap: usize },

    #[error("decomposition impossible: {0}")]
    DecompositionImpossible(String),

    #[error("invalid extension step: {0}")]
    InvalidStep(String),

    #[error("no valid gains exist: {0}")]
    NoValidGains(String),

    #[error("no reduction sequence found: {0}")]
    NoSequence(String),

    #[error("point-group condition fails: {0}")]
    PointGroupCondition(String),

    #[error("rank deficiency persisted after {retries} parameter reductions")]
    RankDeficient { retries: usize },

    #[error("constructed assignment failed verification: {0}")]
    VerificationFailed(String),

    #[error("degenerate parameter: {0}")]
    DegenerateParameter(String),

    #[error("gain-map count {count} exceeds exhaustive cap {cap}; use Monte Carlo sampling")]
    EnumerationCapExceeded { count: String, cap: u64 },

    #[error("invalid document at {path}: {message}")]
    InvalidDocument { path: String, message: String },

    #[error("rendering unsupported for dimension {0}")]
    RenderUnsupported(usize),

    #[error("edges are missing gain values; this operation needs a full gain map")]
    MissingGains,

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("label space needs at least 2 labels, got {0}")]
    TooFewLabels(usize),

    #[error("label {label} out of range for L = {labels}")]
    LabelOutOfRange { label: usize, labels: usize },

    #[error("{what}: not a probability vector ({reason})")]
    InvalidDistribution { what: String, reason: String },

    #[error("{what}: row {row} is not a probability vector ({reason})")]
    InvalidChannel {
        what: String,
        row: usize,
        reason: String,
    },

    #[error("{what}: dimension mismatch (expected {expected}, got {got})")]
    DimensionMismatch {
        what: String,
        expected: usize,
        got: usize,
    },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("invalid strategy: {0}")]
    InvalidStrategy(String),

    #[error("invalid attack: {0}")]
    InvalidAttack(String),

    #[error("Dirichlet concentration must be positive and finite, got {0}")]
    InvalidConcentration(f64),

    #[error("regularization exponent must lie in (0, 1), got {0}")]
    InvalidGamma(f64),

    #[error("posterior for task {task} is invalid: {reason}")]
    InvalidPosterior { task: usize, reason: String },

    #[error("effort probability must lie in [0, 1], got {0}")]
    InvalidEffort(f64),

    #[error("need at least 3 tasks (m >= 3) for bonus and two penalty sets, got m = {0}")]
    TooFewTasks(usize),

    #[error("invalid partition fractions: {0}")]
    InvalidFractions(String),

    #[error("not enough peers: requested {requested} from {available} other clients")]
    NotEnoughPeers { requested: usize, available: usize },

    #[error("exhaustive enumeration supports L <= {max}, got L = {labels}")]
    LabelSpaceTooLarge { labels: usize, max: usize },

    #[error("noise rate must lie in [0, 0.5), got {0}")]
    InvalidAlpha(f64),

    #[error("malicious fraction must lie in [0, 1], got {0}")]
    InvalidLambda(f64),

    #[error("delta matrix does not satisfy the categorical-world condition")]
    NotCategorical,

    #[error("exact Shapley supports n <= {max} clients, got {clients}")]
    TooManyClients { clients: usize, max: usize },

    #[error("cosine distance undefined for an all-zero vector")]
    ZeroVector,

    #[error("rewards sum to zero after clamping negatives")]
    DegenerateRewards,

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("format error: {0}")]
    Format(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Format(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Format(e.to_string())
    }
}

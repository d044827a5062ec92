use thiserror::Error;

/// Errors produced by the modeling pipeline.
///
/// Every variant has a stable machine-readable [`Error::category`] that the CLI
/// and the live service surface verbatim.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid score ({a}, {b}): scores must be finite and non-negative")]
    InvalidScore { a: f64, b: f64 },
    #[error("log-ratio T-score with kappa = 0 is undefined at ({a}, {b})")]
    Domain { a: f64, b: f64 },
    #[error("{0}")]
    InvalidParameter(String),
    #[error("stat {stat_id} has zero variance across training games")]
    DegenerateStat { stat_id: String },
    #[error("no scaler for stat {0}")]
    MissingScaler(String),
    #[error("game {game_id} has no path for stat {stat_id}")]
    MissingStat { game_id: String, stat_id: String },
    #[error("need at least {needed} games, got {got}")]
    TooFewGames { needed: usize, got: usize },
    #[error("design matrix is rank deficient; collinear columns: {}", columns.join(", "))]
    RankDeficient { columns: Vec<String> },
    #[error("game {0} has no players")]
    EmptyRoster(String),
    #[error("grid mismatch: expected R = {expected}, found R = {found}")]
    GridMismatch { expected: usize, found: usize },
    #[error("tau^2 + sigma^2 = 0: win probability is undefined before the final buzzer")]
    DegenerateModel,
    #[error("only {found} positive increments, need {needed}")]
    TooFewRises { needed: usize, found: usize },
    #[error("{0}")]
    InvalidTransform(String),
    #[error("{0}")]
    IllegalSub(String),
    #[error("clock exhausted: game already at t = 1")]
    ClockExhausted,
    #[error("nothing to undo")]
    NothingToUndo,
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: u64,
        column: usize,
        message: String,
    },
    #[error("consistency error in game {game_id}, stat {stat_id}, grid index {index}: {message}")]
    Consistency {
        game_id: String,
        stat_id: String,
        index: usize,
        message: String,
    },
    #[error("unsupported schema version {found} (expected {expected})")]
    VersionMismatch { expected: u32, found: u32 },
    #[error("{0}")]
    InvalidModel(String),
    #[error("{0}")]
    Io(String),
}

impl Error {
    /// Stable category name, e.g. `RankDeficient`.
    pub fn category(&self) -> &'static str {
        match self {
            Error::InvalidScore { .. } => "InvalidScore",
            Error::Domain { .. } => "DomainError",
            Error::InvalidParameter(_) => "InvalidParameter",
            Error::DegenerateStat { .. } => "DegenerateStat",
            Error::MissingScaler(_) => "MissingScaler",
            Error::MissingStat { .. } => "MissingStat",
            Error::TooFewGames { .. } => "TooFewGames",
            Error::RankDeficient { .. } => "RankDeficient",
            Error::EmptyRoster(_) => "EmptyRoster",
            Error::GridMismatch { .. } => "GridMismatch",
            Error::DegenerateModel => "DegenerateModel",
            Error::TooFewRises { .. } => "TooFewRises",
            Error::InvalidTransform(_) => "InvalidTransform",
            Error::IllegalSub(_) => "IllegalSub",
            Error::ClockExhausted => "ClockExhausted",
            Error::NothingToUndo => "NothingToUndo",
            Error::Parse { .. } => "ParseError",
            Error::Consistency { .. } => "ConsistencyError",
            Error::VersionMismatch { .. } => "VersionMismatch",
            Error::InvalidModel(_) => "InvalidModel",
            Error::Io(_) => "IoError",
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Input(String),
    #[error("dimension error: {0}")]
    Dimension(String),
    #[error("matrix is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("argument outside the supported domain: {0}")]
    Domain(String),
    #[error("no feasible measurement angles for score {score}")]
    InfeasibleScore { score: f64 },
    #[error("score sweep ended without an inflection point after {steps} steps (theta = {theta})")]
    SweepIncomplete { theta: f64, steps: usize },
    #[error("bound table has no curve for theta = {0}")]
    TableIncomplete(f64),
    #[error("table format error: {0}")]
    Table(String),
    #[error("table schema version {found} is not supported (expected {expected})")]
    SchemaVersion { found: u32, expected: u32 },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

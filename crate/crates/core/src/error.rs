use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("cannot parse distribution key `{key}`: {reason}")]
    BadKey { key: String, reason: String },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("horizon t={t} is below the admissible minimum {min} for `{dist}`")]
    UnsupportedHorizon { dist: String, t: f64, min: f64 },

    #[error("`{0}` has no extreme-value normalizers")]
    NoNormalizers(String),

    #[error("no scaling solution for `{dist}` at t={t}: need t >= {threshold}")]
    NoSolution { dist: String, t: f64, threshold: f64 },

    #[error("operation requires {expected} class, got `{dist}`")]
    WrongClass { dist: String, expected: &'static str },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("too few tables: {0}")]
    TooFewTables(String),

    #[error("too few replicas: got {got}, need at least {need}")]
    TooFewReplicas { got: usize, need: usize },

    #[error("infeasible schedule: {0}")]
    ScheduleInfeasible(String),

    #[error("budget exceeded: {ops:e} elementary steps > {limit:e} (use force to override)")]
    BudgetExceeded { ops: f64, limit: f64 },

    #[error("config error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

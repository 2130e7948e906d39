use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("rejected input: {0}")]
    InvalidInput(String),

    #[error("rejected config: {0}")]
    InvalidConfig(String),

    #[error("degenerate goal: human position coincides with goal {goal:?}")]
    DegenerateGoal { goal: [f64; 2] },

    #[error("infeasible threshold: delta {delta} exceeds peak density {peak}")]
    InfeasibleThreshold { delta: f64, peak: f64 },

    #[error("numerical blowup at step {step}")]
    NumericalBlowup { step: usize },

    #[error("no trajectory: {0}")]
    NoTrajectory(String),

    #[error("scenario error at {path}: {message}")]
    Scenario { path: String, message: String },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::InvalidConfig(msg.into())
    }

    /// Short machine-readable tag used by the CLI error report.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidInput(_) => "invalid_input",
            Error::InvalidConfig(_) => "invalid_config",
            Error::DegenerateGoal { .. } => "degenerate_goal",
            Error::InfeasibleThreshold { .. } => "infeasible_threshold",
            Error::NumericalBlowup { .. } => "numerical_blowup",
            Error::NoTrajectory(_) => "no_trajectory",
            Error::Scenario { .. } => "scenario",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }
}

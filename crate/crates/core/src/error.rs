use thiserror::Error;

#[derive(Debug, Error)]
pub enum TbpError {
    #[error("need at least {min} arms, got {got}")]
    TooFewArms { min: usize, got: usize },

    #[error("arm index {arm} is outside 1..={len}")]
    InvalidArm { arm: usize, len: usize },

    #[error("invalid problem: {0}")]
    InvalidProblem(String),

    #[error("budget too small: {0}")]
    BudgetTooSmall(String),

    #[error("shape precondition violated: {0}")]
    ShapeViolated(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("construction failed verification: {0}")]
    Verification(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl TbpError {
    /// Configuration errors map to exit code 1 in the CLI, everything else to 2.
    pub fn is_config(&self) -> bool {
        matches!(self, TbpError::Config(_))
    }
}

pub type Result<T> = std::result::Result<T, TbpError>;

use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum IrsError {
    #[error("arm index {arm} out of range for {arms} arms")]
    ArmOutOfRange { arm: usize, arms: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("model mismatch: {0}")]
    ModelMismatch(String),

    #[error("instance too large: {what} needs {required} cells, budget is {budget}")]
    InstanceTooLarge {
        what: &'static str,
        required: u128,
        budget: u128,
    },

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serialization(String),
}

impl IrsError {
    /// True for errors caused by malformed input rather than by the run itself.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            IrsError::ArmOutOfRange { .. }
                | IrsError::InvalidInput(_)
                | IrsError::ModelMismatch(_)
                | IrsError::Config(_)
        )
    }
}

pub type Result<T, E = IrsError> = std::result::Result<T, E>;

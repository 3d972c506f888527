use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error(transparent)]
    Engine(#[from] zeno_core::Error),

    #[error("{0}")]
    Validation(String),

    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Engine(_) | CliError::Validation(_) => 3,
            CliError::Io(_) => 4,
        }
    }
}

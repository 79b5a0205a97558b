use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error(transparent)]
    Model(#[from] nrsense_core::Error),
    #[error("cannot write output: {0}")]
    Io(#[from] std::io::Error),
}

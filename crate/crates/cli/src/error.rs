use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad configuration or arguments; exit status 2.
    #[error("config error: {0}")]
    Config(String),
    /// Failure while simulating or writing results; exit status 3.
    #[error("runtime error: {0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }
}

impl From<risbackcom::Error> for CliError {
    fn from(e: risbackcom::Error) -> Self {
        match e {
            risbackcom::Error::Validation(v) => CliError::Config(v.to_string()),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

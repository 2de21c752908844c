use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("config key `{key}`: {message}")]
    Config { key: String, message: String },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv output: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Solver(#[from] robopt::Error),
}

impl HarnessError {
    pub fn config(key: &str, message: impl Into<String>) -> Self {
        HarnessError::Config {
            key: key.to_string(),
            message: message.into(),
        }
    }

    /// Process exit code: 2 for configuration errors, 3 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config { .. } => 2,
            HarnessError::Solver(robopt::Error::Parameter(_) | robopt::Error::Dimension(_)) => 2,
            _ => 3,
        }
    }
}

pub type Result<T, E = HarnessError> = std::result::Result<T, E>;

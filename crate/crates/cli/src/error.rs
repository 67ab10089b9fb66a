use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad configuration file, key or value.
    #[error("config error: {0}")]
    Config(String),

    #[error("{0}")]
    Runtime(String),

    #[error("cannot write {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) | CliError::Io { .. } => 1,
        }
    }
}

impl From<zlip_core::Error> for CliError {
    fn from(e: zlip_core::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

use std::path::PathBuf;

use thiserror::Error;

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: column `{column}`: {message}")]
    Parse {
        path: PathBuf,
        line: u64,
        column: String,
        message: String,
    },
    #[error("{0}")]
    SchemaMismatch(String),
    #[error(transparent)]
    Data(reflow_shift::Error),
    #[error(transparent)]
    NotConverged(reflow_shift::Error),
    #[error(transparent)]
    Diverged(reflow_shift::Error),
    #[error("expected a {expected} model, got {got}")]
    WrongModelFamily { expected: String, got: String },
    #[error("{0}")]
    Config(String),
}

impl CliError {
    /// Short machine-readable class, printed as `error[kind]`.
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Io { .. } => "io",
            CliError::Parse { .. } => "parse",
            CliError::SchemaMismatch(_) => "schema-mismatch",
            CliError::Data(_) => "data",
            CliError::NotConverged(_) => "not-converged",
            CliError::Diverged(_) => "diverged",
            CliError::WrongModelFamily { .. } => "wrong-model-family",
            CliError::Config(_) => "config",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Io { .. } => 3,
            CliError::Parse { .. } => 4,
            CliError::SchemaMismatch(_) => 5,
            CliError::Data(_) => 6,
            CliError::NotConverged(_) => 7,
            CliError::Diverged(_) => 8,
            CliError::WrongModelFamily { .. } => 9,
            CliError::Config(_) => 10,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}

impl From<reflow_shift::Error> for CliError {
    fn from(e: reflow_shift::Error) -> Self {
        use reflow_shift::Error as E;
        let inner = match &e {
            E::Fold { source, .. } => source.as_ref(),
            other => other,
        };
        match inner {
            E::NotConverged { .. } => CliError::NotConverged(e),
            E::Diverged { .. } => CliError::Diverged(e),
            E::InvalidParameter(_) => CliError::Config(e.to_string()),
            _ => CliError::Data(e),
        }
    }
}

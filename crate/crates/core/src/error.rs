use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("divisor {value:e} is below 1e-9 in magnitude")]
    DivisorTooSmall { value: f64 },

    #[error("invalid record: {0}")]
    InvalidRecord(String),

    #[error("dataset is empty after {stage}")]
    EmptyDataset { stage: &'static str },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("need at least {required} values, got {got}")]
    TooShort { required: usize, got: usize },

    #[error("no features left for target {target} at threshold {threshold}")]
    NoFeaturesLeft { target: String, threshold: f64 },

    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: usize, got: usize },

    #[error(
        "solver did not converge after {iterations} iterations \
         (KKT violation {violation:e}, objective {objective})"
    )]
    NotConverged {
        iterations: usize,
        violation: f64,
        objective: f64,
        /// Best iterate: weights followed by the bias.
        best: Vec<f64>,
    },

    #[error("training diverged at epoch {epoch}: loss is not finite")]
    Diverged { epoch: usize },

    #[error("too few rows: {n} rows cannot fill {k} folds")]
    TooFewRows { n: usize, k: usize },

    #[error("actual values are constant; R² is undefined")]
    ConstantActual,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("fold {fold}: {source}")]
    Fold {
        fold: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Strips fold context, returning the innermost error.
    pub fn root(&self) -> &Error {
        match self {
            Error::Fold { source, .. } => source.root(),
            other => other,
        }
    }
}

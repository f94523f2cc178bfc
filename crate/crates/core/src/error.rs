use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Parameters inconsistent with each other or with the data shape.
    #[error("configuration error: {0}")]
    Config(String),

    /// Input data violates a dataset invariant.
    #[error("data error: {0}")]
    Data(String),

    /// Rank-deficient or otherwise unusable constraint matrix.
    #[error("constraint error: {0}")]
    Constraint(String),

    #[error("numerical error: {context} (condition estimate {condition:.3e})")]
    Numerical { context: String, condition: f64 },

    /// A regularised predictor whose leading weight vanishes cannot be inverted.
    #[error("inversion error at level {level}, k = {k}: leading weight {weight:.3e} is too small")]
    Inversion { level: usize, k: usize, weight: f64 },

    #[error("level {level}, k = {k}: {source}")]
    AtPredictor {
        level: usize,
        k: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {message}")]
    Load { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn data(msg: impl Into<String>) -> Self {
        Error::Data(msg.into())
    }

    /// Strips any `(level, k)` annotation.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtPredictor { source, .. } => source.root(),
            other => other,
        }
    }

    /// True for errors caused by ill-conditioned or non-invertible numerics.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self.root(),
            Error::Numerical { .. } | Error::Inversion { .. } | Error::Constraint(_)
        )
    }

    /// True for errors caused by malformed or unreadable inputs.
    pub fn is_data(&self) -> bool {
        matches!(
            self.root(),
            Error::Data(_) | Error::Load { .. } | Error::Io(_) | Error::Json(_) | Error::Csv(_)
        )
    }
}

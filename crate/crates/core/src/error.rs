use crate::C64;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    Grid(String),

    #[error("invalid value for `{field}`: {reason}")]
    Param { field: String, reason: String },

    #[error("argument {0} lies outside the admissible sector")]
    Sector(C64),

    #[error("linear algebra: {0}")]
    Linalg(String),

    #[error("ambiguous eigenvalue pairing: {0}")]
    Pairing(String),

    #[error("contour quadrature: {0}")]
    Contour(String),

    #[error("divergence vanishes (norm {0:.3e}); reduction is uninformative")]
    DivergenceFree(f64),

    #[error("delta too large: {0}")]
    DeltaTooLarge(String),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn param(field: &str, reason: impl Into<String>) -> Self {
        Error::Param { field: field.to_string(), reason: reason.into() }
    }
}

impl From<ndarray_linalg::error::LinalgError> for Error {
    fn from(e: ndarray_linalg::error::LinalgError) -> Self {
        Error::Linalg(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

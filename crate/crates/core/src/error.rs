use thiserror::Error;

/// Best candidate seen by a flat search that failed to reach its tolerance.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct NotFoundReport {
    pub best_residual: f64,
    /// Best second direction found, as body coordinates `(z..., h...)`.
    pub best_direction: Vec<f64>,
    pub evaluations: usize,
    pub tolerance: f64,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("dimension mismatch in {what}: expected {expected}, got {got}")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error(
        "no totally geodesic flat found: best residual {:.3e} after {} evaluations (tol {:.1e})",
        .0.best_residual, .0.evaluations, .0.tolerance
    )]
    NotFound(Box<NotFoundReport>),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn check_len(what: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::Dimension {
            what,
            expected,
            got,
        })
    }
}

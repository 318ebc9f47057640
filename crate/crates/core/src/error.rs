use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised across ingestion, fitting and planning.
///
/// Variants fall into two groups that the command line maps onto distinct
/// exit codes: input/validation problems (`2`) and numerical failures (`3`).
#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: field `{field}`: {message}")]
    Parse {
        line: usize,
        field: String,
        message: String,
    },

    #[error("invalid `{field}`: {message}")]
    Validation { field: String, message: String },

    #[error("missing required field `{0}`")]
    MissingField(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("insufficient variation: {0}")]
    InsufficientVariation(String),

    #[error("alignment error: missing sentence ids {missing:?}")]
    Alignment { missing: Vec<String> },

    #[error("non-convex fit: leading coefficient {leading} <= 0")]
    NonConvex { leading: f64 },

    #[error("saddle fit: quadratic form eigenvalue signs {signs:?}")]
    Saddle { signs: [i8; 2] },

    #[error("singular design matrix: {0}")]
    SingularDesign(String),

    #[error("no start converged (best sos {best_sos:e}, projected gradient norm {grad_norm:e})")]
    NonConvergence {
        best_theta: Vec<f64>,
        best_sos: f64,
        grad_norm: f64,
    },

    #[error("uncertainty unavailable: {0}")]
    UncertaintyUnavailable(String),

    #[error("non-finite objective value at {0:?}")]
    NonFinite(Vec<f64>),

    #[error("residual variant `{0}` has no optimal compression")]
    NoOptimum(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn validation(field: &str, message: impl Into<String>) -> Self {
        Error::Validation {
            field: field.to_string(),
            message: message.into(),
        }
    }

    /// True for numerical failures, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NonConvex { .. }
                | Error::Saddle { .. }
                | Error::SingularDesign(_)
                | Error::NonConvergence { .. }
                | Error::UncertaintyUnavailable(_)
                | Error::NonFinite(_)
        )
    }

    /// Process exit code: 2 for input/validation errors, 3 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        if self.is_numerical() {
            3
        } else {
            2
        }
    }
}

use num_complex::Complex64;
use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid {field}: {reason}")]
    Validation { field: String, reason: String },

    #[error("lambert W branch {branch} is unbounded at y = 0")]
    LambertDomain { branch: i32 },

    #[error("lambert W on branch {branch} did not converge for y = {y} (residual {residual:e})")]
    LambertNoConvergence {
        branch: i32,
        y: Complex64,
        residual: f64,
    },

    #[error(
        "matrix is near-defective: eigenvector condition estimate {condition:e} exceeds {threshold:e}; \
         perturb the input or reject it"
    )]
    NearDefective { condition: f64, threshold: f64 },

    #[error("branch {branch}: Q solve did not converge (residual {residual:e})")]
    BranchSolve { branch: i32, residual: f64 },

    #[error("branch {branch}: {source}")]
    Branch {
        branch: i32,
        #[source]
        source: Box<Error>,
    },

    #[error(
        "collocation fit is unusable (condition {condition:e}, node residual {residual:e}); \
         use fewer branches or the spectral-projection coefficients"
    )]
    Collocation { condition: f64, residual: f64 },

    #[error("characteristic root {root} is not simple; spectral projection is undefined")]
    RepeatedRoot { root: Complex64 },

    #[error("summed response has imaginary residue {residue:e} (> {tolerance:e}) at t = {t}")]
    ImaginaryResidue { residue: f64, tolerance: f64, t: f64 },

    #[error("parameter set {id}: {source}")]
    ParamSet {
        id: String,
        #[source]
        source: Box<Error>,
    },

    #[error("{}: row {row}, column {column}: {reason}", path.display())]
    Schema {
        path: PathBuf,
        row: usize,
        column: String,
        reason: String,
    },

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            reason: reason.into(),
        }
    }

    /// True for errors caused by bad input (files, flags, parameter values)
    /// rather than by a numerical failure.
    pub fn is_input_error(&self) -> bool {
        match self {
            Error::Validation { .. }
            | Error::Schema { .. }
            | Error::Config(_)
            | Error::Io(_)
            | Error::Csv(_)
            | Error::Json(_)
            | Error::LambertDomain { .. } => true,
            Error::ParamSet { source, .. } | Error::Branch { source, .. } => {
                source.is_input_error()
            }
            _ => false,
        }
    }
}

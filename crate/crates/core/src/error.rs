use thiserror::Error;

/// Errors raised anywhere in the solver pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid mesh: {0}")]
    Mesh(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("point ({0}, {1}) lies outside the reference cell [-1,1]^2")]
    OutsideReferenceCell(f64, f64),

    #[error("unsupported Gauss rule with {0} points per axis (supported: 1..=6)")]
    UnsupportedQuadrature(usize),

    #[error("constitutive coefficient lost positivity{}: {quantity} = {value:e}", cell.map(|c| format!(" in cell {c}")).unwrap_or_default())]
    ConstitutivePositivity {
        cell: Option<usize>,
        quantity: &'static str,
        value: f64,
    },

    #[error("linear system is singular ({0}); check boundary conditions and pressure gauge")]
    Singular(String),

    #[error("linear solve residual {residual:e} exceeds tolerance {tolerance:e}")]
    SolverFailure { residual: f64, tolerance: f64 },

    #[error("configuration error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

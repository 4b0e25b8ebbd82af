use thiserror::Error;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum CfoError {
    #[error("invalid mesh request: {0}")]
    InvalidMesh(String),

    #[error("unsupported polynomial degree {0} (expected 1..=3)")]
    UnsupportedDegree(usize),

    #[error("invalid problem data: {0}")]
    InvalidProblem(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("factorization failed: {0}")]
    Factorization(String),

    #[error("solve residual {residual:.3e} exceeds tolerance {tolerance:.3e}")]
    InaccurateSolve { residual: f64, tolerance: f64 },

    #[error("time step {dt:.3e} violates the CFL bound; use dt <= {suggested:.3e}")]
    CflViolation { dt: f64, suggested: f64 },

    #[error("saturation {value} at element {element} is outside [0, 1]")]
    SaturationOutOfRange { element: usize, value: f64 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for CfoError {
    fn from(e: std::io::Error) -> Self {
        CfoError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, CfoError>;

use thiserror::Error;

use crate::perturbation::PerturbationCertificate;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not Hermitian: ||H - H*|| = {deviation:.3e} exceeds {tol:.3e}")]
    NotHermitian { deviation: f64, tol: f64 },

    #[error("matrix is numerically singular: sigma_min = {sigma_min:.3e}")]
    Singular { sigma_min: f64 },

    #[error("matrix exponential overflowed (||T|| = {norm:.3e})")]
    Overflow { norm: f64 },

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("argument out of domain: {0}")]
    OutOfDomain(String),

    #[error("pencil and bisection disagree: {pencil:.12e} vs {bisection:.12e}")]
    MethodDisagreement { pencil: f64, bisection: f64 },

    #[error("eigenvalue on the principal branch cut near {value}")]
    SpectrumOnCut { value: num_complex::Complex64 },

    #[error("quadrature failed to converge after {levels} refinements (last delta {delta:.3e})")]
    QuadratureNotConverged { levels: u32, delta: f64 },

    #[error("degenerate data for rate fit: {0}")]
    DegenerateData(String),

    #[error("theorem hypothesis failed: {0}")]
    HypothesisFailed(String),

    #[error("instance generation failed: {0}")]
    GenerationFailed(String),

    #[error("hard checks failed ({failed} of {total})")]
    CertificateFailure {
        failed: u32,
        total: u32,
        certificate: Box<PerturbationCertificate>,
    },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

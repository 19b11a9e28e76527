//! Error type shared by all library modules.

use thiserror::Error;

/// Errors raised by model construction, kernel evaluation and the check suite.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("matrix is not symmetric: max |a_ij - a_ji| = {max_asym:.3e} exceeds {tol:.1e}")]
    NonSymmetric { max_asym: f64, tol: f64 },

    #[error(
        "generator spectrum is not strictly positive: smallest eigenvalue {min_eigenvalue:.3e} \
         is below the spectral floor {floor:.1e}"
    )]
    NonPositiveSpectrum { min_eigenvalue: f64, floor: f64 },

    #[error("function evaluates to a non-finite value at spectrum point {point:.6e}")]
    FunctionSingularAtSpectrum { point: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("Euclidean time {time:.6e} outside the admissible region (beta = {beta})")]
    TimeOutOfRange { time: f64, beta: String },

    #[error("word times must be non-decreasing: entry {index} has time {time:.6e} after {prev:.6e}")]
    UnorderedWord { index: usize, time: f64, prev: f64 },

    #[error("integral kernel is singular at the endpoint s = {time:.6e}; require 0 < s < beta")]
    EndpointSingularity { time: f64 },

    #[error(
        "covariance spectrum must lie strictly above one: smallest eigenvalue {min_eigenvalue:.12e}"
    )]
    SpectrumNotAboveOne { min_eigenvalue: f64 },

    #[error("operation requires real test vectors; max |Im| = {max_imag:.3e}")]
    NonRealVector { max_imag: f64 },

    #[error("operation requires a matrix-kind model; quadrature models are unsupported here")]
    QuadratureModelUnsupported,

    #[error("operation requires a quadrature-kind model")]
    MatrixModelUnsupported,

    #[error("operation requires a finite inverse temperature")]
    FiniteBetaRequired,

    #[error("ensemble holds no samples")]
    EmptyEnsemble,

    #[error("conditioning covariance block is singular (determinant {det:.3e})")]
    DegenerateConditioning { det: f64 },

    #[error("dispersion is gapless (inf = {gap:.3e}) and no condensate handling applies")]
    GaplessDispersion { gap: f64 },

    #[error("coupling matrix is not positive semi-definite: smallest eigenvalue {min_eigenvalue:.3e}")]
    NonPsdCoupling { min_eigenvalue: f64 },

    #[error("config error: {0}")]
    ConfigParse(String),

    #[error("model build error: {0}")]
    ModelBuild(String),

    #[error("parse error in matrix text: {0}")]
    MatrixParse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

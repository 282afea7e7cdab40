use thiserror::Error;

#[derive(Debug, Error)]
pub enum FtjError {
    #[error("invalid stack: {0}")]
    InvalidStack(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("domain index {index} out of range for {n_domains} domains")]
    IndexOutOfRange { index: usize, n_domains: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("linear solver did not converge after {iterations} iterations (relative residual {residual:.3e})")]
    SolverNonConvergence { iterations: usize, residual: f64 },

    #[error("step size underflow at t = {t:.6e} s (dt = {dt:.3e} s); loosen the tolerance or reduce the drive rate")]
    StepUnderflow { t: f64, dt: f64 },

    #[error("polarization diverged in domain {domain} at t = {t:.6e} s (P = {value:.4e} C/m^2, guard {limit:.4e} C/m^2)")]
    Divergence {
        domain: usize,
        t: f64,
        value: f64,
        limit: f64,
    },

    #[error("material is not ferroelectric: {0}")]
    NotFerroelectric(String),

    #[error("undefined metric: {0}")]
    UndefinedMetric(String),

    #[error("integration window did not converge: tail contribution {tail:.3e} exceeds tolerance {tolerance:.3e}; widen the energy window")]
    WindowNotConverged { tail: f64, tolerance: f64 },

    #[error("quadrature did not reach tolerance {tolerance:.1e} (estimated error {error:.3e})")]
    QuadratureNotConverged { error: f64, tolerance: f64 },

    #[error("invalid waveform: {0}")]
    InvalidWaveform(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, FtjError>;

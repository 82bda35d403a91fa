//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by the simulator library.
#[derive(Debug, Error)]
pub enum Error {
    /// Constellation order is not a supported square QAM size.
    #[error("unsupported constellation: M = {0} is not a power of 4")]
    UnsupportedConstellation(usize),

    /// A bit slice had the wrong length for the requested mapping.
    #[error("bit length mismatch: expected {expected} bits, got {got}")]
    BitLength { expected: usize, got: usize },

    /// A vector or matrix had unexpected dimensions.
    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    Dimension {
        context: &'static str,
        expected: String,
        got: String,
    },

    /// A scalar parameter was outside its valid range.
    #[error("parameter `{name}` out of range: {reason}")]
    Parameter { name: &'static str, reason: String },

    /// An LED and PD coincide, or a normal is not unit length.
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    /// ZF equalization refused a singular or near-singular channel.
    #[error("equalization failure: condition number {rho:.3e} exceeds {limit:.1e}")]
    IllConditioned { rho: f64, limit: f64 },

    /// MAP estimation hit an all-zero channel column with zero noise.
    #[error("degenerate channel column {index}: zero gain with zero noise")]
    DegenerateColumn { index: usize },

    /// SNR calibration found no received signal power.
    #[error("zero received power: channel and transmit statistics give P_rx = 0")]
    ZeroReceivedPower,

    /// Hermitian symmetry of a frequency frame was violated beyond tolerance.
    #[error("Hermitian symmetry violated: residual {residual:.3e} exceeds {tolerance:.1e}")]
    SymmetryViolated { residual: f64, tolerance: f64 },

    /// Configuration file or config constraint problem.
    #[error("config: {0}")]
    Config(String),

    /// A runtime check or invariant did not hold.
    #[error("{0}")]
    Failure(String),

    /// Underlying I/O failure.
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for errors that indicate bad user configuration rather than a
    /// runtime failure. The CLI maps these to exit code 1.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::Config(_) | Error::Parameter { .. } | Error::UnsupportedConstellation(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

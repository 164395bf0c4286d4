use thiserror::Error;

/// Crate-wide error type.
///
/// Non-convergence of iterative solvers is *not* an error (it is reported
/// through solver reports); errors are reserved for broken contracts,
/// invalid inputs and I/O failures.
#[derive(Debug, Error)]
pub enum DwarfError {
    /// A documented precondition or invariant was violated by the caller.
    #[error("contract violation: {0}")]
    Contract(String),

    /// A size exceeds the configured desk-scale capacity.
    #[error("capacity exceeded: {0}")]
    Capacity(String),

    /// Terrain height reaches or exceeds the model depth.
    #[error("invalid terrain: {0}")]
    InvalidTerrain(String),

    /// Zero pivot in the non-pivoting LU factorization.
    #[error("singular system: {0}")]
    SingularSystem(String),

    /// GCR direction with vanishing `<L p, L p>`; carries the partial report.
    #[error("gcr breakdown after {} iterations (residual {:.3e})",
            report.iterations,
            report.residual_history.last().copied().unwrap_or(f64::NAN))]
    GcrBreakdown { report: Box<crate::gcr::GcrReport> },

    /// A process rate evaluated to NaN; names the offending process.
    #[error("non-finite rate in process `{0}`")]
    NonFiniteRate(String),

    /// Configuration parse or schema error.
    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, DwarfError>;

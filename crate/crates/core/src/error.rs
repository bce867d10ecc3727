use alloc::string::String;

/// Errors raised by the core toolkit.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// A request exceeds a documented capability limit (polynomial degree,
    /// chaos order, matrix size, ...).
    #[error("capability limit exceeded: {0}")]
    Capability(String),
    /// An argument is outside the operation's domain.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    /// A precondition on the input model or law does not hold.
    #[error("precondition failed: {0}")]
    Precondition(String),
    /// A numerical routine produced a non-finite value or failed to converge.
    #[error("evaluation failed: {0}")]
    Evaluation(String),
    /// Every Hermite coefficient is below the rank tolerance.
    #[error("hermite rank undefined: all coefficients below {tol}")]
    UndefinedRank { tol: f64 },
    /// A tail integral does not converge (first moment is infinite).
    #[error("infinite first moment: tail integral does not converge")]
    InfiniteMoment,
    /// Σ|ρ(k)|^d diverges, so no Gaussian limit is claimed.
    #[error("covariance not summable at power {power}: {detail}")]
    Summability { power: u32, detail: String },
    /// Covariance matrix failed the positive-semidefinite check.
    #[error("covariance matrix is not positive semidefinite (pivot {pivot})")]
    NotPositiveSemidefinite { pivot: usize },
    /// Hurst index beyond the Gaussian regime of the quadratic variation.
    #[error("hurst index {0} is outside the Gaussian regime (H <= 3/4)")]
    OutOfTheorem(f64),
    /// Two objects that must share a basis or dimension do not.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    /// Binning needs at least two distinct conditioning values.
    #[error("degenerate conditioning variable: all values equal")]
    DegenerateBinning,
}

pub type Result<T> = core::result::Result<T, Error>;

macro_rules! bail {
    ($variant:ident, $($arg:tt)*) => {
        return Err($crate::error::Error::$variant(alloc::format!($($arg)*)))
    };
}
pub(crate) use bail;

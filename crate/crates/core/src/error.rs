use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("Hardy condition violated: mu_1 + ((N-2)/2)^2 = {margin}")]
    HardyViolated { margin: f64 },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("{what} index {index} out of range (available: {available})")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        available: usize,
    },

    #[error("assembled operator is not Hermitian (residual {residual:e})")]
    NonHermitian { residual: f64 },

    #[error("eigensolver failure: {0}")]
    Eigensolver(String),

    #[error("zero-norm angular vector")]
    ZeroNorm,

    #[error("singular evaluation at the origin (alpha = {alpha})")]
    SingularAtOrigin { alpha: f64 },

    #[error("quadrature did not converge for {what}: order doubling changed the result by {discrepancy:e}")]
    QuadratureNotConverged { what: &'static str, discrepancy: f64 },

    #[error("no mode of the truncated spectrum has gamma within {tolerance:e} of {gamma}")]
    EmptyEigenspace { gamma: f64, tolerance: f64 },

    #[error("kernel series tail bound {achieved:e} above tolerance {tolerance:e}")]
    KernelTruncation { achieved: f64, tolerance: f64 },

    #[error("spectral truncation insufficient: tail estimate {tail:e} above tolerance {tolerance:e}")]
    SpectralTruncation { tail: f64, tolerance: f64 },

    #[error("domain radius {radius} too small: boundary contribution {estimate:e}")]
    DomainTooSmall { radius: f64, estimate: f64 },

    #[error("H vanishes: the field is trivial")]
    TrivialField,

    #[error("extrapolation did not converge: {0}")]
    FitNotConverged(String),

    #[error("beta coefficients depend on Lambda: relative spread {spread:e} above {tolerance:e}")]
    LambdaSpread { spread: f64, tolerance: f64 },

    #[error("configuration mismatch: {0}")]
    ConfigMismatch(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// True for errors caused by the input rather than by the numerics.
    pub fn is_configuration(&self) -> bool {
        matches!(
            self,
            Error::HardyViolated { .. }
                | Error::InvalidParameter { .. }
                | Error::IndexOutOfRange { .. }
                | Error::NonHermitian { .. }
                | Error::ZeroNorm
                | Error::ConfigMismatch(_)
                | Error::Unsupported(_)
                | Error::EmptyEigenspace { .. }
        )
    }
}

use thiserror::Error;

/// Errors raised by the numerical engine.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The request leaves the energy window where the Bessel series is trusted.
    #[error("range error: {0}")]
    Range(String),

    /// The spectral parameter sits on a Friedrichs eigenvalue (pole of the wedge Q-function)
    /// or on a zero of a secular denominator.
    #[error("pole at z = {z}: nearest singular point {nearest}")]
    Pole { z: String, nearest: f64 },

    /// A series, quadrature or extrapolation did not reach its tolerance.
    #[error("accuracy error: {message} (achieved estimate {estimate:e})")]
    Accuracy { message: String, estimate: f64 },

    /// An iterative solver failed to converge.
    #[error("convergence failure after {iterations} iterations: {message}")]
    Convergence { message: String, iterations: usize },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn range(msg: impl Into<String>) -> Self {
        Error::Range(msg.into())
    }

    pub(crate) fn accuracy(msg: impl Into<String>, estimate: f64) -> Self {
        Error::Accuracy {
            message: msg.into(),
            estimate,
        }
    }

    pub(crate) fn convergence(msg: impl Into<String>, iterations: usize) -> Self {
        Error::Convergence {
            message: msg.into(),
            iterations,
        }
    }

    /// True for errors caused by the inputs themselves (domain, range, poles).
    pub fn is_domain_like(&self) -> bool {
        matches!(self, Error::Domain(_) | Error::Range(_) | Error::Pole { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;

use alloc::string::String;

/// Errors raised by the numerical and sampling routines.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("{name} = {value} is outside its domain: {expected}")]
    Domain {
        name: &'static str,
        value: f64,
        expected: &'static str,
    },
    #[error("quadrature did not converge after {levels} levels: estimate {estimate:e}, error {error:e}")]
    NoConvergence { estimate: f64, error: f64, levels: u32 },
    #[error("numerical failure in {operation}: {detail}")]
    Numerical { operation: &'static str, detail: String },
    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T, E = Error> = core::result::Result<T, E>;

impl Error {
    pub(crate) fn domain(name: &'static str, value: f64, expected: &'static str) -> Self {
        Error::Domain { name, value, expected }
    }

    pub(crate) fn numerical(operation: &'static str, detail: impl Into<String>) -> Self {
        Error::Numerical {
            operation,
            detail: detail.into(),
        }
    }
}

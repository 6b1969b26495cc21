use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Newton iteration of an implicit step did not reach its tolerance.
    #[error(
        "newton iteration did not converge in {iterations} iterations (residual {residual:e})"
    )]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("matrix is numerically singular (condition estimate {condition:e})")]
    SingularMatrix { condition: f64 },

    /// `f(u_m) == f(u_0)` for the exact scalar θ.
    #[error("degenerate coarse interval: f(u_m) - f(u_0) = {difference:e}")]
    DegenerateInterval { difference: f64 },

    #[error("state overflow at time index {index} (norm {norm:e})")]
    Overflow { index: usize, norm: f64 },

    #[error("system is not chaotic: lambda0 = {lambda0}")]
    NonChaotic { lambda0: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),
}

impl Error {
    /// True for the failures a solve reports as numerical divergence.
    pub fn is_instability(&self) -> bool {
        matches!(
            self,
            Error::NoConvergence { .. } | Error::SingularMatrix { .. } | Error::Overflow { .. }
        )
    }
}

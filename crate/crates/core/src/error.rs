use thiserror::Error;

/// Errors raised by the inference engine and its numeric kernel.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ImError {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("root not bracketed: f({lo}) = {f_lo}, f({hi}) = {f_hi}")]
    NoBracket { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },

    #[error("quadrature did not converge: estimate {estimate}, error bound {error} after {subdivisions} subdivisions")]
    QuadratureFailure {
        estimate: f64,
        error: f64,
        subdivisions: usize,
    },

    #[error("non-finite integrand value at x = {0}")]
    NonFiniteIntegrand(f64),

    #[error("root finder exceeded {0} iterations")]
    RootIterations(usize),

    #[error("empty focal set for x = {x}: association violates the non-emptiness condition")]
    EmptyFocal { x: f64 },

    #[error("fiducial belief is zero; relative efficiency undefined")]
    ZeroFiducialBelief,

    #[error("score distribution cannot be balanced at t = {0}")]
    Unbalanceable(f64),

    #[error("unsupported combination: {0}")]
    Unsupported(String),
}

pub type Result<T, E = ImError> = std::result::Result<T, E>;

pub(crate) fn domain(msg: impl Into<String>) -> ImError {
    ImError::Domain(msg.into())
}

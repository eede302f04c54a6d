use thiserror::Error;

/// Errors raised by the analytical models, the numerical kernels and the simulator.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument violated a documented precondition.
    #[error("domain error: {0}")]
    Domain(String),

    /// An integer computation would overflow the supported width.
    #[error("capacity exceeded: {what} (largest supported K is {max_k})")]
    Capacity { what: String, max_k: usize },

    /// An iterative kernel did not reach its tolerance.
    #[error("{what} did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },

    /// The fixed-point solver exhausted its iteration budget.
    #[error("fixed point not reached after {iterations} iterations (residual {residual:e})")]
    FixedPoint {
        iterations: usize,
        residual: f64,
        last_iterate: Vec<f64>,
    },

    /// Perfect power control must be analysed with the lattice model.
    #[error("sigma_db = 0 is the perfect power control case; use the ideal (lattice) model")]
    UseIdealModel,
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}

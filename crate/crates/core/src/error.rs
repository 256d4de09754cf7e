use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("degree {degree} exceeds the supported maximum {max}")]
    DegreeLimit { degree: usize, max: usize },

    #[error("{what} = {value} exceeds the supported maximum {max}")]
    SizeLimit {
        what: &'static str,
        value: usize,
        max: usize,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(&'static str),

    #[error("numerical integration did not converge (residual {residual:e}, tolerance {tolerance:e})")]
    Quadrature { residual: f64, tolerance: f64 },

    #[error("band storage of {required} entries exceeds the budget of {budget}")]
    MemoryBudget { required: usize, budget: usize },

    #[error("eigenvalue iteration did not converge after {iterations} sweeps (unreduced off-diagonal {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
}

pub type Result<T, E = Error> = core::result::Result<T, E>;

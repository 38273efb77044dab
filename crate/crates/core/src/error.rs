use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    /// Parameters or domains outside the supported ranges.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Requested a rate or scale in a (d, α) regime without a tabled formula.
    #[error("no tabled regime for d={d}, alpha={alpha}")]
    RegimeNotCovered { d: usize, alpha: f64 },

    /// An iterative solver ran out of iterations.
    #[error(
        "{what} did not converge: residual {achieved:e} > {tol:e} after {iterations} iterations"
    )]
    NonConvergence {
        what: &'static str,
        achieved: f64,
        tol: f64,
        iterations: usize,
    },

    /// A certified series or quadrature could not reach the requested
    /// tolerance within its work budget.
    #[error("{what}: requested tolerance unreachable within the work budget")]
    ToleranceUnreachable { what: &'static str },

    /// An enumeration or mesh would exceed the hard work bound.
    #[error("{what} needs {required} units, above the bound {bound}")]
    WorkBound {
        what: &'static str,
        required: u128,
        bound: u128,
    },

    /// A displacement configuration does not cover the sites a computation
    /// needs (including Monte Carlo paths leaving the sampled box).
    #[error("insufficient coverage: {0}")]
    Coverage(String),

    /// Degenerate data (constant series, empty sample, ...).
    #[error("degenerate input: {0}")]
    Degenerate(&'static str),
}

impl Error {
    /// Process exit code convention: 2 for numerical non-convergence,
    /// 3 for everything else (invalid specification or inputs).
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::NonConvergence { .. } | Error::ToleranceUnreachable { .. } => 2,
            _ => 3,
        }
    }
}

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("resolution mismatch: expected J = {expected}, found J = {found}")]
    ResolutionMismatch { expected: u32, found: u32 },

    /// Pointwise evaluation requested on the singular diagonal of a kernel.
    #[error("kernel is singular on the diagonal (x = y = {x}); integrate across it instead")]
    DiagonalSingularity { x: f64 },

    #[error("ill-posed discretization: Galerkin matrix is not positive definite (smallest eigenvalue {min_eigenvalue:e})")]
    IllPosedDiscretization { min_eigenvalue: f64 },

    #[error("invalid intensity: {0}")]
    InvalidIntensity(String),

    /// The moment target lies outside the reachable set of the exponential family,
    /// or the damped Newton iteration could not make progress towards it.
    #[error("infeasible target: {reason} (alpha_coarse = {alpha_coarse:e}, last residual = {residual:e})")]
    InfeasibleTarget {
        reason: String,
        alpha_coarse: f64,
        residual: f64,
        target: Vec<f64>,
    },

    #[error("singular Hessian at Newton iteration {iteration}")]
    SingularHessian { iteration: usize },

    #[error("exponent overflow: |log-intensity| reached {max_abs:.3} (bound {bound})")]
    ExponentOverflow { max_abs: f64, bound: f64 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

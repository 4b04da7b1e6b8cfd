//! Error type shared by every fallible operation in the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied value violates a documented precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Two objects that must share a grid do not.
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    /// The spatial window cannot support the state (density reached the edge,
    /// or a requested state needs more resolution than the grid has).
    #[error("grid cannot support the state: {0}")]
    GridTooSmall(String),

    /// Density sits below the floor on a region separating the phase anchor
    /// from populated regions, so the phase constant there is undetermined.
    #[error("phase solve ill-conditioned on x in [{x_lo:.6}, {x_hi:.6}]: density below floor separates the anchor from a populated region")]
    IllConditionedPhase { x_lo: f64, x_hi: f64 },

    /// An iterative solve ran out of iterations.
    #[error("{what}: no convergence after {iterations} iterations (residual {residual:.3e})")]
    Convergence {
        what: String,
        iterations: usize,
        residual: f64,
    },

    /// A time step too coarse for the requested scheme or movie.
    #[error("step size unusable: {0}")]
    StepSize(String),

    /// Requested mode count exceeds what the grid resolves.
    #[error("truncation: {0}")]
    Truncation(String),

    /// A serialized movie failed to parse.
    #[error("malformed movie: {0}")]
    MalformedMovie(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid operator: {0}")]
    InvalidOperator(String),

    #[error("jacobian undefined at eta = 0 for p != 2")]
    JacobianAtZero,

    #[error("invalid shape: {0}")]
    InvalidShape(String),

    #[error("invalid body: {0}")]
    InvalidBody(String),

    #[error("body is not convex (worst normalized cross product {worst:.3e})")]
    NotConvex { worst: f64 },

    #[error("inner body is not contained in the outer body")]
    NotContained,

    #[error("trim plane does not keep the body center")]
    CenterCut,

    #[error("trimmed or intersected body has empty interior")]
    EmptyInterior,

    #[error("ring is pinched: minimal gap {gap:.3e} below {gap_min:.3e}")]
    Pinched { gap: f64, gap_min: f64 },

    #[error("grid map has non-positive jacobian at (i={i}, j={j})")]
    BadMap { i: usize, j: usize },

    #[error("picard iteration did not converge in {iters} steps (last increment {increment:.3e})")]
    PicardStalled { iters: usize, increment: f64, history: Vec<f64> },

    #[error("linear solver breakdown after {iters} iterations (residual {residual:.3e})")]
    LinearBreakdown { iters: usize, residual: f64 },

    #[error("converged field violates the maximum principle (excess {excess:.3e})")]
    MaxPrincipleViolated { excess: f64 },

    #[error("potential is not monotone along ray {j}")]
    NonMonotoneRay { j: usize },

    #[error("level t={t} outside (0,1)")]
    BadLevel { t: f64 },

    #[error("supersolution search exceeded the doubling cap (last radius {radius:.3e})")]
    DoublingCapExceeded { radius: f64 },

    #[error("subsolution level parameter underflow (t = {t:.3e})")]
    LevelUnderflow { t: f64 },

    #[error("free boundary step size underflow (tau = {tau:.3e})")]
    TauUnderflow { tau: f64 },

    #[error("trim would cut into the inner body")]
    TrimIntoInner,

    #[error("free boundary iteration exceeded {max_iter} iterations")]
    FbMaxIter { max_iter: usize, report: Box<crate::free_boundary::IterationReport> },

    #[error("free boundary iteration oscillates; retry with smaller tau")]
    Oscillation { report: Box<crate::free_boundary::IterationReport> },

    #[error("trim iteration stalled: remaining trace excess cannot be trimmed away")]
    TrimStalled { report: Box<crate::free_boundary::IterationReport> },

    #[error("radius {r} outside [{a}, {big_r}]")]
    RadiusOutOfRange { r: f64, a: f64, big_r: f64 },

    #[error("bisection bracket failure: gradient at bracket ends does not straddle c")]
    BracketFailure,

    #[error("geometry is not radial: {0}")]
    NotRadial(String),

    #[error("config error at line {line}: {msg}")]
    Config { line: usize, msg: String },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

use num_complex::Complex64;
use thiserror::Error;

/// Errors raised anywhere in the simulator.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("overflow evaluating {0}")]
    Overflow(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("pole evaluation: use pseudomode_radial (I_M vanishes at z = {0})")]
    PoleEvaluation(Complex64),

    #[error("no convergence in {0} iterations")]
    NoConvergence(usize),

    #[error("converged outside fourth quadrant at z = {0}")]
    OutsideFourthQuadrant(Complex64),

    #[error("boundary zero suspected near z = {0}")]
    BoundaryZero(Complex64),

    #[error("completeness certificate failed for l = {l} in rectangle re [{re_lo}, {re_hi}] x im [{im_lo}, {im_hi}]: counted {counted}, found {found}")]
    Completeness {
        l: usize,
        re_lo: f64,
        re_hi: f64,
        im_lo: f64,
        im_hi: f64,
        counted: i64,
        found: usize,
    },

    #[error("branch ambiguity for pole ({l},{n}): |g|^2 differs by {diff:e}")]
    BranchAmbiguity { l: usize, n: usize, diff: f64 },

    #[error("window too short: {span} < 3 Rabi periods ({period})")]
    WindowTooShort { span: f64, period: f64 },

    #[error("trajectory too short for requested (r = {r}, t = {t})")]
    TrajectoryTooShort { r: f64, t: f64 },

    #[error("missed root suspected near k = {0}")]
    MissedRoot(f64),

    #[error("step-size collapse at t = {0}")]
    StepCollapse(f64),

    #[error("tail not converged: estimated truncation error {0:e}")]
    TailNotConverged(f64),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

use num_complex::Complex64;
use thiserror::Error;

/// Every failure the laboratory can report.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("rank mismatch: {0}")]
    RankMismatch(&'static str),

    #[error("unknown catalog entry `{0}`")]
    UnknownCatalog(String),

    #[error("invalid parameters for `{name}`: {reason}")]
    InvalidParams { name: String, reason: String },

    #[error("Lamé coefficients are not elliptic (mu = {mu}, lambda = {lambda})")]
    NotElliptic { mu: f64, lambda: f64 },

    #[error("not a gradient field (relative projector residual {0:e})")]
    NotGradient(f64),

    #[error("undefined quotient: the test function is zero")]
    ZeroField,

    #[error("complex field rejected: {0}")]
    ComplexField(&'static str),

    #[error("invalid pair: relative PDE residual {0:e}")]
    InvalidPair(f64),

    #[error("frequency k = {k} outside the admissible branch: {reason}")]
    Branch { k: Complex64, reason: &'static str },

    #[error("resonant frequency k = {k}: torus mode {mode:?} of the {wave} wave (estimated condition {condition:e})")]
    Resonant {
        k: Complex64,
        mode: Vec<i64>,
        wave: &'static str,
        condition: f64,
    },

    #[error("no convergence after {iterations} iterations (achieved residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("empty sweep: all {0} frequencies were resonant")]
    EmptySweep(usize),

    #[error("dense eigensolver failed: {0}")]
    Eigensolver(String),
}

pub type Result<T> = std::result::Result<T, Error>;

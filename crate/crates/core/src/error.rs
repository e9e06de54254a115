use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid representation parameter: {0}")]
    InvalidParam(String),

    #[error("basis index {k} is not in the index set (lowest index {lowest})")]
    InvalidIndex { k: i64, lowest: i64 },

    #[error("invalid index window [{lo}, {hi}]")]
    InvalidWindow { lo: i64, hi: i64 },

    #[error("operands belong to different representations")]
    ParamMismatch,

    #[error("axis {axis} out of range for a rank-{rank} tensor")]
    InvalidAxis { axis: usize, rank: usize },

    #[error("factor {axis} violates the accumulation gate: |nu| = {abs_nu} lies in (0, {eps0})")]
    AssumptionGate { axis: usize, abs_nu: f64, eps0: f64 },

    #[error("factor {axis} violates the spectral-gap gate: |nu| = {abs_nu} > {nu0}")]
    SpectralGapGate { axis: usize, abs_nu: f64, nu0: f64 },

    #[error("factor {axis} is the trivial representation")]
    TrivialFactor { axis: usize },

    #[error("invalid form degree {degree} for an R^{dim} action: {reason}")]
    InvalidDegree {
        degree: usize,
        dim: usize,
        reason: &'static str,
    },

    #[error("order sum diverges for t = {t} (needs t > {threshold})")]
    Divergent { t: f64, threshold: f64 },

    #[error("order sum tail bound {tail:e} exceeds 1% of head {head:e}")]
    TailNotConverged { head: f64, tail: f64 },

    #[error("input is not in the kernel of the invariant distributions (defect {defect:e}, allowed {allowed:e})")]
    NotInKernel { defect: f64, allowed: f64 },

    #[error("form is not closed (defect {defect:e}, allowed {allowed:e})")]
    NotClosed { defect: f64, allowed: f64 },

    #[error("degree-zero correction does not vanish (defect {defect:e}, allowed {allowed:e})")]
    ThetaNotVanishing { defect: f64, allowed: f64 },

    #[error("solver did not converge: {0}")]
    NoConvergence(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("schema violation: {0}")]
    Schema(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code used by the command line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::NotInKernel { .. } | Error::NotClosed { .. } => 3,
            Error::NoConvergence(_)
            | Error::ThetaNotVanishing { .. }
            | Error::TailNotConverged { .. } => 4,
            _ => 1,
        }
    }
}

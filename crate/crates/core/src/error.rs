use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A field of the source description failed validation. `field` is a
    /// JSON-style path such as `sigma_n_sq[2]`.
    #[error("invalid source spec at `{field}`: {reason}")]
    InvalidSpec { field: String, reason: String },

    #[error("invalid argument `{name}`: {reason}")]
    InvalidArgument { name: &'static str, reason: String },

    /// The g-recursion hit `1 - sigma_Z^2 [.]^+ <= 0` while producing level `level + 1`.
    #[error("g-recursion pole while computing g_{} (denominator {denominator:e})", level + 1)]
    GPole { level: usize, denominator: f64 },

    /// `g_0(D, R_0)` is at or above the supremum of `f_0`; no helper rates reach the target.
    #[error("infeasible budget: g_0 = {g0} is not below sup f_0 = {f0_sup}")]
    Infeasible { g0: f64, f0_sup: f64 },

    #[error("alpha vector infeasible at index {index}: {reason}")]
    InfeasibleAlpha { index: usize, reason: String },

    #[error("variance-ratio condition for the parametric solution does not hold (level {level})")]
    VarianceRatioFailed { level: usize },

    #[error("target {target} outside the parametric range [{lo}, {hi}]")]
    OmegaOutOfRange { target: f64, lo: f64, hi: f64 },

    #[error("spec is not CEO-shaped: {0}")]
    NotCeo(String),

    #[error("singular conditional covariance in block `{block}`")]
    Singular { block: String },

    #[error("too many helpers for exhaustive subset tables: L = {0}")]
    TooLarge(usize),

    #[error("internal consistency: {0}")]
    Consistency(String),
}

impl Error {
    pub(crate) fn arg(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidArgument {
            name,
            reason: reason.into(),
        }
    }
}

use thiserror::Error;

/// Errors raised by the numerical core.
///
/// Invalid inputs (`Domain`, `InvalidParameter`, `Geometry`, `GridMismatch`)
/// are separated from violated numerical preconditions (everything else) by
/// [`Error::is_numerical`]; the CLI maps the two onto different exit codes.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error in {func}: {detail}")]
    Domain { func: &'static str, detail: String },

    #[error("overflow in {func}: |x| = {x} exceeds the representable range")]
    Overflow { func: &'static str, x: f64 },

    #[error("non-finite value during evaluation: {0}")]
    Evaluation(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("invalid parameter `{name}`: {detail}")]
    InvalidParameter { name: &'static str, detail: String },

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error(
        "aliasing: adjacent-sample phase step {phase_step:.4} rad exceeds pi \
         (source spacing {spacing:.6e} m, max sin(angle) {max_sin:.6e}, source extent {extent:.6e} m)"
    )]
    Aliasing {
        phase_step: f64,
        spacing: f64,
        max_sin: f64,
        extent: f64,
    },

    #[error("regime error: Fresnel number {fresnel_number:.4e} is not below {limit}")]
    Regime { fresnel_number: f64, limit: f64 },

    #[error("coverage error: estimated tail fraction {tail_fraction:.4e} exceeds {limit}")]
    Coverage { tail_fraction: f64, limit: f64 },

    #[error("mask coverage error: only {covered:.4} of the weight lies on unmasked samples (need {required})")]
    MaskCoverage { covered: f64, required: f64 },

    #[error("margin error: {0}")]
    Margin(String),

    #[error("smoothness error: {0}")]
    Smoothness(String),
}

impl Error {
    pub(crate) fn domain(func: &'static str, detail: impl Into<String>) -> Self {
        Error::Domain {
            func,
            detail: detail.into(),
        }
    }

    pub(crate) fn param(name: &'static str, detail: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            detail: detail.into(),
        }
    }

    /// True for errors that come from a violated numerical precondition
    /// rather than a malformed input.
    pub fn is_numerical(&self) -> bool {
        !matches!(
            self,
            Error::Domain { .. }
                | Error::InvalidParameter { .. }
                | Error::Geometry(_)
                | Error::GridMismatch(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

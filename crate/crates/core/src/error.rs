use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid audio buffer: {0}")]
    InvalidBuffer(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("insufficient samples: need at least {needed}, got {got}")]
    InsufficientSamples { needed: usize, got: usize },

    #[error("window does not satisfy COLA at hop {hop} (ripple {ripple:.3e})")]
    NotCola { hop: usize, ripple: f64 },

    #[error("empty kernel")]
    EmptyKernel,

    #[error("delay of {delay_samples:.3} samples exceeds signal length {len}")]
    DelayTooLong { delay_samples: f64, len: usize },

    #[error("sample-rate mismatch: {0} Hz vs {1} Hz")]
    SampleRateMismatch(u32, u32),

    #[error("empty target signal")]
    EmptyTarget,

    #[error("no frames")]
    NoFrames,

    #[error("degenerate covariance; increase loading (bin {bin})")]
    DegenerateCovariance { bin: usize },

    #[error("step size too large: adaptive filter diverged at block {block}")]
    Diverged { block: usize },

    #[error("macro-block {rows}x{cols} incompatible with H = {h}")]
    IncompatibleMacroBlock { rows: usize, cols: usize, h: u32 },

    #[error("zero reference signal")]
    ZeroReference,

    #[error("stage is not linear: superposition residual {residual:.3e}")]
    NotLinear { residual: f64 },

    #[error("all {0} filter-length candidates failed")]
    AllCandidatesFailed(usize),
}

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("unknown dimension tag `{0}`")]
    UnknownDimension(String),

    #[error("non-finite sample at index {index} ({value})")]
    NonFinite { index: usize, value: f64 },

    #[error("packet component {index}: mean wavenumber {k_center:.6} is only {margin:.3} momentum spreads above zero (need {required})")]
    PositivityMargin {
        index: usize,
        k_center: f64,
        margin: f64,
        required: f64,
    },

    #[error("grid too coarse: {0}")]
    Resolution(String),

    #[error("packet not normalized: norm = {0}")]
    Normalization(f64),

    #[error("truncation leakage: |amplitude| at grid endpoint is {ratio:.3e} of the maximum")]
    Leakage { ratio: f64 },

    #[error("({x}, {t}) outside the aliasing-safe window: at this t, x must lie in [{x_lo}, {x_hi}] and |t - {t_center}| must stay below {t_half_width}")]
    OutOfRange {
        x: f64,
        t: f64,
        x_lo: f64,
        x_hi: f64,
        t_center: f64,
        t_half_width: f64,
    },

    #[error("time grid does not cover the passage: endpoint density is {ratio:.3e} of the peak")]
    Coverage { ratio: f64 },

    #[error("scattering denominator vanishes (|D| = {magnitude:.3e}) at k = {k}")]
    Singular { k: f64, magnitude: f64 },

    #[error("cannot normalize a rate with total {0}")]
    ZeroTotal(f64),

    #[error("unsupported deconvolution mode: {0}")]
    UnsupportedMode(String),

    #[error("series support reaches the window edge ({ratio:.3e} of peak); circular deconvolution would wrap around")]
    WrapAround { ratio: f64 },

    #[error("stability precondition violated: {0}")]
    Stability(String),

    #[error("wave function reached the domain boundary at t = {t} (|psi| = {ratio:.3e} of peak)")]
    BoundaryContamination { t: f64, ratio: f64 },

    #[error("configuration: {}", .0.join("; "))]
    Config(Vec<String>),

    #[error("io: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

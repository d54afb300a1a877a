use alloc::string::String;

/// Failure modes shared by every module.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numeric domain error: {0}")]
    NumericDomain(String),
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("divergence at step {step} (t = {t}): L2 mass grew by factor {growth:.3e}")]
    Divergence { step: usize, t: f64, growth: f64 },
    #[error("weight unresolvable: boundary mass fraction {fraction:.3e} exceeds {limit:.1e}")]
    WeightUnresolvable { fraction: f64, limit: f64 },
    #[error("coverage error: {0}")]
    Coverage(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("resolution error: {what} needs at least {required} samples, got {actual}")]
    Resolution {
        what: String,
        required: usize,
        actual: usize,
    },
    #[error("fit domain error: {0}")]
    FitDomain(String),
    #[error("sample outside region: {0}")]
    Region(String),
}

pub type Result<T> = core::result::Result<T, Error>;

macro_rules! bail {
    ($variant:ident, $($arg:tt)*) => {
        return Err($crate::Error::$variant(alloc::format!($($arg)*)))
    };
}
pub(crate) use bail;

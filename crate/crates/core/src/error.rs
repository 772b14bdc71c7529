use std::path::PathBuf;

/// Errors raised by chart geometry, curve families and the modulus machinery.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A point fell outside the chart domain or the domain of a mapping.
    #[error("domain error: {0}")]
    Domain(String),

    /// An operation was called with arguments that violate its contract.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// The modulus program is only solved for 1 < p < inf.
    #[error("unsupported exponent p = {0} (require p > 1)")]
    UnsupportedExponent(f64),

    /// Fast marching never reached the target cell.
    #[error("target unreachable from source on the grid")]
    Unreachable,

    #[error("invalid eta profile: {0}")]
    InvalidProfile(String),

    #[error("minorization certificate missing or invalid: {0}")]
    Certificate(String),

    #[error("psi normalization infeasible: {0}")]
    PsiNormalization(String),

    #[error("continua intersect: {0}")]
    Intersecting(String),

    #[error("expression error in `{expr}`: {msg}")]
    Expression { expr: String, msg: String },

    #[error("config error: {0}")]
    Config(String),

    #[error("malformed grid file {path}: {msg}")]
    GridFile { path: PathBuf, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

macro_rules! ensure {
    ($cond:expr, $variant:ident, $($arg:tt)+) => {
        if !$cond {
            return Err($crate::error::Error::$variant(format!($($arg)+)));
        }
    };
}
pub(crate) use ensure;

use alloc::string::String;
use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

/// Failure modes shared by every module.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Dimensions, horizons or path lengths do not line up.
    Shape(String),
    /// A parameter is outside its admissible range.
    Domain(String),
    /// A documented precondition of an operation does not hold.
    Contract(String),
    /// A size cap would be exceeded.
    Resource(String),
    /// An iterative numerical routine failed.
    Numeric(String),
    /// The input carries no usable information (all-zero gaps, collapsed boxes).
    Degenerate(String),
    /// The contraction premise of a fixed-point theorem is not met.
    NonContraction { c_hat: f64 },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Shape(m) => write!(f, "shape error: {m}"),
            Error::Domain(m) => write!(f, "domain error: {m}"),
            Error::Contract(m) => write!(f, "contract violation: {m}"),
            Error::Resource(m) => write!(f, "resource error: {m}"),
            Error::Numeric(m) => write!(f, "numeric error: {m}"),
            Error::Degenerate(m) => write!(f, "degenerate input: {m}"),
            Error::NonContraction { c_hat } => write!(
                f,
                "system is not certified stochastically contractive (c_hat = {c_hat} >= 1)"
            ),
        }
    }
}

impl core::error::Error for Error {}

macro_rules! bail {
    ($kind:ident, $($arg:tt)*) => {
        return Err($crate::error::Error::$kind(alloc::format!($($arg)*)))
    };
}
pub(crate) use bail;

use core::fmt;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of a special function.
    Domain { what: &'static str, value: f64 },
    /// Invalid Zernike double index.
    InvalidIndex { n: i64, m: i64 },
    /// A coefficient index fell outside its defined range.
    IndexRange { what: &'static str },
    /// Duplicate Zernike index in an expansion.
    DuplicateIndex { n: u32, m: i32 },
    /// Sine-type Zernike term passed to an ENZ evaluator.
    SineTerm { n: u32, m: i32 },
    /// Defocus value outside the range supported by the power-Bessel series.
    DefocusOutOfRange { f: f64, limit: f64 },
    /// The model carries more than one shape parameter.
    NonUniformShape,
    /// A parameter violates its invariant.
    InvalidParameter { name: &'static str, reason: &'static str },
    /// Sampling produced no points inside the pupil.
    EmptySampling,
    /// The unregularized least-squares system is numerically singular.
    IllConditioned { rcond: f64 },
    /// FFT size is not a power of two.
    NotPowerOfTwo { size: usize },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Domain { what, value } => write!(f, "{what}: argument {value} outside the domain"),
            Error::InvalidIndex { n, m } => {
                write!(f, "invalid Zernike index (n={n}, m={m}): need n >= 0, |m| <= n, n - m even")
            }
            Error::IndexRange { what } => write!(f, "index out of range for {what}"),
            Error::DuplicateIndex { n, m } => write!(f, "duplicate Zernike index (n={n}, m={m})"),
            Error::SineTerm { n, m } => write!(
                f,
                "Zernike term (n={n}, m={m}) is sine-type; ENZ formulas apply to m >= 0 only, use the GRBF engine for asymmetric pupils"
            ),
            Error::DefocusOutOfRange { f: d, limit } => write!(
                f,
                "defocus f={d} outside the power-Bessel range |f| <= {limit}; use enz-bb or enz-ebb"
            ),
            Error::NonUniformShape => write!(f, "GRBF engine requires one shape parameter for all centers"),
            Error::InvalidParameter { name, reason } => write!(f, "invalid parameter {name}: {reason}"),
            Error::EmptySampling => write!(f, "sampling grid has no points inside the unit disk"),
            Error::IllConditioned { rcond } => write!(
                f,
                "least-squares system is singular (rcond ~ {rcond:e}); enable Tikhonov regularization"
            ),
            Error::NotPowerOfTwo { size } => write!(f, "FFT size {size} is not a power of two"),
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;

//! Application errors carrying the process exit code.

use std::fmt;

/// Process exit codes.
pub mod exit {
    /// Output could not be written.
    pub const IO: u8 = 1;
    /// Malformed input, invalid flags or an empty defocus list.
    pub const INPUT: u8 = 2;
    /// The least-squares solve failed.
    pub const SOLVER: u8 = 3;
    /// The model file does not fit the requested engine.
    pub const MISMATCH: u8 = 4;
    /// Defocus outside the power-Bessel range.
    pub const RANGE: u8 = 5;
    /// A comparison exceeded `--tol`.
    pub const TOLERANCE: u8 = 6;
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AppError {
    pub code: u8,
    pub message: String,
}

impl AppError {
    pub fn new(code: u8, message: impl Into<String>) -> Self {
        AppError { code, message: message.into() }
    }

    pub fn input(message: impl Into<String>) -> Self {
        Self::new(exit::INPUT, message)
    }

    pub fn mismatch(message: impl Into<String>) -> Self {
        Self::new(exit::MISMATCH, message)
    }

    pub fn io(path: &std::path::Path, err: std::io::Error) -> Self {
        Self::new(exit::IO, format!("{}: {err}", path.display()))
    }
}

impl fmt::Display for AppError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for AppError {}

impl From<diffract_core::Error> for AppError {
    fn from(e: diffract_core::Error) -> Self {
        use diffract_core::Error as E;
        let code = match e {
            E::IllConditioned { .. } => exit::SOLVER,
            E::SineTerm { .. } | E::NonUniformShape => exit::MISMATCH,
            E::DefocusOutOfRange { .. } => exit::RANGE,
            _ => exit::INPUT,
        };
        AppError::new(code, e.to_string())
    }
}

pub type AppResult<T> = Result<T, AppError>;

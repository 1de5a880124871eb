//! Std companion to `diffract-core`: file formats, rayon drivers, model
//! fitting helpers and the benchmark harness behind the `diffract` binary.

pub mod bench;
pub mod engine;
pub mod error;
pub mod fitting;
pub mod io;

pub use error::{AppError, AppResult};

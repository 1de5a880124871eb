//! Gaussian radial basis, extended Nijboer-Zernike, FFT and quadrature
//! evaluation of scalar diffraction integrals over a circular pupil.

#![no_std]
// `!(x > 0.0)` style checks deliberately reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(any(test, feature = "std"))]
extern crate std;

pub mod error;
pub mod linalg;
pub mod specfun;
pub mod pupil;
pub mod rbf_fit;
pub mod zernike;
pub mod field;
pub mod oracle;
pub mod grbf;
pub mod enz;
pub mod dft;

pub use error::{Error, Result};

/// Double-precision complex number used throughout the crate.
pub type C64 = num_complex::Complex<f64>;

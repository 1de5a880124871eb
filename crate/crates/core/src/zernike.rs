//! Zernike polynomials with the orthonormal normalization
//! `N_n^m = sqrt((2 - delta_{m0})(n + 1))` under the inner product
//! `(1/pi) * integral over the unit disk`.

use alloc::vec::Vec;
use core::cmp::Ordering;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::specfun::{factorial, ln_factorial};

/// Double index `(n, m)` with `|m| <= n` and `n - m` even.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ZernikeIndex {
    n: u32,
    m: i32,
}

impl ZernikeIndex {
    pub fn new(n: i64, m: i64) -> Result<Self> {
        if n < 0 || m.abs() > n || (n - m).rem_euclid(2) != 0 || n > i32::MAX as i64 {
            return Err(Error::InvalidIndex { n, m });
        }
        Ok(ZernikeIndex { n: n as u32, m: m as i32 })
    }

    pub const fn n(self) -> u32 {
        self.n
    }

    pub const fn m(self) -> i32 {
        self.m
    }

    pub fn abs_m(self) -> u32 {
        self.m.unsigned_abs()
    }

    pub fn is_cosine(self) -> bool {
        self.m >= 0
    }

    pub fn normalization(self) -> f64 {
        let weight = if self.m == 0 { 1.0 } else { 2.0 };
        (weight * (self.n as f64 + 1.0)).sqrt()
    }
}

impl Ord for ZernikeIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.n, self.m).cmp(&(other.n, other.m))
    }
}

impl PartialOrd for ZernikeIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// All valid indices with `n <= order`, `n` ascending then `m` ascending.
pub fn enumerate_up_to(order: u32) -> Vec<ZernikeIndex> {
    let mut out = Vec::with_capacity(((order + 1) * (order + 2) / 2) as usize);
    for n in 0..=order {
        let mut m = -(n as i32);
        while m <= n as i32 {
            out.push(ZernikeIndex { n, m });
            m += 2;
        }
    }
    out
}

/// The first `count` cosine-type (`m >= 0`) indices in canonical order.
pub fn cosine_indices(count: usize) -> Vec<ZernikeIndex> {
    let mut out = Vec::with_capacity(count);
    let mut n = 0u32;
    while out.len() < count {
        let mut m = (n % 2) as i32;
        while m <= n as i32 && out.len() < count {
            out.push(ZernikeIndex { n, m });
            m += 2;
        }
        n += 1;
    }
    out
}

fn exact_factorial(k: u32) -> f64 {
    // exact in double through 22!
    factorial(k)
}

fn radial_coefficient(n: u32, abs_m: u32, s: u32) -> f64 {
    let a = n - s;
    let b = (n + abs_m) / 2 - s;
    let c = (n - abs_m) / 2 - s;
    let magnitude = if n <= 20 {
        exact_factorial(a) / (exact_factorial(s) * exact_factorial(b) * exact_factorial(c))
    } else {
        (ln_factorial(a) - ln_factorial(s) - ln_factorial(b) - ln_factorial(c)).exp()
    };
    if s.is_multiple_of(2) {
        magnitude
    } else {
        -magnitude
    }
}

fn check_radial(n: u32, abs_m: u32) -> Result<()> {
    if abs_m > n || !(n - abs_m).is_multiple_of(2) {
        return Err(Error::InvalidIndex { n: n as i64, m: abs_m as i64 });
    }
    Ok(())
}

/// `R_n^{|m|}(rho)` by the explicit alternating sum.
pub fn radial(n: u32, abs_m: u32, rho: f64) -> Result<f64> {
    check_radial(n, abs_m)?;
    Ok(RadialPoly::new_unchecked(n, abs_m).eval(rho))
}

/// Precomputed coefficients of one radial polynomial, evaluated by Horner's
/// rule in `rho^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialPoly {
    abs_m: u32,
    // coefficient of rho^(|m| + 2i), i ascending
    coeffs: Vec<f64>,
}

impl RadialPoly {
    pub fn new(n: u32, abs_m: u32) -> Result<Self> {
        check_radial(n, abs_m)?;
        Ok(Self::new_unchecked(n, abs_m))
    }

    fn new_unchecked(n: u32, abs_m: u32) -> Self {
        let p = (n - abs_m) / 2;
        // power rho^(n - 2s) = rho^(|m| + 2(p - s))
        let mut coeffs = alloc::vec![0.0; p as usize + 1];
        for s in 0..=p {
            coeffs[(p - s) as usize] = radial_coefficient(n, abs_m, s);
        }
        RadialPoly { abs_m, coeffs }
    }

    pub fn eval(&self, rho: f64) -> f64 {
        let r2 = rho * rho;
        let mut acc = 0.0;
        for &c in self.coeffs.iter().rev() {
            acc = acc * r2 + c;
        }
        acc * rho.powi(self.abs_m as i32)
    }
}

/// `Z_n^m(rho, theta)`.
pub fn evaluate(idx: ZernikeIndex, rho: f64, theta: f64) -> f64 {
    let r = RadialPoly::new_unchecked(idx.n, idx.abs_m()).eval(rho);
    idx.normalization() * r * angular(idx, theta)
}

fn angular(idx: ZernikeIndex, theta: f64) -> f64 {
    let am = idx.abs_m() as f64;
    if idx.m >= 0 {
        (am * theta).cos()
    } else {
        (am * theta).sin()
    }
}

/// Zernike term with cached radial coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct ZernikeTerm {
    pub index: ZernikeIndex,
    radial: RadialPoly,
    norm: f64,
}

impl ZernikeTerm {
    pub fn new(index: ZernikeIndex) -> Self {
        ZernikeTerm {
            index,
            radial: RadialPoly::new_unchecked(index.n, index.abs_m()),
            norm: index.normalization(),
        }
    }

    pub fn eval(&self, rho: f64, theta: f64) -> f64 {
        self.norm * self.radial.eval(rho) * angular(self.index, theta)
    }
}

/// Linear combination `sum c_n^m Z_n^m` with pairwise distinct indices kept in
/// canonical order. The coefficient type is real for wavefronts and complex
/// for pupil expansions.
#[derive(Debug, Clone, PartialEq)]
pub struct ZernikeExpansion<T> {
    terms: Vec<(ZernikeIndex, T)>,
}

impl<T> Default for ZernikeExpansion<T> {
    fn default() -> Self {
        ZernikeExpansion { terms: Vec::new() }
    }
}

impl<T> ZernikeExpansion<T> {
    pub fn new(mut terms: Vec<(ZernikeIndex, T)>) -> Result<Self> {
        terms.sort_by_key(|a| a.0);
        for pair in terms.windows(2) {
            if pair[0].0 == pair[1].0 {
                return Err(Error::DuplicateIndex { n: pair[0].0.n, m: pair[0].0.m });
            }
        }
        Ok(ZernikeExpansion { terms })
    }

    pub fn terms(&self) -> &[(ZernikeIndex, T)] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }
}

impl ZernikeExpansion<f64> {
    pub fn evaluate(&self, rho: f64, theta: f64) -> f64 {
        self.terms.iter().map(|&(idx, c)| c * evaluate(idx, rho, theta)).sum()
    }
}

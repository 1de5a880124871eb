//! Evaluation points, defocus vectors and the resulting field matrices.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::C64;

/// Image-plane point in polar form with its Cartesian shadow.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalPoint {
    pub r: f64,
    pub phi: f64,
    pub x: f64,
    pub y: f64,
}

impl EvalPoint {
    pub fn polar(r: f64, phi: f64) -> Self {
        let (s, c) = phi.sin_cos();
        EvalPoint { r, phi, x: r * c, y: r * s }
    }

    pub fn cartesian(x: f64, y: f64) -> Self {
        EvalPoint { r: x.hypot(y), phi: y.atan2(x), x, y }
    }
}

/// `J` evaluation points.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EvalGrid {
    points: Vec<EvalPoint>,
}

impl EvalGrid {
    pub fn new(points: Vec<EvalPoint>) -> Result<Self> {
        if points.iter().any(|p| !(p.r >= 0.0) || !p.phi.is_finite()) {
            return Err(Error::InvalidParameter { name: "grid", reason: "radii must be finite and non-negative" });
        }
        Ok(EvalGrid { points })
    }

    pub fn from_polar(points: &[(f64, f64)]) -> Result<Self> {
        Self::new(points.iter().map(|&(r, phi)| EvalPoint::polar(r, phi)).collect())
    }

    /// `n x n` Cartesian lattice over `[-half, half]^2`, row by row (`y`
    /// outer), endpoints included.
    pub fn cartesian_square(n: usize, half_width: f64) -> Result<Self> {
        if n < 2 || !(half_width > 0.0) {
            return Err(Error::InvalidParameter { name: "grid", reason: "need n >= 2 and positive width" });
        }
        let c = |i: usize| -half_width + 2.0 * half_width * i as f64 / (n - 1) as f64;
        let mut pts = Vec::with_capacity(n * n);
        for iy in 0..n {
            for ix in 0..n {
                pts.push(EvalPoint::cartesian(c(ix), c(iy)));
            }
        }
        Ok(EvalGrid { points: pts })
    }

    /// Points along the diameter through the origin at angle `phi`, from
    /// `-r_max` to `r_max`; negative abscissae are stored as `phi + pi`.
    pub fn diameter(n: usize, r_max: f64, phi: f64) -> Result<Self> {
        if n < 2 || !(r_max > 0.0) {
            return Err(Error::InvalidParameter { name: "grid", reason: "need n >= 2 and positive radius" });
        }
        let pts = (0..n)
            .map(|i| {
                let t = -r_max + 2.0 * r_max * i as f64 / (n - 1) as f64;
                if t < 0.0 {
                    EvalPoint::polar(-t, phi + PI)
                } else {
                    EvalPoint::polar(t, phi)
                }
            })
            .collect();
        Ok(EvalGrid { points: pts })
    }

    /// `n` radii from 0 to `r_max` at a fixed angle.
    pub fn radial_line(n: usize, r_max: f64, phi: f64) -> Result<Self> {
        if n < 2 || !(r_max >= 0.0) {
            return Err(Error::InvalidParameter { name: "grid", reason: "need n >= 2 and non-negative radius" });
        }
        Ok(EvalGrid {
            points: (0..n).map(|i| EvalPoint::polar(r_max * i as f64 / (n - 1) as f64, phi)).collect(),
        })
    }

    pub fn points(&self) -> &[EvalPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn max_radius(&self) -> f64 {
        self.points.iter().fold(0.0, |m, p| m.max(p.r))
    }
}

/// Defocus values `f_1..f_M`.
#[derive(Debug, Clone, PartialEq)]
pub struct DefocusVector {
    values: Vec<f64>,
}

impl DefocusVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidParameter { name: "defocus", reason: "at least one value required" });
        }
        if values.iter().any(|f| !f.is_finite()) {
            return Err(Error::InvalidParameter { name: "defocus", reason: "values must be finite" });
        }
        Ok(DefocusVector { values })
    }

    pub fn single(f: f64) -> Result<Self> {
        Self::new(vec![f])
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, f| m.max(f.abs()))
    }
}

/// Complex field `U(r_j, phi_j; f_m)`, row `m` per defocus value.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl FieldMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        FieldMatrix { rows, cols, data: vec![C64::new(0.0, 0.0); rows * cols] }
    }

    pub fn from_rows(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::InvalidParameter { name: "field", reason: "data length must equal rows * cols" });
        }
        Ok(FieldMatrix { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, m: usize, j: usize) -> C64 {
        self.data[m * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, m: usize, j: usize, v: C64) {
        self.data[m * self.cols + j] = v;
    }

    pub fn row(&self, m: usize) -> &[C64] {
        &self.data[m * self.cols..(m + 1) * self.cols]
    }

    pub fn row_mut(&mut self, m: usize) -> &mut [C64] {
        &mut self.data[m * self.cols..(m + 1) * self.cols]
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// `|U|^2`.
    pub fn psf(&self, m: usize, j: usize) -> f64 {
        self.get(m, j).norm_sqr()
    }

    /// PSF of row `m` divided by its maximum over the grid. An all-zero row
    /// stays zero.
    pub fn normalized_psf_row(&self, m: usize) -> Vec<f64> {
        let psf: Vec<f64> = self.row(m).iter().map(|z| z.norm_sqr()).collect();
        let peak = psf.iter().fold(0.0f64, |a, &b| a.max(b));
        if peak > 0.0 {
            psf.into_iter().map(|p| p / peak).collect()
        } else {
            psf
        }
    }

    pub fn scale(&mut self, k: C64) {
        for z in &mut self.data {
            *z *= k;
        }
    }

    /// Copies `block` (row-major, `rows x width`) into columns
    /// `start..start + width`.
    pub fn write_block(&mut self, start: usize, width: usize, block: &[C64]) {
        for m in 0..self.rows {
            let dst = &mut self.data[m * self.cols + start..m * self.cols + start + width];
            dst.copy_from_slice(&block[m * width..(m + 1) * width]);
        }
    }
}

/// Per-row maximum and mean absolute differences between two fields of the
/// same shape.
#[derive(Debug, Clone, PartialEq)]
pub struct RowDifference {
    pub max_abs: f64,
    pub mean_abs: f64,
}

pub fn field_difference(a: &FieldMatrix, b: &FieldMatrix) -> Result<Vec<RowDifference>> {
    if a.rows != b.rows || a.cols != b.cols {
        return Err(Error::InvalidParameter { name: "field", reason: "shapes differ" });
    }
    Ok((0..a.rows)
        .map(|m| {
            let d: Vec<f64> = a.row(m).iter().zip(b.row(m)).map(|(x, y)| (x - y).norm()).collect();
            row_stats(&d)
        })
        .collect())
}

/// Same as [`field_difference`] on normalized PSFs.
pub fn psf_difference(a: &FieldMatrix, b: &FieldMatrix) -> Result<Vec<RowDifference>> {
    if a.rows != b.rows || a.cols != b.cols {
        return Err(Error::InvalidParameter { name: "field", reason: "shapes differ" });
    }
    Ok((0..a.rows)
        .map(|m| {
            let (pa, pb) = (a.normalized_psf_row(m), b.normalized_psf_row(m));
            let d: Vec<f64> = pa.iter().zip(&pb).map(|(x, y)| (x - y).abs()).collect();
            row_stats(&d)
        })
        .collect())
}

fn row_stats(d: &[f64]) -> RowDifference {
    let max_abs = d.iter().fold(0.0f64, |a, &b| a.max(b));
    let mean_abs = if d.is_empty() { 0.0 } else { d.iter().sum::<f64>() / d.len() as f64 };
    RowDifference { max_abs, mean_abs }
}

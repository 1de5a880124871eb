//! FFT baseline: the defocused pupil is sampled on a padded Cartesian grid
//! and transformed with a radix-2 2D FFT.
//!
//! The kernel is `exp(+2 pi i (x u + y v))`, the sign of the diffraction
//! integral. In the usual convention this is the *inverse* transform; using
//! the forward sign conjugates the field.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::field::{DefocusVector, EvalGrid, FieldMatrix};
use crate::pupil::{AmplitudeMask, PupilSpec};
use crate::rbf_fit::GrbfModel;
use crate::C64;

pub const DEFAULT_GRID_SIZE: usize = 512;
pub const DEFAULT_PAD_FACTOR: f64 = 4.0;
pub const MIN_GRID_SIZE: usize = 128;
// sub-cells per axis when measuring the covered fraction of a rim cell
const COVERAGE_SUBDIV: usize = 16;

/// Radix-2 complex FFT with the `+` sign, unnormalized.
#[derive(Debug, Clone)]
pub struct Fft {
    n: usize,
    twiddles: Vec<C64>,
    rev: Vec<u32>,
}

impl Fft {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 || !n.is_power_of_two() {
            return Err(Error::NotPowerOfTwo { size: n });
        }
        let bits = n.trailing_zeros();
        let rev = (0..n as u32).map(|i| if bits == 0 { 0 } else { i.reverse_bits() >> (32 - bits) }).collect();
        let twiddles = (0..n / 2).map(|k| C64::from_polar(1.0, 2.0 * PI * k as f64 / n as f64)).collect();
        Ok(Fft { n, twiddles, rev })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// `a_k <- sum_j a_j exp(2 pi i j k / n)`.
    pub fn process(&self, a: &mut [C64]) {
        let n = self.n;
        debug_assert_eq!(a.len(), n);
        for i in 0..n {
            let j = self.rev[i] as usize;
            if i < j {
                a.swap(i, j);
            }
        }
        let mut len = 2;
        while len <= n {
            let half = len / 2;
            let stride = n / len;
            for start in (0..n).step_by(len) {
                for k in 0..half {
                    let w = self.twiddles[k * stride];
                    let u = a[start + k];
                    let v = a[start + k + half] * w;
                    a[start + k] = u + v;
                    a[start + k + half] = u - v;
                }
            }
            len <<= 1;
        }
    }

    /// In-place 2D transform of a row-major `n x n` array.
    pub fn process_2d(&self, a: &mut [C64]) {
        let n = self.n;
        for row in a.chunks_mut(n) {
            self.process(row);
        }
        let mut col = vec![C64::new(0.0, 0.0); n];
        for c in 0..n {
            for r in 0..n {
                col[r] = a[r * n + c];
            }
            self.process(&mut col);
            for r in 0..n {
                a[r * n + c] = col[r];
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DftParams {
    pub grid_size: usize,
    /// Side of the sampled square over the pupil diameter.
    pub pad_factor: f64,
}

impl Default for DftParams {
    fn default() -> Self {
        DftParams { grid_size: DEFAULT_GRID_SIZE, pad_factor: DEFAULT_PAD_FACTOR }
    }
}

impl DftParams {
    pub fn validate(&self) -> Result<()> {
        if !self.grid_size.is_power_of_two() {
            return Err(Error::NotPowerOfTwo { size: self.grid_size });
        }
        if self.grid_size < MIN_GRID_SIZE {
            return Err(Error::InvalidParameter { name: "grid_size", reason: "must be at least 128" });
        }
        if !(self.pad_factor >= 2.0) || !self.pad_factor.is_finite() {
            return Err(Error::InvalidParameter { name: "pad_factor", reason: "must be at least 2" });
        }
        Ok(())
    }

    /// Side length of the sampled square.
    pub fn side(&self) -> f64 {
        2.0 * self.pad_factor
    }

    pub fn cell(&self) -> f64 {
        self.side() / self.grid_size as f64
    }
}

/// Image-plane lattice of the transform output: bin `(i, k)` sits at
/// `x = (k - n/2) * spacing`, `y = (i - n/2) * spacing`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrequencyGrid {
    pub size: usize,
    pub spacing: f64,
}

impl FrequencyGrid {
    pub fn coordinate(&self, i: usize) -> f64 {
        (i as f64 - (self.size / 2) as f64) * self.spacing
    }

    pub fn max_coordinate(&self) -> f64 {
        self.coordinate(self.size - 1)
    }
}

/// One field plane per defocus value on the frequency grid, row-major with
/// `y` outer.
#[derive(Debug, Clone)]
pub struct DftField {
    pub grid: FrequencyGrid,
    planes: Vec<Vec<C64>>,
}

impl DftField {
    pub fn planes(&self) -> usize {
        self.planes.len()
    }

    pub fn plane(&self, m: usize) -> &[C64] {
        &self.planes[m]
    }

    /// Value at bin `(iy, ix)`.
    pub fn bin(&self, m: usize, iy: usize, ix: usize) -> C64 {
        self.planes[m][iy * self.grid.size + ix]
    }

    /// Bilinear interpolation at `(x, y)`; `None` outside the lattice.
    pub fn interpolate(&self, m: usize, x: f64, y: f64) -> Option<C64> {
        let n = self.grid.size;
        let h = (n / 2) as f64;
        let fx = x / self.grid.spacing + h;
        let fy = y / self.grid.spacing + h;
        if !(fx >= 0.0 && fy >= 0.0 && fx <= (n - 1) as f64 && fy <= (n - 1) as f64) {
            return None;
        }
        let ix = (fx.floor() as usize).min(n - 2);
        let iy = (fy.floor() as usize).min(n - 2);
        let (tx, ty) = (fx - ix as f64, fy - iy as f64);
        let p = &self.planes[m];
        let v00 = p[iy * n + ix];
        let v01 = p[iy * n + ix + 1];
        let v10 = p[(iy + 1) * n + ix];
        let v11 = p[(iy + 1) * n + ix + 1];
        Some((v00 * (1.0 - tx) + v01 * tx) * (1.0 - ty) + (v10 * (1.0 - tx) + v11 * tx) * ty)
    }

    /// Interpolated field at every grid point. Points outside the lattice
    /// are an error.
    pub fn sample(&self, grid: &EvalGrid) -> Result<FieldMatrix> {
        let mut out = FieldMatrix::zeros(self.planes.len(), grid.len());
        for m in 0..self.planes.len() {
            for (j, p) in grid.points().iter().enumerate() {
                let v = self.interpolate(m, p.x, p.y).ok_or(Error::InvalidParameter {
                    name: "grid",
                    reason: "evaluation point outside the FFT frequency range",
                })?;
                out.set(m, j, v);
            }
        }
        Ok(out)
    }
}

/// Covered fraction of every cell of the sampling lattice. Interior cells
/// are 1, exterior 0, rim cells are measured on a sub-grid.
pub fn coverage(mask: &AmplitudeMask, params: &DftParams) -> Vec<f64> {
    let n = params.grid_size;
    let dx = params.cell();
    let coord = |i: usize| (i as f64 - (n / 2) as f64) * dx;
    let mut out = vec![0.0; n * n];
    for iy in 0..n {
        let y = coord(iy);
        for ix in 0..n {
            let x = coord(ix);
            let corners = [(-0.5, -0.5), (0.5, -0.5), (-0.5, 0.5), (0.5, 0.5)]
                .iter()
                .filter(|&&(a, b)| mask.contains_xy(x + a * dx, y + b * dx))
                .count();
            out[iy * n + ix] = match corners {
                4 if mask.contains_xy(x, y) => 1.0,
                0 if !mask.contains_xy(x, y) && x.abs().max(y.abs()) > 1.5 => 0.0,
                _ => {
                    let s = COVERAGE_SUBDIV;
                    let mut hit = 0usize;
                    for a in 0..s {
                        for b in 0..s {
                            let sx = x + ((a as f64 + 0.5) / s as f64 - 0.5) * dx;
                            let sy = y + ((b as f64 + 0.5) / s as f64 - 0.5) * dx;
                            hit += mask.contains_xy(sx, sy) as usize;
                        }
                    }
                    hit as f64 / (s * s) as f64
                }
            };
        }
    }
    out
}

/// FFT field of an arbitrary pupil `pupil(x, y)` on the support `mask`.
/// `pupil` is only sampled where the coverage is positive and may be
/// evaluated slightly outside the support on rim cells.
pub fn compute_field_dft_fn<P: Fn(f64, f64) -> C64>(
    pupil: P,
    mask: &AmplitudeMask,
    defocus: &DefocusVector,
    params: &DftParams,
) -> Result<DftField> {
    params.validate()?;
    let n = params.grid_size;
    let fft = Fft::new(n)?;
    let dx = params.cell();
    let cov = coverage(mask, params);
    let coord = |i: usize| (i as f64 - (n / 2) as f64) * dx;
    // f-independent part
    let mut base = vec![C64::new(0.0, 0.0); n * n];
    for iy in 0..n {
        for ix in 0..n {
            let w = cov[iy * n + ix];
            if w > 0.0 {
                base[iy * n + ix] = pupil(coord(ix), coord(iy)) * w;
            }
        }
    }
    let scale = dx * dx / PI;
    let mut planes = Vec::with_capacity(defocus.len());
    for &f in defocus.values() {
        let mut a = vec![C64::new(0.0, 0.0); n * n];
        for iy in 0..n {
            let y = coord(iy);
            for ix in 0..n {
                let b = base[iy * n + ix];
                if b != C64::new(0.0, 0.0) {
                    let x = coord(ix);
                    a[iy * n + ix] = b * C64::from_polar(1.0, f * (x * x + y * y));
                }
            }
        }
        fft.process_2d(&mut a);
        planes.push(shift_and_scale(&a, n, scale));
    }
    Ok(DftField { grid: FrequencyGrid { size: n, spacing: 1.0 / params.side() }, planes })
}

// Output bin k corresponds to frequency k - n/2 after the shift; the sample
// origin at index n/2 contributes the factor (-1)^k per axis.
fn shift_and_scale(a: &[C64], n: usize, scale: f64) -> Vec<C64> {
    let h = n / 2;
    let mut out = vec![C64::new(0.0, 0.0); n * n];
    for iy in 0..n {
        let ky = (iy + h) % n;
        for ix in 0..n {
            let kx = (ix + h) % n;
            let sign = if (kx + ky).is_multiple_of(2) { scale } else { -scale };
            out[iy * n + ix] = a[ky * n + kx] * sign;
        }
    }
    out
}

/// FFT field of an analytic pupil specification.
pub fn compute_field_dft(spec: &PupilSpec, defocus: &DefocusVector, params: &DftParams) -> Result<DftField> {
    spec.validate()?;
    let e = spec.evaluator();
    compute_field_dft_fn(
        |x, y| e.phasor_unmasked(x.hypot(y), y.atan2(x)),
        &spec.mask,
        defocus,
        params,
    )
}

/// FFT field of a fitted Gaussian model on the unit disk.
pub fn compute_field_dft_model(model: &GrbfModel, defocus: &DefocusVector, params: &DftParams) -> Result<DftField> {
    compute_field_dft_fn(|x, y| model.value_xy(x, y), &AmplitudeMask::UnitDisk, defocus, params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specfun::{bessel_j, SeriesBudget};

    fn airy(r: f64) -> f64 {
        if r == 0.0 {
            1.0
        } else {
            bessel_j(1, 2.0 * PI * r, SeriesBudget::new(80).unwrap()) / (PI * r)
        }
    }

    fn naive_dft(a: &[C64]) -> Vec<C64> {
        let n = a.len();
        (0..n)
            .map(|k| {
                a.iter()
                    .enumerate()
                    .map(|(j, &x)| x * C64::from_polar(1.0, 2.0 * PI * (j * k % n) as f64 / n as f64))
                    .sum()
            })
            .collect()
    }

    #[test]
    fn fft_matches_naive_sum() {
        let a: Vec<C64> = (0..16).map(|i| C64::new((i as f64 * 0.7).sin(), (i as f64).cos() * 0.3)).collect();
        let mut b = a.clone();
        Fft::new(16).unwrap().process(&mut b);
        for (x, y) in b.iter().zip(naive_dft(&a)) {
            assert!((x - y).norm() < 1e-12);
        }
        assert!(matches!(Fft::new(12), Err(Error::NotPowerOfTwo { size: 12 })));
        let mut one = vec![C64::new(2.0, 1.0)];
        Fft::new(1).unwrap().process(&mut one);
        assert_eq!(one[0], C64::new(2.0, 1.0));
    }

    #[test]
    fn parseval_and_linearity() {
        let n = 32;
        let fft = Fft::new(n).unwrap();
        let a: Vec<C64> = (0..n * n).map(|i| C64::new(((i * 7) % 13) as f64 - 6.0, ((i * 3) % 5) as f64)).collect();
        let b: Vec<C64> = (0..n * n).map(|i| C64::new((i as f64 * 0.01).cos(), 0.0)).collect();
        let (mut fa, mut fb) = (a.clone(), b.clone());
        fft.process_2d(&mut fa);
        fft.process_2d(&mut fb);
        let ea: f64 = a.iter().map(|z| z.norm_sqr()).sum();
        let efa: f64 = fa.iter().map(|z| z.norm_sqr()).sum();
        assert!((efa - (n * n) as f64 * ea).abs() <= 1e-9 * efa);
        let mut sum: Vec<C64> = a.iter().zip(&b).map(|(x, y)| x * 2.0 + y).collect();
        fft.process_2d(&mut sum);
        for i in 0..n * n {
            assert!((sum[i] - (fa[i] * 2.0 + fb[i])).norm() < 1e-9);
        }
    }

    #[test]
    fn continuous_parseval_of_scaled_field() {
        let params = DftParams { grid_size: 128, pad_factor: 2.0 };
        let d = DefocusVector::single(1.0).unwrap();
        let out = compute_field_dft_fn(|x, _| C64::new(1.0 + x, 0.5), &AmplitudeMask::UnitDisk, &d, &params).unwrap();
        let cov = coverage(&AmplitudeMask::UnitDisk, &params);
        let n = params.grid_size;
        let dx = params.cell();
        let mut e_pupil = 0.0;
        for iy in 0..n {
            for ix in 0..n {
                let x = (ix as f64 - (n / 2) as f64) * dx;
                e_pupil += (C64::new(1.0 + x, 0.5) * cov[iy * n + ix]).norm_sqr() * dx * dx;
            }
        }
        // U carries 1/pi
        let du = out.grid.spacing;
        let e_field: f64 = out.plane(0).iter().map(|z| z.norm_sqr()).sum::<f64>() * du * du * PI * PI;
        assert!((e_field - e_pupil).abs() <= 1e-9 * e_pupil);
    }

    #[test]
    fn airy_and_normalization() {
        let d = DefocusVector::single(0.0).unwrap();
        let out = compute_field_dft(&PupilSpec::clear(), &d, &DftParams::default()).unwrap();
        let n = out.grid.size;
        assert!((out.bin(0, n / 2, n / 2) - C64::new(1.0, 0.0)).norm() < 1e-3);
        let mut worst: f64 = 0.0;
        for ix in n / 2..n {
            let x = out.grid.coordinate(ix);
            if x > 2.0 {
                break;
            }
            worst = worst.max((out.bin(0, n / 2, ix) - airy(x)).norm());
        }
        assert!(worst <= 2e-2, "{worst}");
        // conjugate symmetry for a real pupil at focus
        for (iy, ix) in [(n / 2 + 3, n / 2 + 5), (n / 2 - 7, n / 2 + 2)] {
            let mirror = out.bin(0, n - iy, n - ix);
            assert!((out.bin(0, iy, ix) - mirror.conj()).norm() < 1e-12);
        }
    }

    #[test]
    fn finer_grid_converges() {
        let d = DefocusVector::single(0.0).unwrap();
        let err = |size: usize| {
            let out = compute_field_dft(&PupilSpec::clear(), &d, &DftParams { grid_size: size, pad_factor: 4.0 }).unwrap();
            let n = out.grid.size;
            (n / 2..n)
                .take_while(|&ix| out.grid.coordinate(ix) <= 2.0)
                .map(|ix| (out.bin(0, n / 2, ix) - airy(out.grid.coordinate(ix))).norm())
                .fold(0.0, f64::max)
        };
        let (e256, e512) = (err(256), err(512));
        assert!(e256 >= 1.5 * e512, "{e256} {e512}");
    }

    #[test]
    fn zero_pupil_and_validation() {
        let d = DefocusVector::single(0.5).unwrap();
        let params = DftParams { grid_size: 128, pad_factor: 2.0 };
        let out = compute_field_dft_fn(|_, _| C64::new(0.0, 0.0), &AmplitudeMask::UnitDisk, &d, &params).unwrap();
        assert!(out.plane(0).iter().all(|z| *z == C64::new(0.0, 0.0)));
        assert!(DftParams { grid_size: 500, pad_factor: 4.0 }.validate().is_err());
        assert!(DftParams { grid_size: 64, pad_factor: 4.0 }.validate().is_err());
        assert!(DftParams { grid_size: 256, pad_factor: 1.5 }.validate().is_err());
    }

    #[test]
    fn interpolation_hits_bins_exactly() {
        let d = DefocusVector::single(PI).unwrap();
        let params = DftParams { grid_size: 128, pad_factor: 2.0 };
        let out = compute_field_dft(&PupilSpec::clear(), &d, &params).unwrap();
        let g = out.grid;
        let (x, y) = (g.coordinate(70), g.coordinate(60));
        assert!((out.interpolate(0, x, y).unwrap() - out.bin(0, 60, 70)).norm() < 1e-12);
        assert!(out.interpolate(0, 1e3, 0.0).is_none());
    }
}

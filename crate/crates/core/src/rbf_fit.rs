//! Gaussian RBF representation of a pupil and its regularized least-squares
//! fit. The same solver also produces Zernike expansions of sampled pupils.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::linalg::{back_substitute, dot, householder_qr, jacobi_svd, Mat};
use crate::pupil::PupilSamples;
use crate::zernike::{ZernikeExpansion, ZernikeIndex, ZernikeTerm};
use crate::C64;

/// Half-width of the square that holds the centers.
pub const CENTER_EXTENT: f64 = 1.2;
/// Shape parameter used when none is given.
pub const DEFAULT_LAMBDA: f64 = 16.0;

/// One Gaussian `exp(-lambda ((x - a)^2 + (y - b)^2))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Center {
    pub a: f64,
    pub b: f64,
    pub lambda: f64,
}

impl Center {
    pub fn from_polar(q: f64, alpha: f64, lambda: f64) -> Self {
        let (s, c) = alpha.sin_cos();
        Center { a: q * c, b: q * s, lambda }
    }

    pub fn q(&self) -> f64 {
        self.a.hypot(self.b)
    }

    pub fn alpha(&self) -> f64 {
        self.b.atan2(self.a)
    }

    pub fn eval_xy(&self, x: f64, y: f64) -> f64 {
        let (dx, dy) = (x - self.a, y - self.b);
        (-self.lambda * (dx * dx + dy * dy)).exp()
    }

    /// Same Gaussian through the polar form
    /// `exp(-lambda (q^2 + rho^2 - 2 rho q cos(theta - alpha)))`.
    pub fn eval_polar(&self, rho: f64, theta: f64) -> f64 {
        let q = self.q();
        (-self.lambda * (q * q + rho * rho - 2.0 * rho * q * (theta - self.alpha()).cos())).exp()
    }
}

/// Set of RBF centers.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CenterGrid {
    centers: Vec<Center>,
}

impl CenterGrid {
    pub fn new(centers: Vec<Center>) -> Result<Self> {
        let lim = CENTER_EXTENT * (1.0 + 1e-12);
        for c in &centers {
            if !(c.lambda > 0.0) {
                return Err(Error::InvalidParameter { name: "lambda", reason: "must be positive" });
            }
            if !(c.a.abs() <= lim && c.b.abs() <= lim) {
                return Err(Error::InvalidParameter { name: "centers", reason: "must lie in [-1.2, 1.2]^2" });
            }
        }
        Ok(CenterGrid { centers })
    }

    pub fn centers(&self) -> &[Center] {
        &self.centers
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    /// The common shape parameter, or an error if centers disagree. An empty
    /// grid has no shape and reports `None`.
    pub fn uniform_lambda(&self) -> Result<Option<f64>> {
        let Some(first) = self.centers.first() else { return Ok(None) };
        if self.centers.iter().any(|c| c.lambda != first.lambda) {
            return Err(Error::NonUniformShape);
        }
        Ok(Some(first.lambda))
    }
}

/// `side x side` equally spaced centers on `[-1.2, 1.2]^2`, row by row.
pub fn make_centers(side: usize, lambda: f64) -> Result<CenterGrid> {
    if side < 2 {
        return Err(Error::InvalidParameter { name: "side", reason: "must be at least 2" });
    }
    if !(lambda > 0.0) {
        return Err(Error::InvalidParameter { name: "lambda", reason: "must be positive" });
    }
    let step = 2.0 * CENTER_EXTENT / (side - 1) as f64;
    let coord = |i: usize| {
        // pin the last node so corners are exact
        if i == side - 1 {
            CENTER_EXTENT
        } else {
            -CENTER_EXTENT + step * i as f64
        }
    };
    let mut centers = Vec::with_capacity(side * side);
    for iy in 0..side {
        for ix in 0..side {
            centers.push(Center { a: coord(ix), b: coord(iy), lambda });
        }
    }
    CenterGrid::new(centers)
}

/// Outcome of a fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitReport {
    /// `sqrt(mean |P_j - model(x_j)|^2)` over the samples.
    pub rms_residual: f64,
    /// Tikhonov parameter `mu` actually used.
    pub regularization_parameter: f64,
    pub center_count: usize,
    pub sample_count: usize,
}

/// Fitted `P ~ c0 + sum c_k g_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct GrbfModel {
    pub grid: CenterGrid,
    pub coefficients: Vec<C64>,
    pub constant: C64,
}

impl GrbfModel {
    pub fn new(grid: CenterGrid, coefficients: Vec<C64>, constant: C64) -> Result<Self> {
        if grid.len() != coefficients.len() {
            return Err(Error::InvalidParameter { name: "coefficients", reason: "count must equal center count" });
        }
        Ok(GrbfModel { grid, coefficients, constant })
    }

    /// Constant model with no Gaussians.
    pub fn constant(c0: C64) -> Self {
        GrbfModel { grid: CenterGrid::default(), coefficients: Vec::new(), constant: c0 }
    }

    pub fn value_xy(&self, x: f64, y: f64) -> C64 {
        let mut acc = self.constant;
        for (c, k) in self.grid.centers.iter().zip(&self.coefficients) {
            acc += k * c.eval_xy(x, y);
        }
        acc
    }

    pub fn value(&self, rho: f64, theta: f64) -> C64 {
        let (s, c) = theta.sin_cos();
        self.value_xy(rho * c, rho * s)
    }

    /// Model with every coefficient (including the constant) multiplied by `k`.
    pub fn scaled(&self, k: C64) -> Self {
        GrbfModel {
            grid: self.grid.clone(),
            coefficients: self.coefficients.iter().map(|c| c * k).collect(),
            constant: self.constant * k,
        }
    }
}

/// `model_value` as a free function.
pub fn model_value(model: &GrbfModel, rho: f64, theta: f64) -> C64 {
    model.value(rho, theta)
}

/// How the Tikhonov parameter is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Regularization {
    /// Plain least squares; fails on a numerically singular system.
    None,
    /// Fixed `mu`.
    Fixed(f64),
    /// Morozov discrepancy principle: the `mu` whose residual RMS equals the
    /// given noise level.
    Discrepancy { noise_rms: f64 },
}

/// Noise floor assumed by the discrepancy principle for noise-free data.
pub const NOISE_FLOOR: f64 = 1e-6;

impl Default for Regularization {
    fn default() -> Self {
        Regularization::Discrepancy { noise_rms: NOISE_FLOOR }
    }
}

/// Expected RMS deviation of `exp(i (phi + k eps))` from its mean when `eps`
/// is `N(0, sigma^2)`: `sqrt(1 - exp(-(k sigma)^2))`.
pub fn phase_noise_rms(sigma: f64, phase_scale: f64) -> f64 {
    let v = phase_scale * sigma;
    (1.0 - (-v * v).exp()).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub regularization: Regularization,
    /// Subtract the sample mean as a constant term before solving.
    pub constant_term: bool,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions { regularization: Regularization::default(), constant_term: true }
    }
}

/// Below this reciprocal condition number an unregularized solve is refused.
pub const RCOND_LIMIT: f64 = 1e-12;

/// Regularized complex least squares `min |G c - b|^2 + mu^2 |c|^2` for a
/// real design matrix. Returns the coefficients and the `mu` used.
pub fn solve_regularized(g: &Mat, b: &[C64], reg: Regularization) -> Result<(Vec<C64>, f64)> {
    let (n, k) = (g.rows(), g.cols());
    if k == 0 {
        return Ok((Vec::new(), 0.0));
    }
    if n < k {
        return Err(Error::InvalidParameter { name: "samples", reason: "fewer samples than unknowns" });
    }
    let mut re: Vec<f64> = b.iter().map(|z| z.re).collect();
    let mut im: Vec<f64> = b.iter().map(|z| z.im).collect();
    let r = householder_qr(g.clone(), &mut [&mut re, &mut im]);
    let tail2 = dot(&re[k..], &re[k..]) + dot(&im[k..], &im[k..]);
    let (beta_re, beta_im) = (&re[..k], &im[..k]);

    let mu = match reg {
        Regularization::Fixed(mu) if mu < 0.0 || !mu.is_finite() => {
            return Err(Error::InvalidParameter { name: "mu", reason: "must be finite and non-negative" });
        }
        Regularization::Fixed(mu) if mu > 0.0 => mu,
        Regularization::None | Regularization::Fixed(_) => {
            let svd = jacobi_svd(&r);
            let smax = svd.s[0];
            let smin = *svd.s.last().unwrap();
            let rcond = if smax > 0.0 { smin / smax } else { 0.0 };
            if rcond < RCOND_LIMIT {
                return Err(Error::IllConditioned { rcond });
            }
            let xr = back_substitute(&r, beta_re).ok_or(Error::IllConditioned { rcond: 0.0 })?;
            let xi = back_substitute(&r, beta_im).ok_or(Error::IllConditioned { rcond: 0.0 })?;
            return Ok((xr.into_iter().zip(xi).map(|(a, b)| C64::new(a, b)).collect(), 0.0));
        }
        Regularization::Discrepancy { noise_rms } => {
            if !(noise_rms >= 0.0) {
                return Err(Error::InvalidParameter { name: "noise_rms", reason: "must be non-negative" });
            }
            discrepancy_mu(&r, beta_re, beta_im, tail2, noise_rms * (n as f64).sqrt())
        }
    };
    Ok((stacked_solve(&r, beta_re, beta_im, mu), mu))
}

/// Picks `mu` so that the residual norm equals `target`, by bisection in
/// `log mu` on the SVD of `R`.
fn discrepancy_mu(r: &Mat, beta_re: &[f64], beta_im: &[f64], tail2: f64, target: f64) -> f64 {
    let svd = jacobi_svd(r);
    let k = svd.s.len();
    let smax = svd.s[0].max(f64::MIN_POSITIVE);
    let gamma2: Vec<f64> = (0..k)
        .map(|i| {
            let u = svd.u.col(i);
            let (a, b) = (dot(u, beta_re), dot(u, beta_im));
            a * a + b * b
        })
        .collect();
    let beta2 = dot(beta_re, beta_re) + dot(beta_im, beta_im);
    let captured: f64 = gamma2.iter().sum();
    let outside = (beta2 - captured).max(0.0);
    let residual2 = |mu: f64| {
        let m2 = mu * mu;
        let mut acc = tail2 + outside;
        for (s, g2) in svd.s.iter().zip(&gamma2) {
            let f = m2 / (s * s + m2);
            acc += f * f * g2;
        }
        acc
    };
    let target2 = target * target;
    let (mut lo, mut hi) = ((smax * 1e-14).ln(), (smax * 1e4).ln());
    if residual2(lo.exp()) >= target2 {
        return lo.exp();
    }
    if residual2(hi.exp()) <= target2 {
        return hi.exp();
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if residual2(mid.exp()) < target2 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-10 {
            break;
        }
    }
    (0.5 * (lo + hi)).exp()
}

/// Solves the augmented system `[R; mu I] c = [beta; 0]` by a second QR.
fn stacked_solve(r: &Mat, beta_re: &[f64], beta_im: &[f64], mu: f64) -> Vec<C64> {
    let k = r.cols();
    let aug = Mat::from_fn(2 * k, k, |i, j| if i < k { r.get(i, j) } else if i - k == j { mu } else { 0.0 });
    let mut re = vec![0.0; 2 * k];
    let mut im = vec![0.0; 2 * k];
    re[..k].copy_from_slice(beta_re);
    im[..k].copy_from_slice(beta_im);
    let r2 = householder_qr(aug, &mut [&mut re, &mut im]);
    // mu > 0 keeps every pivot non-zero
    let xr = back_substitute(&r2, &re).unwrap_or_else(|| vec![0.0; k]);
    let xi = back_substitute(&r2, &im).unwrap_or_else(|| vec![0.0; k]);
    xr.into_iter().zip(xi).map(|(a, b)| C64::new(a, b)).collect()
}

fn rms_residual(g: &Mat, b: &[C64], c: &[C64]) -> f64 {
    let cr: Vec<f64> = c.iter().map(|z| z.re).collect();
    let ci: Vec<f64> = c.iter().map(|z| z.im).collect();
    let (pr, pi) = (g.mul_vec(&cr), g.mul_vec(&ci));
    let mut acc = 0.0;
    for ((z, a), b2) in b.iter().zip(&pr).zip(&pi) {
        acc += (z - C64::new(*a, *b2)).norm_sqr();
    }
    (acc / b.len().max(1) as f64).sqrt()
}

/// Fits the pupil samples with the Gaussians of `grid`.
pub fn fit(samples: &PupilSamples, grid: &CenterGrid, opts: FitOptions) -> Result<(GrbfModel, FitReport)> {
    if samples.is_empty() {
        return Err(Error::EmptySampling);
    }
    let pts = samples.points();
    let c0 = if opts.constant_term { samples.mean() } else { C64::new(0.0, 0.0) };
    let b: Vec<C64> = pts.iter().map(|p| p.value - c0).collect();
    let mut data = Vec::with_capacity(pts.len() * grid.len());
    for c in grid.centers() {
        data.extend(pts.iter().map(|p| c.eval_xy(p.x, p.y)));
    }
    let g = Mat::from_columns(pts.len(), grid.len(), data);
    let (coeffs, mu) = solve_regularized(&g, &b, opts.regularization)?;
    let report = FitReport {
        rms_residual: rms_residual(&g, &b, &coeffs),
        regularization_parameter: mu,
        center_count: grid.len(),
        sample_count: pts.len(),
    };
    Ok((GrbfModel::new(grid.clone(), coeffs, c0)?, report))
}

/// Least-squares Zernike expansion of the sampled pupil over `indices`.
/// The constant term is an ordinary unknown here (`Z_0^0`), so the
/// `constant_term` option is ignored.
pub fn fit_zernike(
    samples: &PupilSamples,
    indices: &[ZernikeIndex],
    reg: Regularization,
) -> Result<(ZernikeExpansion<C64>, FitReport)> {
    if samples.is_empty() {
        return Err(Error::EmptySampling);
    }
    let pts = samples.points();
    let b: Vec<C64> = pts.iter().map(|p| p.value).collect();
    let mut data = Vec::with_capacity(pts.len() * indices.len());
    for &idx in indices {
        let t = ZernikeTerm::new(idx);
        data.extend(pts.iter().map(|p| t.eval(p.x.hypot(p.y), p.y.atan2(p.x))));
    }
    let g = Mat::from_columns(pts.len(), indices.len(), data);
    let (coeffs, mu) = solve_regularized(&g, &b, reg)?;
    let report = FitReport {
        rms_residual: rms_residual(&g, &b, &coeffs),
        regularization_parameter: mu,
        center_count: indices.len(),
        sample_count: pts.len(),
    };
    let expansion = ZernikeExpansion::new(indices.iter().copied().zip(coeffs).collect())?;
    Ok((expansion, report))
}

//! Semi-analytic field evaluation for Gaussian RBF pupils.
//!
//! For a single Gaussian `c exp(-lambda |x - Q|^2)` the diffraction integral
//! reduces to `c exp(-lambda q^2) sum_s m_s(lambda - i f) Omega^s / (s!)^2`
//! with `m_s(z) = int_0^1 exp(-z t) t^s dt` and
//! `Omega = (lambda a + pi i x)^2 + (lambda b + pi i y)^2`. `Omega` does not
//! depend on `f`, so one pass over the centers serves every defocus value.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::field::{DefocusVector, EvalGrid, EvalPoint, FieldMatrix};
use crate::rbf_fit::{CenterGrid, GrbfModel};
use crate::specfun::{i0_tail, ln_factorial};
use crate::C64;

/// Series cut-off used when none is given.
pub const DEFAULT_CUTOFF: usize = 60;
/// Grid size from which the `s` accumulation is compensated.
pub const COMPENSATION_THRESHOLD: usize = 10_000;
/// Default number of grid points per work block.
pub const BLOCK_SIZE: usize = 256;

/// Series truncation: terms `s = 0..=cutoff_s` are kept.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TruncationParams {
    pub cutoff_s: usize,
}

impl Default for TruncationParams {
    fn default() -> Self {
        TruncationParams { cutoff_s: DEFAULT_CUTOFF }
    }
}

/// `m_s(z)` for `s = 0..=s_max`, `Re z >= 0`.
///
/// Upward recurrence `m_{s+1} = ((s+1) m_s - e^{-z}) / z` only while
/// `s + 1 <= |z|`, where it is stable; above that the top value comes from
/// `m_S = e^{-z} sum_k z^k S! / (S+k+1)!` and the rest from the downward
/// recurrence `m_s = (z m_{s+1} + e^{-z}) / (s+1)`.
pub fn m_sequence(z: C64, s_max: usize) -> Vec<C64> {
    let mut m = vec![C64::new(0.0, 0.0); s_max + 1];
    let ez = (-z).exp();
    let az = z.norm();
    let mut first_down = 0usize;
    if az >= 1.0 {
        let top = (az.floor() as usize).min(s_max);
        m[0] = (C64::new(1.0, 0.0) - ez) / z;
        for s in 0..top {
            m[s + 1] = (m[s] * (s as f64 + 1.0) - ez) / z;
        }
        first_down = top + 1;
    }
    if first_down <= s_max {
        m[s_max] = m_top_series(z, s_max, ez);
        for s in (first_down..s_max).rev() {
            m[s] = (z * m[s + 1] + ez) / (s as f64 + 1.0);
        }
    }
    m
}

fn m_top_series(z: C64, s: usize, ez: C64) -> C64 {
    let mut term = C64::new(1.0 / (s as f64 + 1.0), 0.0);
    let mut sum = term;
    let az = z.norm();
    let mut k = 0usize;
    loop {
        let denom = (s + k + 2) as f64;
        term = term * z / denom;
        sum += term;
        k += 1;
        if denom > az && term.norm() <= 1e-17 * sum.norm() {
            break;
        }
        if k > 100_000 {
            break;
        }
    }
    ez * sum
}

/// `m_s(lambda - i f_m)` for every defocus value and `s = 0..=S`. Entries are
/// stored unnormalized; [`CoefficientTable::normalized`] divides by `(s!)^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientTable {
    rows: usize,
    width: usize,
    raw: Vec<C64>,
}

impl CoefficientTable {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cutoff(&self) -> usize {
        self.width - 1
    }

    /// `m_s(lambda - i f_m)`.
    pub fn raw(&self, m: usize, s: usize) -> C64 {
        self.raw[m * self.width + s]
    }

    pub fn raw_row(&self, m: usize) -> &[C64] {
        &self.raw[m * self.width..(m + 1) * self.width]
    }

    /// `m_s / (s!)^2`, underflowing gracefully to zero for large `s`.
    pub fn normalized(&self, m: usize, s: usize) -> C64 {
        self.raw(m, s) * (-2.0 * ln_factorial(s as u32)).exp()
    }

    /// Largest `|m_s|`; at most one whenever `lambda >= 0`.
    pub fn max_abs(&self) -> f64 {
        self.raw.iter().fold(0.0, |a, z| a.max(z.norm()))
    }
}

/// The coefficient table for shape `lambda` over a defocus vector.
pub fn m_hat_table(lambda: f64, defocus: &DefocusVector, trunc: TruncationParams) -> Result<CoefficientTable> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidParameter { name: "lambda", reason: "must be finite and non-negative" });
    }
    let width = trunc.cutoff_s + 1;
    let mut raw = Vec::with_capacity(defocus.len() * width);
    for &f in defocus.values() {
        raw.extend(m_sequence(C64::new(lambda, -f), trunc.cutoff_s));
    }
    Ok(CoefficientTable { rows: defocus.len(), width, raw })
}

/// `Omega` for a center `(a, b)` with shape `lambda` at image point `(x, y)`.
#[inline]
pub fn omega(lambda: f64, a: f64, b: f64, x: f64, y: f64) -> C64 {
    let u = C64::new(lambda * a, PI * x);
    let v = C64::new(lambda * b, PI * y);
    u * u + v * v
}

/// `Omega_{k,j}` for every center and grid point, row `k` per center.
#[derive(Debug, Clone, PartialEq)]
pub struct OmegaMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl OmegaMatrix {
    pub fn get(&self, k: usize, j: usize) -> C64 {
        self.data[k * self.cols + j]
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }
}

pub fn omega_matrix(grid: &EvalGrid, centers: &CenterGrid) -> Result<OmegaMatrix> {
    let lambda = centers.uniform_lambda()?.unwrap_or(0.0);
    let mut data = Vec::with_capacity(centers.len() * grid.len());
    for c in centers.centers() {
        data.extend(grid.points().iter().map(|p| omega(lambda, c.a, c.b, p.x, p.y)));
    }
    Ok(OmegaMatrix { rows: centers.len(), cols: grid.len(), data })
}

/// Conservative bound on the omitted tail `sum_{s > S} Omega_max^s / (s!)^2`
/// with `Omega_max = max_k lambda^2 q_k^2 + max_j pi^2 r_j^2`; it bounds the
/// truncation error of every unit-coefficient term.
pub fn truncation_bound(lambda: f64, centers: &CenterGrid, grid: &EvalGrid, trunc: TruncationParams) -> f64 {
    let qmax = centers.centers().iter().fold(0.0f64, |m, c| m.max(c.q()));
    let rmax = grid.max_radius();
    i0_tail(lambda * lambda * qmax * qmax + PI * PI * rmax * rmax, trunc.cutoff_s)
}

/// Truncation bound for one model: `sum_k |c_k| e^{-lambda q_k^2} T(|Omega|_k)`
/// plus the constant-term tail, with `T` the tail of [`truncation_bound`].
pub fn model_truncation_bound(model: &GrbfModel, grid: &EvalGrid, trunc: TruncationParams) -> Result<f64> {
    let lambda = model.grid.uniform_lambda()?.unwrap_or(0.0);
    let rmax2 = PI * PI * grid.max_radius().powi(2);
    let mut acc = model.constant.norm() * i0_tail(rmax2, trunc.cutoff_s);
    for (c, k) in model.grid.centers().iter().zip(&model.coefficients) {
        let q2 = c.a * c.a + c.b * c.b;
        acc += k.norm() * (-lambda * q2).exp() * i0_tail(lambda * lambda * q2 + rmax2, trunc.cutoff_s);
    }
    Ok(acc)
}

/// Immutable evaluation state: coefficient tables and per-center weights.
/// Blocks of grid points can be evaluated independently and in any order;
/// each point's arithmetic does not depend on the blocking.
#[derive(Debug, Clone)]
pub struct GrbfPlan {
    lambda: f64,
    // (lambda a, lambda b, c_k exp(-lambda q_k^2))
    centers: Vec<(f64, f64, C64)>,
    constant: C64,
    table: CoefficientTable,
    constant_table: Option<CoefficientTable>,
    cutoff: usize,
    compensated: bool,
}

impl GrbfPlan {
    pub fn new(model: &GrbfModel, defocus: &DefocusVector, trunc: TruncationParams, grid_len: usize) -> Result<Self> {
        let lambda = model.grid.uniform_lambda()?.unwrap_or(0.0);
        let centers = model
            .grid
            .centers()
            .iter()
            .zip(&model.coefficients)
            .map(|(c, k)| (lambda * c.a, lambda * c.b, k * (-lambda * (c.a * c.a + c.b * c.b)).exp()))
            .collect();
        let table = m_hat_table(lambda, defocus, trunc)?;
        let constant_table =
            if model.constant != C64::new(0.0, 0.0) { Some(m_hat_table(0.0, defocus, trunc)?) } else { None };
        Ok(GrbfPlan {
            lambda,
            centers,
            constant: model.constant,
            table,
            constant_table,
            cutoff: trunc.cutoff_s,
            compensated: grid_len >= COMPENSATION_THRESHOLD,
        })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn rows(&self) -> usize {
        self.table.rows()
    }

    pub fn table(&self) -> &CoefficientTable {
        &self.table
    }

    /// Field values for `pts`, row-major `M x pts.len()`.
    pub fn eval_block(&self, pts: &[EvalPoint]) -> Vec<C64> {
        let nb = pts.len();
        let rows = self.rows();
        let k = self.centers.len();
        let width = self.cutoff + 1;

        // running powers R_{k,j} = d_k Omega^s / (s!)^2, split re/im
        let mut ore = vec![0.0; k * nb];
        let mut oim = vec![0.0; k * nb];
        let mut rre = vec![0.0; k * nb];
        let mut rim = vec![0.0; k * nb];
        for (ci, &(la, lb, d)) in self.centers.iter().enumerate() {
            for (j, p) in pts.iter().enumerate() {
                let u = C64::new(la, PI * p.x);
                let v = C64::new(lb, PI * p.y);
                let o = u * u + v * v;
                ore[ci * nb + j] = o.re;
                oim[ci * nb + j] = o.im;
                rre[ci * nb + j] = d.re;
                rim[ci * nb + j] = d.im;
            }
        }

        // H_s = sum_k R_{k,j} for every s, and the constant term's real
        // powers (-pi^2 r^2)^s / (s!)^2 (a lambda = 0 Gaussian at the origin)
        let mut hre = vec![0.0; width * nb];
        let mut him = vec![0.0; width * nb];
        let mut xs = vec![0.0; width * nb];
        let cw: Vec<f64> = pts.iter().map(|p| -PI * PI * p.r * p.r).collect();
        xs[..nb].iter_mut().for_each(|x| *x = 1.0);
        for s in 0..width {
            let last = s == self.cutoff;
            let inv = 1.0 / ((s + 1) as f64 * (s + 1) as f64);
            let (hr, hi) = (&mut hre[s * nb..(s + 1) * nb], &mut him[s * nb..(s + 1) * nb]);
            for ci in 0..k {
                let range = ci * nb..(ci + 1) * nb;
                let (rr, ri) = (&mut rre[range.clone()], &mut rim[range.clone()]);
                let (or, oi) = (&ore[range.clone()], &oim[range]);
                for j in 0..nb {
                    let (a, b) = (rr[j], ri[j]);
                    hr[j] += a;
                    hi[j] += b;
                    if !last {
                        rr[j] = (a * or[j] - b * oi[j]) * inv;
                        ri[j] = (a * oi[j] + b * or[j]) * inv;
                    }
                }
            }
            if !last {
                let (cur, next) = xs.split_at_mut((s + 1) * nb);
                let cur = &cur[s * nb..];
                for j in 0..nb {
                    next[j] = cur[j] * (cw[j] * inv);
                }
            }
        }

        // U_{m,j} = sum_s m_s(lambda - i f_m) H_s + c0 m_s(-i f_m) x_s, one
        // output row at a time
        let zero = C64::new(0.0, 0.0);
        let mut out = vec![zero; rows * nb];
        let mut acc = RowAccumulator::new(nb, self.compensated);
        for m in 0..rows {
            acc.reset();
            for s in 0..width {
                let t = self.table.raw(m, s);
                let tc = self.constant_table.as_ref().map_or(zero, |ct| ct.raw(m, s) * self.constant);
                let span = s * nb..(s + 1) * nb;
                acc.add_row(t, tc, &hre[span.clone()], &him[span.clone()], &xs[span]);
            }
            acc.write(&mut out[m * nb..(m + 1) * nb]);
        }
        out
    }
}

/// One output row of sums, split re/im, with optional Kahan compensation
/// per entry.
struct RowAccumulator {
    re: Vec<f64>,
    im: Vec<f64>,
    carry: Option<(Vec<f64>, Vec<f64>)>,
}

impl RowAccumulator {
    fn new(len: usize, compensated: bool) -> Self {
        RowAccumulator {
            re: vec![0.0; len],
            im: vec![0.0; len],
            carry: if compensated { Some((vec![0.0; len], vec![0.0; len])) } else { None },
        }
    }

    fn reset(&mut self) {
        self.re.iter_mut().for_each(|x| *x = 0.0);
        self.im.iter_mut().for_each(|x| *x = 0.0);
        if let Some((cr, ci)) = &mut self.carry {
            cr.iter_mut().for_each(|x| *x = 0.0);
            ci.iter_mut().for_each(|x| *x = 0.0);
        }
    }

    /// Adds `t * h + tc * x` entrywise.
    #[inline]
    fn add_row(&mut self, t: C64, tc: C64, hr: &[f64], hi: &[f64], x: &[f64]) {
        let n = self.re.len();
        let (re, im) = (&mut self.re[..n], &mut self.im[..n]);
        let (hr, hi, x) = (&hr[..n], &hi[..n], &x[..n]);
        match &mut self.carry {
            None => {
                for j in 0..n {
                    re[j] += t.re * hr[j] - t.im * hi[j] + tc.re * x[j];
                    im[j] += t.re * hi[j] + t.im * hr[j] + tc.im * x[j];
                }
            }
            Some((cr, ci)) => {
                let (cr, ci) = (&mut cr[..n], &mut ci[..n]);
                for j in 0..n {
                    let y = t.re * hr[j] - t.im * hi[j] + tc.re * x[j] - cr[j];
                    let s = re[j] + y;
                    cr[j] = (s - re[j]) - y;
                    re[j] = s;
                    let y = t.re * hi[j] + t.im * hr[j] + tc.im * x[j] - ci[j];
                    let s = im[j] + y;
                    ci[j] = (s - im[j]) - y;
                    im[j] = s;
                }
            }
        }
    }

    fn write(&self, out: &mut [C64]) {
        for (o, (&r, &i)) in out.iter_mut().zip(self.re.iter().zip(&self.im)) {
            *o = C64::new(r, i);
        }
    }
}

/// `U` on the grid for every defocus value, evaluated block by block on the
/// calling thread.
pub fn compute_field(
    model: &GrbfModel,
    grid: &EvalGrid,
    defocus: &DefocusVector,
    trunc: TruncationParams,
) -> Result<FieldMatrix> {
    let plan = GrbfPlan::new(model, defocus, trunc, grid.len())?;
    let mut out = FieldMatrix::zeros(defocus.len(), grid.len());
    let mut start = 0;
    for chunk in grid.points().chunks(BLOCK_SIZE) {
        let block = plan.eval_block(chunk);
        out.write_block(start, chunk.len(), &block);
        start += chunk.len();
    }
    Ok(out)
}

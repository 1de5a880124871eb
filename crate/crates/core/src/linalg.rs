//! Dense real linear algebra for the least-squares fits: column-major
//! storage, Householder QR and one-sided Jacobi SVD.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

/// Column-major dense real matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Mat::zeros(rows, cols);
        for j in 0..cols {
            for i in 0..rows {
                m.data[j * rows + i] = f(i, j);
            }
        }
        m
    }

    /// Builds from column slices produced in order.
    pub fn from_columns(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols);
        Mat { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[j * self.rows + i]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[j * self.rows + i] = v;
    }

    pub fn col(&self, j: usize) -> &[f64] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn col_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.data[j * self.rows..(j + 1) * self.rows]
    }

    /// `y = A x`.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.rows];
        for (j, &xj) in x.iter().enumerate() {
            if xj != 0.0 {
                for (yi, &a) in y.iter_mut().zip(self.col(j)) {
                    *yi += a * xj;
                }
            }
        }
        y
    }

    /// `y = A^T x`.
    pub fn mul_t_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.cols).map(|j| dot(self.col(j), x)).collect()
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Householder QR of an `m x n` matrix with `m >= n`. The reflectors are
/// applied on the fly to every right-hand side; the upper `n x n` triangle
/// `R` is returned and each `rhs` is overwritten by `Q^T rhs`.
pub fn householder_qr(mut a: Mat, rhs: &mut [&mut [f64]]) -> Mat {
    let (m, n) = (a.rows, a.cols);
    assert!(m >= n, "QR needs at least as many rows as columns");
    let mut v = vec![0.0; m];
    for j in 0..n {
        let x = &a.col(j)[j..];
        let sigma = norm2(x);
        if sigma == 0.0 {
            continue;
        }
        let alpha = if x[0] > 0.0 { -sigma } else { sigma };
        let len = m - j;
        v[..len].copy_from_slice(x);
        v[0] -= alpha;
        let vnorm2 = dot(&v[..len], &v[..len]);
        if vnorm2 == 0.0 {
            continue;
        }
        let scale = 2.0 / vnorm2;
        {
            let c = a.col_mut(j);
            c[j] = alpha;
            for ci in &mut c[j + 1..] {
                *ci = 0.0;
            }
        }
        for k in j + 1..n {
            let c = &mut a.col_mut(k)[j..];
            let t = scale * dot(&v[..len], c);
            for (ci, &vi) in c.iter_mut().zip(&v[..len]) {
                *ci -= t * vi;
            }
        }
        for b in rhs.iter_mut() {
            let c = &mut b[j..];
            let t = scale * dot(&v[..len], c);
            for (ci, &vi) in c.iter_mut().zip(&v[..len]) {
                *ci -= t * vi;
            }
        }
    }
    Mat::from_fn(n, n, |i, j| if i <= j { a.get(i, j) } else { 0.0 })
}

/// Solves `R x = b` for upper-triangular `R`. Returns `None` on an exactly
/// zero pivot.
pub fn back_substitute(r: &Mat, b: &[f64]) -> Option<Vec<f64>> {
    let n = r.cols;
    let mut x = b[..n].to_vec();
    for i in (0..n).rev() {
        let mut s = x[i];
        for j in i + 1..n {
            s -= r.get(i, j) * x[j];
        }
        let d = r.get(i, i);
        if d == 0.0 {
            return None;
        }
        x[i] = s / d;
    }
    Some(x)
}

/// Thin SVD `A = U diag(s) V^T` of a square or tall matrix, singular values
/// in descending order.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: Mat,
    pub s: Vec<f64>,
    pub v: Mat,
}

/// One-sided (Hestenes) Jacobi SVD.
pub fn jacobi_svd(a: &Mat) -> Svd {
    let (m, n) = (a.rows, a.cols);
    let mut w = a.clone();
    let mut v = Mat::from_fn(n, n, |i, j| if i == j { 1.0 } else { 0.0 });
    let tol = 1e-15;
    for _sweep in 0..60 {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let (alpha, beta, gamma) = {
                    let (cp, cq) = (w.col(p), w.col(q));
                    (dot(cp, cp), dot(cq, cq), dot(cp, cq))
                };
                if gamma == 0.0 || gamma.abs() <= tol * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let t = if zeta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate_columns(&mut w, p, q, c, s, m);
                rotate_columns(&mut v, p, q, c, s, n);
            }
        }
        if !rotated {
            break;
        }
    }
    let mut s: Vec<f64> = (0..n).map(|j| norm2(w.col(j))).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| s[j].partial_cmp(&s[i]).unwrap_or(core::cmp::Ordering::Equal));
    let mut u = Mat::zeros(m, n);
    let mut vs = Mat::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let sv = s[src];
        if sv > 0.0 {
            for (o, &x) in u.col_mut(dst).iter_mut().zip(w.col(src)) {
                *o = x / sv;
            }
        }
        vs.col_mut(dst).copy_from_slice(v.col(src));
    }
    s = order.iter().map(|&i| s[i]).collect();
    Svd { u, s, v: vs }
}

fn rotate_columns(a: &mut Mat, p: usize, q: usize, c: f64, s: f64, len: usize) {
    let rows = a.rows;
    let (lo, hi) = a.data.split_at_mut(q * rows);
    let cp = &mut lo[p * rows..p * rows + len];
    let cq = &mut hi[..len];
    for (x, y) in cp.iter_mut().zip(cq.iter_mut()) {
        let (xp, xq) = (*x, *y);
        *x = c * xp - s * xq;
        *y = s * xp + c * xq;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(m: usize, n: usize) -> Mat {
        Mat::from_fn(m, n, |i, j| ((i * 7 + j * 13) % 11) as f64 - 5.0 + 0.1 * (i as f64 + 1.0).sin() * j as f64)
    }

    #[test]
    fn qr_reproduces_least_squares() {
        let a = sample(9, 4);
        let b: Vec<f64> = (0..9).map(|i| (i as f64 * 0.3).cos()).collect();
        let mut qb = b.clone();
        let r = householder_qr(a.clone(), &mut [&mut qb]);
        let x = back_substitute(&r, &qb).unwrap();
        // normal-equation residual A^T (A x - b) vanishes
        let ax = a.mul_vec(&x);
        let res: Vec<f64> = ax.iter().zip(&b).map(|(p, q)| p - q).collect();
        let g = a.mul_t_vec(&res);
        assert!(g.iter().all(|v| v.abs() < 1e-12));
        // residual norm is carried in the tail of Q^T b
        assert!((norm2(&qb[4..]) - norm2(&res)).abs() < 1e-12);
    }

    #[test]
    fn svd_reconstructs() {
        let a = sample(6, 6);
        let svd = jacobi_svd(&a);
        for i in 0..6 {
            for j in 0..6 {
                let mut acc = 0.0;
                for k in 0..6 {
                    acc += svd.u.get(i, k) * svd.s[k] * svd.v.get(j, k);
                }
                assert!((acc - a.get(i, j)).abs() < 1e-12);
            }
        }
        assert!(svd.s.windows(2).all(|w| w[0] >= w[1]));
        // V orthogonal
        for p in 0..6 {
            for q in 0..6 {
                let d = dot(svd.v.col(p), svd.v.col(q));
                assert!((d - if p == q { 1.0 } else { 0.0 }).abs() < 1e-12);
            }
        }
    }
}

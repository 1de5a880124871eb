//! Independent numerical oracles shared by the integration tests.

#![allow(dead_code)]

use diffract_core::C64;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Gauss-Legendre nodes and weights on `[-1, 1]` by Newton iteration on `P_n`.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out
}

/// Composite Gauss-Legendre rule with `panels` equal panels of `order` points.
pub fn quad<F: FnMut(f64) -> C64>(mut f: F, a: f64, b: f64, panels: usize, order: usize) -> C64 {
    let rule = gauss_legendre(order);
    let h = (b - a) / panels as f64;
    let mut acc = C64::new(0.0, 0.0);
    for p in 0..panels {
        let mid = a + (p as f64 + 0.5) * h;
        let mut part = C64::new(0.0, 0.0);
        for &(x, w) in &rule {
            part += f(mid + 0.5 * h * x) * w;
        }
        acc += part * (0.5 * h);
    }
    acc
}

/// `I_0(2 sqrt(w)) = sum_k w^k / (k!)^2`, entire in `w`.
pub fn i0_sqrt_series(w: C64) -> C64 {
    let mut term = C64::new(1.0, 0.0);
    let mut sum = term;
    for k in 1..400 {
        term *= w / (k as f64 * k as f64);
        sum += term;
        if term.norm() < 1e-18 * sum.norm().max(1e-300) {
            break;
        }
    }
    sum
}

/// `(1 / pi) int_0^{2 pi} int_0^1 a(rho, t) b(rho, t) rho d rho d t` with
/// Gauss-Legendre in `rho` and the periodic trapezoid rule in `t`, exact for
/// polynomial-times-trigonometric integrands of modest degree.
pub fn disk_inner<A: Fn(f64, f64) -> f64, B: Fn(f64, f64) -> f64>(a: A, b: B, n: usize) -> f64 {
    let rule = gauss_legendre(n);
    let nt = 2 * n;
    let mut acc = 0.0;
    for &(xr, wr) in &rule {
        let rho = 0.5 * (xr + 1.0);
        for i in 0..nt {
            let t = 2.0 * std::f64::consts::PI * i as f64 / nt as f64;
            acc += wr * rho * a(rho, t) * b(rho, t);
        }
    }
    // d rho = dx / 2, d t = 2 pi / nt, and the 1 / pi prefactor
    acc / nt as f64
}

pub fn factorial(n: i64) -> BigInt {
    assert!(n >= 0);
    (1..=n).fold(BigInt::one(), |acc, k| acc * BigInt::from(k))
}

pub fn binom(n: i64, k: i64) -> BigRational {
    if k < 0 || k > n || n < 0 {
        return BigRational::zero();
    }
    BigRational::new(factorial(n), factorial(k) * factorial(n - k))
}

pub fn rat(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

pub fn to_f64(q: &BigRational) -> f64 {
    q.to_f64().expect("finite rational")
}

/// Exact 3j symbol in the form `sign * sqrt(square)` with `square` rational,
/// arguments doubled. Returns `None` when the symbol vanishes by selection.
pub fn wigner_3j_exact(j: [i64; 3], m: [i64; 3]) -> Option<(i32, BigRational)> {
    let [j1, j2, j3] = j;
    let [m1, m2, m3] = m;
    if m1 + m2 + m3 != 0 || j3 > j1 + j2 || j3 < (j1 - j2).abs() || (j1 + j2 + j3) % 2 != 0 {
        return None;
    }
    for (jj, mm) in j.iter().zip(&m) {
        if mm.abs() > *jj || (jj + mm) % 2 != 0 {
            return None;
        }
    }
    let h = |x: i64| {
        debug_assert!(x % 2 == 0);
        x / 2
    };
    let delta = BigRational::new(
        factorial(h(j1 + j2 - j3)) * factorial(h(j1 - j2 + j3)) * factorial(h(-j1 + j2 + j3)),
        factorial(h(j1 + j2 + j3) + 1),
    );
    let mf = factorial(h(j1 + m1))
        * factorial(h(j1 - m1))
        * factorial(h(j2 + m2))
        * factorial(h(j2 - m2))
        * factorial(h(j3 + m3))
        * factorial(h(j3 - m3));
    let square_prefactor = delta * BigRational::from_integer(mf);
    let kmin = 0.max(h(j2 - j3 - m1)).max(h(j1 - j3 + m2));
    let kmax = h(j1 + j2 - j3).min(h(j1 - m1)).min(h(j2 + m2));
    let mut sum = BigRational::zero();
    for k in kmin..=kmax {
        let den = factorial(k)
            * factorial(h(j3 - j2 + m1) + k)
            * factorial(h(j3 - j1 - m2) + k)
            * factorial(h(j1 + j2 - j3) - k)
            * factorial(h(j1 - m1) - k)
            * factorial(h(j2 + m2) - k);
        let term = BigRational::new(BigInt::one(), den);
        if k % 2 == 0 {
            sum += term;
        } else {
            sum -= term;
        }
    }
    if sum.is_zero() {
        return None;
    }
    let phase = if h(j1 - j2 - m3).rem_euclid(2) == 0 { 1 } else { -1 };
    let sign = if sum.is_negative() { -phase } else { phase };
    Some((sign, square_prefactor * &sum * &sum))
}

pub fn f_exact(m: i64, p: i64, s: i64) -> BigRational {
    if s > p {
        return BigRational::zero();
    }
    if m == 0 {
        return if s == p { BigRational::one() } else { BigRational::zero() };
    }
    let sign = if (p - s) % 2 == 0 { 1 } else { -1 };
    rat(sign * (2 * s + 1), p + s + 1) * binom(m + p - s - 1, m - 1) * binom(m + p + s, s) / binom(p + s, s)
}

pub fn g_exact(m: i64, u: i64, l: i64) -> BigRational {
    if u < l || u > l + m {
        return BigRational::zero();
    }
    rat(m + 2 * l + 1, m + u + l + 1) * binom(m, u - l) * binom(u + l, l) / binom(m + l + u, m + l)
}

pub fn b_exact(s1: i64, s2: i64, t: i64) -> BigRational {
    if t > s1.min(s2) {
        return BigRational::zero();
    }
    let a = |k: i64| binom(2 * k, k);
    rat(2 * s1 + 2 * s2 - 4 * t + 1, 2 * s1 + 2 * s2 - 2 * t + 1) * a(s1 - t) * a(t) * a(s2 - t) / a(s1 + s2 - t)
}

/// Exact linearization weights of `R_{2k}^0 R_{m+2p}^m` in `R_{m+2l}^m`.
pub fn weights_exact(m: i64, p: i64, k: i64) -> Vec<BigRational> {
    let mut w = vec![BigRational::zero(); (k + p + 1) as usize];
    for s in 0..=p {
        for t in 0..=k.min(s) {
            let u = k + s - 2 * t;
            for l in (u - m).max(0)..=u {
                w[l as usize] += f_exact(m, p, s) * b_exact(k, s, t) * g_exact(m, u, l);
            }
        }
    }
    w
}

//! Special-function kernels shared by every engine.
//!
//! Everything here is pure and allocation free. Bessel functions of the first
//! kind are evaluated by their ascending power series only, truncated at a
//! caller-supplied [`SeriesBudget`].

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};

/// Number of series terms retained by a truncated expansion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SeriesBudget(usize);

impl SeriesBudget {
    /// Bessel truncation used by the ENZ engines unless the argument needs more.
    pub const BESSEL_DEFAULT: SeriesBudget = SeriesBudget(15);

    pub fn new(terms: usize) -> Result<Self> {
        if terms == 0 {
            return Err(Error::InvalidParameter { name: "terms", reason: "must be at least 1" });
        }
        Ok(SeriesBudget(terms))
    }

    pub const fn terms(self) -> usize {
        self.0
    }

    /// Smallest budget (never below `floor`) whose first omitted term of the
    /// order-zero series at `|z| <= z_max` drops under 1e-17 of the leading term.
    ///
    /// Higher orders converge faster, so the order-zero count covers them.
    pub fn for_argument(z_max: f64, floor: SeriesBudget) -> SeriesBudget {
        let q = 0.25 * z_max * z_max;
        let mut term = 1.0;
        let mut k = 0usize;
        loop {
            // term = q^k / (k!)^2
            if k >= floor.0 && term < 1e-17 {
                return SeriesBudget(k.max(floor.0));
            }
            k += 1;
            term *= q / ((k * k) as f64);
            if k > 10_000 {
                return SeriesBudget(k);
            }
        }
    }
}

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];
const HALF_LN_TWO_PI: f64 = 0.918_938_533_204_672_8;

fn ln_gamma_unchecked(x: f64) -> f64 {
    if x < 0.5 {
        // Gamma(x) = Gamma(x + 1) / x
        return ln_gamma_unchecked(x + 1.0) - x.ln();
    }
    let x = x - 1.0;
    let mut a = LANCZOS[0];
    for (i, &c) in LANCZOS.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    HALF_LN_TWO_PI + (x + 0.5) * t.ln() - t + a.ln()
}

/// Natural logarithm of the Gamma function for `x > 0` (Lanczos, g = 7).
pub fn log_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain { what: "log_gamma", value: x });
    }
    Ok(ln_gamma_unchecked(x))
}

/// `n!` as a double; exact through 22!, correctly rounded products beyond,
/// infinite past 170!.
pub fn factorial(n: u32) -> f64 {
    let mut acc = 1.0f64;
    for i in 2..=n {
        acc *= i as f64;
    }
    acc
}

/// `ln(n!)`.
pub fn ln_factorial(n: u32) -> f64 {
    if n <= 170 {
        factorial(n).ln()
    } else {
        ln_gamma_unchecked(n as f64 + 1.0)
    }
}

/// Binomial coefficient `C(n, k)`, zero when `k < 0`, `k > n` or `n < 0`.
///
/// Exact integer arithmetic for `n <= 60`, log-gamma differences beyond.
pub fn binomial(n: i64, k: i64) -> f64 {
    if n < 0 || k < 0 || k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    if n <= 60 {
        let mut acc: u128 = 1;
        for i in 0..k {
            // acc * (n - i) is divisible by (i + 1) at every step
            acc = acc * (n - i) as u128 / (i + 1) as u128;
        }
        return acc as f64;
    }
    (ln_factorial(n as u32) - ln_factorial(k as u32) - ln_factorial((n - k) as u32)).exp()
}

/// Bessel function of the first kind `J_nu(z)` by its ascending series,
/// keeping `budget` terms.
pub fn bessel_j(nu: u32, z: f64, budget: SeriesBudget) -> f64 {
    bessel_j_scaled(nu, z, 0, budget)
}

/// `J_nu(z) / z^e` for `e <= nu`, evaluated from the series so that `z = 0`
/// yields the analytic limit instead of a division.
pub fn bessel_j_scaled(nu: u32, z: f64, e: u32, budget: SeriesBudget) -> f64 {
    debug_assert!(e <= nu);
    let half = 0.5 * z;
    // (1/2)^e (z/2)^(nu - e) / nu!
    let mut lead = 1.0f64;
    for i in 1..=nu {
        let base = if i <= nu - e { half } else { 0.5 };
        lead *= base / i as f64;
        if lead == 0.0 {
            return 0.0;
        }
    }
    lead * bessel_series_sum(nu, half * half, budget)
}

/// `sum_{k < terms} (-q)^k / (k! (nu+1)_k)`.
#[inline]
fn bessel_series_sum(nu: u32, q: f64, budget: SeriesBudget) -> f64 {
    let mut term = 1.0f64;
    let mut sum = 1.0f64;
    let nu = nu as f64;
    for k in 1..budget.terms() {
        let kf = k as f64;
        term *= -q / (kf * (nu + kf));
        sum += term;
    }
    sum
}

/// Fills `out[i] = J_{first + 2 i + 1}(z) / z` for `i in 0..out.len()`.
pub fn bessel_over_arg_ladder(first: u32, z: f64, budget: SeriesBudget, out: &mut [f64]) {
    for (i, slot) in out.iter_mut().enumerate() {
        *slot = bessel_j_scaled(first + 2 * i as u32 + 1, z, 1, budget);
    }
}

/// Partial sum `sum_{s < cutoff} x^s / (s!)^2` of `I_0(2 sqrt(x))`.
pub fn i0_partial(x: f64, cutoff: SeriesBudget) -> f64 {
    let mut term = 1.0f64;
    let mut sum = 1.0f64;
    for s in 1..cutoff.terms() {
        let sf = s as f64;
        term *= x / (sf * sf);
        sum += term;
    }
    sum
}

/// Tail `sum_{s > cutoff} x^s / (s!)^2` for `x >= 0`, summed until the terms
/// stop contributing.
pub fn i0_tail(x: f64, cutoff: usize) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let s0 = cutoff + 1;
    let mut term = (s0 as f64 * x.ln() - 2.0 * ln_factorial(s0 as u32)).exp();
    let mut sum = 0.0f64;
    let mut s = s0;
    loop {
        sum += term;
        let next = (s + 1) as f64;
        term *= x / (next * next);
        s += 1;
        // terms grow until s ~ sqrt(x), then decay faster than geometrically
        if (s as f64) * (s as f64) > x && term <= sum * 1e-18 {
            break;
        }
        if !sum.is_finite() || s > cutoff + 100_000 {
            break;
        }
    }
    sum
}

/// Spherical Bessel function `j_k(z) = sqrt(pi / 2z) J_{k+1/2}(z)`, with the
/// removable singularity at `z = 0` returning `delta_{k,0}`.
pub fn spherical_j(k: u32, z: f64) -> f64 {
    if z == 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    let az = z.abs();
    let parity = if z < 0.0 && k % 2 == 1 { -1.0 } else { 1.0 };
    let kf = k as f64;
    let value = if kf <= az {
        spherical_j_upward(k, az)
    } else if az < 1.0 {
        spherical_j_series(k, az)
    } else {
        spherical_j_miller(k, az)
    };
    parity * value
}

fn spherical_j_upward(k: u32, z: f64) -> f64 {
    let (s, c) = (z.sin(), z.cos());
    let j0 = s / z;
    if k == 0 {
        return j0;
    }
    let mut prev = j0;
    let mut cur = s / (z * z) - c / z;
    for n in 1..k {
        let next = (2 * n + 1) as f64 / z * cur - prev;
        prev = cur;
        cur = next;
    }
    cur
}

fn spherical_j_series(k: u32, z: f64) -> f64 {
    // z^k / (2k+1)!! * sum_i (-z^2/2)^i / (i! (2k+3)(2k+5)...(2k+2i+1))
    let mut lead = 1.0f64;
    for i in 1..=k {
        lead *= z / (2 * i + 1) as f64;
    }
    let h = -0.5 * z * z;
    let mut term = 1.0f64;
    let mut sum = 1.0f64;
    let mut i = 1u32;
    loop {
        term *= h / (i as f64 * (2 * k + 2 * i + 1) as f64);
        sum += term;
        if term.abs() <= 1e-18 * sum.abs() || i > 200 {
            break;
        }
        i += 1;
    }
    lead * sum
}

fn spherical_j_miller(k: u32, z: f64) -> f64 {
    // downward recurrence from well above max(k, z), normalized at the bottom
    let start = k + 40 + z as u32 + (20.0 * (k as f64 + z).sqrt()) as u32;
    let mut upper = 0.0f64;
    let mut cur = 1e-280f64;
    let mut at_k = 0.0f64;
    let mut j1_scaled = 0.0f64;
    let mut n = start;
    while n > 0 {
        let lower = (2 * n + 1) as f64 / z * cur - upper;
        upper = cur;
        cur = lower;
        n -= 1;
        if n == k {
            at_k = cur;
        }
        if n == 1 {
            j1_scaled = cur;
        }
        if cur.abs() > 1e250 {
            upper *= 1e-250;
            cur *= 1e-250;
            at_k *= 1e-250;
            j1_scaled *= 1e-250;
        }
    }
    // cur holds the scaled j_0
    let (s, c) = (z.sin(), z.cos());
    let j0 = s / z;
    let j1 = s / (z * z) - c / z;
    if j0.abs() >= j1.abs() {
        at_k * (j0 / cur)
    } else {
        at_k * (j1 / j1_scaled)
    }
}

fn half_int_factorial_ln(two_x: i32) -> f64 {
    // argument is an integer (two_x even) by the selection rules
    ln_factorial((two_x / 2) as u32)
}

/// Wigner 3j symbol with every argument doubled (so half-integers are
/// integers). Selection-rule violations return 0.
///
/// Racah single-sum formula with log-factorial magnitudes and tracked signs.
pub fn wigner_3j(tj1: i32, tj2: i32, tj3: i32, tm1: i32, tm2: i32, tm3: i32) -> f64 {
    if tj1 < 0 || tj2 < 0 || tj3 < 0 {
        return 0.0;
    }
    if tm1.abs() > tj1 || tm2.abs() > tj2 || tm3.abs() > tj3 {
        return 0.0;
    }
    if (tj1 + tm1) % 2 != 0 || (tj2 + tm2) % 2 != 0 || (tj3 + tm3) % 2 != 0 {
        return 0.0;
    }
    if tm1 + tm2 + tm3 != 0 {
        return 0.0;
    }
    if (tj1 + tj2 + tj3) % 2 != 0 {
        return 0.0;
    }
    if tj3 > tj1 + tj2 || tj3 < (tj1 - tj2).abs() {
        return 0.0;
    }
    // selection rule: j1 = j2 = j3 with all m = 0 and odd J vanishes
    if tm1 == 0 && tm2 == 0 && tm3 == 0 && ((tj1 + tj2 + tj3) / 2) % 2 == 1 {
        return 0.0;
    }

    let lf = half_int_factorial_ln;
    let ln_delta = lf(tj1 + tj2 - tj3) + lf(tj1 - tj2 + tj3) + lf(-tj1 + tj2 + tj3)
        - lf(tj1 + tj2 + tj3 + 2);
    let ln_m = lf(tj1 + tm1)
        + lf(tj1 - tm1)
        + lf(tj2 + tm2)
        + lf(tj2 - tm2)
        + lf(tj3 + tm3)
        + lf(tj3 - tm3);
    let prefactor_ln = 0.5 * (ln_delta + ln_m);

    // summation bounds, all in doubled units
    let kmin = 0.max(tj2 - tj3 - tm1).max(tj1 - tj3 + tm2);
    let kmax = (tj1 + tj2 - tj3).min(tj1 - tm1).min(tj2 + tm2);
    if kmin > kmax {
        return 0.0;
    }
    let mut pos = 0.0f64;
    let mut neg = 0.0f64;
    let mut tk = kmin;
    // terms are summed relative to the largest log magnitude for stability
    let mut logs: [f64; 64] = [0.0; 64];
    let mut count = 0usize;
    let mut max_log = f64::NEG_INFINITY;
    while tk <= kmax {
        let l = -(lf(tk)
            + lf(tj3 - tj2 + tk + tm1)
            + lf(tj3 - tj1 + tk - tm2)
            + lf(tj1 + tj2 - tj3 - tk)
            + lf(tj1 - tk - tm1)
            + lf(tj2 - tk + tm2));
        if count < logs.len() {
            logs[count] = l;
        }
        max_log = max_log.max(l);
        count += 1;
        tk += 2;
    }
    if count > logs.len() {
        // only reachable for j beyond ~60; recompute without storage
        let mut tk = kmin;
        while tk <= kmax {
            let l = -(lf(tk)
                + lf(tj3 - tj2 + tk + tm1)
                + lf(tj3 - tj1 + tk - tm2)
                + lf(tj1 + tj2 - tj3 - tk)
                + lf(tj1 - tk - tm1)
                + lf(tj2 - tk + tm2));
            let v = (l - max_log).exp();
            if (tk / 2) % 2 == 0 {
                pos += v;
            } else {
                neg += v;
            }
            tk += 2;
        }
    } else {
        for (i, &l) in logs[..count].iter().enumerate() {
            let v = (l - max_log).exp();
            let tk = kmin + 2 * i as i32;
            if (tk / 2) % 2 == 0 {
                pos += v;
            } else {
                neg += v;
            }
        }
    }
    let phase_exp = (tj1 - tj2 - tm3) / 2;
    let sign = if phase_exp.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
    sign * (pos - neg) * (prefactor_ln + max_log).exp()
}

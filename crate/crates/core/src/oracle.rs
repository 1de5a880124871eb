//! Reference evaluation of the diffraction integral by nested adaptive
//! Gauss-Kronrod quadrature. Slow by design; used for validation.

use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::field::EvalPoint;
use crate::pupil::{AmplitudeMask, PupilSpec};
use crate::C64;

const XGK: [f64; 11] = [
    0.995_657_163_025_808_1,
    0.973_906_528_517_171_7,
    0.930_157_491_355_708_2,
    0.865_063_366_688_984_5,
    0.780_817_726_586_416_9,
    0.679_409_568_299_024_4,
    0.562_757_134_668_604_7,
    0.433_395_394_129_247_2,
    0.294_392_862_701_460_2,
    0.148_874_338_981_631_22,
    0.0,
];
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874,
    0.032_558_162_307_964_725,
    0.054_755_896_574_351_995,
    0.075_039_674_810_919_96,
    0.093_125_454_583_697_6,
    0.109_387_158_802_297_64,
    0.123_491_976_262_065_84,
    0.134_709_217_311_473_34,
    0.142_775_938_577_060_09,
    0.147_739_104_901_338_49,
    0.149_445_554_002_916_9,
];
// Gauss weights for the odd Kronrod nodes XGK[1], XGK[3], ..., XGK[9]
const WG: [f64; 5] = [
    0.066_671_344_308_688_14,
    0.149_451_349_150_580_6,
    0.219_086_362_515_982_04,
    0.269_266_719_309_996_35,
    0.295_524_224_714_752_87,
];

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: C64,
    pub err_est: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: C64,
    err: f64,
}

/// 21-point Kronrod rule; the integrand returns a value and the error of any
/// nested computation that produced it.
fn gk21<F: FnMut(f64) -> (C64, f64)>(f: &mut F, a: f64, b: f64) -> Panel {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let (fc, ec) = f(c);
    let mut k = fc * WGK[10];
    let mut g = C64::new(0.0, 0.0);
    let mut inner = ec * WGK[10];
    for i in 0..10 {
        let dx = h * XGK[i];
        let (f1, e1) = f(c - dx);
        let (f2, e2) = f(c + dx);
        let s = f1 + f2;
        k += s * WGK[i];
        inner += (e1 + e2) * WGK[i];
        if i % 2 == 1 {
            g += s * WG[i / 2];
        }
    }
    let value = k * h;
    let err = ((k - g) * h).norm() + inner * h.abs();
    Panel { a, b, value, err }
}

/// Global adaptive Gauss-Kronrod integration over `[breaks[0], breaks[n]]`,
/// starting from the given panels. The integrand reports a nested error
/// estimate alongside each value (zero for plain integrands).
pub fn integrate_nested<F: FnMut(f64) -> (C64, f64)>(
    mut f: F,
    breaks: &[f64],
    abs_tol: f64,
    rel_tol: f64,
    max_subdivisions: usize,
) -> QuadResult {
    let mut panels: Vec<Panel> =
        breaks.windows(2).filter(|w| w[1] > w[0]).map(|w| gk21(&mut f, w[0], w[1])).collect();
    if panels.is_empty() {
        return QuadResult { value: C64::new(0.0, 0.0), err_est: 0.0, converged: true };
    }
    let mut splits = 0usize;
    loop {
        let total: C64 = panels.iter().map(|p| p.value).sum();
        let err: f64 = panels.iter().map(|p| p.err).sum();
        let tol = abs_tol.max(rel_tol * total.norm());
        if err <= tol {
            return QuadResult { value: total, err_est: err, converged: true };
        }
        if splits >= max_subdivisions {
            return QuadResult { value: total, err_est: err, converged: false };
        }
        let (worst, _) = panels
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (i, p)| if p.err > acc.1 { (i, p.err) } else { acc });
        let p = panels.swap_remove(worst);
        let mid = 0.5 * (p.a + p.b);
        if mid <= p.a || mid >= p.b {
            // interval exhausted in floating point
            let total: C64 = panels.iter().map(|q| q.value).sum::<C64>() + p.value;
            let err: f64 = panels.iter().map(|q| q.err).sum::<f64>() + p.err;
            return QuadResult { value: total, err_est: err, converged: false };
        }
        panels.push(gk21(&mut f, p.a, mid));
        panels.push(gk21(&mut f, mid, p.b));
        splits += 1;
    }
}

/// Adaptive integration of a complex function of one variable over `[a, b]`.
pub fn integrate<F: FnMut(f64) -> C64>(
    mut f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
    max_subdivisions: usize,
) -> QuadResult {
    integrate_nested(|x| (f(x), 0.0), &[a, b], abs_tol, rel_tol, max_subdivisions)
}

/// Focal factor multiplying the pupil.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FocalFactor {
    /// `exp(i f rho^2)`.
    Debye,
    /// `exp(i f (1 - sqrt(1 - s0^2 rho^2)) / (1 - sqrt(1 - s0^2)))` with
    /// numerical aperture `s0`.
    HighNa { s0: f64 },
}

impl FocalFactor {
    pub fn eval(&self, rho: f64, f: f64) -> C64 {
        match *self {
            FocalFactor::Debye => C64::from_polar(1.0, f * rho * rho),
            FocalFactor::HighNa { s0 } => {
                // 1 - sqrt(1 - x) written as x / (1 + sqrt(1 - x)) to keep digits
                let g = |x: f64| x / (1.0 + (1.0 - x).sqrt());
                let s2 = s0 * s0;
                C64::from_polar(1.0, f * g(s2 * rho * rho) / g(s2))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadParams {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
    pub focal: FocalFactor,
}

impl Default for QuadParams {
    fn default() -> Self {
        QuadParams { abs_tol: 1e-10, rel_tol: 1e-10, max_subdivisions: 2000, focal: FocalFactor::Debye }
    }
}

impl QuadParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0 && self.rel_tol > 0.0) {
            return Err(Error::InvalidParameter { name: "tolerance", reason: "must be positive" });
        }
        if let FocalFactor::HighNa { s0 } = self.focal {
            if !(s0 > 0.0 && s0 < 1.0) {
                return Err(Error::InvalidParameter { name: "numerical_aperture", reason: "must lie in (0, 1)" });
            }
        }
        Ok(())
    }
}

/// `U(r, phi; f)` with error estimate for an arbitrary pupil function
/// supported on `mask`. The pupil is only sampled strictly inside its
/// support.
pub fn quad_field_fn<P: Fn(f64, f64) -> C64>(
    pupil: P,
    mask: &AmplitudeMask,
    point: EvalPoint,
    f: f64,
    params: &QuadParams,
) -> Result<QuadResult> {
    params.validate()?;
    let (r, phi) = (point.r, point.phi);
    let mut breaks = alloc::vec![0.0];
    let outer_panels = (4.0f64).max((2.0 * r + f.abs() / PI).ceil()) as usize;
    let mut knots: Vec<f64> = (1..outer_panels).map(|i| i as f64 / outer_panels as f64).collect();
    knots.extend(mask.radial_breakpoints().into_iter().filter(|&b| b > 0.0 && b < 1.0));
    knots.sort_by(|a, b| a.partial_cmp(b).unwrap_or(core::cmp::Ordering::Equal));
    breaks.extend(knots);
    breaks.push(1.0);
    let inner_abs = 0.1 * params.abs_tol;
    let inner_rel = 0.1 * params.rel_tol;
    let two_pi_r = 2.0 * PI * r;
    let mut inner_failed = false;
    let outer = integrate_nested(
        |rho| {
            let intervals = mask.theta_intervals(rho);
            let mut val = C64::new(0.0, 0.0);
            let mut err = 0.0;
            let base = (8.0f64).max((8.0 * r * rho).ceil());
            for (a, b) in intervals {
                let n = ((base * (b - a) / (2.0 * PI)).ceil() as usize).max(1);
                let tb: Vec<f64> = (0..=n).map(|i| a + (b - a) * i as f64 / n as f64).collect();
                let res = integrate_nested(
                    |t| (pupil(rho, t) * C64::from_polar(1.0, two_pi_r * rho * (t - phi).cos()), 0.0),
                    &tb,
                    inner_abs,
                    inner_rel,
                    params.max_subdivisions,
                );
                inner_failed |= !res.converged;
                val += res.value;
                err += res.err_est;
            }
            let w = params.focal.eval(rho, f) * (rho / PI);
            (val * w, err * rho / PI)
        },
        &breaks,
        params.abs_tol,
        params.rel_tol,
        params.max_subdivisions,
    );
    Ok(QuadResult { converged: outer.converged && !inner_failed, ..outer })
}

/// `U(r, phi; f)` for an analytic pupil specification.
pub fn quad_field(spec: &PupilSpec, point: EvalPoint, f: f64, params: &QuadParams) -> Result<QuadResult> {
    spec.validate()?;
    let e = spec.evaluator();
    quad_field_fn(|rho, t| e.phasor_unmasked(rho, t), &spec.mask, point, f, params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specfun::{bessel_j, SeriesBudget};

    fn airy(r: f64) -> f64 {
        if r == 0.0 {
            return 1.0;
        }
        bessel_j(1, 2.0 * PI * r, SeriesBudget::new(80).unwrap()) / (PI * r)
    }

    #[test]
    fn one_dimensional_rule() {
        let res = integrate(|x| C64::new(x.exp(), x.cos()), 0.0, 2.0, 1e-14, 1e-14, 100);
        assert!(res.converged);
        assert!((res.value - C64::new(2f64.exp() - 1.0, 2f64.sin())).norm() < 1e-13);
        let osc = integrate(|x| C64::from_polar(1.0, 40.0 * x), 0.0, 1.0, 1e-13, 1e-13, 500);
        let want = (C64::from_polar(1.0, 40.0) - 1.0) / C64::new(0.0, 40.0);
        assert!((osc.value - want).norm() < 1e-12);
    }

    #[test]
    fn on_axis_closed_form() {
        let spec = PupilSpec::clear();
        let p = EvalPoint::polar(0.0, 0.0);
        let q = QuadParams::default();
        let u0 = quad_field(&spec, p, 0.0, &q).unwrap();
        assert!((u0.value - C64::new(1.0, 0.0)).norm() < 1e-12);
        for &f in &[0.5, PI, 7.0] {
            let u = quad_field(&spec, p, f, &q).unwrap();
            let want = (C64::from_polar(1.0, f) - 1.0) / C64::new(0.0, f);
            assert!((u.value - want).norm() < 1e-10);
            assert!(u.converged);
        }
    }

    #[test]
    fn airy_profile_and_null() {
        let spec = PupilSpec::clear();
        let q = QuadParams::default();
        for i in 0..=20 {
            let r = 0.1 * i as f64;
            let u = quad_field(&spec, EvalPoint::polar(r, 0.4), 0.0, &q).unwrap();
            assert!((u.value - C64::new(airy(r), 0.0)).norm() < 1e-9, "r={r}");
        }
        let null = 3.831_705_970_207_512_3 / (2.0 * PI);
        let u = quad_field(&spec, EvalPoint::polar(null, 0.0), 0.0, &q).unwrap();
        assert!(u.value.norm() < 1e-6);
    }

    #[test]
    fn tolerance_refinement_is_consistent() {
        let spec = PupilSpec::with_wavefront(crate::pupil::WavefrontSpec::synthetic_benchmark());
        let pt = EvalPoint::polar(0.7, 0.3);
        let coarse = QuadParams { abs_tol: 1e-6, rel_tol: 1e-6, ..QuadParams::default() };
        let fine = QuadParams { abs_tol: 5e-7, rel_tol: 5e-7, ..QuadParams::default() };
        let a = quad_field(&spec, pt, 2.0, &coarse).unwrap();
        let b = quad_field(&spec, pt, 2.0, &fine).unwrap();
        assert!((a.value - b.value).norm() <= a.err_est.max(1e-12));
    }

    #[test]
    fn rotation_covariance() {
        // rotating the pupil by delta equals evaluating at phi - delta
        let spec = PupilSpec::with_wavefront(crate::pupil::WavefrontSpec::synthetic_benchmark());
        let e = spec.evaluator();
        let delta = 0.6;
        let q = QuadParams { abs_tol: 1e-9, rel_tol: 1e-9, ..QuadParams::default() };
        let rotated = quad_field_fn(|rho, t| e.phasor_unmasked(rho, t - delta), &AmplitudeMask::UnitDisk, EvalPoint::polar(0.5, 1.0), 1.0, &q)
            .unwrap();
        let plain = quad_field(&spec, EvalPoint::polar(0.5, 1.0 - delta), 1.0, &q).unwrap();
        assert!((rotated.value - plain.value).norm() < 1e-8);
    }

    #[test]
    fn high_na_tends_to_debye() {
        let spec = PupilSpec::clear();
        let pt = EvalPoint::polar(0.4, 0.0);
        let debye = quad_field(&spec, pt, PI, &QuadParams::default()).unwrap();
        let hna =
            quad_field(&spec, pt, PI, &QuadParams { focal: FocalFactor::HighNa { s0: 0.05 }, ..QuadParams::default() })
                .unwrap();
        assert!((debye.value - hna.value).norm() <= 1e-3);
        assert!(QuadParams { focal: FocalFactor::HighNa { s0: 1.0 }, ..QuadParams::default() }.validate().is_err());
    }

    #[test]
    fn elliptic_support_area() {
        // on-axis, in focus, the integral is the mask area over pi
        let spec = PupilSpec { mask: AmplitudeMask::Ellipse { ax: 1.0, ay: 0.7 }, ..PupilSpec::clear() };
        let u = quad_field(&spec, EvalPoint::polar(0.0, 0.0), 0.0, &QuadParams::default()).unwrap();
        assert!((u.value - C64::new(0.7, 0.0)).norm() < 1e-10);
    }
}

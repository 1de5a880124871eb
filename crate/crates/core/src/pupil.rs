//! Complex pupil functions `P = A * exp(-i k W)` built from analytic
//! wavefronts, and sampled pupil data sets.

use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_2, PI};

#[allow(unused_imports)]
use num_traits::Float;
use rand_core::SeedableRng;
use rand_distr::{Distribution, StandardNormal};
use rand_xoshiro::Xoshiro256PlusPlus;

use crate::error::{Error, Result};
use crate::zernike::{ZernikeExpansion, ZernikeIndex, ZernikeTerm};
use crate::C64;

/// Cartesian Gaussian bump `weight * exp(-lambda ((x-a)^2 + (y-b)^2))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianBump {
    pub a: f64,
    pub b: f64,
    pub lambda: f64,
    pub weight: f64,
}

impl GaussianBump {
    pub fn new(a: f64, b: f64, lambda: f64, weight: f64) -> Result<Self> {
        if !(lambda > 0.0) {
            return Err(Error::InvalidParameter { name: "lambda_bump", reason: "must be positive" });
        }
        Ok(GaussianBump { a, b, lambda, weight })
    }

    pub fn eval_xy(&self, x: f64, y: f64) -> f64 {
        let (dx, dy) = (x - self.a, y - self.b);
        self.weight * (-self.lambda * (dx * dx + dy * dy)).exp()
    }
}

/// Deterministic wavefront plus the parameters of the sample-time noise.
#[derive(Debug, Clone, PartialEq)]
pub struct WavefrontSpec {
    pub zernike: ZernikeExpansion<f64>,
    pub bumps: Vec<GaussianBump>,
    pub noise_sigma: f64,
    pub noise_seed: u64,
}

impl Default for WavefrontSpec {
    fn default() -> Self {
        WavefrontSpec { zernike: ZernikeExpansion::default(), bumps: Vec::new(), noise_sigma: 0.0, noise_seed: 0 }
    }
}

impl WavefrontSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.noise_sigma >= 0.0) {
            return Err(Error::InvalidParameter { name: "noise_sigma", reason: "must be non-negative" });
        }
        for b in &self.bumps {
            if !(b.lambda > 0.0) {
                return Err(Error::InvalidParameter { name: "lambda_bump", reason: "must be positive" });
            }
        }
        Ok(())
    }

    /// Mixed Zernike / Gaussian wavefront used by the accuracy experiments:
    /// `0.6 Z5^3 - 0.4 Z4^4 - 0.3 Z5^5 + 0.25 Z4^2 + 0.25 Z6^4 - 0.15 Z8^4
    ///  + 0.4 g(-0.3, 0, 15) - 2 [g(0.5, 0.3, 10) + g(0.5, -0.3, 10)]`.
    pub fn synthetic_benchmark() -> Self {
        let z = |n, m| ZernikeIndex::new(n, m).expect("valid index");
        let zernike = ZernikeExpansion::new(alloc::vec![
            (z(5, 3), 0.6),
            (z(4, 4), -0.4),
            (z(5, 5), -0.3),
            (z(4, 2), 0.25),
            (z(6, 4), 0.25),
            (z(8, 4), -0.15),
        ])
        .expect("distinct indices");
        let bumps = alloc::vec![
            GaussianBump { a: -0.3, b: 0.0, lambda: 15.0, weight: 0.4 },
            GaussianBump { a: 0.5, b: 0.3, lambda: 10.0, weight: -2.0 },
            GaussianBump { a: 0.5, b: -0.3, lambda: 10.0, weight: -2.0 },
        ];
        WavefrontSpec { zernike, bumps, noise_sigma: 0.0, noise_seed: 0 }
    }

    /// Evaluator with cached Zernike radial coefficients.
    pub fn evaluator(&self) -> WavefrontEval<'_> {
        WavefrontEval {
            terms: self.zernike.terms().iter().map(|&(idx, c)| (ZernikeTerm::new(idx), c)).collect(),
            bumps: &self.bumps,
        }
    }

    /// Noise-free `W(rho, theta)`.
    pub fn value(&self, rho: f64, theta: f64) -> f64 {
        self.evaluator().value(rho, theta)
    }
}

/// Reusable wavefront evaluator.
#[derive(Debug, Clone)]
pub struct WavefrontEval<'a> {
    terms: Vec<(ZernikeTerm, f64)>,
    bumps: &'a [GaussianBump],
}

impl WavefrontEval<'_> {
    pub fn value(&self, rho: f64, theta: f64) -> f64 {
        let (s, c) = theta.sin_cos();
        let (x, y) = (rho * c, rho * s);
        let mut w = 0.0;
        for (t, coef) in &self.terms {
            w += coef * t.eval(rho, theta);
        }
        for b in self.bumps {
            w += b.eval_xy(x, y);
        }
        w
    }
}

/// Noise-free wavefront value, see [`WavefrontSpec::value`].
pub fn wavefront_value(spec: &WavefrontSpec, rho: f64, theta: f64) -> f64 {
    spec.value(rho, theta)
}

/// Binary amplitude transmittance inside the unit pupil.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AmplitudeMask {
    UnitDisk,
    /// `x^2/ax^2 + y^2/ay^2 <= 1`.
    Ellipse { ax: f64, ay: f64 },
    /// No aperture beyond the unit pupil itself.
    None,
}

/// Closed angular interval `[start, end]` in radians.
pub type ThetaInterval = (f64, f64);

impl AmplitudeMask {
    pub fn validate(&self) -> Result<()> {
        if let AmplitudeMask::Ellipse { ax, ay } = *self {
            if !(ax > 0.0 && ax <= 1.0 && ay > 0.0 && ay <= 1.0) {
                return Err(Error::InvalidParameter { name: "ellipse", reason: "semi-axes must lie in (0, 1]" });
            }
        }
        Ok(())
    }

    pub fn contains_xy(&self, x: f64, y: f64) -> bool {
        match *self {
            AmplitudeMask::UnitDisk | AmplitudeMask::None => x * x + y * y <= 1.0,
            AmplitudeMask::Ellipse { ax, ay } => {
                let (u, v) = (x / ax, y / ay);
                u * u + v * v <= 1.0
            }
        }
    }

    /// Radii where the angular support changes shape.
    pub fn radial_breakpoints(&self) -> Vec<f64> {
        match *self {
            AmplitudeMask::Ellipse { ax, ay } if ax != ay => alloc::vec![ax.min(ay), ax.max(ay)],
            AmplitudeMask::Ellipse { ax, .. } => alloc::vec![ax],
            _ => Vec::new(),
        }
    }

    /// Angular support on the circle of radius `rho`, as at most two
    /// intervals within one period. Empty when the circle misses the mask.
    pub fn theta_intervals(&self, rho: f64) -> Vec<ThetaInterval> {
        let full = alloc::vec![(0.0, 2.0 * PI)];
        let (ax, ay) = match *self {
            AmplitudeMask::UnitDisk | AmplitudeMask::None => {
                return if rho <= 1.0 { full } else { Vec::new() };
            }
            AmplitudeMask::Ellipse { ax, ay } => (ax, ay),
        };
        if rho == 0.0 {
            return full;
        }
        let (a, b) = (1.0 / (ax * ax), 1.0 / (ay * ay));
        let target = 1.0 / (rho * rho);
        if a == b {
            return if target >= a { full } else { Vec::new() };
        }
        // inside iff lo + (hi - lo) * s^2 <= target, s the sine (or cosine)
        // measured from the longer axis
        let (lo, hi, centers) = if b > a { (a, b, [0.0, PI]) } else { (b, a, [FRAC_PI_2, 3.0 * FRAC_PI_2]) };
        let t = (target - lo) / (hi - lo);
        if t >= 1.0 {
            return full;
        }
        if t < 0.0 {
            return Vec::new();
        }
        let half = t.sqrt().asin();
        centers.iter().map(|&c| (c - half, c + half)).collect()
    }
}

/// Sign of the phase exponent; the physical convention is `Minus`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PhaseSign {
    #[default]
    Minus,
    Plus,
}

/// Complete analytic pupil description.
#[derive(Debug, Clone, PartialEq)]
pub struct PupilSpec {
    pub wavefront: WavefrontSpec,
    pub mask: AmplitudeMask,
    pub refractive_index: f64,
    /// Wavelength in the length units of the wavefront.
    pub wavelength: f64,
    /// Used only by the high-NA focal factor of the quadrature oracle.
    pub numerical_aperture: f64,
    pub phase_sign: PhaseSign,
}

impl Default for PupilSpec {
    fn default() -> Self {
        // 2 pi n / wavelength = 1: the wavefront is read as a phase in radians
        PupilSpec {
            wavefront: WavefrontSpec::default(),
            mask: AmplitudeMask::UnitDisk,
            refractive_index: 1.0,
            wavelength: 2.0 * PI,
            numerical_aperture: 0.5,
            phase_sign: PhaseSign::Minus,
        }
    }
}

impl PupilSpec {
    /// Constant unit pupil on the unit disk.
    pub fn clear() -> Self {
        PupilSpec::default()
    }

    pub fn with_wavefront(wavefront: WavefrontSpec) -> Self {
        PupilSpec { wavefront, ..PupilSpec::default() }
    }

    pub fn validate(&self) -> Result<()> {
        self.wavefront.validate()?;
        self.mask.validate()?;
        if !(self.wavelength > 0.0) {
            return Err(Error::InvalidParameter { name: "wavelength", reason: "must be positive" });
        }
        if !(self.numerical_aperture > 0.0 && self.numerical_aperture < 1.0) {
            return Err(Error::InvalidParameter { name: "numerical_aperture", reason: "must lie in (0, 1)" });
        }
        Ok(())
    }

    /// Phase multiplier `k` in `exp(-i k W)`, including the sign convention.
    pub fn phase_scale(&self) -> f64 {
        let k = 2.0 * PI * self.refractive_index / self.wavelength;
        match self.phase_sign {
            PhaseSign::Minus => -k,
            PhaseSign::Plus => k,
        }
    }

    /// Complex pupil from a known wavefront value.
    pub fn phasor(&self, x: f64, y: f64, w: f64) -> C64 {
        if !self.mask.contains_xy(x, y) {
            return C64::new(0.0, 0.0);
        }
        C64::from_polar(1.0, self.phase_scale() * w)
    }

    pub fn evaluator(&self) -> PupilEval<'_> {
        PupilEval { spec: self, wavefront: self.wavefront.evaluator(), k: self.phase_scale() }
    }
}

/// Reusable pupil evaluator.
#[derive(Debug, Clone)]
pub struct PupilEval<'a> {
    spec: &'a PupilSpec,
    wavefront: WavefrontEval<'a>,
    k: f64,
}

impl PupilEval<'_> {
    pub fn value(&self, rho: f64, theta: f64) -> C64 {
        let (s, c) = theta.sin_cos();
        if !self.spec.mask.contains_xy(rho * c, rho * s) {
            return C64::new(0.0, 0.0);
        }
        C64::from_polar(1.0, self.k * self.wavefront.value(rho, theta))
    }

    pub fn value_xy(&self, x: f64, y: f64) -> C64 {
        self.value(x.hypot(y), y.atan2(x))
    }

    /// Value assuming the point is inside the mask; used where the caller has
    /// already restricted the domain.
    pub fn phasor_unmasked(&self, rho: f64, theta: f64) -> C64 {
        C64::from_polar(1.0, self.k * self.wavefront.value(rho, theta))
    }
}

/// `P(rho, theta)` for a pupil specification.
pub fn pupil_value(spec: &PupilSpec, rho: f64, theta: f64) -> C64 {
    spec.evaluator().value(rho, theta)
}

/// One pupil sample at Cartesian pupil coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PupilSample {
    pub x: f64,
    pub y: f64,
    pub value: C64,
}

/// Pupil data restricted to the unit disk.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PupilSamples {
    points: Vec<PupilSample>,
}

/// Slack allowed on the unit-disk test for points read from text files.
pub const DISK_TOLERANCE: f64 = 1e-12;

impl PupilSamples {
    pub fn new(points: Vec<PupilSample>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptySampling);
        }
        for p in &points {
            if !(p.x * p.x + p.y * p.y <= 1.0 + DISK_TOLERANCE) {
                return Err(Error::InvalidParameter { name: "samples", reason: "point outside the unit disk" });
            }
        }
        Ok(PupilSamples { points })
    }

    pub fn points(&self) -> &[PupilSample] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn mean(&self) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for p in &self.points {
            acc += p.value;
        }
        acc / self.points.len() as f64
    }
}

/// Square Cartesian lattice of `side x side` points over `[-half, half]^2`,
/// endpoints included.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleGrid {
    pub side: usize,
    pub half_width: f64,
}

impl SampleGrid {
    pub fn new(side: usize, half_width: f64) -> Result<Self> {
        if side < 2 || !(half_width > 0.0) {
            return Err(Error::InvalidParameter { name: "grid", reason: "need side >= 2 and positive width" });
        }
        Ok(SampleGrid { side, half_width })
    }

    pub fn coordinate(&self, i: usize) -> f64 {
        -self.half_width + 2.0 * self.half_width * i as f64 / (self.side - 1) as f64
    }

    /// Lattice points inside the closed unit disk, `y` outer and `x` inner.
    pub fn disk_points(&self) -> Vec<(f64, f64)> {
        let mut out = Vec::new();
        for iy in 0..self.side {
            let y = self.coordinate(iy);
            for ix in 0..self.side {
                let x = self.coordinate(ix);
                if x * x + y * y <= 1.0 {
                    out.push((x, y));
                }
            }
        }
        out
    }
}

/// Samples the pupil on the lattice points inside the unit disk. With a
/// positive noise level, `sigma * N(0, 1)` from a generator seeded by
/// `noise_seed` is added to the wavefront before the phase is formed.
pub fn sample_pupil(spec: &PupilSpec, grid: &SampleGrid) -> Result<PupilSamples> {
    spec.validate()?;
    let pts = grid.disk_points();
    if pts.is_empty() {
        return Err(Error::EmptySampling);
    }
    let w = spec.wavefront.evaluator();
    let sigma = spec.wavefront.noise_sigma;
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(spec.wavefront.noise_seed);
    let mut out = Vec::with_capacity(pts.len());
    for (x, y) in pts {
        let mut wv = w.value(x.hypot(y), y.atan2(x));
        if sigma > 0.0 {
            let z: f64 = StandardNormal.sample(&mut rng);
            wv += sigma * z;
        }
        out.push(PupilSample { x, y, value: spec.phasor(x, y, wv) });
    }
    PupilSamples::new(out)
}

/// Noise-free pupil values at Cartesian points.
pub fn noise_free_values(spec: &PupilSpec, points: &[(f64, f64)]) -> Vec<C64> {
    let e = spec.evaluator();
    points.iter().map(|&(x, y)| e.value_xy(x, y)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn synthetic_value_at_origin() {
        let w = WavefrontSpec::synthetic_benchmark();
        let want = 0.4 * (-1.35f64).exp() - 4.0 * (-3.4f64).exp();
        assert!((w.value(0.0, 0.3) - want).abs() < 1e-14);
        assert_eq!(WavefrontSpec::default().value(0.4, 1.0), 0.0);
        let single = WavefrontSpec {
            zernike: ZernikeExpansion::new(alloc::vec![(ZernikeIndex::new(2, 0).unwrap(), 1.0)]).unwrap(),
            ..WavefrontSpec::default()
        };
        assert!((single.value(1.0, 2.2) - 3f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn bump_polar_and_cartesian_agree() {
        let b = GaussianBump::new(0.5, -0.3, 10.0, 2.0).unwrap();
        let (rho, th) = (0.7f64, 2.1f64);
        let (q, al) = (0.5f64.hypot(-0.3), (-0.3f64).atan2(0.5));
        let polar = 2.0 * (-10.0 * (q * q + rho * rho - 2.0 * rho * q * (th - al).cos())).exp();
        assert!((b.eval_xy(rho * th.cos(), rho * th.sin()) - polar).abs() < 1e-14);
        assert!(GaussianBump::new(0.0, 0.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn pupil_values() {
        let clear = PupilSpec::clear();
        assert_eq!(pupil_value(&clear, 0.5, 1.0), C64::new(1.0, 0.0));
        let ell = PupilSpec { mask: AmplitudeMask::Ellipse { ax: 1.0, ay: 0.7 }, ..PupilSpec::clear() };
        let e = ell.evaluator();
        assert_eq!(e.value_xy(0.0, 0.71), C64::new(0.0, 0.0));
        assert!((e.value_xy(0.0, 0.69).norm() - 1.0).abs() < 1e-15);
        // W = pi/2 with unit phase scale gives -i
        let p = clear.phasor(0.1, 0.1, FRAC_PI_2);
        assert!((p - C64::new(0.0, -1.0)).norm() < 1e-15);
        let flipped = PupilSpec { phase_sign: PhaseSign::Plus, ..PupilSpec::clear() };
        assert!((flipped.phasor(0.1, 0.1, FRAC_PI_2) - C64::new(0.0, 1.0)).norm() < 1e-15);
    }

    #[test]
    fn modulus_equals_mask() {
        let spec = PupilSpec::with_wavefront(WavefrontSpec::synthetic_benchmark());
        let e = spec.evaluator();
        for i in 0..50 {
            let rho = i as f64 / 49.0;
            let th = 0.37 * i as f64;
            assert!((e.value(rho, th).norm() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn ellipse_theta_intervals_match_membership() {
        for &(ax, ay) in &[(1.0, 0.7), (0.6, 1.0), (0.8, 0.8)] {
            let m = AmplitudeMask::Ellipse { ax, ay };
            for i in 1..40 {
                let rho = i as f64 / 39.0;
                let iv = m.theta_intervals(rho);
                for j in 0..720 {
                    let th = -FRAC_PI_2 + 2.0 * PI * (j as f64 + 0.5) / 720.0;
                    let inside = m.contains_xy(rho * th.cos(), rho * th.sin());
                    let covered = iv.iter().any(|&(a, b)| {
                        let t = (th - a).rem_euclid(2.0 * PI);
                        t <= b - a
                    });
                    if inside != covered {
                        // allow disagreement only at the boundary itself
                        let (x, y) = (rho * th.cos() / ax, rho * th.sin() / ay);
                        assert!((x * x + y * y - 1.0).abs() < 1e-9, "ax={ax} ay={ay} rho={rho} th={th}");
                    }
                }
            }
        }
    }

    #[test]
    fn lattice_sampling() {
        let g = SampleGrid::new(100, 1.0).unwrap();
        let s = sample_pupil(&PupilSpec::clear(), &g).unwrap();
        assert!(s.len() > 7000 && s.len() < 8000);
        assert!(s.points().iter().all(|p| p.x * p.x + p.y * p.y <= 1.0));
        let mut a = PupilSpec::with_wavefront(WavefrontSpec::synthetic_benchmark());
        a.wavefront.noise_seed = 1;
        let mut b = a.clone();
        b.wavefront.noise_seed = 2;
        assert_eq!(sample_pupil(&a, &g).unwrap(), sample_pupil(&b, &g).unwrap());
        a.wavefront.noise_sigma = 0.5;
        b.wavefront.noise_sigma = 0.5;
        b.wavefront.noise_seed = 1;
        assert_eq!(sample_pupil(&a, &g).unwrap(), sample_pupil(&b, &g).unwrap());
        b.wavefront.noise_seed = 3;
        assert_ne!(sample_pupil(&a, &g).unwrap(), sample_pupil(&b, &g).unwrap());
        let outside = SampleGrid::new(2, 5.0).unwrap();
        assert_eq!(sample_pupil(&PupilSpec::clear(), &outside), Err(Error::EmptySampling));
    }
}

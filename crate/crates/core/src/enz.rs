//! Extended Nijboer-Zernike evaluation of the diffraction integral for
//! cosine-type Zernike expansions of the pupil.
//!
//! Each term contributes `c N_n^m 2 i^m V_n^m(r, f) cos(m phi)` where
//! `V_n^m(r, f) = int_0^1 exp(i f rho^2) R_n^m(rho) J_m(2 pi r rho) rho d rho`.
//! Three series for `V` are offered: power-Bessel (PB), Bessel-Bessel (BB)
//! and the rearranged Bessel-Bessel form driven by Wigner 3j symbols (EBB).

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::field::{DefocusVector, EvalGrid, FieldMatrix};
use crate::specfun::{binomial, bessel_j_scaled, spherical_j, wigner_3j, SeriesBudget};
use crate::zernike::{ZernikeExpansion, ZernikeIndex};
use crate::C64;

/// Largest `|f|` accepted by the power-Bessel series.
pub const PB_DEFOCUS_LIMIT: f64 = 5.0 * PI;
/// Default and maximum series length for the Bessel-Bessel variants.
pub const BB_DEFAULT_TERMS: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EnzVariant {
    PowerBessel,
    BesselBessel,
    EnhancedBesselBessel,
}

impl EnzVariant {
    pub fn name(self) -> &'static str {
        match self {
            EnzVariant::PowerBessel => "enz-pb",
            EnzVariant::BesselBessel => "enz-bb",
            EnzVariant::EnhancedBesselBessel => "enz-ebb",
        }
    }
}

/// Series controls. `None` selects the defaults: for PB at least
/// `max(ceil(3|f|) + 5, 20)` terms, extended until `|f|^k / k!` drops below
/// 1e-16; up to 60 terms with early exit for BB/EBB; and a Bessel budget of
/// at least 15 terms grown with the largest radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnzParams {
    pub variant: EnzVariant,
    pub series_terms: Option<usize>,
    pub bessel_terms: Option<SeriesBudget>,
}

impl EnzParams {
    pub fn new(variant: EnzVariant) -> Self {
        EnzParams { variant, series_terms: None, bessel_terms: None }
    }

    pub fn with_series_terms(mut self, s: usize) -> Self {
        self.series_terms = Some(s);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.series_terms == Some(0) {
            return Err(Error::InvalidParameter { name: "series_terms", reason: "must be at least 1" });
        }
        Ok(())
    }

    fn bessel_budget(&self, r_max: f64) -> SeriesBudget {
        self.bessel_terms
            .unwrap_or_else(|| SeriesBudget::for_argument(2.0 * PI * r_max, SeriesBudget::BESSEL_DEFAULT))
    }

    /// Series length used at defocus `f`.
    pub fn series_terms_for(&self, f: f64) -> usize {
        if let Some(s) = self.series_terms {
            return s;
        }
        match self.variant {
            EnzVariant::PowerBessel => pb_auto_terms(f),
            _ => bb_auto_terms(f),
        }
    }

    fn check_defocus(&self, f: f64) -> Result<()> {
        if self.variant == EnzVariant::PowerBessel && !(f.abs() <= PB_DEFOCUS_LIMIT) {
            return Err(Error::DefocusOutOfRange { f, limit: PB_DEFOCUS_LIMIT });
        }
        Ok(())
    }
}

fn pb_auto_terms(f: f64) -> usize {
    let floor = ((3.0 * f.abs()).ceil() as usize + 5).max(20);
    let af = f.abs();
    // ln(|f|^k / k!) against ln(1e-16)
    let mut ln_t = 0.0;
    let mut k = 0usize;
    loop {
        if k >= floor && ln_t < -36.84 {
            return k;
        }
        k += 1;
        ln_t += af.ln() - (k as f64).ln();
        if af == 0.0 {
            return floor;
        }
    }
}

// Smallest k past |f|/2 where (2k + 1)|j_k(f/2)| has dropped below 1e-17,
// capped at the default length.
fn bb_auto_terms(f: f64) -> usize {
    let z = 0.5 * f;
    for k in 0..BB_DEFAULT_TERMS {
        if k as f64 > z.abs() && (2 * k + 1) as f64 * spherical_j(k as u32, z).abs() < 1e-17 {
            return k.max(1);
        }
    }
    BB_DEFAULT_TERMS
}

fn check_pair(n: u32, m: u32) -> Result<(u32, u32)> {
    if m > n || !(n - m).is_multiple_of(2) {
        return Err(Error::InvalidIndex { n: n as i64, m: m as i64 });
    }
    Ok(((n - m) / 2, (n + m) / 2))
}

/// Power-Bessel coefficient `u_{kj}` for `0 <= j <= p`.
pub fn coeff_u(n: u32, m: u32, k: u32, j: u32) -> Result<f64> {
    let (p, q) = check_pair(n, m)?;
    if j > p {
        return Err(Error::IndexRange { what: "u coefficient (j > p)" });
    }
    let (m, k, j, p, q) = (m as i64, k as i64, j as i64, p as i64, q as i64);
    let sign = if p % 2 == 0 { 1.0 } else { -1.0 };
    let v = (m + k + 2 * j + 1) as f64 / (q + k + j + 1) as f64 * binomial(m + k + j, k) * binomial(k + j, k)
        * binomial(k, p - j)
        / binomial(q + k + j, k);
    Ok(sign * v)
}

/// `f_{p,s}^m`: `R_{m+2p}^m = rho^m sum_s f_{p,s}^m R_{2s}^0`.
pub fn coeff_f(m: u32, p: u32, s: u32) -> f64 {
    if s > p {
        return 0.0;
    }
    if m == 0 {
        return if s == p { 1.0 } else { 0.0 };
    }
    let (m, p, s) = (m as i64, p as i64, s as i64);
    let sign = if (p - s) % 2 == 0 { 1.0 } else { -1.0 };
    sign * (2 * s + 1) as f64 / (p + s + 1) as f64 * binomial(m + p - s - 1, m - 1) * binomial(m + p + s, s)
        / binomial(p + s, s)
}

/// `g_{u,l}^m`: `rho^m R_{2u}^0 = sum_l g_{u,l}^m R_{m+2l}^m`, nonzero for
/// `l <= u <= l + m`.
pub fn coeff_g(m: u32, u: u32, l: u32) -> f64 {
    if u < l || u > l + m {
        return 0.0;
    }
    let (m, u, l) = (m as i64, u as i64, l as i64);
    (m + 2 * l + 1) as f64 / (m + u + l + 1) as f64 * binomial(m, u - l) * binomial(u + l, l) / binomial(m + l + u, m + l)
}

/// `b_{s1,s2,t}`: `R_{2 s1}^0 R_{2 s2}^0 = sum_t b_{s1,s2,t} R_{2(s1+s2-2t)}^0`.
pub fn coeff_b(s1: u32, s2: u32, t: u32) -> f64 {
    if t > s1.min(s2) {
        return 0.0;
    }
    let a = |k: u32| binomial(2 * k as i64, k as i64);
    let (s1, s2, t) = (s1, s2, t);
    let num = (2 * s1 + 2 * s2 - 4 * t + 1) as f64;
    let den = (2 * s1 + 2 * s2 - 2 * t + 1) as f64;
    num / den * (a(s1 - t) * a(t) * a(s2 - t) / a(s1 + s2 - t))
}

/// Linearization weights `w_{k,l}` of `R_{2k}^0 R_{m+2p}^m` in
/// `R_{m+2l}^m`, indexed by `l = 0..=k+p`.
pub fn bb_coeffs(m: u32, p: u32, k: u32) -> Vec<f64> {
    let mut w = vec![0.0; (k + p + 1) as usize];
    for s in 0..=p {
        let fs = coeff_f(m, p, s);
        if fs == 0.0 {
            continue;
        }
        for t in 0..=k.min(s) {
            let u = k + s - 2 * t;
            let bst = coeff_b(k, s, t);
            let lo = u.saturating_sub(m);
            for l in lo..=u {
                w[l as usize] += fs * bst * coeff_g(m, u, l);
            }
        }
    }
    w
}

/// `(-1)^((n1 - n2 - m3)/2) sqrt(n3 + 1)` times the 3j symbol with rows
/// `(n1/2, n2/2, n3/2)` and `(m1/2, m2/2, -m3/2)`.
pub fn a_coefficient(n1: i32, n2: i32, n3: i32, m1: i32, m2: i32, m3: i32) -> Result<f64> {
    let e = n1 - n2 - m3;
    if e.rem_euclid(2) != 0 || n3 < 0 {
        return Err(Error::IndexRange { what: "A coefficient (n1 - n2 - m3 must be even)" });
    }
    let sign = if (e / 2).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
    Ok(sign * ((n3 + 1) as f64).sqrt() * wigner_3j(n1, n2, n3, m1, m2, -m3))
}

/// Weight of `B_h` in the `k`-th term of the rearranged series:
/// `(h + 1)` times the square of the 3j symbol `(k, n/2, h/2; 0, m/2, -m/2)`.
/// Equals the product of two `A` coefficients and coincides with `w_{k,l}`
/// for `h = m + 2l`.
pub fn ebb_weight(k: u32, n: u32, h: u32, m: u32) -> f64 {
    let w = wigner_3j(2 * k as i32, n as i32, h as i32, 0, m as i32, -(m as i32));
    (h + 1) as f64 * w * w
}

/// `(2k + 1) i^k exp(i f / 2) j_k(f / 2)`.
pub fn c_coefficient(k: u32, f: f64) -> C64 {
    (2 * k + 1) as f64 * i_pow(k) * C64::from_polar(1.0, 0.5 * f) * spherical_j(k, 0.5 * f)
}

fn i_pow(k: u32) -> C64 {
    match k % 4 {
        0 => C64::new(1.0, 0.0),
        1 => C64::new(0.0, 1.0),
        2 => C64::new(-1.0, 0.0),
        _ => C64::new(0.0, -1.0),
    }
}

/// Precomputed series coefficients for one `(n, m)`.
#[derive(Debug, Clone)]
struct TermTables {
    m: u32,
    p: u32,
    // PB: u[k * (p + 1) + j]
    u: Vec<f64>,
    // BB/EBB: for each k, (h, signed weight) pairs
    bb: Vec<Vec<(u32, f64)>>,
}

impl TermTables {
    fn new(n: u32, m: u32, variant: EnzVariant, terms: usize) -> Result<Self> {
        let (p, q) = check_pair(n, m)?;
        let mut t = TermTables { m, p, u: Vec::new(), bb: Vec::new() };
        match variant {
            EnzVariant::PowerBessel => {
                t.u.reserve(terms * (p as usize + 1));
                for k in 0..terms as u32 {
                    for j in 0..=p {
                        t.u.push(coeff_u(n, m, k, j)?);
                    }
                }
            }
            EnzVariant::BesselBessel => {
                for k in 0..terms as u32 {
                    let w = bb_coeffs(m, p, k);
                    let l0 = k.saturating_sub(q).max(p.saturating_sub(k));
                    t.bb.push(
                        (l0..=k + p)
                            .map(|l| (m + 2 * l, if l % 2 == 0 { w[l as usize] } else { -w[l as usize] }))
                            .collect(),
                    );
                }
            }
            EnzVariant::EnhancedBesselBessel => {
                for k in 0..terms as u32 {
                    let lo = m.max(n.abs_diff(2 * k));
                    t.bb.push(
                        (lo..=n + 2 * k)
                            .step_by(2)
                            .map(|h| {
                                let s = if ((h - m) / 2).is_multiple_of(2) { 1.0 } else { -1.0 };
                                (h, s * ebb_weight(k, n, h, m))
                            })
                            .collect(),
                    );
                }
            }
        }
        Ok(t)
    }

    /// `sum_k c_k w_{k,h}` for the BB/EBB lists, times `scale`, as a dense
    /// vector starting at the smallest `h`.
    fn fold_k(&self, sf: &SeriesFactors, scale: C64) -> (usize, Vec<C64>) {
        let lists = &self.bb[..sf.k.len().min(self.bb.len())];
        let lo = lists.iter().filter_map(|l| l.first()).map(|e| e.0).min().unwrap_or(0) as usize;
        let hi = lists.iter().filter_map(|l| l.last()).map(|e| e.0).max().unwrap_or(0) as usize;
        let mut beta = vec![C64::new(0.0, 0.0); hi + 1 - lo.min(hi + 1)];
        for (ck, list) in sf.k.iter().zip(lists) {
            let c = ck * scale;
            for &(h, w) in list {
                beta[h as usize - lo] += c * w;
            }
        }
        (lo, beta)
    }

    /// Largest Bessel order needed by `terms` series terms.
    fn max_order(&self, variant: EnzVariant, terms: usize) -> u32 {
        let k = terms.saturating_sub(1) as u32;
        match variant {
            // J_{m+k+2j+1}
            EnzVariant::PowerBessel => self.m + k + 2 * self.p + 1,
            // J_{h+1}, h <= m + 2(k + p)
            _ => self.m + 2 * (k + self.p) + 1,
        }
    }
}

/// Bessel values at one radius, `x = 2 pi r`. For PB `vals[nu] = J_nu(x) / x^nu`,
/// otherwise `vals[h] = J_{h+1}(x) / x`.
#[derive(Debug, Clone)]
struct RadialBessel {
    x: f64,
    vals: Vec<f64>,
}

impl RadialBessel {
    fn new(r: f64, variant: EnzVariant, max_order: u32, budget: SeriesBudget) -> Self {
        let x = 2.0 * PI * r;
        let vals = match variant {
            EnzVariant::PowerBessel => (0..=max_order).map(|nu| bessel_j_scaled(nu, x, nu, budget)).collect(),
            _ => (0..max_order).map(|h| bessel_j_scaled(h + 1, x, 1, budget)).collect(),
        };
        RadialBessel { x, vals }
    }
}

// Defocus-dependent factors of one series: (-2 i f)^k for PB, C_{2k}^0(f)
// otherwise, and the common prefactor.
struct SeriesFactors {
    pre: C64,
    k: Vec<C64>,
}

impl SeriesFactors {
    fn new(variant: EnzVariant, f: f64, terms: usize) -> Self {
        match variant {
            EnzVariant::PowerBessel => {
                let step = C64::new(0.0, -2.0 * f);
                let mut k = Vec::with_capacity(terms);
                let mut acc = C64::new(1.0, 0.0);
                for _ in 0..terms {
                    k.push(acc);
                    acc *= step;
                }
                SeriesFactors { pre: C64::from_polar(1.0, f), k }
            }
            _ => SeriesFactors {
                pre: C64::new(1.0, 0.0),
                k: (0..terms as u32).map(|k| c_coefficient(k, f)).collect(),
            },
        }
    }
}

fn eval_v(t: &TermTables, rb: &RadialBessel, sf: &SeriesFactors, variant: EnzVariant) -> C64 {
    let mut acc = C64::new(0.0, 0.0);
    match variant {
        EnzVariant::PowerBessel => {
            // J_{m+k+2j+1}(x) / x^{k+1} = vals[m+k+2j+1] * x^{m+2j}
            let x2 = rb.x * rb.x;
            let base = rb.x.powi(t.m as i32);
            let stride = t.p as usize + 1;
            for (k, &fk) in sf.k.iter().enumerate() {
                let u = &t.u[k * stride..(k + 1) * stride];
                let mut pw = base;
                let mut inner = 0.0;
                for (j, &ukj) in u.iter().enumerate() {
                    if ukj != 0.0 {
                        inner += ukj * rb.vals[t.m as usize + k + 2 * j + 1] * pw;
                    }
                    pw *= x2;
                }
                acc += fk * inner;
            }
        }
        _ => {
            for (ck, list) in sf.k.iter().zip(&t.bb) {
                let inner: f64 = list.iter().map(|&(h, w)| w * rb.vals[h as usize]).sum();
                acc += ck * inner;
            }
        }
    }
    acc * sf.pre
}

fn single_v(n: u32, m: u32, r: f64, f: f64, params: &EnzParams, variant: EnzVariant) -> Result<C64> {
    let params = EnzParams { variant, ..*params };
    params.validate()?;
    params.check_defocus(f)?;
    if !(r >= 0.0) || !r.is_finite() || !f.is_finite() {
        return Err(Error::Domain { what: "V_n^m", value: if f.is_finite() { r } else { f } });
    }
    let terms = params.series_terms_for(f);
    let t = TermTables::new(n, m, variant, terms)?;
    let rb = RadialBessel::new(r, variant, t.max_order(variant, terms), params.bessel_budget(r));
    Ok(eval_v(&t, &rb, &SeriesFactors::new(variant, f, terms), variant))
}

/// `V_n^m(r, f)` by the power-Bessel series; `|f| <= 5 pi`.
pub fn v_pb(n: u32, m: u32, r: f64, f: f64, params: &EnzParams) -> Result<C64> {
    single_v(n, m, r, f, params, EnzVariant::PowerBessel)
}

/// `V_n^m(r, f)` by the Bessel-Bessel series.
pub fn v_bb(n: u32, m: u32, r: f64, f: f64, params: &EnzParams) -> Result<C64> {
    single_v(n, m, r, f, params, EnzVariant::BesselBessel)
}

/// `V_n^m(r, f)` by the rearranged Bessel-Bessel series.
pub fn v_ebb(n: u32, m: u32, r: f64, f: f64, params: &EnzParams) -> Result<C64> {
    single_v(n, m, r, f, params, EnzVariant::EnhancedBesselBessel)
}

/// Pupil expansion restricted to cosine-type terms.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EnzModel {
    expansion: ZernikeExpansion<C64>,
}

impl EnzModel {
    pub fn new(expansion: ZernikeExpansion<C64>) -> Result<Self> {
        if let Some((idx, _)) = expansion.terms().iter().find(|(i, _)| !i.is_cosine()) {
            return Err(Error::SineTerm { n: idx.n(), m: idx.m() });
        }
        Ok(EnzModel { expansion })
    }

    pub fn from_terms(terms: Vec<(ZernikeIndex, C64)>) -> Result<Self> {
        Self::new(ZernikeExpansion::new(terms)?)
    }

    pub fn expansion(&self) -> &ZernikeExpansion<C64> {
        &self.expansion
    }
}

/// Evaluation state for one model, grid and defocus vector. Bessel values
/// are computed once per distinct radius; `V` is evaluated per distinct
/// radius and defocus, then spread over the angles.
#[derive(Debug, Clone)]
pub struct EnzPlan {
    params: EnzParams,
    terms: Vec<(TermTables, C64, usize)>,
    radial: Vec<RadialBessel>,
    point_radius: Vec<u32>,
    // cos(m phi_j) per distinct m, indexed by the third field of `terms`
    angular: Vec<Vec<f64>>,
    max_terms: usize,
}

impl EnzPlan {
    pub fn new(model: &EnzModel, grid: &EvalGrid, defocus: &DefocusVector, params: EnzParams) -> Result<Self> {
        params.validate()?;
        for &f in defocus.values() {
            params.check_defocus(f)?;
        }
        let variant = params.variant;
        let max_terms = defocus.values().iter().map(|&f| params.series_terms_for(f)).max().unwrap_or(1);

        let mut ms: Vec<u32> = Vec::new();
        let mut terms = Vec::with_capacity(model.expansion.len());
        let mut max_order = 1;
        for &(idx, c) in model.expansion.terms() {
            let m = idx.abs_m();
            let t = TermTables::new(idx.n(), m, variant, max_terms)?;
            max_order = max_order.max(t.max_order(variant, max_terms));
            let slot = match ms.iter().position(|&x| x == m) {
                Some(i) => i,
                None => {
                    ms.push(m);
                    ms.len() - 1
                }
            };
            terms.push((t, c * idx.normalization() * 2.0 * i_pow(m), slot));
        }

        let mut order: Vec<u32> = (0..grid.len() as u32).collect();
        let pts = grid.points();
        order.sort_by(|&a, &b| pts[a as usize].r.total_cmp(&pts[b as usize].r));
        let mut radii: Vec<f64> = Vec::new();
        let mut point_radius = vec![0u32; grid.len()];
        for &j in &order {
            let r = pts[j as usize].r;
            if radii.last() != Some(&r) {
                radii.push(r);
            }
            point_radius[j as usize] = (radii.len() - 1) as u32;
        }
        let budget = params.bessel_budget(grid.max_radius());
        let radial = radii.iter().map(|&r| RadialBessel::new(r, variant, max_order, budget)).collect();
        let angular = ms.iter().map(|&m| pts.iter().map(|p| (m as f64 * p.phi).cos()).collect()).collect();
        Ok(EnzPlan { params, terms, radial, point_radius, angular, max_terms })
    }

    /// Number of distinct radii in the grid.
    pub fn radius_count(&self) -> usize {
        self.radial.len()
    }

    /// The field over the grid at defocus `f`.
    pub fn eval_row(&self, f: f64) -> Result<Vec<C64>> {
        self.params.check_defocus(f)?;
        let variant = self.params.variant;
        let terms = self.params.series_terms_for(f).min(self.max_terms);
        let sf = SeriesFactors::new(variant, f, terms);
        let mut out = vec![C64::new(0.0, 0.0); self.point_radius.len()];
        let mut v = vec![C64::new(0.0, 0.0); self.radial.len()];
        for (t, weight, slot) in &self.terms {
            if variant == EnzVariant::PowerBessel {
                for (vi, rb) in v.iter_mut().zip(&self.radial) {
                    *vi = eval_v(t, rb, &sf, variant) * weight;
                }
            } else {
                // the Bessel-Bessel forms are single sums over h once the
                // k-sum is folded into per-f coefficients
                let (h0, beta) = t.fold_k(&sf, sf.pre * weight);
                for (vi, rb) in v.iter_mut().zip(&self.radial) {
                    *vi = beta.iter().zip(&rb.vals[h0..]).map(|(b, &j)| b * j).sum();
                }
            }
            let cosines = &self.angular[*slot];
            for ((o, &ri), &c) in out.iter_mut().zip(&self.point_radius).zip(cosines) {
                *o += v[ri as usize] * c;
            }
        }
        Ok(out)
    }
}

/// `U` on the grid for every defocus value.
pub fn compute_field_enz(
    model: &EnzModel,
    grid: &EvalGrid,
    defocus: &DefocusVector,
    params: EnzParams,
) -> Result<FieldMatrix> {
    let plan = EnzPlan::new(model, grid, defocus, params)?;
    let mut out = FieldMatrix::zeros(defocus.len(), grid.len());
    for (m, &f) in defocus.values().iter().enumerate() {
        out.row_mut(m).copy_from_slice(&plan.eval_row(f)?);
    }
    Ok(out)
}

//! Wall-clock benchmarks: time against basis size and against the number of
//! defocus values.

use std::io::Write;
use std::time::Instant;

use serde::Serialize;

use diffract_core::dft::compute_field_dft;
use diffract_core::enz::{compute_field_enz, EnzModel};
use diffract_core::field::{DefocusVector, EvalGrid};
use diffract_core::grbf::compute_field;
use diffract_core::pupil::PupilSpec;
use diffract_core::rbf_fit::GrbfModel;

use crate::engine::{dft_field_parallel, enz_field_parallel, grbf_field_parallel, thread_pool, EngineKind, EngineSettings};
use crate::error::{AppError, AppResult};
use crate::fitting::{fit_enz, fit_grbf, FitSettings};
use crate::io::num;

pub const MIN_REPETITIONS: usize = 3;

#[derive(Debug, Clone, Serialize)]
pub struct BenchOptions {
    pub repetitions: usize,
    pub warmup: bool,
    /// Side of the Cartesian evaluation lattice over `[-half_width, half_width]^2`.
    pub grid_size: usize,
    pub half_width: f64,
    /// Defocus used by the basis sweep.
    pub defocus: f64,
    /// `|f|` of the defocus sweep, see [`defocus_values`].
    pub defocus_max: f64,
    pub engine: EngineSettings,
    pub fit: FitSettings,
    /// Also time the rayon path with this many threads (0 = all cores).
    pub parallel: Option<usize>,
}

impl Default for BenchOptions {
    fn default() -> Self {
        BenchOptions {
            repetitions: 5,
            warmup: true,
            grid_size: 100,
            half_width: 2.0,
            defocus: 0.0,
            defocus_max: 2.0 * std::f64::consts::PI,
            engine: EngineSettings::default(),
            fit: FitSettings::default(),
            parallel: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BenchPoint {
    pub x: f64,
    /// Median over the repetitions.
    pub seconds: f64,
    pub repetitions: usize,
    /// Median absolute deviation of the repetitions.
    pub dispersion: f64,
    /// Model preparation (fitting) time, not included in `seconds`.
    pub fit_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchSeries {
    pub engine: String,
    pub parallel: bool,
    pub points: Vec<BenchPoint>,
    /// Least-squares slope of seconds against `x`; `None` with fewer than
    /// two distinct `x`.
    pub slope: Option<f64>,
    pub intercept: Option<f64>,
}

impl BenchSeries {
    fn new(engine: EngineKind, parallel: bool, points: Vec<BenchPoint>) -> Self {
        let (slope, intercept) = match fit_line(&points) {
            Some((a, b)) => (Some(a), Some(b)),
            None => (None, None),
        };
        let engine = if parallel { format!("{}+par", engine.name()) } else { engine.name().into() };
        BenchSeries { engine, parallel, points, slope, intercept }
    }

    pub fn slope_defined(&self) -> bool {
        self.slope.is_some()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchReport {
    /// `"basis"` or `"defocus"`.
    pub sweep: String,
    /// Label of the swept quantity.
    pub x_label: String,
    pub options: BenchOptions,
    pub series: Vec<BenchSeries>,
}

impl BenchReport {
    pub fn series(&self, engine: EngineKind, parallel: bool) -> Option<&BenchSeries> {
        let name = if parallel { format!("{}+par", engine.name()) } else { engine.name().to_string() };
        self.series.iter().find(|s| s.engine == name)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// One row per (series, point); the slope is repeated on every row of
    /// its series and left empty when undefined.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "# sweep={} x={}", self.sweep, self.x_label)?;
        writeln!(w, "# options={}", serde_json::to_string(&self.options).expect("options serialize"))?;
        writeln!(w, "sweep,engine,x,seconds,repetitions,dispersion,fit_seconds,slope")?;
        for s in &self.series {
            let slope = s.slope.map(num).unwrap_or_default();
            for p in &s.points {
                writeln!(
                    w,
                    "{},{},{},{},{},{},{},{}",
                    self.sweep,
                    s.engine,
                    p.x,
                    num(p.seconds),
                    p.repetitions,
                    num(p.dispersion),
                    num(p.fit_seconds),
                    slope
                )?;
            }
        }
        Ok(())
    }
}

fn fit_line(points: &[BenchPoint]) -> Option<(f64, f64)> {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.x).sum::<f64>() / n;
    let my = points.iter().map(|p| p.seconds).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.x - mx).powi(2)).sum();
    if points.len() < 2 || sxx == 0.0 {
        return None;
    }
    let sxy: f64 = points.iter().map(|p| (p.x - mx) * (p.seconds - my)).sum();
    let slope = sxy / sxx;
    Some((slope, my - slope * mx))
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Median and median absolute deviation of `reps` timed calls of `run`,
/// after an optional untimed warm-up call.
pub fn time_it<F: FnMut() -> AppResult<()>>(reps: usize, warmup: bool, mut run: F) -> AppResult<(f64, f64)> {
    if warmup {
        run()?;
    }
    let mut t = Vec::with_capacity(reps);
    for _ in 0..reps {
        let start = Instant::now();
        run()?;
        t.push(start.elapsed().as_secs_f64());
    }
    let med = median(&mut t);
    let mut dev: Vec<f64> = t.iter().map(|x| (x - med).abs()).collect();
    Ok((med, median(&mut dev)))
}

/// Prepared input of one engine.
enum Prepared {
    Grbf(GrbfModel),
    Enz(EnzModel),
    Pupil(PupilSpec),
}

fn evaluate(
    engine: EngineKind,
    input: &Prepared,
    grid: &EvalGrid,
    defocus: &DefocusVector,
    s: &EngineSettings,
    parallel: bool,
) -> AppResult<()> {
    match (input, parallel) {
        (Prepared::Grbf(m), false) => drop(compute_field(m, grid, defocus, s.truncation())?),
        (Prepared::Grbf(m), true) => drop(grbf_field_parallel(m, grid, defocus, s.truncation())?),
        (Prepared::Enz(m), par) => {
            let p = s.enz(engine.enz_variant().expect("ENZ engine"))?;
            if par {
                drop(enz_field_parallel(m, grid, defocus, p)?)
            } else {
                drop(compute_field_enz(m, grid, defocus, p)?)
            }
        }
        (Prepared::Pupil(p), false) => {
            let d = compute_field_dft(p, defocus, &s.dft())?;
            drop(d.sample(grid)?)
        }
        (Prepared::Pupil(p), true) => drop(dft_field_parallel(p, grid, defocus, s.dft())?),
    }
    Ok(())
}

fn check(opts: &BenchOptions, engines: &[EngineKind], xs: &[usize]) -> AppResult<()> {
    if engines.is_empty() || xs.is_empty() {
        return Err(AppError::input("benchmark needs at least one engine and one sweep value"));
    }
    if opts.repetitions < MIN_REPETITIONS {
        return Err(AppError::input(format!("at least {MIN_REPETITIONS} repetitions are required")));
    }
    if engines.contains(&EngineKind::Oracle) {
        return Err(AppError::input("the quadrature oracle is not benchmarked"));
    }
    Ok(())
}

fn modes(opts: &BenchOptions) -> Vec<bool> {
    if opts.parallel.is_some() {
        vec![false, true]
    } else {
        vec![false]
    }
}

fn run_modes<F>(opts: &BenchOptions, mut body: F) -> AppResult<Vec<(bool, Vec<BenchSeries>)>>
where
    F: FnMut(bool) -> AppResult<Vec<BenchSeries>> + Send,
{
    let mut out = Vec::new();
    for par in modes(opts) {
        let series = if par {
            thread_pool(opts.parallel.unwrap_or(0))?.install(|| body(true))?
        } else {
            thread_pool(1)?.install(|| body(false))?
        };
        out.push((par, series));
    }
    Ok(out)
}

fn timed<T>(f: impl FnOnce() -> AppResult<T>) -> AppResult<(T, f64)> {
    let start = Instant::now();
    let v = f()?;
    Ok((v, start.elapsed().as_secs_f64()))
}

fn prepare(engine: EngineKind, spec: &PupilSpec, fit: &FitSettings) -> AppResult<(Prepared, f64)> {
    match engine {
        EngineKind::Grbf => timed(|| Ok(Prepared::Grbf(fit_grbf(spec, fit)?.0))),
        EngineKind::Dft => Ok((Prepared::Pupil(spec.clone()), 0.0)),
        _ => timed(|| Ok(Prepared::Enz(EnzModel::new(fit_enz(spec, fit)?.0)?))),
    }
}

/// Time against the number of basis functions at one defocus value. For
/// GRBF a count `k` becomes a `ceil(sqrt(k))`-per-side center lattice and
/// `x` records the actual count; ENZ uses the first `k` cosine Zernike
/// terms. The FFT engine has no basis and is rejected.
pub fn run_basis_sweep(
    spec: &PupilSpec,
    engines: &[EngineKind],
    counts: &[usize],
    opts: &BenchOptions,
) -> AppResult<BenchReport> {
    check(opts, engines, counts)?;
    if engines.contains(&EngineKind::Dft) {
        return Err(AppError::input("the FFT engine has no basis to sweep"));
    }
    if counts.contains(&0) {
        return Err(AppError::input("basis counts must be positive"));
    }
    let grid = EvalGrid::cartesian_square(opts.grid_size, opts.half_width)?;
    let defocus = DefocusVector::single(opts.defocus)?;
    let mut inputs = Vec::new();
    for &e in engines {
        for &k in counts {
            let fit = if e == EngineKind::Grbf {
                FitSettings { centers_per_side: (k as f64).sqrt().ceil() as usize, ..opts.fit }
            } else {
                FitSettings { zernike_terms: k, ..opts.fit }
            };
            let (input, secs) = prepare(e, spec, &fit)?;
            let x = match &input {
                Prepared::Grbf(m) => m.grid.len(),
                Prepared::Enz(m) => m.expansion().len(),
                Prepared::Pupil(_) => 0,
            };
            inputs.push((e, x, input, secs));
        }
    }
    let results = run_modes(opts, |par| {
        engines
            .iter()
            .map(|&e| {
                let points = inputs
                    .iter()
                    .filter(|(ie, ..)| *ie == e)
                    .map(|(_, x, input, fs)| {
                        let (seconds, dispersion) = time_it(opts.repetitions, opts.warmup, || {
                            evaluate(e, input, &grid, &defocus, &opts.engine, par)
                        })?;
                        Ok(BenchPoint { x: *x as f64, seconds, repetitions: opts.repetitions, dispersion, fit_seconds: *fs })
                    })
                    .collect::<AppResult<Vec<_>>>()?;
                Ok(BenchSeries::new(e, par, points))
            })
            .collect()
    })?;
    Ok(BenchReport {
        sweep: "basis".into(),
        x_label: "basis functions".into(),
        options: opts.clone(),
        series: results.into_iter().flat_map(|(_, s)| s).collect(),
    })
}

/// `m` defocus values alternating between `max` and `-max`, so that every
/// row of the sweep carries the same series lengths.
pub fn defocus_values(m: usize, max: f64) -> Vec<f64> {
    (0..m).map(|i| if i % 2 == 0 { max } else { -max }).collect()
}

/// Time against the length `M` of the defocus vector with fixed models
/// (the fit settings' `centers_per_side` and `zernike_terms`).
pub fn run_defocus_sweep(
    spec: &PupilSpec,
    engines: &[EngineKind],
    lengths: &[usize],
    opts: &BenchOptions,
) -> AppResult<BenchReport> {
    check(opts, engines, lengths)?;
    if lengths.contains(&0) {
        return Err(AppError::input("defocus lengths must be positive"));
    }
    let grid = EvalGrid::cartesian_square(opts.grid_size, opts.half_width)?;
    let inputs = engines
        .iter()
        .map(|&e| prepare(e, spec, &opts.fit).map(|(p, s)| (e, p, s)))
        .collect::<AppResult<Vec<_>>>()?;
    let results = run_modes(opts, |par| {
        inputs
            .iter()
            .map(|(e, input, fs)| {
                let points = lengths
                    .iter()
                    .map(|&m| {
                        let d = DefocusVector::new(defocus_values(m, opts.defocus_max))?;
                        let (seconds, dispersion) =
                            time_it(opts.repetitions, opts.warmup, || evaluate(*e, input, &grid, &d, &opts.engine, par))?;
                        Ok(BenchPoint { x: m as f64, seconds, repetitions: opts.repetitions, dispersion, fit_seconds: *fs })
                    })
                    .collect::<AppResult<Vec<_>>>()?;
                Ok(BenchSeries::new(*e, par, points))
            })
            .collect()
    })?;
    Ok(BenchReport {
        sweep: "defocus".into(),
        x_label: "defocus values".into(),
        options: opts.clone(),
        series: results.into_iter().flat_map(|(_, s)| s).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick() -> BenchOptions {
        BenchOptions {
            repetitions: 3,
            grid_size: 8,
            fit: FitSettings { centers_per_side: 3, sample_grid: 20, zernike_terms: 6, ..FitSettings::default() },
            ..BenchOptions::default()
        }
    }

    #[test]
    fn single_point_has_undefined_slope() {
        let r = run_basis_sweep(&PupilSpec::clear(), &[EngineKind::Grbf], &[4], &quick()).unwrap();
        assert_eq!(r.series.len(), 1);
        let s = &r.series[0];
        assert_eq!(s.points.len(), 1);
        assert_eq!(s.points[0].x, 4.0);
        assert!(!s.slope_defined());
        let mut csv = Vec::new();
        r.write_csv(&mut csv).unwrap();
        let text = String::from_utf8(csv).unwrap();
        assert!(text.lines().last().unwrap().ends_with(','));
    }

    #[test]
    fn defocus_sweep_reports_every_engine() {
        let opts = BenchOptions { parallel: Some(2), ..quick() };
        let engines = [EngineKind::Grbf, EngineKind::EnzEbb, EngineKind::Dft];
        let opts = BenchOptions { engine: EngineSettings { fft_size: 128, ..EngineSettings::default() }, ..opts };
        let r = run_defocus_sweep(&PupilSpec::clear(), &engines, &[1, 2], &opts).unwrap();
        assert_eq!(r.series.len(), 6);
        for e in engines {
            for par in [false, true] {
                let s = r.series(e, par).unwrap();
                assert_eq!(s.points[0].x, 1.0);
                assert!(s.slope_defined());
            }
        }
        assert!(r.to_json().contains("\"sweep\": \"defocus\""));
    }

    #[test]
    fn rejects_bad_requests() {
        let s = PupilSpec::clear();
        assert!(run_basis_sweep(&s, &[EngineKind::Dft], &[4], &quick()).is_err());
        assert!(run_defocus_sweep(&s, &[], &[1], &quick()).is_err());
        assert!(run_defocus_sweep(&s, &[EngineKind::Grbf], &[1], &BenchOptions { repetitions: 2, ..quick() }).is_err());
    }

    #[test]
    fn line_fit_and_defocus_values() {
        let pts: Vec<BenchPoint> = (1..=4)
            .map(|i| BenchPoint { x: i as f64, seconds: 2.0 * i as f64 + 1.0, repetitions: 3, dispersion: 0.0, fit_seconds: 0.0 })
            .collect();
        let (a, b) = fit_line(&pts).unwrap();
        assert!((a - 2.0).abs() < 1e-12 && (b - 1.0).abs() < 1e-12);
        assert_eq!(defocus_values(1, 5.0), vec![5.0]);
        assert_eq!(defocus_values(3, 5.0), vec![5.0, -5.0, 5.0]);
    }
}

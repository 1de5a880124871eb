//! Acceptance run: one PASS/FAIL line per criterion with its measured
//! figures and wall time.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use common::{disk_inner, i0_sqrt_series, quad, to_f64, weights_exact, wigner_3j_exact};
use diffract::bench::{run_defocus_sweep, BenchOptions};
use diffract::engine::{oracle_field_parallel, EngineKind};
use diffract::fitting::{fit_enz, fit_grbf, FitSettings};
use diffract_core::dft::{compute_field_dft, DftParams};
use diffract_core::enz::{
    bb_coeffs, c_coefficient, compute_field_enz, v_bb, v_ebb, v_pb, EnzModel, EnzParams, EnzVariant,
};
use diffract_core::field::{psf_difference, DefocusVector, EvalGrid, EvalPoint, FieldMatrix};
use diffract_core::grbf::{compute_field, m_hat_table, m_sequence, model_truncation_bound, omega, TruncationParams};
use diffract_core::oracle::{quad_field, QuadParams};
use diffract_core::pupil::{AmplitudeMask, PupilSpec, WavefrontSpec};
use diffract_core::rbf_fit::{make_centers, GrbfModel};
use diffract_core::specfun::{i0_tail, wigner_3j};
use diffract_core::zernike::{enumerate_up_to, evaluate, radial, ZernikeIndex};
use diffract_core::C64;
use num_rational::BigRational;
use num_traits::One;

type Outcome = Result<String, String>;

/// Name, time budget in seconds, check.
type Criterion = (&'static str, f64, fn() -> Outcome);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// `J_1(x) = (1 / pi) int_0^pi cos(t - x sin t) dt`.
fn bessel_j1(x: f64) -> f64 {
    quad(|t| C64::new((t - x * t.sin()).cos(), 0.0), 0.0, PI, 16, 20).re / PI
}

fn airy(r: f64) -> f64 {
    if r == 0.0 {
        1.0
    } else {
        bessel_j1(2.0 * PI * r) / (PI * r)
    }
}

fn on_axis(f: f64) -> C64 {
    let z = C64::new(0.0, f);
    (z.exp() - 1.0) / z
}

fn unit_term() -> EnzModel {
    EnzModel::from_terms(vec![(ZernikeIndex::new(0, 0).unwrap(), C64::new(1.0, 0.0))]).unwrap()
}

const VARIANTS: [EnzVariant; 3] =
    [EnzVariant::PowerBessel, EnzVariant::BesselBessel, EnzVariant::EnhancedBesselBessel];

fn max_dev(field: &FieldMatrix, row: usize, want: impl Fn(usize) -> C64) -> f64 {
    field.row(row).iter().enumerate().fold(0.0f64, |a, (j, v)| a.max((v - want(j)).norm()))
}

fn worst_psf(a: &FieldMatrix, b: &FieldMatrix) -> Vec<f64> {
    psf_difference(a, b).unwrap().into_iter().map(|d| d.max_abs).collect()
}

fn list(v: &[f64]) -> String {
    let items: Vec<String> = v.iter().map(|x| format!("{x:.1e}")).collect();
    format!("[{}]", items.join(", "))
}

fn criterion_1() -> Outcome {
    let mut worst = 0.0f64;
    for lambda in [1.0, 16.0] {
        for f in [0.0, 2.0 * PI, -2.0 * PI, 10.0] {
            let z = C64::new(lambda, -f);
            for (s, ms) in m_sequence(z, 60).into_iter().enumerate() {
                let q = quad(|r| (-z * r).exp() * r.powi(s as i32), 0.0, 1.0, 32, 24);
                worst = worst.max((ms - q).norm());
            }
        }
    }
    check(worst <= 1e-12, format!("max |m_s - quadrature| = {worst:.2e} (tol 1e-12)"))
}

fn criterion_2() -> Outcome {
    let mut worst = 0.0f64;
    for lambda in [4.0, 16.0] {
        let m = m_sequence(C64::new(lambda, 0.0), 100);
        for w in [C64::new(-PI * PI, 0.0), C64::new(25.0, 10.0)] {
            let mut pow = C64::new(1.0, 0.0);
            let mut series = C64::new(0.0, 0.0);
            for (s, &ms) in m.iter().enumerate() {
                if s > 0 {
                    pow *= w / (s as f64 * s as f64);
                }
                series += ms * pow;
            }
            let q = quad(|r| i0_sqrt_series(w * r) * (-lambda * r).exp(), 0.0, 1.0, 32, 24);
            worst = worst.max((series - q).norm());
        }
    }
    check(worst <= 1e-9, format!("max |series - quadrature| = {worst:.2e} (tol 1e-9)"))
}

fn criterion_3() -> Outcome {
    let tail = i0_tail(1200.0, 100);
    let spec = PupilSpec::with_wavefront(WavefrontSpec::synthetic_benchmark());
    let (model, _) = fit_grbf(&spec, &FitSettings::default()).map_err(|e| e.to_string())?;
    let grid = EvalGrid::cartesian_square(100, 2.0).unwrap();
    let d = DefocusVector::new(vec![0.0, 2.0 * PI, -2.0 * PI]).unwrap();
    let s60 = TruncationParams { cutoff_s: 60 };
    let bound = model_truncation_bound(&model, &grid, s60).unwrap();
    let u60 = compute_field(&model, &grid, &d, s60).unwrap();
    let u120 = compute_field(&model, &grid, &d, TruncationParams { cutoff_s: 120 }).unwrap();
    let diff = (0..d.len()).map(|m| max_dev(&u60, m, |j| u120.get(m, j))).fold(0.0f64, f64::max);
    check(
        tail <= 1e-8 && diff <= bound,
        format!("tail(1200, S=100) = {tail:.2e} (tol 1e-8); |U60 - U120| = {diff:.2e} <= bound {bound:.2e}"),
    )
}

fn criterion_4() -> Outcome {
    let clear = PupilSpec::clear();
    let line = EvalGrid::radial_line(41, 2.0, 0.3).unwrap();
    let reference: Vec<f64> = line.points().iter().map(|p| airy(p.r)).collect();
    let zero = DefocusVector::single(0.0).unwrap();
    let mut parts = Vec::new();
    let mut ok = true;

    let qp = QuadParams::default();
    let oracle = line
        .points()
        .iter()
        .zip(&reference)
        .map(|(&p, &a)| (quad_field(&clear, p, 0.0, &qp).unwrap().value - a).norm())
        .fold(0.0f64, f64::max);
    ok &= oracle <= 1e-8;
    parts.push(format!("oracle {oracle:.1e}"));

    for v in VARIANTS {
        let u = compute_field_enz(&unit_term(), &line, &zero, EnzParams::new(v)).unwrap();
        let e = max_dev(&u, 0, |j| C64::new(reference[j], 0.0));
        ok &= e <= 1e-8;
        parts.push(format!("{} {e:.1e}", v.name()));
    }

    let (model, _) = fit_grbf(&clear, &FitSettings::default()).map_err(|e| e.to_string())?;
    let u = compute_field(&model, &line, &zero, TruncationParams::default()).unwrap();
    let g = max_dev(&u, 0, |j| C64::new(reference[j], 0.0));
    ok &= g <= 1e-3;
    parts.push(format!("grbf {g:.1e}"));

    let dft = compute_field_dft(&clear, &zero, &DftParams::default()).unwrap();
    let (n, c) = (dft.grid.size, |i| dft.grid.coordinate(i));
    let mut fe = 0.0f64;
    for iy in 0..n {
        for ix in 0..n {
            let r = c(ix).hypot(c(iy));
            if r <= 2.0 {
                fe = fe.max((dft.bin(0, iy, ix) - airy(r)).norm());
            }
        }
    }
    ok &= fe <= 2e-2;
    parts.push(format!("fft {fe:.1e} on bins"));
    let off = dft.sample(&line).unwrap();
    parts.push(format!("fft interpolated {:.1e} (report)", max_dev(&off, 0, |j| C64::new(reference[j], 0.0))));
    check(ok, format!("{} (tol 1e-8 / 1e-8 / 1e-3 / 2e-2)", parts.join(", ")))
}

fn criterion_5() -> Outcome {
    let clear = PupilSpec::clear();
    let fs = [PI / 2.0, PI, 2.0 * PI];
    let d = DefocusVector::new(fs.to_vec()).unwrap();
    let axis = EvalGrid::new(vec![EvalPoint::polar(0.0, 0.0), EvalPoint::polar(0.0, 1.0)]).unwrap();
    let worst = |u: &FieldMatrix| (0..fs.len()).map(|m| max_dev(u, m, |_| on_axis(fs[m]))).fold(0.0f64, f64::max);
    let mut ok = true;
    let mut parts = Vec::new();

    let qp = QuadParams::default();
    let oracle = fs
        .iter()
        .map(|&f| (quad_field(&clear, EvalPoint::polar(0.0, 0.0), f, &qp).unwrap().value - on_axis(f)).norm())
        .fold(0.0f64, f64::max);
    ok &= oracle <= 1e-6;
    parts.push(format!("oracle {oracle:.1e}"));

    for v in VARIANTS {
        let e = worst(&compute_field_enz(&unit_term(), &axis, &d, EnzParams::new(v)).unwrap());
        ok &= e <= 1e-6;
        parts.push(format!("{} {e:.1e}", v.name()));
    }

    let (model, _) = fit_grbf(&clear, &FitSettings::default()).map_err(|e| e.to_string())?;
    let g = worst(&compute_field(&model, &axis, &d, TruncationParams::default()).unwrap());
    ok &= g <= 1e-3;
    parts.push(format!("grbf {g:.1e}"));

    let dft = compute_field_dft(&clear, &d, &DftParams::default()).unwrap();
    let fe = worst(&dft.sample(&axis).unwrap());
    ok &= fe <= 1e-3;
    parts.push(format!("fft {fe:.1e}"));
    check(ok, format!("{} (tol 1e-6 semi-analytic, 1e-3 fitted and fft)", parts.join(", ")))
}

fn criterion_6() -> Outcome {
    let fs: Vec<f64> = (0..=8).map(|i| -2.0 * PI + PI * i as f64 / 2.0).collect();
    let rs: Vec<f64> = (0..=6).map(|i| 0.25 * i as f64).collect();
    let (mut pb_bb, mut bb_ebb) = (0.0f64, 0.0f64);
    let pb = EnzParams::new(EnzVariant::PowerBessel);
    let bb = EnzParams::new(EnzVariant::BesselBessel);
    let ebb = EnzParams::new(EnzVariant::EnhancedBesselBessel);
    for n in 0..=6u32 {
        for m in (n % 2..=n).step_by(2) {
            for &f in &fs {
                for &r in &rs {
                    let b = v_bb(n, m, r, f, &bb).unwrap();
                    pb_bb = pb_bb.max((v_pb(n, m, r, f, &pb).unwrap() - b).norm());
                    bb_ebb = bb_ebb.max((v_ebb(n, m, r, f, &ebb).unwrap() - b).norm());
                }
            }
        }
    }

    let f = 2.0 * PI;
    let mut bauer = 0.0f64;
    for i in 0..=20 {
        let rho = i as f64 / 20.0;
        let s: C64 = (0..25u32).map(|k| c_coefficient(k, f) * radial(2 * k, 0, rho).unwrap()).sum();
        bauer = bauer.max((s - C64::from_polar(1.0, f * rho * rho)).norm());
    }

    let mut partition = true;
    let mut float_sum = 0.0f64;
    for p in 0..=6i64 {
        for k in 0..=8i64 {
            let exact: BigRational = weights_exact(0, p, k).into_iter().sum();
            partition &= exact == BigRational::one();
            let s: f64 = bb_coeffs(0, p as u32, k as u32).iter().sum();
            float_sum = float_sum.max((s - 1.0).abs());
        }
    }
    check(
        pb_bb <= 1e-6 && bb_ebb <= 1e-10 && bauer <= 1e-8 && partition && float_sum <= 1e-13,
        format!(
            "|pb - bb| = {pb_bb:.1e} (1e-6), |bb - ebb| = {bb_ebb:.1e} (1e-10), Bauer {bauer:.1e} (1e-8), \
             m=0 weight sums exact = {partition}, float {float_sum:.1e}"
        ),
    )
}

/// GRBF (and optionally ENZ-EBB and FFT) vs the oracle on the horizontal
/// diameter; returns the per-plane normalized-PSF errors.
fn pupil_experiment(spec: &PupilSpec, fs: &[f64], extra: bool) -> Result<(Vec<f64>, String), String> {
    let grid = EvalGrid::diameter(129, 2.0, 0.0).unwrap();
    let d = DefocusVector::new(fs.to_vec()).unwrap();
    let (reference, info) = oracle_field_parallel(spec, &grid, &d, &QuadParams::default()).unwrap();
    let unconverged = info.iter().filter(|q| !q.converged).count();
    let (model, fit) = fit_grbf(spec, &FitSettings::default()).map_err(|e| e.to_string())?;
    let g = worst_psf(&compute_field(&model, &grid, &d, TruncationParams::default()).unwrap(), &reference);
    let mut report = format!("fit rms {:.1e}, oracle unconverged {unconverged}", fit.rms_residual);
    if extra {
        let (zern, _) = fit_enz(spec, &FitSettings::default()).map_err(|e| e.to_string())?;
        let enz = compute_field_enz(
            &EnzModel::new(zern).unwrap(),
            &grid,
            &d,
            EnzParams::new(EnzVariant::EnhancedBesselBessel),
        )
        .unwrap();
        let e = worst_psf(&enz, &reference);
        let dft = compute_field_dft(spec, &d, &DftParams::default()).unwrap().sample(&grid).unwrap();
        let ff = worst_psf(&dft, &reference);
        report += &format!(", report only: enz-ebb(45) {}, fft {}", list(&e), list(&ff));
    }
    Ok((g, report))
}

fn criterion_7() -> Outcome {
    let spec = PupilSpec::with_wavefront(WavefrontSpec::synthetic_benchmark());
    let (g, report) = pupil_experiment(&spec, &[0.0, 2.0 * PI, -2.0 * PI], true)?;
    let worst = g.iter().cloned().fold(0.0f64, f64::max);
    check(worst <= 1e-2, format!("grbf normalized PSF {} (tol 1e-2); {report}", list(&g)))
}

fn criterion_8() -> Outcome {
    let spec = PupilSpec {
        mask: AmplitudeMask::Ellipse { ax: 1.0, ay: 0.7 },
        ..PupilSpec::with_wavefront(WavefrontSpec::synthetic_benchmark())
    };
    let (g, report) = pupil_experiment(&spec, &[0.0, PI], false)?;
    let worst = g.iter().cloned().fold(0.0f64, f64::max);
    check(worst <= 5e-2, format!("grbf normalized PSF {} (tol 5e-2); {report}", list(&g)))
}

fn criterion_9() -> Outcome {
    let engines = [EngineKind::Grbf, EngineKind::EnzEbb, EngineKind::EnzBb, EngineKind::EnzPb];
    let spec = PupilSpec::with_wavefront(WavefrontSpec::synthetic_benchmark());
    let report = run_defocus_sweep(&spec, &engines, &[1, 16, 32, 48, 64], &BenchOptions::default())
        .map_err(|e| e.to_string())?;
    let slope = |e| report.series(e, false).and_then(|s| s.slope).unwrap_or(f64::NAN);
    let (g, ebb, bb, pb) =
        (slope(EngineKind::Grbf), slope(EngineKind::EnzEbb), slope(EngineKind::EnzBb), slope(EngineKind::EnzPb));
    // EBB and BB share one evaluation loop; their order is checked within 10 % timing noise
    let ok = g < ebb && ebb <= 1.1 * bb && bb < pb;
    check(ok, format!("slopes s/value: grbf {g:.2e}, enz-ebb {ebb:.2e}, enz-bb {bb:.2e}, enz-pb {pb:.2e}"))
}

fn criterion_10() -> Outcome {
    let mut fails = Vec::new();

    let fs: Vec<f64> = (0..=16).map(|i| -40.0 + 5.0 * i as f64).collect();
    let d = DefocusVector::new(fs.clone()).unwrap();
    let table_max = [0.0, 0.5, 1.0, 16.0, 50.0]
        .iter()
        .map(|&l| m_hat_table(l, &d, TruncationParams { cutoff_s: 120 }).unwrap().max_abs())
        .fold(0.0f64, f64::max);
    if table_max > 1.0 + 1e-15 {
        fails.push(format!("|m_s| max {table_max}"));
    }

    let centers = make_centers(6, 16.0).unwrap();
    let grid = EvalGrid::cartesian_square(9, 2.0).unwrap();
    let mut omega_err = 0.0f64;
    for c in centers.centers() {
        let scale = |r: f64| 256.0 * (c.a * c.a + c.b * c.b) + PI * PI * r * r;
        for p in grid.points() {
            let w = omega(16.0, c.a, c.b, p.x, p.y).norm();
            if w > scale(p.r) * (1.0 + 1e-12) {
                omega_err = f64::INFINITY;
            }
            let (xa, ya) = (p.r * c.alpha().cos(), p.r * c.alpha().sin());
            let aligned = omega(16.0, c.a, c.b, xa, ya).norm();
            omega_err = omega_err.max((aligned - scale(p.r)).abs() / scale(p.r).max(1.0));
        }
    }
    if omega_err > 1e-9 {
        fails.push(format!("Omega magnitude {omega_err:.1e}"));
    }

    let coeffs: Vec<C64> = (0..36).map(|i| C64::new((i as f64).sin(), (0.3 * i as f64).cos())).collect();
    let model = GrbfModel::new(centers, coeffs, C64::new(0.5, -0.2)).unwrap();
    let all = compute_field(&model, &grid, &d, TruncationParams::default()).unwrap();
    let mut sep = 0.0f64;
    for (m, &f) in fs.iter().enumerate() {
        let one = compute_field(&model, &grid, &DefocusVector::single(f).unwrap(), TruncationParams::default()).unwrap();
        sep = sep.max(max_dev(&all, m, |j| one.get(0, j)));
    }
    if sep > 1e-14 {
        fails.push(format!("row separability {sep:.1e}"));
    }

    let idx = enumerate_up_to(6);
    let mut ortho = 0.0f64;
    for &a in &idx {
        for &b in &idx {
            let g = disk_inner(|r, t| evaluate(a, r, t), |r, t| evaluate(b, r, t), 24);
            ortho = ortho.max((g - if a == b { 1.0 } else { 0.0 }).abs());
        }
    }
    if ortho > 1e-9 {
        fails.push(format!("Zernike orthonormality {ortho:.1e}"));
    }

    let mut w3j = 0.0f64;
    let mut symbols = 0;
    for j1 in 0..=8i64 {
        for j2 in 0..=8i64 {
            for j3 in 0..=8i64 {
                for m1 in -j1..=j1 {
                    for m2 in -j2..=j2 {
                        let m3 = -m1 - m2;
                        let got = wigner_3j(j1 as i32, j2 as i32, j3 as i32, m1 as i32, m2 as i32, m3 as i32);
                        let want = wigner_3j_exact([j1, j2, j3], [m1, m2, m3])
                            .map_or(0.0, |(s, sq)| s as f64 * to_f64(&sq).sqrt());
                        w3j = w3j.max((got - want).abs());
                        symbols += 1;
                    }
                }
            }
        }
    }
    if w3j > 1e-14 {
        fails.push(format!("3j vs exact {w3j:.1e}"));
    }

    let mut ident = 0.0f64;
    for a in [0.3, 1.0, 2.5] {
        for b in [0.3, 1.0, 2.5] {
            for alpha in [0.0, PI / 3.0, PI] {
                let lhs = quad(
                    |t| C64::new((2.0 * a * (t - alpha).cos() + 2.0 * b * t.cos()).exp(), 0.0),
                    0.0,
                    2.0 * PI,
                    32,
                    24,
                );
                let rhs = 2.0 * PI * i0_sqrt_series(C64::new(a * a + 2.0 * a * b * alpha.cos() + b * b, 0.0));
                ident = ident.max((lhs - rhs).norm() / rhs.norm().max(1.0));
            }
        }
    }
    if ident > 1e-9 {
        fails.push(format!("angular identity {ident:.1e}"));
    }

    let detail = format!(
        "max |m_s| {table_max:.3}, Omega {omega_err:.1e}, separability {sep:.1e}, orthonormality {ortho:.1e}, \
         3j {w3j:.1e} over {symbols} symbols, angular identity {ident:.1e}"
    );
    if fails.is_empty() {
        Ok(detail)
    } else {
        Err(format!("{detail}; failed: {}", fails.join(", ")))
    }
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("m_s recurrence vs quadrature", 1.0, criterion_1),
        ("Laplace-Bessel series identity", 5.0, criterion_2),
        ("truncation bound", 10.0, criterion_3),
        ("Airy profile across engines", 60.0, criterion_4),
        ("on-axis defocus closed form", 30.0, criterion_5),
        ("ENZ variant agreement", 60.0, criterion_6),
        ("synthetic wavefront vs oracle", 300.0, criterion_7),
        ("elliptic pupil vs oracle", 300.0, criterion_8),
        ("defocus-sweep cost ordering", 600.0, criterion_9),
        ("invariant suites", 120.0, criterion_10),
    ];
    let mut failed = 0;
    for (i, (name, budget, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        let (pass, detail) = match outcome {
            Ok(d) if secs <= *budget => (true, d),
            Ok(d) => (false, format!("{d}; over the {budget} s budget")),
            Err(d) => (false, d),
        };
        failed += usize::from(!pass);
        println!(
            "criterion {:>2} {}: {name}: {detail} [{secs:.2} s / {budget} s]",
            i + 1,
            if pass { "PASS" } else { "FAIL" }
        );
    }
    if failed > 0 {
        println!("{failed} of {} criteria failed", criteria.len());
        std::process::exit(1);
    }
}

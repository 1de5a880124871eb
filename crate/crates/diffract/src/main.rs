use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use diffract_core::field::{field_difference, psf_difference, DefocusVector, EvalGrid};
use diffract_core::pupil::PupilSpec;

use diffract::bench::{run_basis_sweep, run_defocus_sweep, BenchOptions};
use diffract::engine::{run_engine, thread_pool, EngineKind, EngineSettings, FieldRun, FocalKind};
use diffract::error::{exit, AppError, AppResult};
use diffract::fitting::{self, FitSettings, RegChoice};
use diffract::io::{self, FitRecord, GrbfModelJson, ModelFile};

/// Diffraction integrals through focus with Gaussian RBF, ENZ, FFT and
/// quadrature engines.
#[derive(Parser)]
#[command(name = "diffract", version)]
struct Cli {
    /// Worker threads for the parallel engines; all cores when unset.
    #[arg(long, global = true, env = "DIFFRACT_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a GRBF or Zernike model to a pupil specification or samples.
    Fit(FitCmd),
    /// Compute the field with one engine.
    Field(FieldCmd),
    /// Compare two or more engines on the same grid.
    Compare(CompareCmd),
    /// Time the engines against basis size or defocus count.
    Bench(BenchCmd),
    /// Quadrature reference field with error estimates.
    Oracle(OracleCmd),
}

#[derive(Args, Clone)]
struct GridArgs {
    /// Points per side of the Cartesian grid.
    #[arg(long = "grid", default_value_t = 100)]
    grid_size: usize,
    /// Half width of the Cartesian grid.
    #[arg(long, default_value_t = 2.0)]
    half_width: f64,
    /// Evaluate on this many points along a diameter instead.
    #[arg(long)]
    line: Option<usize>,
    /// Radius reached by the diameter.
    #[arg(long, default_value_t = 2.0)]
    r_max: f64,
    /// Angle of the diameter.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    phi: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum GridSpec {
    Square { n: usize, half_width: f64 },
    Diameter { n: usize, r_max: f64, phi: f64 },
}

impl GridArgs {
    fn spec(&self) -> GridSpec {
        match self.line {
            Some(n) => GridSpec::Diameter { n, r_max: self.r_max, phi: self.phi },
            None => GridSpec::Square { n: self.grid_size, half_width: self.half_width },
        }
    }
}

impl GridSpec {
    fn build(&self) -> AppResult<EvalGrid> {
        Ok(match *self {
            GridSpec::Square { n, half_width } => EvalGrid::cartesian_square(n, half_width)?,
            GridSpec::Diameter { n, r_max, phi } => EvalGrid::diameter(n, r_max, phi)?,
        })
    }
}

#[derive(Args, Clone)]
struct EngineArgs {
    /// GRBF series cut-off S.
    #[arg(long, default_value_t = diffract_core::grbf::DEFAULT_CUTOFF)]
    cutoff: usize,
    /// ENZ series length (automatic when unset).
    #[arg(long)]
    series_terms: Option<usize>,
    /// Bessel power-series terms for ENZ (automatic when unset).
    #[arg(long)]
    bessel_terms: Option<usize>,
    /// FFT grid size (power of two).
    #[arg(long, default_value_t = diffract_core::dft::DEFAULT_GRID_SIZE)]
    fft_size: usize,
    /// FFT padding: sampled square side over the pupil diameter.
    #[arg(long, default_value_t = diffract_core::dft::DEFAULT_PAD_FACTOR)]
    pad: f64,
    /// Quadrature absolute tolerance.
    #[arg(long, default_value_t = 1e-10)]
    abs_tol: f64,
    /// Quadrature relative tolerance.
    #[arg(long, default_value_t = 1e-10)]
    rel_tol: f64,
    /// Quadrature subdivision limit.
    #[arg(long, default_value_t = 2000)]
    max_subdivisions: usize,
    /// Focal factor used by the quadrature oracle.
    #[arg(long, value_enum, default_value_t = FocalKind::Debye)]
    focal: FocalKind,
}

impl EngineArgs {
    fn settings(&self) -> EngineSettings {
        EngineSettings {
            cutoff: self.cutoff,
            series_terms: self.series_terms,
            bessel_terms: self.bessel_terms,
            fft_size: self.fft_size,
            pad_factor: self.pad,
            abs_tol: self.abs_tol,
            rel_tol: self.rel_tol,
            max_subdivisions: self.max_subdivisions,
            focal: self.focal,
        }
    }
}

#[derive(Args, Clone)]
struct FitArgs {
    /// GRBF centers per side of the square lattice.
    #[arg(long, default_value_t = 20)]
    centers: usize,
    /// GRBF shape parameter.
    #[arg(long, default_value_t = diffract_core::rbf_fit::DEFAULT_LAMBDA)]
    lambda: f64,
    /// Pupil sampling lattice side over [-1, 1]^2.
    #[arg(long, default_value_t = 100)]
    sample_grid: usize,
    /// Number of cosine Zernike terms for ENZ models.
    #[arg(long, default_value_t = 45)]
    zernike_terms: usize,
    /// Fixed Tikhonov parameter.
    #[arg(long, conflicts_with_all = ["noise_rms", "no_regularization"])]
    mu: Option<f64>,
    /// Noise level for the discrepancy principle.
    #[arg(long, conflicts_with = "no_regularization")]
    noise_rms: Option<f64>,
    /// Plain least squares.
    #[arg(long)]
    no_regularization: bool,
    /// Overrides the noise seed of the pupil specification.
    #[arg(long)]
    seed: Option<u64>,
}

impl FitArgs {
    fn settings(&self) -> FitSettings {
        let regularization = match (self.mu, self.noise_rms, self.no_regularization) {
            (Some(mu), ..) => RegChoice::Fixed(mu),
            (_, Some(s), _) => RegChoice::NoiseRms(s),
            (_, _, true) => RegChoice::None,
            _ => RegChoice::Auto,
        };
        FitSettings {
            centers_per_side: self.centers,
            lambda: self.lambda,
            sample_grid: self.sample_grid,
            zernike_terms: self.zernike_terms,
            regularization,
        }
    }

    fn apply_seed(&self, spec: &mut PupilSpec) {
        if let Some(s) = self.seed {
            spec.wavefront.noise_seed = s;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModelKind {
    Grbf,
    Zernike,
}

#[derive(Args)]
struct FitCmd {
    /// Pupil specification (JSON); also sets the phase convention for
    /// `x,y,w` samples.
    #[arg(long, required_unless_present = "samples")]
    pupil: Option<PathBuf>,
    /// Pupil samples CSV (`x,y,re,im` or `x,y,w`).
    #[arg(long)]
    samples: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = ModelKind::Grbf)]
    kind: ModelKind,
    #[command(flatten)]
    fit: FitArgs,
    /// Model file to write.
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Args)]
struct FieldCmd {
    /// Model or pupil specification file matching the engine.
    #[arg(long)]
    model: PathBuf,
    #[arg(long, value_enum)]
    engine: EngineKind,
    #[command(flatten)]
    grid: GridArgs,
    /// Comma-separated defocus values; `pi` multiples such as `-2pi` allowed.
    #[arg(long, default_value = "0", allow_hyphen_values = true)]
    defocus: String,
    #[command(flatten)]
    engine_args: EngineArgs,
    /// Field CSV (stdout when no output is given).
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// Binary field container.
    #[arg(long)]
    binary: Option<PathBuf>,
    /// Prefix for one 16-bit PGM of the normalized PSF per defocus value.
    #[arg(long)]
    pgm: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum Metric {
    Field,
    Psf,
}

#[derive(Args)]
struct CompareCmd {
    /// Pupil specification; models are fitted from it when not given.
    #[arg(long)]
    pupil: Option<PathBuf>,
    /// Engines to compare; the first is the reference.
    #[arg(long, value_enum, value_delimiter = ',', num_args = 1.., required = true)]
    engines: Vec<EngineKind>,
    /// GRBF model to use instead of fitting.
    #[arg(long)]
    grbf_model: Option<PathBuf>,
    /// Zernike model to use instead of fitting.
    #[arg(long)]
    enz_model: Option<PathBuf>,
    #[command(flatten)]
    grid: GridArgs,
    #[arg(long, default_value = "0", allow_hyphen_values = true)]
    defocus: String,
    #[command(flatten)]
    engine_args: EngineArgs,
    #[command(flatten)]
    fit: FitArgs,
    /// Fail (exit 6) when a maximum difference exceeds this.
    #[arg(long)]
    tol: Option<f64>,
    /// Quantity checked against `--tol`.
    #[arg(long, value_enum, default_value_t = Metric::Field)]
    metric: Metric,
    /// Also write the report here.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Sweep {
    Basis,
    Defocus,
}

#[derive(Args)]
struct BenchCmd {
    #[arg(long, value_enum)]
    sweep: Sweep,
    #[arg(long, value_enum, value_delimiter = ',', num_args = 1.., default_value = "grbf,enz-pb,enz-bb,enz-ebb")]
    engines: Vec<EngineKind>,
    /// Basis counts for the basis sweep.
    #[arg(long, value_delimiter = ',', default_value = "25,100,225,400")]
    counts: Vec<usize>,
    /// Defocus vector lengths for the defocus sweep.
    #[arg(long, value_delimiter = ',', default_value = "1,2,4,8,16")]
    lengths: Vec<usize>,
    #[arg(long, default_value_t = 5)]
    repetitions: usize,
    /// Skip the untimed warm-up run.
    #[arg(long)]
    no_warmup: bool,
    /// Also time the parallel path.
    #[arg(long)]
    parallel: bool,
    /// Evaluation grid side over [-2, 2]^2.
    #[arg(long = "grid", default_value_t = 100)]
    grid_size: usize,
    /// Defocus of the basis sweep.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    defocus: f64,
    /// |f| of the defocus sweep (values alternate in sign).
    #[arg(long, default_value_t = 2.0 * std::f64::consts::PI)]
    defocus_max: f64,
    /// Pupil specification; the built-in synthetic wavefront when unset.
    #[arg(long)]
    pupil: Option<PathBuf>,
    #[command(flatten)]
    engine_args: EngineArgs,
    #[command(flatten)]
    fit: FitArgs,
    #[arg(long)]
    out_json: Option<PathBuf>,
    #[arg(long)]
    out_csv: Option<PathBuf>,
}

#[derive(Args)]
struct OracleCmd {
    #[arg(long)]
    pupil: PathBuf,
    #[command(flatten)]
    grid: GridArgs,
    #[arg(long, default_value = "0", allow_hyphen_values = true)]
    defocus: String,
    #[command(flatten)]
    engine_args: EngineArgs,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

/// Parses `a,b,c` where each entry is a number, optionally followed by
/// `pi` (`pi`, `-2pi`, `0.5pi`).
fn parse_defocus(text: &str) -> AppResult<DefocusVector> {
    let mut values = Vec::new();
    for raw in text.split(',') {
        let t = raw.trim();
        if t.is_empty() {
            continue;
        }
        let v = match t.strip_suffix("pi") {
            Some("") | Some("+") => Ok(std::f64::consts::PI),
            Some("-") => Ok(-std::f64::consts::PI),
            Some(k) => k.parse::<f64>().map(|k| k * std::f64::consts::PI),
            None => t.parse::<f64>(),
        }
        .map_err(|e| AppError::input(format!("defocus value {t:?}: {e}")))?;
        values.push(v);
    }
    if values.is_empty() {
        return Err(AppError::input("defocus list is empty"));
    }
    Ok(DefocusVector::new(values)?)
}

#[derive(Serialize)]
struct FieldConfig<'a> {
    command: &'a str,
    engine: EngineKind,
    input: String,
    grid: GridSpec,
    defocus: &'a [f64],
    settings: EngineSettings,
}

fn header_lines(cfg: &FieldConfig<'_>, run: &FieldRun) -> Vec<String> {
    let mut h = vec![format!("diffract {}", cfg.command), format!("config: {}", serde_json::to_string(cfg).expect("config"))];
    if let Some(b) = run.truncation_bound {
        h.push(format!("truncation_bound: {}", io::num(b)));
    }
    if let Some(g) = run.frequency_grid {
        h.push(format!("frequency_grid: {{\"size\":{},\"spacing\":{}}}", g.size, io::num(g.spacing)));
    }
    h
}

fn write_outputs(
    cfg: &FieldConfig<'_>,
    grid: &EvalGrid,
    run: &FieldRun,
    out: Option<&Path>,
    binary: Option<&Path>,
    pgm: Option<&Path>,
) -> AppResult<()> {
    let header = header_lines(cfg, run);
    let quad = run.quad.as_deref();
    match out {
        Some(p) => {
            let mut w = io::create(p)?;
            io::write_field_csv(&mut w, &header, cfg.defocus, grid, &run.field, quad)
                .and_then(|_| w.flush())
                .map_err(|e| AppError::io(p, e))?;
        }
        None if binary.is_none() && pgm.is_none() => {
            let stdout = std::io::stdout();
            let mut w = std::io::BufWriter::new(stdout.lock());
            io::write_field_csv(&mut w, &header, cfg.defocus, grid, &run.field, quad)
                .and_then(|_| w.flush())
                .map_err(|e| AppError::new(exit::IO, e.to_string()))?;
        }
        None => {}
    }
    if let Some(p) = binary {
        let mut w = io::create(p)?;
        io::write_field_binary(&mut w, &run.field).and_then(|_| w.flush()).map_err(|e| AppError::io(p, e))?;
    }
    if let Some(prefix) = pgm {
        let (width, height, flip) = match cfg.grid {
            GridSpec::Square { n, .. } => (n, n, true),
            GridSpec::Diameter { n, .. } => (n, 1, false),
        };
        for (m, f) in cfg.defocus.iter().enumerate() {
            let mut psf = run.field.normalized_psf_row(m);
            if flip {
                // grid rows run upward in y; images run downward
                psf = psf.chunks(width).rev().flatten().copied().collect();
            }
            let path = PathBuf::from(format!("{}_{m:03}.pgm", prefix.display()));
            let comment = format!("{}\nf={}", header.join("\n"), io::num(*f));
            let mut w = io::create(&path)?;
            io::write_pgm(&mut w, &comment, width, height, &psf).and_then(|_| w.flush()).map_err(|e| AppError::io(&path, e))?;
        }
    }
    Ok(())
}

fn warn_unconverged(run: &FieldRun) {
    if let Some(q) = &run.quad {
        let bad = q.iter().filter(|i| !i.converged).count();
        if bad > 0 {
            eprintln!("warning: quadrature did not reach the tolerance at {bad} of {} points", q.len());
        }
    }
}

fn cmd_fit(cmd: &FitCmd) -> AppResult<()> {
    let mut spec = match &cmd.pupil {
        Some(p) => io::read_pupil_spec(p)?,
        None => PupilSpec::clear(),
    };
    cmd.fit.apply_seed(&mut spec);
    let settings = cmd.fit.settings();
    let (samples, source) = match &cmd.samples {
        Some(p) => (io::read_samples_csv(p, &spec)?, p.display().to_string()),
        None => (settings.samples(&spec)?, cmd.pupil.as_ref().expect("clap requires one input").display().to_string()),
    };
    let flags: Vec<String> = std::env::args().skip(1).collect();
    let report = match cmd.kind {
        ModelKind::Grbf => {
            let (model, report) = fitting::fit_grbf_samples(&samples, &spec, &settings)?;
            let record = record(flags, source, &report, settings.regularization);
            io::write_json(&cmd.out, &GrbfModelJson::from_model(&model, Some(record)))?;
            report
        }
        ModelKind::Zernike => {
            let (e, report) = fitting::fit_zernike_samples(&samples, &settings)?;
            io::write_json(&cmd.out, &io::zernike_records(&e))?;
            report
        }
    };
    println!(
        "{}",
        serde_json::json!({
            "rms_residual": report.rms_residual,
            "regularization_parameter": report.regularization_parameter,
            "basis_count": report.center_count,
            "sample_count": report.sample_count,
        })
    );
    Ok(())
}

fn record(flags: Vec<String>, source: String, r: &diffract_core::rbf_fit::FitReport, reg: RegChoice) -> FitRecord {
    FitRecord {
        flags,
        source,
        regularization: fitting::describe(r, reg),
        mu: r.regularization_parameter,
        rms_residual: r.rms_residual,
        sample_count: r.sample_count,
        basis_count: r.center_count,
    }
}

fn cmd_field(cmd: &FieldCmd) -> AppResult<()> {
    let defocus = parse_defocus(&cmd.defocus)?;
    let grid_spec = cmd.grid.spec();
    let grid = grid_spec.build()?;
    let input = io::read_model_file(&cmd.model)?;
    let settings = cmd.engine_args.settings();
    let run = run_engine(cmd.engine, &input, &grid, &defocus, &settings)?;
    if let Some(b) = run.truncation_bound {
        eprintln!("truncation_bound = {b:e}");
    }
    warn_unconverged(&run);
    let cfg = FieldConfig {
        command: "field",
        engine: cmd.engine,
        input: cmd.model.display().to_string(),
        grid: grid_spec,
        defocus: defocus.values(),
        settings,
    };
    write_outputs(&cfg, &grid, &run, cmd.out.as_deref(), cmd.binary.as_deref(), cmd.pgm.as_deref())
}

fn cmd_oracle(cmd: &OracleCmd) -> AppResult<()> {
    let defocus = parse_defocus(&cmd.defocus)?;
    let grid_spec = cmd.grid.spec();
    let grid = grid_spec.build()?;
    let input = ModelFile::Pupil(io::read_pupil_spec(&cmd.pupil)?);
    let settings = cmd.engine_args.settings();
    let run = run_engine(EngineKind::Oracle, &input, &grid, &defocus, &settings)?;
    warn_unconverged(&run);
    let cfg = FieldConfig {
        command: "oracle",
        engine: EngineKind::Oracle,
        input: cmd.pupil.display().to_string(),
        grid: grid_spec,
        defocus: defocus.values(),
        settings,
    };
    write_outputs(&cfg, &grid, &run, cmd.out.as_deref(), None, None)
}

#[derive(Serialize)]
struct PlaneDiff {
    f: f64,
    field_max: f64,
    field_mean: f64,
    psf_max: f64,
    psf_mean: f64,
}

#[derive(Serialize)]
struct PairDiff {
    reference: EngineKind,
    engine: EngineKind,
    planes: Vec<PlaneDiff>,
}

#[derive(Serialize)]
struct CompareReport {
    grid: GridSpec,
    defocus: Vec<f64>,
    settings: EngineSettings,
    fit: FitSettings,
    metric: Metric,
    tol: Option<f64>,
    pairs: Vec<PairDiff>,
    passed: bool,
}

fn cmd_compare(cmd: &CompareCmd) -> AppResult<()> {
    if cmd.engines.len() < 2 {
        return Err(AppError::input("compare needs at least two engines"));
    }
    let defocus = parse_defocus(&cmd.defocus)?;
    let grid_spec = cmd.grid.spec();
    let grid = grid_spec.build()?;
    let settings = cmd.engine_args.settings();
    let fit = cmd.fit.settings();
    let mut pupil = cmd.pupil.as_deref().map(io::read_pupil_spec).transpose()?;
    if let Some(p) = pupil.as_mut() {
        cmd.fit.apply_seed(p);
    }
    let need_pupil = || AppError::input("--pupil is required to fit models or run dft/oracle");
    let mut grbf: Option<ModelFile> = None;
    let mut enz: Option<ModelFile> = None;
    let mut runs = Vec::new();
    for &e in &cmd.engines {
        let input = match e {
            EngineKind::Grbf => {
                if grbf.is_none() {
                    grbf = Some(match &cmd.grbf_model {
                        Some(p) => io::read_model_file(p)?,
                        None => ModelFile::Grbf(fitting::fit_grbf(pupil.as_ref().ok_or_else(need_pupil)?, &fit)?.0),
                    });
                }
                grbf.clone().expect("set above")
            }
            EngineKind::EnzPb | EngineKind::EnzBb | EngineKind::EnzEbb => {
                if enz.is_none() {
                    enz = Some(match &cmd.enz_model {
                        Some(p) => io::read_model_file(p)?,
                        None => ModelFile::Zernike(fitting::fit_enz(pupil.as_ref().ok_or_else(need_pupil)?, &fit)?.0),
                    });
                }
                enz.clone().expect("set above")
            }
            EngineKind::Dft | EngineKind::Oracle => ModelFile::Pupil(pupil.clone().ok_or_else(need_pupil)?),
        };
        let run = run_engine(e, &input, &grid, &defocus, &settings)?;
        warn_unconverged(&run);
        runs.push(run);
    }
    let mut pairs = Vec::new();
    let mut worst = 0.0f64;
    for (e, run) in cmd.engines.iter().zip(&runs).skip(1) {
        let fd = field_difference(&runs[0].field, &run.field)?;
        let pd = psf_difference(&runs[0].field, &run.field)?;
        let planes: Vec<PlaneDiff> = defocus
            .values()
            .iter()
            .zip(fd.iter().zip(&pd))
            .map(|(&f, (a, b))| PlaneDiff {
                f,
                field_max: a.max_abs,
                field_mean: a.mean_abs,
                psf_max: b.max_abs,
                psf_mean: b.mean_abs,
            })
            .collect();
        for p in &planes {
            worst = worst.max(match cmd.metric {
                Metric::Field => p.field_max,
                Metric::Psf => p.psf_max,
            });
        }
        pairs.push(PairDiff { reference: cmd.engines[0], engine: *e, planes });
    }
    let passed = cmd.tol.is_none_or(|t| worst <= t);
    let report = CompareReport {
        grid: grid_spec,
        defocus: defocus.values().to_vec(),
        settings,
        fit,
        metric: cmd.metric,
        tol: cmd.tol,
        pairs,
        passed,
    };
    let text = serde_json::to_string_pretty(&report).expect("report serializes");
    println!("{text}");
    if let Some(p) = &cmd.out {
        std::fs::write(p, format!("{text}\n")).map_err(|e| AppError::io(p, e))?;
    }
    if !passed {
        return Err(AppError::new(
            exit::TOLERANCE,
            format!("maximum difference {worst:e} exceeds tolerance {:e}", cmd.tol.unwrap_or_default()),
        ));
    }
    Ok(())
}

fn cmd_bench(cmd: &BenchCmd, threads: Option<usize>) -> AppResult<()> {
    let mut spec = match &cmd.pupil {
        Some(p) => io::read_pupil_spec(p)?,
        None => PupilSpec::with_wavefront(diffract_core::pupil::WavefrontSpec::synthetic_benchmark()),
    };
    cmd.fit.apply_seed(&mut spec);
    let opts = BenchOptions {
        repetitions: cmd.repetitions,
        warmup: !cmd.no_warmup,
        grid_size: cmd.grid_size,
        defocus: cmd.defocus,
        defocus_max: cmd.defocus_max,
        engine: cmd.engine_args.settings(),
        fit: cmd.fit.settings(),
        parallel: cmd.parallel.then_some(threads.unwrap_or(0)),
        ..BenchOptions::default()
    };
    let report = match cmd.sweep {
        Sweep::Basis => run_basis_sweep(&spec, &cmd.engines, &cmd.counts, &opts)?,
        Sweep::Defocus => run_defocus_sweep(&spec, &cmd.engines, &cmd.lengths, &opts)?,
    };
    let json = report.to_json();
    println!("{json}");
    if let Some(p) = &cmd.out_json {
        std::fs::write(p, format!("{json}\n")).map_err(|e| AppError::io(p, e))?;
    }
    if let Some(p) = &cmd.out_csv {
        let mut w = io::create(p)?;
        report.write_csv(&mut w).and_then(|_| w.flush()).map_err(|e| AppError::io(p, e))?;
    }
    for s in report.series.iter().filter(|s| !s.slope_defined()) {
        eprintln!("note: {} has a single sweep point; slope undefined", s.engine);
    }
    Ok(())
}

fn run(cli: Cli) -> AppResult<()> {
    if let Command::Bench(b) = &cli.command {
        // the harness manages its own pools
        return cmd_bench(b, cli.threads);
    }
    let pool = thread_pool(cli.threads.unwrap_or(0))?;
    pool.install(|| match &cli.command {
        Command::Fit(c) => cmd_fit(c),
        Command::Field(c) => cmd_field(c),
        Command::Compare(c) => cmd_compare(c),
        Command::Oracle(c) => cmd_oracle(c),
        Command::Bench(_) => unreachable!(),
    })
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code)
        }
    }
}

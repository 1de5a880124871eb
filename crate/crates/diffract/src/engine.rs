//! Engine selection and the rayon-parallel drivers.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use diffract_core::dft::{compute_field_dft, DftParams, FrequencyGrid};
use diffract_core::enz::{EnzModel, EnzParams, EnzPlan, EnzVariant};
use diffract_core::field::{DefocusVector, EvalGrid, FieldMatrix};
use diffract_core::grbf::{model_truncation_bound, GrbfPlan, TruncationParams, BLOCK_SIZE};
use diffract_core::oracle::{quad_field, FocalFactor, QuadParams};
use diffract_core::pupil::PupilSpec;
use diffract_core::rbf_fit::GrbfModel;
use diffract_core::specfun::SeriesBudget;
use diffract_core::C64;

use crate::error::{AppError, AppResult};
use crate::io::{ModelFile, QuadInfo};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum EngineKind {
    Grbf,
    EnzPb,
    EnzBb,
    EnzEbb,
    Dft,
    Oracle,
}

impl EngineKind {
    pub fn name(self) -> &'static str {
        match self {
            EngineKind::Grbf => "grbf",
            EngineKind::EnzPb => "enz-pb",
            EngineKind::EnzBb => "enz-bb",
            EngineKind::EnzEbb => "enz-ebb",
            EngineKind::Dft => "dft",
            EngineKind::Oracle => "oracle",
        }
    }

    pub fn enz_variant(self) -> Option<EnzVariant> {
        match self {
            EngineKind::EnzPb => Some(EnzVariant::PowerBessel),
            EngineKind::EnzBb => Some(EnzVariant::BesselBessel),
            EngineKind::EnzEbb => Some(EnzVariant::EnhancedBesselBessel),
            _ => None,
        }
    }

    /// Input the engine consumes.
    pub fn expects(self) -> &'static str {
        match self {
            EngineKind::Grbf => "a GRBF model",
            EngineKind::EnzPb | EngineKind::EnzBb | EngineKind::EnzEbb => "a Zernike model",
            EngineKind::Dft | EngineKind::Oracle => "a pupil specification",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum FocalKind {
    #[default]
    Debye,
    HighNa,
}

/// Tunables of every engine; each run uses the subset that applies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EngineSettings {
    /// GRBF series cut-off `S`.
    pub cutoff: usize,
    /// ENZ series length; automatic when absent.
    pub series_terms: Option<usize>,
    /// Bessel power-series terms for ENZ; automatic when absent.
    pub bessel_terms: Option<usize>,
    pub fft_size: usize,
    pub pad_factor: f64,
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
    pub focal: FocalKind,
}

impl Default for EngineSettings {
    fn default() -> Self {
        let q = QuadParams::default();
        let d = DftParams::default();
        EngineSettings {
            cutoff: diffract_core::grbf::DEFAULT_CUTOFF,
            series_terms: None,
            bessel_terms: None,
            fft_size: d.grid_size,
            pad_factor: d.pad_factor,
            abs_tol: q.abs_tol,
            rel_tol: q.rel_tol,
            max_subdivisions: q.max_subdivisions,
            focal: FocalKind::Debye,
        }
    }
}

impl EngineSettings {
    pub fn truncation(&self) -> TruncationParams {
        TruncationParams { cutoff_s: self.cutoff }
    }

    pub fn enz(&self, variant: EnzVariant) -> diffract_core::Result<EnzParams> {
        Ok(EnzParams {
            variant,
            series_terms: self.series_terms,
            bessel_terms: self.bessel_terms.map(SeriesBudget::new).transpose()?,
        })
    }

    pub fn dft(&self) -> DftParams {
        DftParams { grid_size: self.fft_size, pad_factor: self.pad_factor }
    }

    pub fn quad(&self, spec: &PupilSpec) -> QuadParams {
        QuadParams {
            abs_tol: self.abs_tol,
            rel_tol: self.rel_tol,
            max_subdivisions: self.max_subdivisions,
            focal: match self.focal {
                FocalKind::Debye => FocalFactor::Debye,
                FocalKind::HighNa => FocalFactor::HighNa { s0: spec.numerical_aperture },
            },
        }
    }
}

/// Field plus the engine-specific diagnostics.
#[derive(Debug, Clone)]
pub struct FieldRun {
    pub field: FieldMatrix,
    pub truncation_bound: Option<f64>,
    pub frequency_grid: Option<FrequencyGrid>,
    pub quad: Option<Vec<QuadInfo>>,
}

impl FieldRun {
    fn plain(field: FieldMatrix) -> Self {
        FieldRun { field, truncation_bound: None, frequency_grid: None, quad: None }
    }
}

/// GRBF field with column blocks evaluated in parallel. Blocks are fixed
/// [`BLOCK_SIZE`] slices written back in index order, so the result does not
/// depend on the thread count.
pub fn grbf_field_parallel(
    model: &GrbfModel,
    grid: &EvalGrid,
    defocus: &DefocusVector,
    trunc: TruncationParams,
) -> diffract_core::Result<FieldMatrix> {
    let plan = GrbfPlan::new(model, defocus, trunc, grid.len())?;
    let blocks: Vec<Vec<C64>> = grid.points().par_chunks(BLOCK_SIZE).map(|c| plan.eval_block(c)).collect();
    let mut out = FieldMatrix::zeros(defocus.len(), grid.len());
    let mut start = 0;
    for (chunk, block) in grid.points().chunks(BLOCK_SIZE).zip(&blocks) {
        out.write_block(start, chunk.len(), block);
        start += chunk.len();
    }
    Ok(out)
}

/// ENZ field with defocus rows evaluated in parallel.
pub fn enz_field_parallel(
    model: &EnzModel,
    grid: &EvalGrid,
    defocus: &DefocusVector,
    params: EnzParams,
) -> diffract_core::Result<FieldMatrix> {
    let plan = EnzPlan::new(model, grid, defocus, params)?;
    let rows: Vec<Vec<C64>> =
        defocus.values().par_iter().map(|&f| plan.eval_row(f)).collect::<diffract_core::Result<_>>()?;
    let mut out = FieldMatrix::zeros(defocus.len(), grid.len());
    for (m, row) in rows.iter().enumerate() {
        out.row_mut(m).copy_from_slice(row);
    }
    Ok(out)
}

/// FFT field with one task per defocus plane, sampled on `grid`.
pub fn dft_field_parallel(
    spec: &PupilSpec,
    grid: &EvalGrid,
    defocus: &DefocusVector,
    params: DftParams,
) -> diffract_core::Result<(FieldMatrix, FrequencyGrid)> {
    params.validate()?;
    let planes: Vec<(FieldMatrix, FrequencyGrid)> = defocus
        .values()
        .par_iter()
        .map(|&f| {
            let d = compute_field_dft(spec, &DefocusVector::single(f)?, &params)?;
            Ok((d.sample(grid)?, d.grid))
        })
        .collect::<diffract_core::Result<_>>()?;
    let mut out = FieldMatrix::zeros(defocus.len(), grid.len());
    for (m, (p, _)) in planes.iter().enumerate() {
        out.row_mut(m).copy_from_slice(p.row(0));
    }
    Ok((out, planes[0].1))
}

/// Quadrature reference with points evaluated in parallel.
pub fn oracle_field_parallel(
    spec: &PupilSpec,
    grid: &EvalGrid,
    defocus: &DefocusVector,
    params: &QuadParams,
) -> diffract_core::Result<(FieldMatrix, Vec<QuadInfo>)> {
    let j = grid.len();
    let results: Vec<_> = (0..defocus.len() * j)
        .into_par_iter()
        .map(|i| quad_field(spec, grid.points()[i % j], defocus.values()[i / j], params))
        .collect::<diffract_core::Result<_>>()?;
    let field = FieldMatrix::from_rows(defocus.len(), j, results.iter().map(|q| q.value).collect())?;
    let info = results.iter().map(|q| QuadInfo { err_est: q.err_est, converged: q.converged }).collect();
    Ok((field, info))
}

/// Runs `engine` on `input` in the current rayon pool.
pub fn run_engine(
    engine: EngineKind,
    input: &ModelFile,
    grid: &EvalGrid,
    defocus: &DefocusVector,
    settings: &EngineSettings,
) -> AppResult<FieldRun> {
    let mismatch =
        || AppError::mismatch(format!("engine {} needs {}, got a {}", engine.name(), engine.expects(), input.kind()));
    match (engine, input) {
        (EngineKind::Grbf, ModelFile::Grbf(m)) => {
            let bound = model_truncation_bound(m, grid, settings.truncation())?;
            let field = grbf_field_parallel(m, grid, defocus, settings.truncation())?;
            Ok(FieldRun { truncation_bound: Some(bound), ..FieldRun::plain(field) })
        }
        (EngineKind::EnzPb | EngineKind::EnzBb | EngineKind::EnzEbb, ModelFile::Zernike(e)) => {
            let variant = engine.enz_variant().expect("ENZ engine");
            let model = EnzModel::new(e.clone())?;
            Ok(FieldRun::plain(enz_field_parallel(&model, grid, defocus, settings.enz(variant)?)?))
        }
        (EngineKind::Dft, ModelFile::Pupil(p)) => {
            let (field, fg) = dft_field_parallel(p, grid, defocus, settings.dft())?;
            Ok(FieldRun { frequency_grid: Some(fg), ..FieldRun::plain(field) })
        }
        (EngineKind::Oracle, ModelFile::Pupil(p)) => {
            let (field, info) = oracle_field_parallel(p, grid, defocus, &settings.quad(p))?;
            Ok(FieldRun { quad: Some(info), ..FieldRun::plain(field) })
        }
        _ => Err(mismatch()),
    }
}

/// Pool with `threads` workers; 0 means the rayon default.
pub fn thread_pool(threads: usize) -> AppResult<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| AppError::input(format!("thread pool: {e}")))
}

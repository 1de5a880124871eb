//! Model preparation from pupil specifications or samples.

use serde::{Deserialize, Serialize};

use diffract_core::pupil::{sample_pupil, PupilSamples, PupilSpec, SampleGrid};
use diffract_core::rbf_fit::{
    fit, fit_zernike, make_centers, phase_noise_rms, FitOptions, FitReport, GrbfModel, Regularization, DEFAULT_LAMBDA,
};
use diffract_core::zernike::{cosine_indices, ZernikeExpansion};
use diffract_core::C64;

use crate::error::AppResult;

/// Tikhonov parameter choice as requested on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegChoice {
    /// Discrepancy principle at the pupil's known noise level (or the noise
    /// floor) for GRBF; plain least squares for Zernike.
    #[default]
    Auto,
    None,
    Fixed(f64),
    NoiseRms(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitSettings {
    pub centers_per_side: usize,
    pub lambda: f64,
    /// Side of the pupil sampling lattice over `[-1, 1]^2`.
    pub sample_grid: usize,
    pub zernike_terms: usize,
    pub regularization: RegChoice,
}

impl Default for FitSettings {
    fn default() -> Self {
        FitSettings {
            centers_per_side: 20,
            lambda: DEFAULT_LAMBDA,
            sample_grid: 100,
            zernike_terms: 45,
            regularization: RegChoice::Auto,
        }
    }
}

impl FitSettings {
    fn grbf_regularization(&self, spec: &PupilSpec) -> Regularization {
        match self.regularization {
            RegChoice::Auto if spec.wavefront.noise_sigma > 0.0 => {
                Regularization::Discrepancy { noise_rms: phase_noise_rms(spec.wavefront.noise_sigma, spec.phase_scale()) }
            }
            RegChoice::Auto => Regularization::default(),
            other => explicit(other),
        }
    }

    fn zernike_regularization(&self) -> Regularization {
        match self.regularization {
            RegChoice::Auto => Regularization::None,
            other => explicit(other),
        }
    }

    pub fn samples(&self, spec: &PupilSpec) -> AppResult<PupilSamples> {
        Ok(sample_pupil(spec, &SampleGrid::new(self.sample_grid, 1.0)?)?)
    }
}

fn explicit(r: RegChoice) -> Regularization {
    match r {
        RegChoice::Auto | RegChoice::None => Regularization::None,
        RegChoice::Fixed(mu) => Regularization::Fixed(mu),
        RegChoice::NoiseRms(s) => Regularization::Discrepancy { noise_rms: s },
    }
}

pub fn fit_grbf_samples(
    samples: &PupilSamples,
    spec: &PupilSpec,
    s: &FitSettings,
) -> AppResult<(GrbfModel, FitReport)> {
    let centers = make_centers(s.centers_per_side, s.lambda)?;
    let opts = FitOptions { regularization: s.grbf_regularization(spec), ..FitOptions::default() };
    Ok(fit(samples, &centers, opts)?)
}

pub fn fit_zernike_samples(samples: &PupilSamples, s: &FitSettings) -> AppResult<(ZernikeExpansion<C64>, FitReport)> {
    Ok(fit_zernike(samples, &cosine_indices(s.zernike_terms), s.zernike_regularization())?)
}

/// GRBF model of a sampled pupil specification.
pub fn fit_grbf(spec: &PupilSpec, s: &FitSettings) -> AppResult<(GrbfModel, FitReport)> {
    fit_grbf_samples(&s.samples(spec)?, spec, s)
}

/// Cosine-only Zernike model of a sampled pupil specification.
pub fn fit_enz(spec: &PupilSpec, s: &FitSettings) -> AppResult<(ZernikeExpansion<C64>, FitReport)> {
    fit_zernike_samples(&s.samples(spec)?, s)
}

/// Human-readable name of the regularization actually applied.
pub fn describe(report: &FitReport, choice: RegChoice) -> String {
    match choice {
        RegChoice::Auto if report.regularization_parameter > 0.0 => "discrepancy".into(),
        RegChoice::Auto | RegChoice::None => "none".into(),
        RegChoice::Fixed(_) => "fixed".into(),
        RegChoice::NoiseRms(_) => "discrepancy".into(),
    }
}

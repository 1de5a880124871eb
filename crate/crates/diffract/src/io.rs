//! File formats: pupil specifications, models, samples and field outputs.

use std::fs;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use diffract_core::field::{EvalGrid, FieldMatrix};
use diffract_core::pupil::{
    AmplitudeMask, GaussianBump, PhaseSign, PupilSample, PupilSamples, PupilSpec, WavefrontSpec,
};
use diffract_core::rbf_fit::{Center, CenterGrid, GrbfModel};
use diffract_core::zernike::{ZernikeExpansion, ZernikeIndex};
use diffract_core::C64;

use crate::error::{exit, AppError, AppResult};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexJson {
    pub re: f64,
    pub im: f64,
}

impl From<C64> for ComplexJson {
    fn from(z: C64) -> Self {
        ComplexJson { re: z.re, im: z.im }
    }
}

impl From<ComplexJson> for C64 {
    fn from(z: ComplexJson) -> Self {
        C64::new(z.re, z.im)
    }
}

/// Zernike coefficient: a bare number or `{re, im}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CoeffJson {
    Real(f64),
    Complex(ComplexJson),
}

impl CoeffJson {
    fn value(self) -> C64 {
        match self {
            CoeffJson::Real(x) => C64::new(x, 0.0),
            CoeffJson::Complex(z) => z.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ZernikeRecord {
    pub n: i64,
    pub m: i64,
    pub c: CoeffJson,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BumpJson {
    pub a: f64,
    pub b: f64,
    pub lambda: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WavefrontJson {
    #[serde(default)]
    pub zernike: Vec<ZernikeRecord>,
    #[serde(default)]
    pub bumps: Vec<BumpJson>,
    #[serde(default)]
    pub noise_sigma: f64,
    #[serde(default)]
    pub noise_seed: u64,
}

/// Either an explicit wavefront or the name of a built-in one
/// (`"synthetic"`), optionally with noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum WavefrontField {
    Preset(String),
    Explicit(WavefrontJson),
}

impl Default for WavefrontField {
    fn default() -> Self {
        WavefrontField::Explicit(WavefrontJson::default())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MaskJson {
    #[default]
    UnitDisk,
    Ellipse {
        ax: f64,
        ay: f64,
    },
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignJson {
    #[default]
    Minus,
    Plus,
}

fn one() -> f64 {
    1.0
}

fn two_pi() -> f64 {
    2.0 * std::f64::consts::PI
}

fn half() -> f64 {
    0.5
}

/// JSON form of [`PupilSpec`]. Every field is optional; `{}` is the clear
/// unit-disk pupil with the wavefront read as a phase in radians.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PupilSpecJson {
    #[serde(default)]
    pub wavefront: WavefrontField,
    #[serde(default)]
    pub mask: MaskJson,
    #[serde(default = "one")]
    pub refractive_index: f64,
    #[serde(default = "two_pi")]
    pub wavelength: f64,
    #[serde(default = "half")]
    pub numerical_aperture: f64,
    #[serde(default)]
    pub phase_sign: SignJson,
    /// Noise added on top of a preset wavefront.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise_sigma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise_seed: Option<u64>,
}

impl PupilSpecJson {
    pub fn to_spec(&self) -> AppResult<PupilSpec> {
        let mut wavefront = match &self.wavefront {
            WavefrontField::Preset(name) if name == "synthetic" => WavefrontSpec::synthetic_benchmark(),
            WavefrontField::Preset(name) => {
                return Err(AppError::input(format!("unknown wavefront preset {name:?} (known: \"synthetic\")")))
            }
            WavefrontField::Explicit(w) => {
                let terms = w
                    .zernike
                    .iter()
                    .map(|r| {
                        let c = r.c.value();
                        if c.im != 0.0 {
                            return Err(AppError::input("wavefront Zernike coefficients must be real"));
                        }
                        Ok((ZernikeIndex::new(r.n, r.m)?, c.re))
                    })
                    .collect::<AppResult<Vec<_>>>()?;
                let bumps = w
                    .bumps
                    .iter()
                    .map(|b| GaussianBump::new(b.a, b.b, b.lambda, b.weight))
                    .collect::<Result<Vec<_>, _>>()?;
                WavefrontSpec {
                    zernike: ZernikeExpansion::new(terms)?,
                    bumps,
                    noise_sigma: w.noise_sigma,
                    noise_seed: w.noise_seed,
                }
            }
        };
        if let Some(s) = self.noise_sigma {
            wavefront.noise_sigma = s;
        }
        if let Some(s) = self.noise_seed {
            wavefront.noise_seed = s;
        }
        let spec = PupilSpec {
            wavefront,
            mask: match self.mask {
                MaskJson::UnitDisk => AmplitudeMask::UnitDisk,
                MaskJson::Ellipse { ax, ay } => AmplitudeMask::Ellipse { ax, ay },
                MaskJson::None => AmplitudeMask::None,
            },
            refractive_index: self.refractive_index,
            wavelength: self.wavelength,
            numerical_aperture: self.numerical_aperture,
            phase_sign: match self.phase_sign {
                SignJson::Minus => PhaseSign::Minus,
                SignJson::Plus => PhaseSign::Plus,
            },
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_spec(spec: &PupilSpec) -> Self {
        let w = &spec.wavefront;
        PupilSpecJson {
            wavefront: WavefrontField::Explicit(WavefrontJson {
                zernike: w
                    .zernike
                    .terms()
                    .iter()
                    .map(|&(i, c)| ZernikeRecord { n: i.n() as i64, m: i.m() as i64, c: CoeffJson::Real(c) })
                    .collect(),
                bumps: w
                    .bumps
                    .iter()
                    .map(|b| BumpJson { a: b.a, b: b.b, lambda: b.lambda, weight: b.weight })
                    .collect(),
                noise_sigma: w.noise_sigma,
                noise_seed: w.noise_seed,
            }),
            mask: match spec.mask {
                AmplitudeMask::UnitDisk => MaskJson::UnitDisk,
                AmplitudeMask::Ellipse { ax, ay } => MaskJson::Ellipse { ax, ay },
                AmplitudeMask::None => MaskJson::None,
            },
            refractive_index: spec.refractive_index,
            wavelength: spec.wavelength,
            numerical_aperture: spec.numerical_aperture,
            phase_sign: match spec.phase_sign {
                PhaseSign::Minus => SignJson::Minus,
                PhaseSign::Plus => SignJson::Plus,
            },
            noise_sigma: None,
            noise_seed: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CenterJson {
    pub a: f64,
    pub b: f64,
    /// Per-center shape parameter; the file-level `lambda` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
}

/// How a model was fitted; stored alongside the coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitRecord {
    /// Command-line flags as given.
    pub flags: Vec<String>,
    pub source: String,
    pub regularization: String,
    pub mu: f64,
    pub rms_residual: f64,
    pub sample_count: usize,
    pub basis_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GrbfModelJson {
    pub lambda: f64,
    pub centers: Vec<CenterJson>,
    pub c0: ComplexJson,
    pub coeffs: Vec<ComplexJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit: Option<FitRecord>,
}

impl GrbfModelJson {
    pub fn from_model(model: &GrbfModel, fit: Option<FitRecord>) -> Self {
        let lambda = model.grid.centers().first().map_or(0.0, |c| c.lambda);
        GrbfModelJson {
            lambda,
            centers: model
                .grid
                .centers()
                .iter()
                .map(|c| CenterJson { a: c.a, b: c.b, lambda: (c.lambda != lambda).then_some(c.lambda) })
                .collect(),
            c0: model.constant.into(),
            coeffs: model.coefficients.iter().map(|&z| z.into()).collect(),
            fit,
        }
    }

    pub fn to_model(&self) -> AppResult<GrbfModel> {
        let centers = self
            .centers
            .iter()
            .map(|c| Center { a: c.a, b: c.b, lambda: c.lambda.unwrap_or(self.lambda) })
            .collect();
        let grid = CenterGrid::new(centers)?;
        Ok(GrbfModel::new(grid, self.coeffs.iter().map(|&z| z.into()).collect(), self.c0.into())?)
    }
}

/// Any model or specification file the CLI accepts.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelFile {
    Pupil(PupilSpec),
    Grbf(GrbfModel),
    Zernike(ZernikeExpansion<C64>),
}

impl ModelFile {
    pub fn kind(&self) -> &'static str {
        match self {
            ModelFile::Pupil(_) => "pupil specification",
            ModelFile::Grbf(_) => "GRBF model",
            ModelFile::Zernike(_) => "Zernike model",
        }
    }
}

pub fn read_text(path: &Path) -> AppResult<String> {
    let mut s = String::new();
    fs::File::open(path)
        .and_then(|mut f| f.read_to_string(&mut s))
        .map_err(|e| AppError::input(format!("{}: {e}", path.display())))?;
    Ok(s)
}

fn json_error(path: &Path, e: serde_json::Error) -> AppError {
    AppError::input(format!("{}: {e}", path.display()))
}

fn parse_json<T: for<'de> Deserialize<'de>>(path: &Path, text: &str) -> AppResult<T> {
    serde_json::from_str(text).map_err(|e| json_error(path, e))
}

pub fn parse_zernike(records: &[ZernikeRecord]) -> AppResult<ZernikeExpansion<C64>> {
    let terms = records
        .iter()
        .map(|r| Ok((ZernikeIndex::new(r.n, r.m)?, r.c.value())))
        .collect::<AppResult<Vec<_>>>()?;
    Ok(ZernikeExpansion::new(terms)?)
}

pub fn zernike_records(e: &ZernikeExpansion<C64>) -> Vec<ZernikeRecord> {
    e.terms()
        .iter()
        .map(|&(i, c)| ZernikeRecord { n: i.n() as i64, m: i.m() as i64, c: CoeffJson::Complex(c.into()) })
        .collect()
}

/// Reads a pupil specification, GRBF model or Zernike model, telling them
/// apart by shape: an array is a Zernike list, an object with `centers` and
/// `coeffs` a GRBF model, any other object a pupil specification.
pub fn read_model_file(path: &Path) -> AppResult<ModelFile> {
    let text = read_text(path)?;
    let value: serde_json::Value = parse_json(path, &text)?;
    match &value {
        serde_json::Value::Array(_) => {
            let recs: Vec<ZernikeRecord> = parse_json(path, &text)?;
            Ok(ModelFile::Zernike(parse_zernike(&recs)?))
        }
        serde_json::Value::Object(map) if map.contains_key("centers") && map.contains_key("coeffs") => {
            let m: GrbfModelJson = parse_json(path, &text)?;
            Ok(ModelFile::Grbf(m.to_model()?))
        }
        serde_json::Value::Object(_) => {
            let p: PupilSpecJson = parse_json(path, &text)?;
            Ok(ModelFile::Pupil(p.to_spec()?))
        }
        _ => Err(AppError::input(format!("{}: expected a JSON object or array", path.display()))),
    }
}

pub fn read_pupil_spec(path: &Path) -> AppResult<PupilSpec> {
    match read_model_file(path)? {
        ModelFile::Pupil(p) => Ok(p),
        other => Err(AppError::input(format!("{}: expected a pupil specification, found a {}", path.display(), other.kind()))),
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> AppResult<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| AppError::new(exit::IO, e.to_string()))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| AppError::io(path, e))
}

/// Samples CSV with header `x,y,re,im` (complex pupil values) or `x,y,w`
/// (wavefront values turned into phasors through `spec`). Lines starting
/// with `#` are ignored.
pub fn read_samples_csv(path: &Path, spec: &PupilSpec) -> AppResult<PupilSamples> {
    let text = read_text(path)?;
    parse_samples_csv(&text, spec).map_err(|e| AppError::new(e.code, format!("{}: {}", path.display(), e.message)))
}

pub fn parse_samples_csv(text: &str, spec: &PupilSpec) -> AppResult<PupilSamples> {
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(text.as_bytes());
    let headers: Vec<String> = rdr
        .headers()
        .map_err(|e| AppError::input(e.to_string()))?
        .iter()
        .map(str::to_owned)
        .collect();
    let complex = match headers.iter().map(String::as_str).collect::<Vec<_>>().as_slice() {
        ["x", "y", "re", "im"] => true,
        ["x", "y", "w"] => false,
        _ => return Err(AppError::input(format!("header must be x,y,re,im or x,y,w, found {}", headers.join(",")))),
    };
    let mut pts = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| AppError::input(e.to_string()))?;
        let line = rec.position().map_or(0, |p| p.line());
        let nums = rec
            .iter()
            .map(|s| s.parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| AppError::input(format!("line {line}: {e}")))?;
        let (x, y) = (nums[0], nums[1]);
        let value = if complex { C64::new(nums[2], nums[3]) } else { spec.phasor(x, y, nums[2]) };
        pts.push(PupilSample { x, y, value });
    }
    Ok(PupilSamples::new(pts)?)
}

pub fn write_samples_csv<W: Write>(mut w: W, samples: &PupilSamples) -> std::io::Result<()> {
    writeln!(w, "x,y,re,im")?;
    for p in samples.points() {
        writeln!(w, "{},{},{},{}", num(p.x), num(p.y), num(p.value.re), num(p.value.im))?;
    }
    Ok(())
}

/// Fixed 17-significant-digit formatting used by every text output.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// Per-point quadrature diagnostics attached to oracle rows.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadInfo {
    pub err_est: f64,
    pub converged: bool,
}

/// Field CSV: `#` comment lines, then `f,r,phi,re,im,psf` (plus
/// `err_est,converged` when `quad` is given) with one row per (defocus,
/// point), defocus outer.
pub fn write_field_csv<W: Write>(
    mut w: W,
    header: &[String],
    defocus: &[f64],
    grid: &EvalGrid,
    field: &FieldMatrix,
    quad: Option<&[QuadInfo]>,
) -> std::io::Result<()> {
    for h in header {
        writeln!(w, "# {h}")?;
    }
    if quad.is_some() {
        writeln!(w, "f,r,phi,re,im,psf,err_est,converged")?;
    } else {
        writeln!(w, "f,r,phi,re,im,psf")?;
    }
    for (m, &f) in defocus.iter().enumerate() {
        for (j, p) in grid.points().iter().enumerate() {
            let u = field.get(m, j);
            write!(w, "{},{},{},{},{},{}", num(f), num(p.r), num(p.phi), num(u.re), num(u.im), num(u.norm_sqr()))?;
            if let Some(q) = quad {
                let q = q[m * grid.len() + j];
                write!(w, ",{},{}", num(q.err_est), u8::from(q.converged))?;
            }
            writeln!(w)?;
        }
    }
    Ok(())
}

pub const BINARY_MAGIC: [u8; 4] = *b"UFLD";
/// Interleaved little-endian `f64` real and imaginary parts.
pub const DTYPE_COMPLEX_F64: u32 = 1;

/// Binary field container: 16-byte header (magic, dtype, rows, cols as
/// little-endian `u32`) followed by the row-major data.
pub fn write_field_binary<W: Write>(mut w: W, field: &FieldMatrix) -> std::io::Result<()> {
    let dim = |n: usize| {
        u32::try_from(n).map_err(|_| std::io::Error::new(std::io::ErrorKind::InvalidInput, "dimension exceeds u32"))
    };
    w.write_all(&BINARY_MAGIC)?;
    w.write_all(&DTYPE_COMPLEX_F64.to_le_bytes())?;
    w.write_all(&dim(field.rows())?.to_le_bytes())?;
    w.write_all(&dim(field.cols())?.to_le_bytes())?;
    for z in field.data() {
        w.write_all(&z.re.to_le_bytes())?;
        w.write_all(&z.im.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_field_binary(bytes: &[u8]) -> AppResult<FieldMatrix> {
    let bad = |why: &str| AppError::input(format!("binary field: {why}"));
    if bytes.len() < 16 || bytes[..4] != BINARY_MAGIC {
        return Err(bad("missing header"));
    }
    let word = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().expect("4 bytes"));
    if word(4) != DTYPE_COMPLEX_F64 {
        return Err(bad("unsupported dtype"));
    }
    let (rows, cols) = (word(8) as usize, word(12) as usize);
    let body = &bytes[16..];
    if body.len() != rows * cols * 16 {
        return Err(bad("length does not match the header"));
    }
    let f = |c: &[u8]| f64::from_le_bytes(c.try_into().expect("8 bytes"));
    let data = body.chunks_exact(16).map(|c| C64::new(f(&c[..8]), f(&c[8..]))).collect();
    Ok(FieldMatrix::from_rows(rows, cols, data)?)
}

/// 16-bit binary PGM of `values` (already in `[0, 1]`), `width x height`,
/// first row at the top. Samples are big-endian as the format requires.
pub fn write_pgm<W: Write>(mut w: W, comment: &str, width: usize, height: usize, values: &[f64]) -> std::io::Result<()> {
    assert_eq!(values.len(), width * height);
    writeln!(w, "P5")?;
    for line in comment.lines() {
        writeln!(w, "# {line}")?;
    }
    writeln!(w, "{width} {height}")?;
    writeln!(w, "65535")?;
    for v in values {
        let q = (v.clamp(0.0, 1.0) * 65535.0).round() as u16;
        w.write_all(&q.to_be_bytes())?;
    }
    Ok(())
}

pub fn create(path: &Path) -> AppResult<BufWriter<fs::File>> {
    fs::File::create(path).map(BufWriter::new).map_err(|e| AppError::io(path, e))
}

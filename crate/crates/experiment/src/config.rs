//! Experiment configuration, read from TOML.
//!
//! ```toml
//! id = "gaussian-sigma"
//! seed = 1
//! trials = 5000
//! algorithms = ["ls", "srdls", "gs"]
//! denoise = "both"            # off | on | both
//! reference = 0               # optional, default 0
//! speed = 1.0                 # optional, default 1
//!
//! [array]
//! preset = "cross7"           # or: coords = [[0, 0, 0], [0.5, 0, 0], ...]
//!
//! [sources]
//! radii = [0.5, 1.5, 2.5]
//! count = 512                 # optional, default 512
//!
//! [noise]
//! model = "gaussian"          # gaussian | uniform | uniform_gaussian | laplacian
//! levels = [0.005, 0.015]
//!
//! [missing]
//! mode = "extra"              # none | explicit | extra
//! z = [0, 1, 2]
//!
//! [output]
//! csv = "results.csv"
//! ```

use std::path::Path;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use tdoaspace::localize::Algorithm;
use tdoaspace::{pair_count, NoiseModel, Pair, SensorArray};

use crate::error::{ExperimentError, Result};

pub const DEFAULT_SOURCE_COUNT: usize = 512;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub id: String,
    pub seed: u64,
    pub trials: usize,
    pub algorithms: Vec<String>,
    #[serde(default)]
    pub denoise: DenoiseMode,
    #[serde(default)]
    pub reference: usize,
    #[serde(default = "unit_speed")]
    pub speed: f64,
    pub array: ArrayConfig,
    pub sources: SourceConfig,
    pub noise: NoiseConfig,
    #[serde(default)]
    pub missing: MissingConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

fn unit_speed() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DenoiseMode {
    Off,
    On,
    #[default]
    Both,
}

impl DenoiseMode {
    pub fn flags(self) -> &'static [bool] {
        match self {
            DenoiseMode::Off => &[false],
            DenoiseMode::On => &[true],
            DenoiseMode::Both => &[false, true],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArrayConfig {
    pub preset: Option<String>,
    /// Arm length of the cross preset, default 0.5 m.
    pub arm: Option<f64>,
    pub coords: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceConfig {
    pub radii: Vec<f64>,
    #[serde(default = "default_count")]
    pub count: usize,
    pub center: Option<Vec<f64>>,
}

fn default_count() -> usize {
    DEFAULT_SOURCE_COUNT
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKindConfig {
    Gaussian,
    Uniform,
    UniformGaussian,
    Laplacian,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    pub model: NoiseKindConfig,
    /// Swept parameter: the standard deviation for the Gaussian and
    /// Laplacian models, the Gaussian part of the mixture, and the half
    /// width for the uniform model.
    #[serde(default)]
    pub levels: Vec<f64>,
    /// Uniform half width of the mixture model.
    pub half_width: Option<f64>,
    /// Sampling rate in Hz; sets the uniform half width to `speed / (2 fs)`
    /// when `half_width` is absent.
    pub sample_rate: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MissingMode {
    #[default]
    None,
    Explicit,
    Extra,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MissingConfig {
    #[serde(default)]
    pub mode: MissingMode,
    /// Missing pairs as `[hi, lo]`, for `explicit`.
    #[serde(default)]
    pub pairs: Vec<[usize; 2]>,
    /// Numbers of extra pairs beyond the reference set, for `extra`.
    #[serde(default)]
    pub z: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_csv")]
    pub csv: String,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { csv: default_csv() }
    }
}

fn default_csv() -> String {
    "results.csv".into()
}

/// Which pairs each trial observes.
#[derive(Debug, Clone, PartialEq)]
pub enum PairSelection {
    Full,
    /// A fixed set of missing pairs.
    Explicit(Vec<Pair>),
    /// The reference pairs plus `z` others drawn at random per trial.
    Extra(usize),
}

impl PairSelection {
    /// Label for the `z` column.
    pub fn label(&self, n: usize) -> String {
        match self {
            PairSelection::Full => "full".into(),
            PairSelection::Explicit(missing) => (pair_count(n) - missing.len() - n).to_string(),
            PairSelection::Extra(z) => z.to_string(),
        }
    }
}

/// A validated configuration with every default resolved.
#[derive(Debug, Clone)]
pub struct Plan {
    pub id: String,
    pub seed: u64,
    pub trials: usize,
    pub algorithms: Vec<Algorithm>,
    pub denoise: DenoiseMode,
    pub reference: usize,
    pub array: SensorArray,
    pub radii: Vec<f64>,
    pub source_count: usize,
    pub center: DVector<f64>,
    pub kind: NoiseKindConfig,
    pub levels: Vec<f64>,
    pub half_width: Option<f64>,
    pub selections: Vec<PairSelection>,
    pub csv_name: String,
}

impl Plan {
    /// Noise model at a grid level; `None` for the noiseless level 0.
    pub fn noise_model(&self, level: f64) -> Option<NoiseModel> {
        if level == 0.0 {
            return None;
        }
        let q = self.array.q();
        Some(match self.kind {
            NoiseKindConfig::Gaussian => NoiseModel::iid_gaussian(q, level),
            NoiseKindConfig::Uniform => NoiseModel::Uniform { half_width: level },
            NoiseKindConfig::UniformGaussian => NoiseModel::UniformPlusGaussian {
                half_width: self.half_width.unwrap_or_default(),
                std: level,
            },
            NoiseKindConfig::Laplacian => NoiseModel::Laplacian { std: level },
        })
    }
}

fn positive(what: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(ExperimentError::config(format!("{what} must be positive and finite, got {v}")))
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| ExperimentError::config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| ExperimentError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| ExperimentError::config(e.to_string()))
    }

    pub fn validate(&self) -> Result<Plan> {
        let cfg_err = |m: &str| ExperimentError::config(m);
        if self.trials == 0 {
            return Err(cfg_err("trials must be at least 1"));
        }
        if self.id.contains(',') || self.id.contains('\n') {
            return Err(cfg_err("id must not contain commas or newlines"));
        }
        positive("speed", self.speed)?;
        let array = self.array.build()?;
        let n = array.n();
        if self.reference > n {
            return Err(cfg_err(&format!("reference {} out of range", self.reference)));
        }
        let algorithms = self
            .algorithms
            .iter()
            .map(|a| a.parse::<Algorithm>().map_err(|e| cfg_err(&e.to_string())))
            .collect::<Result<Vec<_>>>()?;
        if algorithms.is_empty() {
            return Err(cfg_err("algorithm list is empty"));
        }

        if self.sources.radii.is_empty() {
            return Err(cfg_err("source radii are empty"));
        }
        for &r in &self.sources.radii {
            positive("radius", r)?;
        }
        if self.sources.count == 0 {
            return Err(cfg_err("source count must be at least 1"));
        }
        let center = match &self.sources.center {
            Some(c) if c.len() != array.dim() => {
                return Err(cfg_err(&format!("center must have {} coordinates", array.dim())))
            }
            Some(c) => DVector::from_column_slice(c),
            None => DVector::zeros(array.dim()),
        };

        let (levels, half_width) = self.noise.resolve(self.speed)?;

        let selections = match self.missing.mode {
            MissingMode::None => vec![PairSelection::Full],
            MissingMode::Explicit => {
                let pairs = self
                    .missing
                    .pairs
                    .iter()
                    .map(|&[hi, lo]| Pair::checked(hi, lo, n).map_err(|e| cfg_err(&e.to_string())))
                    .collect::<Result<Vec<_>>>()?;
                if pairs.iter().any(|p| p.lo == self.reference || p.hi == self.reference) {
                    return Err(cfg_err("explicit missing pairs must not involve the reference sensor"));
                }
                if pairs.len() >= pair_count(n) {
                    return Err(cfg_err("at least one pair must remain"));
                }
                vec![PairSelection::Explicit(pairs)]
            }
            MissingMode::Extra => {
                if self.missing.z.is_empty() {
                    return Err(cfg_err("missing.z is empty"));
                }
                let extra = pair_count(n) - n;
                if let Some(&z) = self.missing.z.iter().find(|&&z| z > extra) {
                    return Err(cfg_err(&format!("z = {z} exceeds the {extra} non-reference pairs")));
                }
                self.missing.z.iter().map(|&z| PairSelection::Extra(z)).collect()
            }
        };
        let partial = selections.iter().any(|s| *s != PairSelection::Full);
        if partial && self.reference != 0 {
            return Err(cfg_err("incomplete pair sets require reference 0"));
        }
        if partial && algorithms.contains(&Algorithm::Ml) {
            return Err(cfg_err("ml is only available on complete pair sets"));
        }
        if self.output.csv.is_empty() || self.output.csv.contains(['/', '\\']) {
            return Err(cfg_err("output.csv must be a plain file name"));
        }

        Ok(Plan {
            id: self.id.clone(),
            seed: self.seed,
            trials: self.trials,
            algorithms,
            denoise: self.denoise,
            reference: self.reference,
            array,
            radii: self.sources.radii.clone(),
            source_count: self.sources.count,
            center,
            kind: self.noise.model,
            levels,
            half_width,
            selections,
            csv_name: self.output.csv.clone(),
        })
    }
}

impl ArrayConfig {
    fn build(&self) -> Result<SensorArray> {
        let array = match (&self.preset, &self.coords) {
            (Some(p), None) if p == "cross7" => SensorArray::cross7(self.arm.unwrap_or(0.5)),
            (Some(p), None) => return Err(ExperimentError::config(format!("unknown array preset {p:?}"))),
            (None, Some(c)) => SensorArray::from_coords(c),
            _ => {
                return Err(ExperimentError::config(
                    "array needs exactly one of `preset` or `coords`",
                ))
            }
        };
        array.map_err(|e| ExperimentError::config(e.to_string()))
    }
}

impl NoiseConfig {
    fn resolve(&self, speed: f64) -> Result<(Vec<f64>, Option<f64>)> {
        let from_rate = match self.sample_rate {
            Some(fs) => {
                positive("sample_rate", fs)?;
                Some(NoiseModel::sampling_half_width(fs, speed))
            }
            None => None,
        };
        let half_width = self.half_width.or(from_rate);
        let mut levels = self.levels.clone();
        match self.model {
            NoiseKindConfig::Uniform if levels.is_empty() => {
                levels = half_width.into_iter().collect();
            }
            NoiseKindConfig::UniformGaussian => {
                positive("half_width", half_width.unwrap_or(f64::NAN))?;
            }
            _ => {}
        }
        if levels.is_empty() {
            return Err(ExperimentError::config("noise levels are empty"));
        }
        for &l in &levels {
            let zero_ok = self.model == NoiseKindConfig::Gaussian && l == 0.0;
            if !zero_ok {
                positive("noise level", l)?;
            }
        }
        Ok((levels, half_width))
    }
}

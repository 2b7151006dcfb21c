//! JSON formats of the one-shot commands.
//!
//! A TDOA file holds a pair list and the matching values, optionally a
//! covariance (nested rows or flat row-major) and sensor coordinates:
//!
//! ```json
//! {
//!   "pairs": [[1, 0], [2, 0], [2, 1]],
//!   "values": [0.12, -0.05, -0.17],
//!   "cov": [[1e-4, 0, 0], [0, 1e-4, 0], [0, 0, 1e-4]],
//!   "sensors": [[0, 0], [1, 0], [0, 1]]
//! }
//! ```
//!
//! `pairs` may be omitted for a complete set in canonical order. Values are
//! range differences; with a propagation speed other than 1 they are times
//! and are scaled on the way in and out.

use std::path::Path;

use nalgebra::{DMatrix, DVector, Vector2};
use serde::{Deserialize, Serialize};
use tdoaspace::incomplete::{partial_subspace, IndexSet, PartialTdoaVector};
use tdoaspace::localize::{gs_locate, gs_locate_pairs, ls_locate, ml_refine, srd_ls_locate, Algorithm};
use tdoaspace::planar::{classify, invert, PlanarConfig, PlanarTau};
use tdoaspace::{canonical_pairs, pair_count, pair_index, NoiseSpec, Pair, ProjectionMethod, ProjectionOperator, SensorArray, TdoaVector};

use crate::error::{ExperimentError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MatrixJson {
    Rows(Vec<Vec<f64>>),
    Flat(Vec<f64>),
}

impl MatrixJson {
    pub fn to_matrix(&self, size: usize) -> Result<DMatrix<f64>> {
        let bad = || ExperimentError::config(format!("covariance must be {size}×{size}"));
        match self {
            MatrixJson::Rows(rows) => {
                if rows.len() != size || rows.iter().any(|r| r.len() != size) {
                    return Err(bad());
                }
                Ok(DMatrix::from_fn(size, size, |i, j| rows[i][j]))
            }
            MatrixJson::Flat(v) => {
                if v.len() != size * size {
                    return Err(bad());
                }
                Ok(DMatrix::from_row_slice(size, size, v))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TdoaFile {
    pub n: Option<usize>,
    pub pairs: Option<Vec<[usize; 2]>>,
    pub values: Vec<f64>,
    pub cov: Option<MatrixJson>,
    pub sensors: Option<Vec<Vec<f64>>>,
}

/// A covariance file: either a bare matrix or an object with a `cov` key.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum CovFile {
    Wrapped { cov: MatrixJson },
    Bare(MatrixJson),
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| ExperimentError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn parse_json<T: for<'de> Deserialize<'de>>(text: &str, what: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| ExperimentError::config(format!("{what}: {e}")))
}

pub fn load_tdoa(path: &Path) -> Result<TdoaFile> {
    parse_json(&read(path)?, &path.display().to_string())
}

pub fn load_cov(path: &Path) -> Result<MatrixJson> {
    Ok(match parse_json::<CovFile>(&read(path)?, &path.display().to_string())? {
        CovFile::Wrapped { cov } | CovFile::Bare(cov) => cov,
    })
}

/// Parses `"2-1,3-1"` into pairs.
pub fn parse_pairs(text: &str) -> Result<Vec<Pair>> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            let (hi, lo) = s
                .split_once('-')
                .ok_or_else(|| ExperimentError::config(format!("pair {s:?} is not of the form hi-lo")))?;
            let num = |v: &str| {
                v.trim()
                    .parse::<usize>()
                    .map_err(|_| ExperimentError::config(format!("bad sensor index in {s:?}")))
            };
            let (hi, lo) = (num(hi)?, num(lo)?);
            if hi <= lo {
                return Err(ExperimentError::config(format!("pair {s:?} must have hi > lo")));
            }
            Ok(Pair::new(hi, lo))
        })
        .collect()
}

/// Measurements sorted into canonical pair order, in range units.
#[derive(Debug, Clone)]
pub struct Measurement {
    pub n: usize,
    pub set: IndexSet,
    pub values: DVector<f64>,
    pub noise: NoiseSpec,
    pub sensors: Option<Vec<Vec<f64>>>,
}

impl Measurement {
    pub fn is_complete(&self) -> bool {
        self.set.is_empty()
    }

    pub fn pairs(&self) -> Vec<Pair> {
        self.set.available()
    }

    pub fn full(&self) -> Result<TdoaVector> {
        Ok(TdoaVector::new(self.n, self.values.clone())?)
    }

    pub fn partial(&self) -> Result<PartialTdoaVector> {
        Ok(PartialTdoaVector::new(self.set.clone(), self.values.clone())?)
    }
}

/// Validates a TDOA file, applies an external covariance, drops `missing`
/// pairs and converts to range units.
pub fn measurement(file: &TdoaFile, cov: Option<&MatrixJson>, missing: &[Pair], speed: f64) -> Result<Measurement> {
    let cfg = |m: String| ExperimentError::config(m);
    if !(speed > 0.0 && speed.is_finite()) {
        return Err(cfg(format!("speed must be positive, got {speed}")));
    }
    let given: Vec<Pair> = match &file.pairs {
        Some(p) => p.iter().map(|&[hi, lo]| Pair::new(hi, lo)).collect(),
        None => {
            let n = match file.n {
                Some(n) => n,
                None => (2..=64)
                    .find(|&n| pair_count(n) == file.values.len())
                    .ok_or_else(|| cfg(format!("{} values do not form a complete set", file.values.len())))?,
            };
            canonical_pairs(n)
        }
    };
    if given.len() != file.values.len() {
        return Err(cfg(format!("{} pairs but {} values", given.len(), file.values.len())));
    }
    let n = file
        .n
        .or_else(|| given.iter().map(|p| p.hi).max())
        .ok_or_else(|| cfg("empty pair list".into()))?;
    let mut order: Vec<(usize, usize)> = Vec::with_capacity(given.len());
    for (k, p) in given.iter().enumerate() {
        let idx = pair_index(n, *p).ok_or_else(|| cfg(format!("invalid pair {p}")))?;
        order.push((idx, k));
    }
    order.sort_unstable();
    if order.windows(2).any(|w| w[0].0 == w[1].0) {
        return Err(cfg("duplicate pairs".into()));
    }
    let cov = match cov.or(file.cov.as_ref()) {
        Some(m) => m.to_matrix(given.len())?,
        None => DMatrix::identity(given.len(), given.len()),
    };
    // keep canonical order, then drop the pairs flagged missing
    let all = canonical_pairs(n);
    let keep: Vec<usize> = order
        .iter()
        .map(|&(_, k)| k)
        .filter(|&k| !missing.contains(&given[k]))
        .collect();
    for p in missing {
        if !given.contains(p) {
            return Err(cfg(format!("missing pair {p} is not in the measurement")));
        }
    }
    if keep.is_empty() {
        return Err(cfg("no pairs left".into()));
    }
    let available: Vec<Pair> = keep.iter().map(|&k| given[k]).collect();
    let set = IndexSet::new(n, all.into_iter().filter(|p| !available.contains(p)))
        .map_err(|e| cfg(e.to_string()))?;
    let values = DVector::from_iterator(keep.len(), keep.iter().map(|&k| file.values[k] * speed));
    let sigma = DMatrix::from_fn(keep.len(), keep.len(), |i, j| cov[(keep[i], keep[j])] * speed * speed);
    let noise = NoiseSpec::new(sigma).map_err(|e| cfg(format!("covariance: {e}")))?;
    Ok(Measurement {
        n,
        set,
        values,
        noise,
        sensors: file.sensors.clone(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DenoiseOutput {
    pub pairs: Vec<[usize; 2]>,
    pub values: Vec<f64>,
    pub subspace_dim: usize,
    /// Reconstructed complete set in canonical order, when identifiable.
    pub full: Option<Vec<f64>>,
}

fn pair_list(pairs: &[Pair]) -> Vec<[usize; 2]> {
    pairs.iter().map(|p| [p.hi, p.lo]).collect()
}

pub fn denoise_cmd(m: &Measurement, speed: f64) -> Result<DenoiseOutput> {
    let back = |v: &DVector<f64>| v.iter().map(|x| x / speed).collect::<Vec<_>>();
    if m.is_complete() {
        let proj = ProjectionOperator::new(m.n, &m.noise, ProjectionMethod::GramSchmidt)?;
        let out = proj.denoise(&m.full()?)?;
        let values = back(out.values());
        return Ok(DenoiseOutput {
            pairs: pair_list(&m.pairs()),
            full: Some(values.clone()),
            values,
            subspace_dim: m.n,
        });
    }
    let pp = partial_subspace(&m.set, &m.noise)?;
    let out = pp.denoise(&m.partial()?)?;
    let full = if pp.is_complete() {
        Some(back(pp.reconstruct_full(&out)?.values()))
    } else {
        None
    };
    Ok(DenoiseOutput {
        pairs: pair_list(&m.pairs()),
        values: back(out.values()),
        subspace_dim: pp.dim(),
        full,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocateOutput {
    /// Position in meters.
    pub x_hat: Vec<f64>,
    /// Auxiliary ranges in meters.
    pub r: Vec<f64>,
    pub status: String,
}

pub fn sensor_array(m: &Measurement, preset: Option<&str>) -> Result<SensorArray> {
    let array = match (&m.sensors, preset) {
        (Some(coords), None) => SensorArray::from_coords(coords),
        (None, Some("cross7")) => SensorArray::cross7(0.5),
        (None, Some(p)) => return Err(ExperimentError::config(format!("unknown array preset {p:?}"))),
        (Some(_), Some(_)) => return Err(ExperimentError::config("give sensors in the file or --array, not both")),
        (None, None) => return Err(ExperimentError::config("no sensor coordinates: add `sensors` or --array")),
    }
    .map_err(|e| ExperimentError::config(e.to_string()))?;
    if array.n() != m.n {
        return Err(ExperimentError::config(format!(
            "{} sensors given but the pairs need {}",
            array.len(),
            m.n + 1
        )));
    }
    Ok(array)
}

pub fn locate_cmd(
    m: &Measurement,
    array: &SensorArray,
    algo: Algorithm,
    reference: usize,
    denoise: bool,
) -> Result<LocateOutput> {
    let out = if m.is_complete() {
        let mut tau = m.full()?;
        if denoise {
            tau = ProjectionOperator::new(m.n, &m.noise, ProjectionMethod::GramSchmidt)?.denoise(&tau)?;
        }
        match algo {
            Algorithm::Ls => ls_locate(array, &tau.reduced(reference)?, reference)?,
            Algorithm::SrdLs => srd_ls_locate(array, &tau.reduced(reference)?, reference)?,
            Algorithm::Gs => gs_locate(array, &tau)?,
            Algorithm::Ml => ml_refine(array, &tau, &m.noise, &gs_locate(array, &tau)?.x_hat)?,
        }
    } else {
        let mut tau = m.partial()?;
        if denoise {
            tau = partial_subspace(&m.set, &m.noise)?.denoise(&tau)?;
        }
        let reference_set = m.set.missing().iter().all(|p| p.lo != 0);
        match algo {
            Algorithm::Gs => gs_locate_pairs(array, &m.pairs(), tau.values())?,
            Algorithm::Ls | Algorithm::SrdLs if reference == 0 && reference_set => {
                let nr = tau.values().rows(0, m.n).into_owned();
                if algo == Algorithm::Ls {
                    ls_locate(array, &nr, 0)?
                } else {
                    srd_ls_locate(array, &nr, 0)?
                }
            }
            _ => {
                return Err(ExperimentError::config(format!(
                    "{algo} needs {} on this pair set",
                    if algo == Algorithm::Ml { "a complete set" } else { "all pairs with sensor 0 and --ref 0" }
                )))
            }
        }
    };
    Ok(LocateOutput {
        x_hat: out.x_hat.iter().copied().collect(),
        r: out.ranges,
        status: out.status.name().into(),
    })
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanarInput {
    pub sensors: [[f64; 2]; 3],
    pub tau: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlanarRecord {
    pub tau: [f64; 2],
    pub class: String,
    pub multiplicity: usize,
    pub at_infinity: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub solutions: Option<Vec<[f64; 2]>>,
}

pub fn load_planar(path: &Path) -> Result<PlanarInput> {
    parse_json(&read(path)?, &path.display().to_string())
}

/// Parses `"x,y;x,y;x,y"`.
pub fn parse_sensors(text: &str) -> Result<[[f64; 2]; 3]> {
    let pts = text
        .split(';')
        .map(|p| parse_pair(p, "sensor"))
        .collect::<Result<Vec<_>>>()?;
    pts.try_into()
        .map_err(|_| ExperimentError::config("exactly three sensors are required"))
}

/// Parses `"a,b"`.
pub fn parse_pair(text: &str, what: &str) -> Result<[f64; 2]> {
    let v = text
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|_| ExperimentError::config(format!("bad {what} {text:?}")))?;
    v.try_into()
        .map_err(|_| ExperimentError::config(format!("{what} {text:?} needs two numbers")))
}

pub fn planar_cmd(input: &PlanarInput, with_solutions: bool, speed: f64) -> Result<Vec<PlanarRecord>> {
    let [m0, m1, m2] = input.sensors;
    let cfg = PlanarConfig::new(m0, m1, m2).map_err(|e| ExperimentError::config(e.to_string()))?;
    input
        .tau
        .iter()
        .map(|&[a, b]| {
            let t = PlanarTau::new(a * speed, b * speed);
            if !t.is_finite() {
                return Err(ExperimentError::config("non-finite TDOA"));
            }
            let class = classify(&cfg, t);
            let solutions = if with_solutions {
                let pts: Vec<Vector2<f64>> = match invert(&cfg, t) {
                    Ok(p) => p,
                    Err(tdoaspace::Error::NotInImage | tdoaspace::Error::SourceAtInfinity) => vec![],
                    Err(e) => return Err(e.into()),
                };
                Some(pts.iter().map(|p| [p.x, p.y]).collect())
            } else {
                None
            };
            Ok(PlanarRecord {
                tau: [a, b],
                class: class.region.name().into(),
                multiplicity: class.multiplicity,
                at_infinity: class.at_infinity,
                solutions,
            })
        })
        .collect()
}

//! Monte-Carlo harness: sources on spheres, noise draws per trial, raw and
//! denoised localization, and per-row aggregation.

use std::io::Write;
use std::path::Path;

use nalgebra::DVector;
use rand::seq::index::sample;
use rayon::prelude::*;
use tdoaspace::bounds::{crlb, crlb_pairs};
use tdoaspace::incomplete::{partial_subspace, IndexSet, PartialTdoaVector};
use tdoaspace::localize::{gs_locate, gs_locate_pairs, ls_locate, ml_refine, srd_ls_locate, Algorithm, LocalizationResult};
use tdoaspace::{canonical_pairs, NoiseSampler, NoiseSpec, Pair, Point, ProjectionMethod, ProjectionOperator, TdoaVector};

use crate::config::{ExperimentConfig, PairSelection, Plan};
use crate::error::{ExperimentError, Result};
use crate::seed;

pub const CSV_HEADER: &str = "experiment,d,sigma,algo,denoised,z,rmse,rlb,bias,tdoa_mu,tdoa_sigma,fail_count";

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub experiment: String,
    pub d: f64,
    pub sigma: f64,
    pub algo: Algorithm,
    pub denoised: bool,
    pub z: String,
    /// Per-source RMSE averaged over sources.
    pub rmse: f64,
    /// Standard error of `rmse` (delta method over trials); not written to CSV.
    pub rmse_se: f64,
    pub rlb: f64,
    /// Norm of the mean estimation error, averaged over sources.
    pub bias: f64,
    /// Mean of the TDOA errors fed to the localizer, pooled over entries.
    pub tdoa_mu: f64,
    pub tdoa_sigma: f64,
    pub fail_count: usize,
}

impl ResultRow {
    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            self.experiment,
            self.d,
            self.sigma,
            self.algo.name(),
            self.denoised,
            self.z,
            self.rmse,
            self.rlb,
            self.bias,
            self.tdoa_mu,
            self.tdoa_sigma,
            self.fail_count
        )
    }
}

/// `√(mean ‖x̃ − x‖²)`.
pub fn rmse(estimates: &[Point], truth: &Point) -> Result<f64> {
    if estimates.is_empty() {
        return Err(tdoaspace::Error::Empty.into());
    }
    let sse: f64 = estimates.iter().map(|e| (e - truth).norm_squared()).sum();
    Ok((sse / estimates.len() as f64).sqrt())
}

/// Near-uniform points on a sphere (3D) or circle (2D).
pub fn fibonacci_sphere(count: usize, radius: f64, center: &Point) -> Vec<Point> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..count)
        .map(|i| {
            let dir = if center.len() == 2 {
                let phi = std::f64::consts::TAU * (i as f64 + 0.5) / count as f64;
                DVector::from_vec(vec![phi.cos(), phi.sin()])
            } else {
                let z = 1.0 - (2 * i + 1) as f64 / count as f64;
                let rho = (1.0 - z * z).sqrt();
                let phi = golden * i as f64;
                DVector::from_vec(vec![rho * phi.cos(), rho * phi.sin(), z])
            };
            center + dir * radius
        })
        .collect()
}

#[derive(Debug, Clone, Default)]
struct EstAcc {
    sse: f64,
    sse2: f64,
    err_sum: Option<DVector<f64>>,
    ok: usize,
    fail: usize,
}

impl EstAcc {
    fn push(&mut self, est: Option<&Point>, truth: &Point) {
        match est {
            Some(x) if x.iter().all(|v| v.is_finite()) => {
                let e = x - truth;
                let e2 = e.norm_squared();
                self.sse += e2;
                self.sse2 += e2 * e2;
                match &mut self.err_sum {
                    Some(s) => *s += e,
                    None => self.err_sum = Some(e),
                }
                self.ok += 1;
            }
            _ => self.fail += 1,
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    sum: f64,
    sumsq: f64,
    count: usize,
}

impl Moments {
    fn push_all(&mut self, v: &DVector<f64>) {
        self.sum += v.sum();
        self.sumsq += v.norm_squared();
        self.count += v.len();
    }
}

/// Accumulators of one source for one selection.
#[derive(Debug, Clone)]
struct SelAcc {
    /// Indexed by `flag * n_algos + algo`.
    est: Vec<EstAcc>,
    /// Indexed by flag position.
    tdoa: Vec<Moments>,
    rlb_sum: f64,
    rlb_count: usize,
}

/// Per-level context shared by every source.
struct LevelCtx<'a> {
    plan: &'a Plan,
    sampler: Option<NoiseSampler>,
    /// Second-moment covariance on all pairs; identity when noiseless.
    spec: NoiseSpec,
    variance: f64,
    proj: ProjectionOperator,
    grid: usize,
    extras: Vec<Pair>,
}

/// Input handed to the localizers on one trial.
enum Input {
    Full(TdoaVector),
    Partial(PartialTdoaVector),
}

impl Input {
    fn reference_part(&self, reference: usize) -> Result<DVector<f64>> {
        Ok(match self {
            Input::Full(t) => t.reduced(reference)?,
            // reference 0 is always kept and sorts first
            Input::Partial(t) => t.values().rows(0, t.index_set().n()).into_owned(),
        })
    }
}

fn run_algo(algo: Algorithm, ctx: &LevelCtx, input: &Input) -> Result<LocalizationResult> {
    let plan = ctx.plan;
    let array = &plan.array;
    Ok(match (algo, input) {
        (Algorithm::Ls, _) => ls_locate(array, &input.reference_part(plan.reference)?, plan.reference)?,
        (Algorithm::SrdLs, _) => srd_ls_locate(array, &input.reference_part(plan.reference)?, plan.reference)?,
        (Algorithm::Gs, Input::Full(t)) => gs_locate(array, t)?,
        (Algorithm::Gs, Input::Partial(t)) => {
            gs_locate_pairs(array, &t.index_set().available(), t.values())?
        }
        (Algorithm::Ml, Input::Full(t)) => {
            let start = gs_locate(array, t)?.x_hat;
            ml_refine(array, t, &ctx.spec, &start)?
        }
        (Algorithm::Ml, Input::Partial(_)) => {
            return Err(ExperimentError::config("ml is only available on complete pair sets"))
        }
    })
}

impl LevelCtx<'_> {
    fn index_set(&self, sel: &PairSelection, trial_seed: u64) -> Result<Option<IndexSet>> {
        let n = self.plan.array.n();
        Ok(match sel {
            PairSelection::Full => None,
            PairSelection::Explicit(missing) => Some(IndexSet::new(n, missing.iter().copied())?),
            PairSelection::Extra(z) => {
                let mut rng = seed::rng(seed::hash(&[trial_seed, 0x7a, *z as u64]));
                let keep = sample(&mut rng, self.extras.len(), *z);
                let mut mask = vec![true; self.extras.len()];
                keep.iter().for_each(|k| mask[k] = false);
                let missing = self.extras.iter().zip(mask).filter(|(_, m)| *m).map(|(p, _)| *p);
                Some(IndexSet::new(n, missing)?)
            }
        })
    }

    fn run_source(&self, source: usize, x: &Point) -> Result<Vec<SelAcc>> {
        let plan = self.plan;
        let array = &plan.array;
        let n_algos = plan.algorithms.len();
        let flags = plan.denoise.flags();
        let truth = array.tdoa_full(x)?;
        let full_rlb = if self.sampler.is_some() {
            crlb(array, x, &self.spec)?.rlb
        } else {
            0.0
        };
        let mut accs: Vec<SelAcc> = plan
            .selections
            .iter()
            .map(|_| SelAcc {
                est: vec![EstAcc::default(); flags.len() * n_algos],
                tdoa: vec![Moments::default(); flags.len()],
                rlb_sum: 0.0,
                rlb_count: 0,
            })
            .collect();

        for trial in 0..plan.trials {
            let ts = seed::trial_seed(plan.seed, source, self.grid, trial);
            let mut rng = seed::rng(ts);
            let eps = match &self.sampler {
                Some(s) => s.sample(&mut rng),
                None => DVector::zeros(array.q()),
            };
            let raw = TdoaVector::new(array.n(), truth.values() + eps)?;

            for (sel, acc) in plan.selections.iter().zip(accs.iter_mut()) {
                let set = self.index_set(sel, ts)?;
                let (truth_sel, raw_input) = match &set {
                    None => (truth.values().clone(), Input::Full(raw.clone())),
                    Some(set) => {
                        let t = PartialTdoaVector::from_full(&truth, set)?.into_values();
                        (t, Input::Partial(PartialTdoaVector::from_full(&raw, set)?))
                    }
                };
                let rlb = match &set {
                    Some(set) if self.sampler.is_some() => {
                        let avail = set.available();
                        crlb_pairs(array, x, &avail, &NoiseSpec::isotropic(avail.len(), self.variance.sqrt())?)?.rlb
                    }
                    _ => full_rlb,
                };
                acc.rlb_sum += rlb;
                acc.rlb_count += 1;

                for (fi, &denoise) in flags.iter().enumerate() {
                    let input = if !denoise {
                        match &raw_input {
                            Input::Full(t) => Input::Full(t.clone()),
                            Input::Partial(t) => Input::Partial(t.clone()),
                        }
                    } else {
                        match (&raw_input, &set) {
                            (Input::Full(t), _) => Input::Full(self.proj.denoise(t)?),
                            (Input::Partial(t), Some(set)) => {
                                let noise_s = NoiseSpec::isotropic(t.values().len(), self.variance.sqrt())?;
                                let pp = partial_subspace(set, &noise_s)?;
                                Input::Partial(pp.denoise(t)?)
                            }
                            (Input::Partial(_), None) => unreachable!("partial input without index set"),
                        }
                    };
                    let values = match &input {
                        Input::Full(t) => t.values(),
                        Input::Partial(t) => t.values(),
                    };
                    acc.tdoa[fi].push_all(&(values - &truth_sel));
                    for (ai, &algo) in plan.algorithms.iter().enumerate() {
                        let est = run_algo(algo, self, &input).ok();
                        acc.est[fi * n_algos + ai].push(est.as_ref().map(|r| &r.x_hat), x);
                    }
                }
            }
        }
        Ok(accs)
    }
}

/// Runs every grid point of a validated plan. Rows are ordered by radius,
/// level, selection, algorithm, then raw before denoised.
pub fn run_plan(plan: &Plan) -> Result<Vec<ResultRow>> {
    let array = &plan.array;
    let q = array.q();
    let n = array.n();
    let extras: Vec<Pair> = canonical_pairs(n).into_iter().skip(n).collect();
    let flags = plan.denoise.flags();
    let n_algos = plan.algorithms.len();
    let mut rows = Vec::new();

    for (ri, &radius) in plan.radii.iter().enumerate() {
        let sources = fibonacci_sphere(plan.source_count, radius, &plan.center);
        for (li, &level) in plan.levels.iter().enumerate() {
            let model = plan.noise_model(level);
            let (sampler, spec) = match &model {
                Some(m) => (Some(m.sampler(q)?), m.second_moment(q)?),
                None => (None, NoiseSpec::isotropic(q, 1.0)?),
            };
            let variance = spec.sigma()[(0, 0)];
            let proj = ProjectionOperator::new(n, &spec, ProjectionMethod::ClosedForm)?;
            let ctx = LevelCtx {
                plan,
                sampler,
                spec,
                variance,
                proj,
                grid: ri * plan.levels.len() + li,
                extras: extras.clone(),
            };
            let per_source: Vec<Vec<SelAcc>> = sources
                .par_iter()
                .enumerate()
                .map(|(s, x)| ctx.run_source(s, x))
                .collect::<Result<_>>()?;

            for (si, sel) in plan.selections.iter().enumerate() {
                let z = sel.label(n);
                let accs: Vec<&SelAcc> = per_source.iter().map(|v| &v[si]).collect();
                let rlb = accs.iter().map(|a| a.rlb_sum / a.rlb_count as f64).sum::<f64>() / accs.len() as f64;
                for (ai, &algo) in plan.algorithms.iter().enumerate() {
                    for (fi, &denoised) in flags.iter().enumerate() {
                        let est: Vec<&EstAcc> = accs.iter().map(|a| &a.est[fi * n_algos + ai]).collect();
                        let tdoa = accs.iter().fold(Moments::default(), |m, a| Moments {
                            sum: m.sum + a.tdoa[fi].sum,
                            sumsq: m.sumsq + a.tdoa[fi].sumsq,
                            count: m.count + a.tdoa[fi].count,
                        });
                        rows.push(aggregate(plan, radius, level, algo, denoised, z.clone(), rlb, &est, tdoa));
                    }
                }
            }
        }
    }
    Ok(rows)
}

#[allow(clippy::too_many_arguments)]
fn aggregate(
    plan: &Plan,
    d: f64,
    sigma: f64,
    algo: Algorithm,
    denoised: bool,
    z: String,
    rlb: f64,
    est: &[&EstAcc],
    tdoa: Moments,
) -> ResultRow {
    let (mut rmse_sum, mut var_sum, mut bias_sum, mut valid) = (0.0, 0.0, 0.0, 0usize);
    for e in est.iter().filter(|e| e.ok > 0) {
        let k = e.ok as f64;
        let ms = e.sse / k;
        let r = ms.sqrt();
        rmse_sum += r;
        if r > 0.0 {
            let var_ms = ((e.sse2 / k - ms * ms).max(0.0)) / k;
            var_sum += var_ms / (4.0 * ms);
        }
        bias_sum += e.err_sum.as_ref().map_or(0.0, |s| s.norm() / k);
        valid += 1;
    }
    let v = valid as f64;
    let mu = tdoa.sum / tdoa.count as f64;
    ResultRow {
        experiment: plan.id.clone(),
        d,
        sigma,
        algo,
        denoised,
        z,
        rmse: rmse_sum / v,
        rmse_se: var_sum.sqrt() / v,
        rlb,
        bias: bias_sum / v,
        tdoa_mu: mu,
        tdoa_sigma: (tdoa.sumsq / tdoa.count as f64 - mu * mu).max(0.0).sqrt(),
        fail_count: est.iter().map(|e| e.fail).sum(),
    }
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    run_plan(&config.validate()?)
}

pub fn write_csv<W: Write>(rows: &[ResultRow], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in rows {
        writeln!(out, "{}", r.csv_line())?;
    }
    out.flush()
}

/// Loads a config, runs it and writes the CSV into `out_dir`, returning its
/// path.
pub fn simulate(config_path: &Path, out_dir: &Path) -> Result<std::path::PathBuf> {
    let config = ExperimentConfig::load(config_path)?;
    let plan = config.validate()?;
    let rows = run_plan(&plan)?;
    let io_err = |path: &Path| {
        let path = path.display().to_string();
        move |source| ExperimentError::Io { path, source }
    };
    std::fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let path = out_dir.join(&plan.csv_name);
    let file = std::fs::File::create(&path).map_err(io_err(&path))?;
    write_csv(&rows, std::io::BufWriter::new(file)).map_err(io_err(&path))?;
    Ok(path)
}

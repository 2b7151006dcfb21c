//! Source estimators fed with raw or denoised TDOAs.
//!
//! The closed-form ones square the range relations `‖x − m_j‖ = r_i + τ_ji`
//! and subtract `‖x − m_i‖ = r_i`, which leaves equations linear in `x`
//! and the auxiliary ranges.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::geometry::{Pair, Point, SensorArray, TdoaVector};
use crate::linalg::lstsq;
use crate::noise::NoiseSpec;

const GTRS_MAX_ITER: usize = 200;
const GTRS_TOL: f64 = 1e-12;
const ML_MAX_ITER: usize = 100;
const ML_GRAD_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SolverStatus {
    Converged,
    /// The constrained solve failed and the unconstrained estimate was kept.
    Fallback,
    /// The constrained solution has a negative reference range.
    NegativeRange,
    /// No descent step could be found before the gradient tolerance.
    Stalled,
    MaxIterations,
    Singular,
}

impl SolverStatus {
    pub fn is_success(self) -> bool {
        self == SolverStatus::Converged
    }

    pub fn name(self) -> &'static str {
        match self {
            SolverStatus::Converged => "converged",
            SolverStatus::Fallback => "fallback",
            SolverStatus::NegativeRange => "negative_range",
            SolverStatus::Stalled => "stalled",
            SolverStatus::MaxIterations => "max_iterations",
            SolverStatus::Singular => "singular",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalizationResult {
    pub x_hat: Point,
    /// Auxiliary range estimates: the reference range for LS and SRD-LS, one
    /// per lower-index sensor for GS, the range to sensor 0 for ML.
    pub ranges: Vec<f64>,
    pub residual_norm: f64,
    pub iterations: usize,
    pub status: SolverStatus,
}

/// Estimator selector used by the harness and the CLI.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algorithm {
    Ls,
    SrdLs,
    Gs,
    Ml,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [Algorithm::Ls, Algorithm::SrdLs, Algorithm::Gs, Algorithm::Ml];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Ls => "ls",
            Algorithm::SrdLs => "srdls",
            Algorithm::Gs => "gs",
            Algorithm::Ml => "ml",
        }
    }

    /// Whether the estimator reads only the `n` TDOAs against the reference.
    pub fn uses_reduced_set(self) -> bool {
        matches!(self, Algorithm::Ls | Algorithm::SrdLs)
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "ls" => Ok(Algorithm::Ls),
            "srdls" => Ok(Algorithm::SrdLs),
            "gs" => Ok(Algorithm::Gs),
            "ml" => Ok(Algorithm::Ml),
            _ => Err(Error::InvalidParameter(format!("unknown algorithm '{s}'"))),
        }
    }
}

/// Rows `[2 m_kᵀ, 2 τ_k]` and right-hand side `‖m_k‖² − τ_k²` in coordinates
/// centred on the reference sensor.
fn reference_system(
    array: &SensorArray,
    tau_nr: &DVector<f64>,
    reference: usize,
) -> Result<(DMatrix<f64>, DVector<f64>)> {
    let n = array.n();
    if reference > n {
        return Err(Error::IndexOutOfRange {
            index: reference,
            len: array.len(),
        });
    }
    if tau_nr.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: tau_nr.len(),
        });
    }
    if tau_nr.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    let dim = array.dim();
    let origin = array.sensor(reference);
    let mut a = DMatrix::zeros(n, dim + 1);
    let mut b = DVector::zeros(n);
    let others = (0..array.len()).filter(|&k| k != reference);
    for (row, k) in others.enumerate() {
        let m = array.sensor(k) - origin;
        let t = tau_nr[row];
        for c in 0..dim {
            a[(row, c)] = 2.0 * m[c];
        }
        a[(row, dim)] = 2.0 * t;
        b[row] = m.norm_squared() - t * t;
    }
    Ok((a, b))
}

fn split_solution(
    array: &SensorArray,
    reference: usize,
    y: &DVector<f64>,
) -> (Point, f64) {
    let dim = array.dim();
    (y.rows(0, dim) + array.sensor(reference), y[dim])
}

/// Unconstrained least squares over `(x, r_ref)`.
pub fn ls_locate(array: &SensorArray, tau_nr: &DVector<f64>, reference: usize) -> Result<LocalizationResult> {
    let (a, b) = reference_system(array, tau_nr, reference)?;
    let y = lstsq(&a, &b)?;
    let residual_norm = (&a * &y - &b).norm();
    let (x_hat, r) = split_solution(array, reference, &y);
    Ok(LocalizationResult {
        x_hat,
        ranges: vec![r],
        residual_norm,
        iterations: 0,
        status: SolverStatus::Converged,
    })
}

/// Least squares over `(x, r_ref)` subject to `‖x − m_ref‖ = r_ref`.
///
/// With `y = (x − m_ref, r)` the constraint reads `yᵀ D y = 0`,
/// `D = diag(1, …, 1, −1)`. The minimizer is `y(λ) = (AᵀA + λD)⁻¹ Aᵀb` for
/// the `λ` that zeroes `φ(λ) = y(λ)ᵀ D y(λ)` on the interval keeping
/// `AᵀA + λD` positive definite, where `φ` is strictly decreasing.
pub fn srd_ls_locate(array: &SensorArray, tau_nr: &DVector<f64>, reference: usize) -> Result<LocalizationResult> {
    let (a, b) = reference_system(array, tau_nr, reference)?;
    let unconstrained = ls_locate(array, tau_nr, reference)?;
    let dim = array.dim();
    let size = dim + 1;
    let ata = a.transpose() * &a;
    let atb = a.transpose() * &b;
    let fallback = |iterations| LocalizationResult {
        status: SolverStatus::Fallback,
        iterations,
        ..unconstrained.clone()
    };
    let Some(chol) = ata.clone().cholesky() else {
        return Ok(fallback(0));
    };
    // simultaneous diagonalization: L⁻¹ D L⁻ᵀ = Q diag(μ) Qᵀ
    let l = chol.l();
    let l_inv = l
        .clone()
        .solve_lower_triangular(&DMatrix::identity(size, size))
        .ok_or(Error::Singular("Cholesky factor"))?;
    let mut d = DMatrix::identity(size, size);
    d[(dim, dim)] = -1.0;
    let m = &l_inv * &d * l_inv.transpose();
    let eig = SymmetricEigen::new((&m + m.transpose()) * 0.5);
    let mu = eig.eigenvalues.clone();
    let g = eig.eigenvectors.transpose() * (&l_inv * &atb);
    let mu_max = mu.max();
    let mu_min = mu.min();
    if !(mu_max > 0.0 && mu_min < 0.0) {
        return Ok(fallback(0));
    }
    let lo = -1.0 / mu_max;
    let hi = -1.0 / mu_min;
    let phi = |lambda: f64| -> f64 {
        mu.iter()
            .zip(g.iter())
            .map(|(&m, &gk)| m * gk * gk / (1.0 + lambda * m).powi(2))
            .sum()
    };
    let y_at = |lambda: f64| -> DVector<f64> {
        let scaled = DVector::from_iterator(
            size,
            mu.iter().zip(g.iter()).map(|(&m, &gk)| gk / (1.0 + lambda * m)),
        );
        l_inv.transpose() * (&eig.eigenvectors * scaled)
    };

    let mut iterations = 0;
    let lambda = {
        let f0 = phi(0.0);
        if f0.abs() <= GTRS_TOL {
            Some(0.0)
        } else {
            // bracket from 0 towards the end of the interval where φ changes sign
            let edge = if f0 > 0.0 { hi } else { lo };
            let (mut a0, mut fa) = (0.0, f0);
            let mut bracket = None;
            for k in 1..=60 {
                iterations += 1;
                let t = edge * (1.0 - 0.5f64.powi(k));
                let ft = phi(t);
                if ft.signum() != f0.signum() || ft.abs() <= GTRS_TOL {
                    bracket = Some((a0, fa, t, ft));
                    break;
                }
                a0 = t;
                fa = ft;
            }
            bracket.and_then(|(mut x0, mut f0, mut x1, mut f1)| {
                if f1.abs() <= GTRS_TOL {
                    return Some(x1);
                }
                // Illinois regula falsi, bisecting when it stalls
                let mut side = 0i8;
                while iterations < GTRS_MAX_ITER {
                    iterations += 1;
                    let mut x = (x0 * f1 - x1 * f0) / (f1 - f0);
                    if !x.is_finite() || x <= x0.min(x1) || x >= x0.max(x1) {
                        x = 0.5 * (x0 + x1);
                    }
                    let fx = phi(x);
                    if fx.abs() <= GTRS_TOL || (x1 - x0).abs() <= f64::EPSILON * x.abs().max(1.0) {
                        return Some(x);
                    }
                    if fx.signum() == f1.signum() {
                        x1 = x;
                        f1 = fx;
                        if side == 1 {
                            f0 *= 0.5;
                        }
                        side = 1;
                    } else {
                        x0 = x;
                        f0 = fx;
                        if side == -1 {
                            f1 *= 0.5;
                        }
                        side = -1;
                    }
                }
                None
            })
        }
    };
    let Some(lambda) = lambda else {
        return Ok(fallback(iterations));
    };
    let y = y_at(lambda);
    if y.iter().any(|v| !v.is_finite()) {
        return Ok(fallback(iterations));
    }
    let residual_norm = (&a * &y - &b).norm();
    let (x_hat, r) = split_solution(array, reference, &y);
    Ok(LocalizationResult {
        x_hat,
        ranges: vec![r],
        residual_norm,
        iterations,
        status: if r < 0.0 {
            SolverStatus::NegativeRange
        } else {
            SolverStatus::Converged
        },
    })
}

/// Multi-reference least squares on the complete TDOA vector.
pub fn gs_locate(array: &SensorArray, tau: &TdoaVector) -> Result<LocalizationResult> {
    if tau.n() != array.n() {
        return Err(Error::DimensionMismatch {
            expected: array.q(),
            found: tau.len(),
        });
    }
    gs_locate_pairs(array, &array.pairs(), tau.values())
}

/// Multi-reference least squares on an arbitrary pair list. One range
/// unknown is introduced per sensor appearing as a lower index.
pub fn gs_locate_pairs(array: &SensorArray, pairs: &[Pair], values: &DVector<f64>) -> Result<LocalizationResult> {
    if pairs.len() != values.len() {
        return Err(Error::DimensionMismatch {
            expected: pairs.len(),
            found: values.len(),
        });
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    let n = array.n();
    for p in pairs {
        if p.hi <= p.lo || p.hi > n {
            return Err(Error::InvalidPair(*p));
        }
    }
    let mut lows: Vec<usize> = pairs.iter().map(|p| p.lo).collect();
    lows.sort_unstable();
    lows.dedup();
    let dim = array.dim();
    // centre on the array centroid for conditioning
    let centroid = array
        .positions()
        .iter()
        .fold(DVector::zeros(dim), |acc, m| acc + m)
        / array.len() as f64;
    let local: Vec<Point> = array.positions().iter().map(|m| m - &centroid).collect();
    let mut a = DMatrix::zeros(pairs.len(), dim + lows.len());
    let mut b = DVector::zeros(pairs.len());
    for (row, (p, &t)) in pairs.iter().zip(values.iter()).enumerate() {
        let (mj, mi) = (&local[p.hi], &local[p.lo]);
        let diff = mj - mi;
        for c in 0..dim {
            a[(row, c)] = 2.0 * diff[c];
        }
        let col = lows.binary_search(&p.lo).expect("collected above");
        a[(row, dim + col)] = 2.0 * t;
        b[row] = mj.norm_squared() - mi.norm_squared() - t * t;
    }
    let y = lstsq(&a, &b)?;
    let residual_norm = (&a * &y - &b).norm();
    Ok(LocalizationResult {
        x_hat: y.rows(0, dim) + centroid,
        ranges: y.rows(dim, lows.len()).iter().copied().collect(),
        residual_norm,
        iterations: 0,
        status: SolverStatus::Converged,
    })
}

/// `‖τ̂ − τ(x)‖²` in the `Σ⁻¹` metric.
pub fn ml_cost(array: &SensorArray, tau_hat: &TdoaVector, noise: &NoiseSpec, x: &Point) -> Result<f64> {
    check_ml(array, tau_hat, noise)?;
    let e = tau_hat.values() - array.tdoa_full(x)?.values();
    Ok(noise.whiten(&e).norm_squared())
}

fn check_ml(array: &SensorArray, tau_hat: &TdoaVector, noise: &NoiseSpec) -> Result<()> {
    if tau_hat.n() != array.n() || noise.dim() != array.q() {
        return Err(Error::DimensionMismatch {
            expected: array.q(),
            found: if tau_hat.n() != array.n() {
                tau_hat.len()
            } else {
                noise.dim()
            },
        });
    }
    Ok(())
}

/// Gauss-Newton descent on [`ml_cost`] with step halving, so the cost never
/// increases between iterates.
pub fn ml_refine(array: &SensorArray, tau_hat: &TdoaVector, noise: &NoiseSpec, x0: &Point) -> Result<LocalizationResult> {
    check_ml(array, tau_hat, noise)?;
    let whitened_residual = |x: &Point| -> Result<DVector<f64>> {
        Ok(noise.whiten(&(tau_hat.values() - array.tdoa_full(x)?.values())))
    };
    let mut x = x0.clone();
    let mut e = whitened_residual(&x)?;
    let mut cost = e.norm_squared();
    let mut status = SolverStatus::MaxIterations;
    let mut iterations = 0;
    while iterations < ML_MAX_ITER {
        let jac = match array.tdoa_jacobian(&x) {
            Ok(j) => noise.whiten_matrix(&j),
            Err(_) => {
                status = SolverStatus::Singular;
                break;
            }
        };
        let grad = -2.0 * jac.transpose() * &e;
        if grad.norm() <= ML_GRAD_TOL {
            status = SolverStatus::Converged;
            break;
        }
        let Ok(step) = lstsq(&jac, &e) else {
            status = SolverStatus::Singular;
            break;
        };
        iterations += 1;
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let trial = &x + &step * t;
            if let Ok(et) = whitened_residual(&trial) {
                let ct = et.norm_squared();
                if ct <= cost {
                    accepted = ct < cost || t == 1.0;
                    let moved = (&trial - &x).norm();
                    x = trial;
                    e = et;
                    cost = ct;
                    if moved <= f64::EPSILON * x.norm().max(1.0) {
                        // no representable progress left
                        accepted = false;
                    }
                    break;
                }
            }
            t *= 0.5;
        }
        if !accepted {
            status = SolverStatus::Stalled;
            break;
        }
    }
    if status == SolverStatus::Stalled {
        // a vanishing step at a stationary point is convergence
        let jac = noise.whiten_matrix(&array.tdoa_jacobian(&x)?);
        let grad = -2.0 * jac.transpose() * &e;
        let scale = jac.norm() * e.norm().max(1.0);
        if grad.norm() <= ML_GRAD_TOL.max(1e-12 * scale) {
            status = SolverStatus::Converged;
        }
    }
    let r0 = (&x - array.sensor(0)).norm();
    Ok(LocalizationResult {
        x_hat: x,
        ranges: vec![r0],
        residual_norm: cost.sqrt(),
        iterations,
        status,
    })
}

/// Runs one estimator on a complete TDOA vector. LS and SRD-LS read the
/// TDOAs against `reference`; ML starts from the GS estimate.
pub fn locate(
    algo: Algorithm,
    array: &SensorArray,
    tau: &TdoaVector,
    noise: &NoiseSpec,
    reference: usize,
) -> Result<LocalizationResult> {
    match algo {
        Algorithm::Ls => ls_locate(array, &tau.reduced(reference)?, reference),
        Algorithm::SrdLs => srd_ls_locate(array, &tau.reduced(reference)?, reference),
        Algorithm::Gs => gs_locate(array, tau),
        Algorithm::Ml => {
            let start = gs_locate(array, tau)?;
            ml_refine(array, tau, noise, &start.x_hat)
        }
    }
}

//! Second-order statistics: covariance after projection, the Cramér-Rao
//! bound on position, and first-order propagation of TDOA noise through the
//! localizer costs.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::geometry::{Point, SensorArray};
use crate::linalg::min_eigenvalue;
use crate::localize::Algorithm;
use crate::noise::NoiseSpec;
use crate::subspace::ProjectionOperator;

/// Relative finite-difference step for [`propagation_matrix`].
const FD_STEP: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceReport {
    pub sigma_in: DMatrix<f64>,
    /// `P Σ Pᵀ`.
    pub sigma_out: DMatrix<f64>,
    /// Smallest eigenvalue of `Σ − P Σ Pᵀ`.
    pub min_eig_diff: f64,
    pub std_in: DVector<f64>,
    pub std_out: DVector<f64>,
}

impl CovarianceReport {
    /// Mean of the per-coordinate standard deviations after projection.
    pub fn mean_std_out(&self) -> f64 {
        self.std_out.mean()
    }

    pub fn mean_std_in(&self) -> f64 {
        self.std_in.mean()
    }
}

pub fn denoised_covariance(proj: &ProjectionOperator, noise: &NoiseSpec) -> Result<CovarianceReport> {
    if proj.q() != noise.dim() {
        return Err(Error::DimensionMismatch {
            expected: proj.q(),
            found: noise.dim(),
        });
    }
    let sigma_in = noise.sigma().clone();
    let p = proj.matrix();
    let out = p * &sigma_in * p.transpose();
    let sigma_out = (&out + out.transpose()) * 0.5;
    let min_eig_diff = min_eigenvalue(&(&sigma_in - &sigma_out));
    let std = |m: &DMatrix<f64>| m.diagonal().map(|v| v.max(0.0).sqrt());
    Ok(CovarianceReport {
        std_in: std(&sigma_in),
        std_out: std(&sigma_out),
        sigma_in,
        sigma_out,
        min_eig_diff,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Crlb {
    /// Fisher information on position, `dim × dim`.
    pub fim: DMatrix<f64>,
    /// Inverse Fisher information.
    pub bound: DMatrix<f64>,
    /// RMSE lower bound `√tr(FIM⁻¹)`.
    pub rlb: f64,
}

fn fisher(jac: &DMatrix<f64>, noise: &NoiseSpec) -> Result<Crlb> {
    if jac.nrows() != noise.dim() {
        return Err(Error::DimensionMismatch {
            expected: noise.dim(),
            found: jac.nrows(),
        });
    }
    let jw = noise.whiten_matrix(jac);
    let fim = jw.transpose() * &jw;
    let fim = (&fim + fim.transpose()) * 0.5;
    let bound = fim
        .clone()
        .cholesky()
        .ok_or(Error::Singular("Fisher information"))?
        .inverse();
    let rlb = bound.trace().sqrt();
    if !rlb.is_finite() {
        return Err(Error::Singular("Fisher information"));
    }
    Ok(Crlb { fim, bound, rlb })
}

/// Bound for the Gaussian model on the complete TDOA vector.
pub fn crlb(array: &SensorArray, x: &Point, noise: &NoiseSpec) -> Result<Crlb> {
    fisher(&array.tdoa_jacobian(x)?, noise)
}

/// Bound for a model observing only the given pairs, with `noise` their
/// covariance.
pub fn crlb_pairs(
    array: &SensorArray,
    x: &Point,
    pairs: &[crate::geometry::Pair],
    noise: &NoiseSpec,
) -> Result<Crlb> {
    fisher(&array.jacobian_pairs(x, pairs)?, noise)
}

/// Residual of a localizer cost as a function of its free parameters `θ`
/// and of the complete TDOA vector `c`; the cost is the squared norm.
struct CostModel<'a> {
    algo: Algorithm,
    array: &'a SensorArray,
    noise: &'a NoiseSpec,
    reference: usize,
}

impl CostModel<'_> {
    /// `θ` at the noiseless minimizer for a source at `x`.
    fn theta(&self, x: &Point) -> DVector<f64> {
        let dim = self.array.dim();
        match self.algo {
            Algorithm::Ls => {
                let local = x - self.array.sensor(self.reference);
                let mut t = DVector::zeros(dim + 1);
                t.rows_mut(0, dim).copy_from(&local);
                t[dim] = local.norm();
                t
            }
            Algorithm::SrdLs | Algorithm::Ml => x.clone(),
            Algorithm::Gs => {
                let n = self.array.n();
                let mut t = DVector::zeros(dim + n);
                t.rows_mut(0, dim).copy_from(x);
                for i in 0..n {
                    t[dim + i] = (x - self.array.sensor(i)).norm();
                }
                t
            }
        }
    }

    /// Rows of the matrix mapping `θ` to position.
    fn position_rows(&self, a: DMatrix<f64>) -> DMatrix<f64> {
        a.rows(0, self.array.dim()).into_owned()
    }

    fn residual(&self, theta: &DVector<f64>, c: &DVector<f64>) -> Result<DVector<f64>> {
        let array = self.array;
        let dim = array.dim();
        let reduced_system = |y: &DVector<f64>| -> DVector<f64> {
            let origin = array.sensor(self.reference);
            let tau = reduced_of(c, array.n(), self.reference);
            let others = (0..array.len()).filter(|&k| k != self.reference);
            DVector::from_iterator(
                array.n(),
                others.enumerate().map(|(row, k)| {
                    let m = array.sensor(k) - origin;
                    let t = tau[row];
                    2.0 * m.dot(&y.rows(0, dim)) + 2.0 * t * y[dim] - (m.norm_squared() - t * t)
                }),
            )
        };
        match self.algo {
            Algorithm::Ls => Ok(reduced_system(theta)),
            Algorithm::SrdLs => {
                let local = theta - array.sensor(self.reference);
                let mut y = DVector::zeros(dim + 1);
                y.rows_mut(0, dim).copy_from(&local);
                y[dim] = local.norm();
                Ok(reduced_system(&y))
            }
            Algorithm::Gs => {
                let x = theta.rows(0, dim);
                Ok(DVector::from_iterator(
                    array.q(),
                    array.pairs().iter().zip(c.iter()).map(|(p, &t)| {
                        let (mj, mi) = (array.sensor(p.hi), array.sensor(p.lo));
                        2.0 * (mj - mi).dot(&x) + 2.0 * t * theta[dim + p.lo]
                            - (mj.norm_squared() - mi.norm_squared() - t * t)
                    }),
                ))
            }
            Algorithm::Ml => {
                let tau = array.tdoa_full(&theta.clone_owned())?;
                Ok(self.noise.whiten(&(c - tau.values())))
            }
        }
    }

    fn jacobian_theta(&self, theta: &DVector<f64>, c: &DVector<f64>) -> Result<DMatrix<f64>> {
        central_difference(theta, |t| self.residual(t, c))
    }

    fn jacobian_c(&self, theta: &DVector<f64>, c: &DVector<f64>) -> Result<DMatrix<f64>> {
        central_difference(c, |cc| self.residual(theta, cc))
    }
}

/// `τ_{k,ref}` from a complete vector, as [`TdoaVector::reduced`] does.
///
/// [`TdoaVector::reduced`]: crate::geometry::TdoaVector::reduced
fn reduced_of(c: &DVector<f64>, n: usize, reference: usize) -> DVector<f64> {
    let tau = crate::geometry::TdoaVector::new(n, c.clone()).expect("length checked by caller");
    tau.reduced(reference).expect("reference checked by caller")
}

fn central_difference<F>(at: &DVector<f64>, f: F) -> Result<DMatrix<f64>>
where
    F: Fn(&DVector<f64>) -> Result<DVector<f64>>,
{
    let rows = f(at)?.len();
    let mut jac = DMatrix::zeros(rows, at.len());
    for k in 0..at.len() {
        let h = FD_STEP * at[k].abs().max(1.0);
        let mut plus = at.clone();
        let mut minus = at.clone();
        plus[k] += h;
        minus[k] -= h;
        let diff = (f(&plus)? - f(&minus)?) / (plus[k] - minus[k]);
        jac.set_column(k, &diff);
    }
    Ok(jac)
}

/// First-order sensitivity `∂x̂/∂τ` (`dim × q`) of the estimator's
/// minimizer at the noiseless TDOAs of a source at `x`. Estimators reading
/// only the reference TDOAs have zero columns for the other pairs.
///
/// Each cost is a squared residual vanishing at the noiseless minimizer, so
/// the Hessian blocks reduce to products of residual Jacobians.
pub fn propagation_matrix(
    algo: Algorithm,
    array: &SensorArray,
    x: &Point,
    noise: &NoiseSpec,
    reference: usize,
) -> Result<DMatrix<f64>> {
    if noise.dim() != array.q() {
        return Err(Error::DimensionMismatch {
            expected: array.q(),
            found: noise.dim(),
        });
    }
    if reference > array.n() {
        return Err(Error::IndexOutOfRange {
            index: reference,
            len: array.len(),
        });
    }
    let model = CostModel {
        algo,
        array,
        noise,
        reference,
    };
    let c = array.tdoa_full(x)?.into_values();
    let theta = model.theta(x);
    let jt = model.jacobian_theta(&theta, &c)?;
    let jc = model.jacobian_c(&theta, &c)?;
    let normal = jt.transpose() * &jt;
    let a = normal
        .cholesky()
        .ok_or(Error::Singular("cost Hessian"))?
        .solve(&(jt.transpose() * jc));
    Ok(model.position_rows(-a))
}

/// `A Σ Aᵀ` with `A` from [`propagation_matrix`] and `Σ` the noise
/// covariance.
pub fn propagate_covariance(
    algo: Algorithm,
    array: &SensorArray,
    x: &Point,
    noise: &NoiseSpec,
    reference: usize,
) -> Result<DMatrix<f64>> {
    let a = propagation_matrix(algo, array, x, noise, reference)?;
    Ok(propagate(&a, noise.sigma()))
}

/// `A C Aᵀ`, symmetrized.
pub fn propagate(a: &DMatrix<f64>, cov: &DMatrix<f64>) -> DMatrix<f64> {
    let out = a * cov * a.transpose();
    (&out + out.transpose()) * 0.5
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::subspace::ProjectionMethod;

    fn cross() -> SensorArray {
        SensorArray::cross7(0.5).unwrap()
    }

    fn p(v: &[f64]) -> Point {
        DVector::from_column_slice(v)
    }

    #[test]
    fn isotropic_std_ratio() {
        let noise = NoiseSpec::isotropic(21, 0.015).unwrap();
        let proj = ProjectionOperator::new(6, &noise, ProjectionMethod::ClosedForm).unwrap();
        let rep = denoised_covariance(&proj, &noise).unwrap();
        // trace(P) = n, so the mean variance drops by n/q
        let mean_var = rep.sigma_out.trace() / 21.0;
        assert!((mean_var - 0.015f64.powi(2) * 6.0 / 21.0).abs() < 1e-15);
        assert!(rep.min_eig_diff >= -1e-12);
    }

    #[test]
    fn rlb_scales_with_std() {
        let a = cross();
        let x = p(&[1.0, 0.5, 0.3]);
        let r1 = crlb(&a, &x, &NoiseSpec::isotropic(21, 0.01).unwrap()).unwrap().rlb;
        let r2 = crlb(&a, &x, &NoiseSpec::isotropic(21, 0.02).unwrap()).unwrap().rlb;
        assert!((r2 / r1 - 2.0).abs() < 1e-12);
    }

    #[test]
    fn ml_propagation_is_inverse_fim() {
        let a = cross();
        let x = p(&[1.0, 0.5, 0.3]);
        let noise = NoiseSpec::isotropic(21, 0.01).unwrap();
        let cov = propagate_covariance(Algorithm::Ml, &a, &x, &noise, 0).unwrap();
        let bound = crlb(&a, &x, &noise).unwrap().bound;
        assert!((&cov - &bound).amax() < 1e-8 * bound.amax());
    }

    #[test]
    fn reduced_estimators_ignore_other_pairs() {
        let a = cross();
        let x = p(&[1.0, 0.5, 0.3]);
        let noise = NoiseSpec::isotropic(21, 0.01).unwrap();
        for algo in [Algorithm::Ls, Algorithm::SrdLs] {
            let m = propagation_matrix(algo, &a, &x, &noise, 0).unwrap();
            assert_eq!(m.shape(), (3, 21));
            assert!(m.columns(6, 15).amax() == 0.0);
        }
    }

    #[test]
    fn zero_covariance() {
        let a = cross();
        let m = propagation_matrix(Algorithm::Gs, &a, &p(&[1.0, 0.5, 0.3]), &NoiseSpec::isotropic(21, 1.0).unwrap(), 0)
            .unwrap();
        assert_eq!(propagate(&m, &DMatrix::zeros(21, 21)).amax(), 0.0);
    }

    #[test]
    fn singular_geometry() {
        // collinear sensors with the source on their line
        let a = SensorArray::from_coords(&[[0.0, 0.0], [1.0, 0.0], [2.0, 0.0], [3.0, 0.0]]).unwrap();
        let r = crlb(&a, &p(&[5.0, 0.0]), &NoiseSpec::isotropic(6, 1.0).unwrap());
        assert!(matches!(r, Err(Error::Singular(_))));
    }
}

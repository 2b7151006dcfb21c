//! Noise covariances and the i.i.d. noise models used in simulation.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};
use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal, Uniform};

use crate::error::{Error, Result};

/// Which family a covariance came from. Only informative: the projection
/// uses the covariance regardless of the tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NoiseKind {
    #[default]
    Gaussian,
    Uniform,
    UniformPlusGaussian,
    Laplacian,
}

/// A symmetric positive definite TDOA covariance `Σ` (meters²) together with
/// its Cholesky factor. `Σ⁻¹` defines the Fisher scalar product on the
/// TDOA space; it is never formed explicitly.
#[derive(Debug, Clone)]
pub struct NoiseSpec {
    sigma: DMatrix<f64>,
    chol: Cholesky<f64, Dyn>,
    kind: NoiseKind,
}

impl NoiseSpec {
    pub fn new(sigma: DMatrix<f64>) -> Result<Self> {
        Self::with_kind(sigma, NoiseKind::Gaussian)
    }

    pub fn with_kind(sigma: DMatrix<f64>, kind: NoiseKind) -> Result<Self> {
        let chol = check_spd(&sigma)?;
        Ok(Self { sigma, chol, kind })
    }

    /// `std² · I_q`.
    pub fn isotropic(q: usize, std: f64) -> Result<Self> {
        if !(std > 0.0 && std.is_finite()) {
            return Err(Error::InvalidParameter(format!("noise std {std}")));
        }
        Self::new(DMatrix::identity(q, q) * (std * std))
    }

    pub fn diagonal(variances: &[f64]) -> Result<Self> {
        Self::new(DMatrix::from_diagonal(&DVector::from_column_slice(variances)))
    }

    pub fn sigma(&self) -> &DMatrix<f64> {
        &self.sigma
    }

    pub fn kind(&self) -> NoiseKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.sigma.nrows()
    }

    /// Lower-triangular Cholesky factor `L`, `Σ = L Lᵀ`.
    pub fn cholesky_l(&self) -> DMatrix<f64> {
        self.chol.l()
    }

    /// `Σ⁻¹ B` by triangular solves.
    pub fn solve(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        self.chol.solve(b)
    }

    pub fn solve_vec(&self, b: &DVector<f64>) -> DVector<f64> {
        self.chol.solve(b)
    }

    /// `L⁻¹ v`: coordinates in which the Fisher product becomes Euclidean.
    pub fn whiten(&self, v: &DVector<f64>) -> DVector<f64> {
        let mut out = v.clone();
        self.chol.l_dirty().solve_lower_triangular_mut(&mut out);
        out
    }

    pub fn whiten_matrix(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = m.clone();
        self.chol.l_dirty().solve_lower_triangular_mut(&mut out);
        out
    }

    /// `⟨u, v⟩_{Σ⁻¹} = uᵀ Σ⁻¹ v`.
    pub fn inner(&self, u: &DVector<f64>, v: &DVector<f64>) -> f64 {
        u.dot(&self.solve_vec(v))
    }

    /// Mahalanobis norm `√(vᵀ Σ⁻¹ v)`.
    pub fn mahalanobis_norm(&self, v: &DVector<f64>) -> Result<f64> {
        if v.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: v.len(),
            });
        }
        Ok(self.whiten(v).norm())
    }

    /// Restriction of `Σ` to the given coordinates.
    pub fn submatrix(&self, keep: &[usize]) -> Result<Self> {
        let k = keep.len();
        let mut sub = DMatrix::zeros(k, k);
        for (a, &ra) in keep.iter().enumerate() {
            for (b, &rb) in keep.iter().enumerate() {
                if ra >= self.dim() || rb >= self.dim() {
                    return Err(Error::IndexOutOfRange {
                        index: ra.max(rb),
                        len: self.dim(),
                    });
                }
                sub[(a, b)] = self.sigma[(ra, rb)];
            }
        }
        Self::with_kind(sub, self.kind)
    }
}

/// Rejects non-symmetric and (semi)definite matrices.
pub(crate) fn check_spd(m: &DMatrix<f64>) -> Result<Cholesky<f64, Dyn>> {
    if !m.is_square() || m.nrows() == 0 {
        return Err(Error::NotSpd);
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    let scale = m.amax().max(f64::MIN_POSITIVE);
    if (m - m.transpose()).amax() > 1e-12 * scale.max(1.0) {
        return Err(Error::NotSpd);
    }
    let eig = SymmetricEigen::new(m.clone()).eigenvalues;
    let max = eig.max();
    let min = eig.min();
    if !(max > 0.0) || min <= max * f64::EPSILON * m.nrows() as f64 {
        return Err(Error::NotSpd);
    }
    Cholesky::new(m.clone()).ok_or(Error::NotSpd)
}

/// Additive TDOA noise models (all parameters in meters).
#[derive(Debug, Clone, PartialEq)]
pub enum NoiseModel {
    /// Zero-mean Gaussian with full covariance.
    Gaussian { cov: DMatrix<f64> },
    /// I.i.d. uniform on `[−half_width, half_width]`.
    Uniform { half_width: f64 },
    /// Sum of an i.i.d. uniform and an independent i.i.d. Gaussian term.
    UniformPlusGaussian { half_width: f64, std: f64 },
    /// I.i.d. Laplacian with standard deviation `std` (scale `std/√2`).
    Laplacian { std: f64 },
}

impl NoiseModel {
    pub fn iid_gaussian(q: usize, std: f64) -> Self {
        Self::Gaussian {
            cov: DMatrix::identity(q, q) * (std * std),
        }
    }

    /// Half width of the uniform quantization error of a correlation
    /// sampled at `sample_rate` Hz, for propagation speed `speed` (m/s).
    pub fn sampling_half_width(sample_rate: f64, speed: f64) -> f64 {
        speed / (2.0 * sample_rate)
    }

    pub fn kind(&self) -> NoiseKind {
        match self {
            Self::Gaussian { .. } => NoiseKind::Gaussian,
            Self::Uniform { .. } => NoiseKind::Uniform,
            Self::UniformPlusGaussian { .. } => NoiseKind::UniformPlusGaussian,
            Self::Laplacian { .. } => NoiseKind::Laplacian,
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |what: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!("{what} = {v}")))
            }
        };
        match self {
            Self::Gaussian { .. } => Ok(()),
            Self::Uniform { half_width } => bad("half_width", *half_width),
            Self::UniformPlusGaussian { half_width, std } => {
                bad("half_width", *half_width)?;
                bad("std", *std)
            }
            Self::Laplacian { std } => bad("std", *std),
        }
    }

    /// Per-coordinate variance of the i.i.d. models.
    pub fn variance(&self) -> Option<f64> {
        match self {
            Self::Gaussian { .. } => None,
            Self::Uniform { half_width } => Some(half_width * half_width / 3.0),
            Self::UniformPlusGaussian { half_width, std } => {
                Some(half_width * half_width / 3.0 + std * std)
            }
            Self::Laplacian { std } => Some(std * std),
        }
    }

    /// Second-moment covariance of a `q`-dimensional draw.
    pub fn second_moment(&self, q: usize) -> Result<NoiseSpec> {
        self.validate()?;
        match self {
            Self::Gaussian { cov } => {
                if cov.nrows() != q {
                    return Err(Error::DimensionMismatch {
                        expected: q,
                        found: cov.nrows(),
                    });
                }
                NoiseSpec::new(cov.clone())
            }
            _ => {
                let var = self.variance().unwrap_or_default();
                NoiseSpec::with_kind(DMatrix::identity(q, q) * var, self.kind())
            }
        }
    }

    /// Prepares a sampler for `q`-dimensional draws.
    pub fn sampler(&self, q: usize) -> Result<NoiseSampler> {
        if q == 0 {
            return Err(Error::Empty);
        }
        self.validate()?;
        let chol_l = match self {
            Self::Gaussian { cov } => {
                if cov.nrows() != q {
                    return Err(Error::DimensionMismatch {
                        expected: q,
                        found: cov.nrows(),
                    });
                }
                Some(check_spd(cov)?.l())
            }
            _ => None,
        };
        let uniform = match self {
            Self::Uniform { half_width } | Self::UniformPlusGaussian { half_width, .. } => Some(
                Uniform::new_inclusive(-half_width, *half_width)
                    .map_err(|e| Error::InvalidParameter(e.to_string()))?,
            ),
            _ => None,
        };
        Ok(NoiseSampler {
            model: self.clone(),
            q,
            chol_l,
            uniform,
        })
    }
}

/// A validated, ready-to-draw noise model.
#[derive(Debug, Clone)]
pub struct NoiseSampler {
    model: NoiseModel,
    q: usize,
    chol_l: Option<DMatrix<f64>>,
    uniform: Option<Uniform<f64>>,
}

impl NoiseSampler {
    pub fn q(&self) -> usize {
        self.q
    }

    pub fn model(&self) -> &NoiseModel {
        &self.model
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> DVector<f64> {
        let q = self.q;
        match &self.model {
            NoiseModel::Gaussian { .. } => {
                let z = DVector::from_fn(q, |_, _| StandardNormal.sample(rng));
                self.chol_l.as_ref().map(|l| l * &z).unwrap_or(z)
            }
            NoiseModel::Uniform { .. } => {
                let u = self.uniform.expect("uniform sampler");
                DVector::from_fn(q, |_, _| u.sample(rng))
            }
            NoiseModel::UniformPlusGaussian { std, .. } => {
                let u = self.uniform.expect("uniform sampler");
                DVector::from_fn(q, |_, _| {
                    let g: f64 = StandardNormal.sample(rng);
                    u.sample(rng) + std * g
                })
            }
            NoiseModel::Laplacian { std } => {
                let scale = std / std::f64::consts::SQRT_2;
                DVector::from_fn(q, |_, _| {
                    let a: f64 = Exp1.sample(rng);
                    let b: f64 = Exp1.sample(rng);
                    scale * (a - b)
                })
            }
        }
    }
}

/// One draw of `q` noise values.
pub fn sample_noise<R: Rng + ?Sized>(model: &NoiseModel, q: usize, rng: &mut R) -> Result<DVector<f64>> {
    Ok(model.sampler(q)?.sample(rng))
}

//! The feasible subspace `V_n` of the TDOA space and the relaxed denoising
//! projection onto it.
//!
//! Noiseless complete TDOA vectors satisfy the zero-sum conditions
//! `−τ_i0 + τ_j0 − τ_ji = 0` for every `0 < i < j ≤ n`, so they live in the
//! `n`-dimensional subspace `V_n = ker C`. Relaxed denoising replaces a noisy
//! vector by its orthogonal projection onto `V_n` under the Fisher product
//! `⟨u, v⟩ = uᵀ Σ⁻¹ v`.
//!
//! Sign convention: the rows of `C` use `−τ_i0 + τ_j0 − τ_ji`. For three
//! sensors this is the normal `(−1, 1, −1)`; the equivalent form
//! `τ_10 − τ_20 + τ_21 = 0` describes the same plane.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::geometry::{canonical_pairs, pair_count, pair_index, Pair, TdoaVector};
use crate::linalg::{kernel_basis, metric_gram_schmidt};
use crate::noise::NoiseSpec;

fn check_n(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::TooFewSensors(n + 1));
    }
    Ok(())
}

/// The `(q − n) × q` zero-sum constraint matrix. Row order follows the
/// canonical order of the non-reference pairs.
pub fn constraint_matrix(n: usize) -> Result<DMatrix<f64>> {
    check_n(n)?;
    let q = pair_count(n);
    let mut c = DMatrix::zeros(q - n, q);
    for (row, pair) in canonical_pairs(n).into_iter().skip(n).enumerate() {
        let Pair { hi: j, lo: i } = pair;
        c[(row, i - 1)] = -1.0;
        c[(row, j - 1)] = 1.0;
        c[(row, n + row)] = -1.0;
    }
    Ok(c)
}

/// `G = [I_n; Y]`, mapping the nonredundant TDOAs `τ_NR = (τ_10, …, τ_n0)`
/// to the complete vector `τ = G τ_NR`.
pub fn reduction_matrix(n: usize) -> Result<DMatrix<f64>> {
    reduction_matrix_with_reference(n, 0)
}

/// Like [`reduction_matrix`] but parameterized by the TDOAs `τ_{k,ref}`,
/// `k ≠ ref` in increasing `k`. Rows stay in canonical pair order.
pub fn reduction_matrix_with_reference(n: usize, reference: usize) -> Result<DMatrix<f64>> {
    check_n(n)?;
    if reference > n {
        return Err(Error::IndexOutOfRange {
            index: reference,
            len: n + 1,
        });
    }
    let column = |k: usize| if k < reference { k } else { k - 1 };
    let q = pair_count(n);
    let mut g = DMatrix::zeros(q, n);
    for (row, pair) in canonical_pairs(n).into_iter().enumerate() {
        // τ_{hi,lo} = τ_{hi,ref} − τ_{lo,ref}
        if pair.hi != reference {
            g[(row, column(pair.hi))] += 1.0;
        }
        if pair.lo != reference {
            g[(row, column(pair.lo))] -= 1.0;
        }
    }
    Ok(g)
}

/// How the projector is assembled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ProjectionMethod {
    /// Fisher-orthonormal basis of `ker C`, then `P = Σ_k v_k ⟨·, v_k⟩`.
    GramSchmidt,
    /// `P = G (Gᵀ Σ⁻¹ G)⁻¹ Gᵀ Σ⁻¹`.
    #[default]
    ClosedForm,
}

/// The `q × q` matrix of the Fisher-orthogonal projection onto `V_n`.
#[derive(Debug, Clone)]
pub struct ProjectionOperator {
    n: usize,
    matrix: DMatrix<f64>,
    basis: DMatrix<f64>,
    noise: NoiseSpec,
}

impl ProjectionOperator {
    pub fn new(n: usize, noise: &NoiseSpec, method: ProjectionMethod) -> Result<Self> {
        match method {
            ProjectionMethod::GramSchmidt => Self::gram_schmidt(n, noise),
            ProjectionMethod::ClosedForm => Self::closed_form_with_reference(n, noise, 0),
        }
    }

    fn check_noise(n: usize, noise: &NoiseSpec) -> Result<()> {
        check_n(n)?;
        if noise.dim() != pair_count(n) {
            return Err(Error::DimensionMismatch {
                expected: pair_count(n),
                found: noise.dim(),
            });
        }
        Ok(())
    }

    fn gram_schmidt(n: usize, noise: &NoiseSpec) -> Result<Self> {
        Self::check_noise(n, noise)?;
        let kernel = kernel_basis(&constraint_matrix(n)?, n)?;
        let basis = metric_gram_schmidt(&kernel, noise)?;
        // column k of P is P e_k = Σ_m ⟨e_k, v_m⟩ v_m, i.e. P = V (Σ⁻¹ V)ᵀ
        let matrix = &basis * noise.solve(&basis).transpose();
        Ok(Self {
            n,
            matrix,
            basis,
            noise: noise.clone(),
        })
    }

    /// Closed-form projector built from the reduction matrix of an arbitrary
    /// reference sensor. The result does not depend on `reference`.
    pub fn closed_form_with_reference(n: usize, noise: &NoiseSpec, reference: usize) -> Result<Self> {
        Self::check_noise(n, noise)?;
        let g = reduction_matrix_with_reference(n, reference)?;
        let sig_inv_g = noise.solve(&g);
        let normal = g.transpose() * &sig_inv_g;
        let chol = normal
            .cholesky()
            .ok_or(Error::Singular("Gᵀ Σ⁻¹ G"))?;
        let matrix = &g * chol.solve(&sig_inv_g.transpose());
        let basis = metric_gram_schmidt(&g, noise)?;
        Ok(Self {
            n,
            matrix,
            basis,
            noise: noise.clone(),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn q(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// Fisher-orthonormal basis of `V_n`, one vector per column.
    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn noise(&self) -> &NoiseSpec {
        &self.noise
    }

    /// `P v` for a raw vector of length `q`.
    pub fn apply(&self, v: &DVector<f64>) -> Result<DVector<f64>> {
        if v.len() != self.q() {
            return Err(Error::DimensionMismatch {
                expected: self.q(),
                found: v.len(),
            });
        }
        Ok(&self.matrix * v)
    }

    /// Relaxed denoising `P τ̂`.
    pub fn denoise(&self, tau_hat: &TdoaVector) -> Result<TdoaVector> {
        if tau_hat.n() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.q(),
                found: tau_hat.len(),
            });
        }
        TdoaVector::new(self.n, self.apply(tau_hat.values())?)
    }
}

/// Free-function form of [`ProjectionOperator::new`].
pub fn projection_operator(
    n: usize,
    noise: &NoiseSpec,
    method: ProjectionMethod,
) -> Result<ProjectionOperator> {
    ProjectionOperator::new(n, noise, method)
}

/// Free-function form of [`ProjectionOperator::denoise`].
pub fn denoise(tau_hat: &TdoaVector, proj: &ProjectionOperator) -> Result<TdoaVector> {
    proj.denoise(tau_hat)
}

/// Weighted least-squares nonredundant TDOAs
/// `τ̂_NR = (Gᵀ Σ⁻¹ G)⁻¹ Gᵀ Σ⁻¹ τ̂`.
pub fn nonredundant(tau_hat: &TdoaVector, noise: &NoiseSpec) -> Result<DVector<f64>> {
    let n = tau_hat.n();
    if noise.dim() != tau_hat.len() {
        return Err(Error::DimensionMismatch {
            expected: tau_hat.len(),
            found: noise.dim(),
        });
    }
    let g = reduction_matrix(n)?;
    let sig_inv_g = noise.solve(&g);
    let normal = g.transpose() * &sig_inv_g;
    let rhs = sig_inv_g.transpose() * tau_hat.values();
    normal
        .cholesky()
        .map(|c| c.solve(&rhs))
        .ok_or(Error::Singular("Gᵀ Σ⁻¹ G"))
}

/// Mahalanobis norm `√(vᵀ Σ⁻¹ v)`.
pub fn mahalanobis_norm(v: &DVector<f64>, noise: &NoiseSpec) -> Result<f64> {
    noise.mahalanobis_norm(v)
}

/// Largest absolute zero-sum violation `max |C τ|`.
pub fn subspace_residual(tau: &TdoaVector) -> f64 {
    let n = tau.n();
    let v = tau.values();
    canonical_pairs(n)
        .into_iter()
        .skip(n)
        .map(|p| {
            let k = pair_index(n, p).expect("canonical pair");
            (-v[p.lo - 1] + v[p.hi - 1] - v[k]).abs()
        })
        .fold(0.0, f64::max)
}

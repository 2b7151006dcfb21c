//! Relaxed denoising when only some of the `q` TDOAs were measured.
//!
//! Dropping the coordinates in the missing set `S` maps `V_n` onto a
//! subspace `V_S` of `R^{q−s}`; the partial projector is the Fisher
//! orthogonal projection onto it. When the available pairs still connect
//! every sensor, `dim V_S = n` and the full denoised vector can be recovered.

use std::collections::BTreeSet;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::geometry::{canonical_pairs, pair_count, pair_index, Pair, TdoaVector};
use crate::linalg::{column_space, lstsq, metric_gram_schmidt};
use crate::noise::NoiseSpec;
use crate::subspace::reduction_matrix;

/// The set `S` of missing pairs, kept in canonical order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexSet {
    n: usize,
    missing: Vec<Pair>,
}

impl IndexSet {
    pub fn new<I: IntoIterator<Item = Pair>>(n: usize, missing: I) -> Result<Self> {
        if n < 2 {
            return Err(Error::TooFewSensors(n + 1));
        }
        let mut seen = BTreeSet::new();
        for p in missing {
            pair_index(n, p).ok_or(Error::InvalidPair(p))?;
            if !seen.insert(pair_index(n, p).expect("checked")) {
                return Err(Error::DuplicatePair(p));
            }
        }
        let all = canonical_pairs(n);
        Ok(Self {
            n,
            missing: seen.into_iter().map(|k| all[k]).collect(),
        })
    }

    pub fn empty(n: usize) -> Result<Self> {
        Self::new(n, [])
    }

    /// The complement of a list of available pairs.
    pub fn from_available(n: usize, available: &[Pair]) -> Result<Self> {
        let avail = IndexSet::new(n, available.iter().copied())?;
        Self::new(
            n,
            canonical_pairs(n)
                .into_iter()
                .filter(|p| !avail.missing.contains(p)),
        )
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn q(&self) -> usize {
        pair_count(self.n)
    }

    /// Number of missing pairs `s`.
    pub fn len(&self) -> usize {
        self.missing.len()
    }

    pub fn is_empty(&self) -> bool {
        self.missing.is_empty()
    }

    pub fn missing(&self) -> &[Pair] {
        &self.missing
    }

    pub fn contains(&self, pair: Pair) -> bool {
        self.missing.contains(&pair)
    }

    /// Available pairs in canonical order.
    pub fn available(&self) -> Vec<Pair> {
        canonical_pairs(self.n)
            .into_iter()
            .filter(|p| !self.missing.contains(p))
            .collect()
    }

    /// Canonical indices of the available pairs.
    pub fn available_indices(&self) -> Vec<usize> {
        canonical_pairs(self.n)
            .into_iter()
            .enumerate()
            .filter(|(_, p)| !self.missing.contains(p))
            .map(|(k, _)| k)
            .collect()
    }
}

/// `I_S`: the identity with the rows of the missing pairs removed.
pub fn selection_matrix(set: &IndexSet) -> DMatrix<f64> {
    let q = set.q();
    let rows = set.available_indices();
    let mut m = DMatrix::zeros(rows.len(), q);
    for (r, &k) in rows.iter().enumerate() {
        m[(r, k)] = 1.0;
    }
    m
}

/// TDOAs of the available pairs, in canonical order with `S` deleted.
#[derive(Debug, Clone, PartialEq)]
pub struct PartialTdoaVector {
    set: IndexSet,
    values: DVector<f64>,
}

impl PartialTdoaVector {
    pub fn new(set: IndexSet, values: DVector<f64>) -> Result<Self> {
        let expected = set.q() - set.len();
        if values.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                found: values.len(),
            });
        }
        Ok(Self { set, values })
    }

    /// Drops the missing coordinates of a complete vector.
    pub fn from_full(tau: &TdoaVector, set: &IndexSet) -> Result<Self> {
        if tau.n() != set.n() {
            return Err(Error::DimensionMismatch {
                expected: set.q(),
                found: tau.len(),
            });
        }
        let values = DVector::from_iterator(
            set.q() - set.len(),
            set.available_indices().into_iter().map(|k| tau.values()[k]),
        );
        Ok(Self {
            set: set.clone(),
            values,
        })
    }

    pub fn index_set(&self) -> &IndexSet {
        &self.set
    }

    pub fn values(&self) -> &DVector<f64> {
        &self.values
    }

    pub fn into_values(self) -> DVector<f64> {
        self.values
    }

    pub fn get(&self, pair: Pair) -> Option<f64> {
        self.set
            .available()
            .iter()
            .position(|p| *p == pair)
            .map(|k| self.values[k])
    }
}

/// Projector onto `V_S` under the `Σ_S⁻¹` product.
#[derive(Debug, Clone)]
pub struct PartialProjection {
    set: IndexSet,
    matrix: DMatrix<f64>,
    basis: DMatrix<f64>,
    /// `I_S G`: nonredundant coordinates to available TDOAs.
    reduced_g: DMatrix<f64>,
    selection: DMatrix<f64>,
    noise: NoiseSpec,
}

/// Builds the partial projector: the spanning set `{I_S v_k}` is reduced to an
/// independent set, then orthonormalized under `Σ_S⁻¹`.
pub fn partial_subspace(set: &IndexSet, noise_s: &NoiseSpec) -> Result<PartialProjection> {
    let avail = set.q() - set.len();
    if avail == 0 {
        return Err(Error::Empty);
    }
    if noise_s.dim() != avail {
        return Err(Error::DimensionMismatch {
            expected: avail,
            found: noise_s.dim(),
        });
    }
    let selection = selection_matrix(set);
    let reduced_g = &selection * reduction_matrix(set.n())?;
    let independent = column_space(&reduced_g);
    let basis = metric_gram_schmidt(&independent, noise_s)?;
    let matrix = &basis * noise_s.solve(&basis).transpose();
    Ok(PartialProjection {
        set: set.clone(),
        matrix,
        basis,
        reduced_g,
        selection,
        noise: noise_s.clone(),
    })
}

impl PartialProjection {
    pub fn index_set(&self) -> &IndexSet {
        &self.set
    }

    /// `P_S`, `(q − s) × (q − s)`.
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    /// `dim V_S`.
    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    /// `I_S`, `(q − s) × q`.
    pub fn selection(&self) -> &DMatrix<f64> {
        &self.selection
    }

    pub fn noise(&self) -> &NoiseSpec {
        &self.noise
    }

    /// Whether the complete vector can be recovered (`dim V_S = n`).
    pub fn is_complete(&self) -> bool {
        self.dim() == self.set.n()
    }

    fn check(&self, tau: &PartialTdoaVector) -> Result<()> {
        if tau.set != self.set {
            return Err(Error::DimensionMismatch {
                expected: self.matrix.nrows(),
                found: tau.values.len(),
            });
        }
        Ok(())
    }

    /// `P_S τ̂_S`.
    pub fn denoise(&self, tau: &PartialTdoaVector) -> Result<PartialTdoaVector> {
        self.check(tau)?;
        Ok(PartialTdoaVector {
            set: self.set.clone(),
            values: &self.matrix * &tau.values,
        })
    }

    /// The unique vector of `V_n` whose available coordinates match `tau`,
    /// via the nonredundant coordinates `w` solving `I_S G w ≈ τ_S`.
    pub fn reconstruct_full(&self, tau: &PartialTdoaVector) -> Result<TdoaVector> {
        self.check(tau)?;
        if !self.is_complete() {
            return Err(Error::RankDeficient {
                rank: self.dim(),
                required: self.set.n(),
            });
        }
        let mut w = lstsq(&self.reduced_g, &tau.values)?;
        // one refinement sweep recovers the digits lost in the factorization
        let residual = &tau.values - &self.reduced_g * &w;
        w += lstsq(&self.reduced_g, &residual)?;
        TdoaVector::new(self.set.n(), reduction_matrix(self.set.n())? * w)
    }

    /// Covariance of the reconstructed complete vector when the partial
    /// input has covariance `Σ_S` and is denoised first:
    /// `G A P_S Σ_S P_Sᵀ Aᵀ Gᵀ` with `A` the left inverse of `I_S G`.
    pub fn reconstructed_covariance(&self) -> Result<DMatrix<f64>> {
        if !self.is_complete() {
            return Err(Error::RankDeficient {
                rank: self.dim(),
                required: self.set.n(),
            });
        }
        let normal = self.reduced_g.transpose() * &self.reduced_g;
        let left_inv = normal
            .cholesky()
            .ok_or(Error::Singular("(I_S G)ᵀ (I_S G)"))?
            .solve(&self.reduced_g.transpose());
        let denoised = &self.matrix * self.noise.sigma() * self.matrix.transpose();
        let cov_w = &left_inv * denoised * left_inv.transpose();
        let g = reduction_matrix(self.set.n())?;
        Ok(&g * cov_w * g.transpose())
    }
}

/// Free-function form of [`PartialProjection::denoise`].
pub fn denoise_partial(tau: &PartialTdoaVector, pp: &PartialProjection) -> Result<PartialTdoaVector> {
    pp.denoise(tau)
}

/// Free-function form of [`PartialProjection::reconstruct_full`].
pub fn reconstruct_full(tau: &PartialTdoaVector, pp: &PartialProjection) -> Result<TdoaVector> {
    pp.reconstruct_full(tau)
}

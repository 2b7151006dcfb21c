//! Small dense linear-algebra helpers shared by the projection and
//! localization code.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::noise::NoiseSpec;

/// Relative singular value threshold below which a direction counts as zero.
pub const RANK_TOL: f64 = 1e-9;

/// Orthonormalizes the columns of `vectors` under `⟨u, v⟩ = uᵀ Σ⁻¹ v`.
///
/// Modified Gram-Schmidt; a vector whose norm collapses below half of its
/// norm before the sweep gets a second sweep. Columns must be independent.
pub fn metric_gram_schmidt(vectors: &DMatrix<f64>, metric: &NoiseSpec) -> Result<DMatrix<f64>> {
    let (rows, cols) = vectors.shape();
    if rows != metric.dim() {
        return Err(Error::DimensionMismatch {
            expected: metric.dim(),
            found: rows,
        });
    }
    if cols == 0 {
        return Ok(DMatrix::zeros(rows, 0));
    }
    let mut basis: Vec<DVector<f64>> = Vec::with_capacity(cols);
    // Σ⁻¹ u_k for every accepted basis vector
    let mut duals: Vec<DVector<f64>> = Vec::with_capacity(cols);
    for c in 0..cols {
        let mut a = vectors.column(c).into_owned();
        let initial = metric.inner(&a, &a).sqrt();
        if !(initial > 0.0) {
            return Err(Error::RankDeficient {
                rank: basis.len(),
                required: cols,
            });
        }
        let mut norm = initial;
        for _ in 0..2 {
            let before = norm;
            for (u, du) in basis.iter().zip(&duals) {
                let coeff = du.dot(&a);
                a.axpy(-coeff, u, 1.0);
            }
            norm = metric.inner(&a, &a).sqrt();
            if norm >= 0.5 * before {
                break;
            }
        }
        if norm <= RANK_TOL * initial {
            return Err(Error::RankDeficient {
                rank: basis.len(),
                required: cols,
            });
        }
        a /= norm;
        duals.push(metric.solve_vec(&a));
        basis.push(a);
    }
    Ok(DMatrix::from_columns(&basis))
}

/// Orthonormal (Euclidean) basis of the column space of `m`, by
/// column-pivoted QR; pivots below `RANK_TOL` times the largest count as
/// zero.
pub fn column_space(m: &DMatrix<f64>) -> DMatrix<f64> {
    if m.ncols() == 0 || m.nrows() == 0 {
        return DMatrix::zeros(m.nrows(), 0);
    }
    let qr = m.clone().col_piv_qr();
    let rank = pivot_rank(&qr.r(), RANK_TOL);
    qr.q().columns(0, rank).into_owned()
}

/// Number of leading diagonal entries of a pivoted `R` above `tol` times
/// the first one.
fn pivot_rank(r: &DMatrix<f64>, tol: f64) -> usize {
    let len = r.nrows().min(r.ncols());
    let first = if len > 0 { r[(0, 0)].abs() } else { 0.0 };
    if !(first > 0.0) {
        return 0;
    }
    (0..len).take_while(|&k| r[(k, k)].abs() > tol * first).count()
}

/// Numerical rank with the shared relative threshold.
pub fn rank(m: &DMatrix<f64>) -> usize {
    column_space(m).ncols()
}

/// Orthonormal basis of `ker(m)` of the expected dimension, from the
/// eigenvectors of `mᵀ m` with the smallest eigenvalues.
pub fn kernel_basis(m: &DMatrix<f64>, dim: usize) -> Result<DMatrix<f64>> {
    let gram = m.transpose() * m;
    let size = gram.nrows();
    let eig = SymmetricEigen::new(gram);
    let mut order: Vec<usize> = (0..size).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let scale = eig.eigenvalues.amax().max(1.0);
    let kernel: Vec<_> = order
        .iter()
        .take_while(|&&k| eig.eigenvalues[k].abs() <= RANK_TOL * scale)
        .map(|&k| eig.eigenvectors.column(k).into_owned())
        .collect();
    if kernel.len() != dim || dim == 0 {
        return Err(Error::RankDeficient {
            rank: size - kernel.len(),
            required: size - dim,
        });
    }
    Ok(DMatrix::from_columns(&kernel))
}

/// Least-squares solution of `a x ≈ b`, failing if `a` lacks full column
/// rank.
pub fn lstsq(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    let cols = a.ncols();
    if a.nrows() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.nrows(),
            found: b.len(),
        });
    }
    if a.nrows() < cols {
        return Err(Error::RankDeficient {
            rank: a.nrows(),
            required: cols,
        });
    }
    let qr = a.clone().col_piv_qr();
    let r = qr.r();
    let rank = pivot_rank(&r, 1e-12);
    if rank < cols {
        return Err(Error::RankDeficient {
            rank,
            required: cols,
        });
    }
    let rhs = qr.q().transpose() * b;
    let mut x = r
        .solve_upper_triangular(&rhs)
        .ok_or(Error::Singular("least squares"))?;
    qr.p().inv_permute_rows(&mut x);
    Ok(x)
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    let sym = (m + m.transpose()) * 0.5;
    SymmetricEigen::new(sym).eigenvalues.min()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gram_schmidt_identity_metric() {
        let metric = NoiseSpec::isotropic(3, 1.0).unwrap();
        let v = DMatrix::from_row_slice(3, 2, &[1.0, 1.0, 0.0, 1.0, 0.0, 0.0]);
        let q = metric_gram_schmidt(&v, &metric).unwrap();
        let gram = q.transpose() * &q;
        assert!((gram - DMatrix::identity(2, 2)).amax() < 1e-14);
        assert!((q[(0, 0)] - 1.0).abs() < 1e-15);
        assert!((q[(1, 1)] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn gram_schmidt_rejects_dependent() {
        let metric = NoiseSpec::isotropic(3, 1.0).unwrap();
        let v = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 1.0, 2.0, 1.0, 2.0]);
        assert!(matches!(
            metric_gram_schmidt(&v, &metric),
            Err(Error::RankDeficient { rank: 1, .. })
        ));
    }

    #[test]
    fn kernel_of_row() {
        let c = DMatrix::from_row_slice(1, 3, &[-1.0, 1.0, -1.0]);
        let k = kernel_basis(&c, 2).unwrap();
        assert!((&c * &k).amax() < 1e-14);
        assert!(kernel_basis(&c, 1).is_err());
    }

    #[test]
    fn lstsq_exact_and_deficient() {
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
        let b = DVector::from_vec(vec![1.0, 2.0, 3.0]);
        let x = lstsq(&a, &b).unwrap();
        assert!((x - DVector::from_vec(vec![1.0, 2.0])).norm() < 1e-14);
        let d = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 1.0, 2.0, 1.0, 2.0]);
        assert!(lstsq(&d, &b).is_err());
    }

    #[test]
    fn column_space_rank() {
        let m = DMatrix::from_row_slice(3, 3, &[1.0, 2.0, 3.0, 2.0, 4.0, 6.0, 0.0, 1.0, 1.0]);
        assert_eq!(rank(&m), 2);
        assert_eq!(rank(&DMatrix::zeros(3, 2)), 0);
    }
}

//! Dense symmetric linear algebra: sample covariance, eigendecomposition,
//! inverse square roots and the Fisher discriminant solve.
//!
//! The eigensolver is nalgebra's implicit-shift QR on the tridiagonal form.
//! Only the tolerances are part of the contract: reconstruction error
//! `‖A − HΛHᵀ‖_F ≤ 1e-10·(1 + ‖A‖_F)` and `‖HᵀH − I‖_F ≤ 1e-10`.

use nalgebra::{DMatrix, DVector};

use crate::{Error, PointSet, Result};

/// Relative ridge used whenever a sample covariance is inverted.
pub const DEFAULT_RIDGE_SCALE: f64 = 1e-10;

const EIG_EPS: f64 = f64::EPSILON;

/// A real symmetric matrix. Construction mirrors the lower triangle into the
/// upper one so `a[(i, j)] == a[(j, i)]` holds bit for bit.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricMatrix(DMatrix<f64>);

impl SymmetricMatrix {
    /// Takes the lower triangle of `m` as authoritative.
    pub fn from_lower(mut m: DMatrix<f64>) -> Result<Self> {
        if !m.is_square() || m.nrows() == 0 {
            return Err(Error::param(format!(
                "symmetric matrix must be square and non-empty, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        let d = m.nrows();
        for j in 0..d {
            for i in j + 1..d {
                m[(j, i)] = m[(i, j)];
            }
        }
        Ok(SymmetricMatrix(m))
    }

    /// Accepts `m` only if it is exactly symmetric.
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if m.is_square() && m != m.transpose() {
            return Err(Error::param("matrix is not symmetric"));
        }
        Self::from_lower(m)
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.len();
        if rows.iter().any(|r| r.len() != d) {
            return Err(Error::param("rows do not form a square matrix"));
        }
        Self::new(DMatrix::from_fn(d, d, |i, j| rows[i][j]))
    }

    pub fn identity(d: usize) -> Self {
        SymmetricMatrix(DMatrix::identity(d, d))
    }

    pub fn zeros(d: usize) -> Self {
        SymmetricMatrix(DMatrix::zeros(d, d))
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        SymmetricMatrix(DMatrix::from_diagonal(&DVector::from_column_slice(diag)))
    }

    pub fn order(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    pub fn trace(&self) -> f64 {
        self.0.trace()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[(i, j)]
    }

    /// `self + other`.
    pub fn add(&self, other: &SymmetricMatrix) -> Result<SymmetricMatrix> {
        if self.order() != other.order() {
            return Err(Error::DimensionMismatch {
                expected: self.order(),
                got: other.order(),
            });
        }
        Ok(SymmetricMatrix(&self.0 + &other.0))
    }

    /// `self + shift·I`.
    pub fn shifted(&self, shift: f64) -> SymmetricMatrix {
        let mut m = self.0.clone();
        for i in 0..m.nrows() {
            m[(i, i)] += shift;
        }
        SymmetricMatrix(m)
    }

    /// `1e-10 · trace / d`, the ridge applied to sample covariances.
    pub fn default_ridge(&self) -> f64 {
        DEFAULT_RIDGE_SCALE * self.trace() / self.order() as f64
    }
}

/// Eigenvalues in ascending order with matching orthonormal eigenvector columns.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub eigenvalues: DVector<f64>,
    pub eigenvectors: DMatrix<f64>,
}

impl EigenDecomposition {
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let h = &self.eigenvectors;
        h * DMatrix::from_diagonal(&self.eigenvalues) * h.transpose()
    }
}

/// Unbiased sample covariance (divisor `M − 1`).
pub fn covariance(ps: &PointSet) -> Result<SymmetricMatrix> {
    let (_, cov) = mean_and_covariance(ps.rows(), ps.dim())?;
    Ok(cov)
}

pub fn mean(ps: &PointSet) -> DVector<f64> {
    let mut mean = DVector::zeros(ps.dim());
    for row in ps.rows() {
        for (m, x) in mean.iter_mut().zip(row) {
            *m += x;
        }
    }
    mean / ps.len() as f64
}

/// Sample mean and unbiased covariance of a collection of equal-length rows.
pub fn mean_and_covariance<'a, I>(rows: I, dim: usize) -> Result<(DVector<f64>, SymmetricMatrix)>
where
    I: IntoIterator<Item = &'a [f64]>,
{
    let rows: Vec<&[f64]> = rows.into_iter().collect();
    let count = rows.len();
    if count < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            got: count,
        });
    }
    let mut mean = DVector::zeros(dim);
    for row in &rows {
        for (m, x) in mean.iter_mut().zip(row.iter()) {
            *m += x;
        }
    }
    mean /= count as f64;
    let centered = DMatrix::from_fn(count, dim, |i, j| rows[i][j] - mean[j]);
    let scatter = centered.tr_mul(&centered) / (count - 1) as f64;
    Ok((mean, SymmetricMatrix::from_lower(scatter)?))
}

/// Symmetric eigendecomposition with eigenvalues sorted ascending.
pub fn sym_eig(a: &SymmetricMatrix) -> Result<EigenDecomposition> {
    let d = a.order();
    let max_iterations = 1000 * d.max(1);
    let eig = nalgebra::SymmetricEigen::try_new(a.0.clone(), EIG_EPS, max_iterations).ok_or(
        Error::NoConvergence {
            order: d,
            max_iterations,
        },
    )?;
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let eigenvalues = DVector::from_iterator(d, order.iter().map(|&i| eig.eigenvalues[i]));
    let eigenvectors = DMatrix::from_fn(d, d, |r, c| eig.eigenvectors[(r, order[c])]);
    Ok(EigenDecomposition {
        eigenvalues,
        eigenvectors,
    })
}

/// `(A + ridge·I)^{-1/2}`, the unique positive definite inverse square root.
pub fn inv_sqrt(a: &SymmetricMatrix, ridge: f64) -> Result<SymmetricMatrix> {
    if !(ridge >= 0.0) {
        return Err(Error::param(format!("ridge {ridge} must be nonnegative")));
    }
    let eig = sym_eig(a)?;
    let min = eig.eigenvalues.min() + ridge;
    if !(min > 0.0) {
        return Err(Error::Singular {
            min_eigenvalue: min,
        });
    }
    let scale = eig.eigenvalues.map(|l| 1.0 / (l + ridge).sqrt());
    let h = &eig.eigenvectors;
    let b = h * DMatrix::from_diagonal(&scale) * h.transpose();
    SymmetricMatrix::from_lower(b)
}

/// Solves `(A + ridge·I) x = b` for symmetric positive definite `A + ridge·I`.
pub fn solve_spd(a: &SymmetricMatrix, ridge: f64, b: &DVector<f64>) -> Result<DVector<f64>> {
    if a.order() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.order(),
            got: b.len(),
        });
    }
    let shifted = a.shifted(ridge);
    match shifted.0.clone().cholesky() {
        Some(chol) => Ok(chol.solve(b)),
        None => {
            let min_eigenvalue = sym_eig(&shifted).map(|e| e.eigenvalues[0]).unwrap_or(0.0);
            Err(Error::Singular { min_eigenvalue })
        }
    }
}

/// Fisher discriminant direction between an error cluster and the rest.
///
/// Solves `(cov_rest + cov_err + ridge·I) w = mean_err − mean_rest` and
/// returns `w / ‖w‖`.
pub fn fisher_direction(
    cov_rest: &SymmetricMatrix,
    cov_err: &SymmetricMatrix,
    mean_err: &DVector<f64>,
    mean_rest: &DVector<f64>,
    ridge: f64,
) -> Result<DVector<f64>> {
    if mean_err.len() != mean_rest.len() {
        return Err(Error::DimensionMismatch {
            expected: mean_rest.len(),
            got: mean_err.len(),
        });
    }
    let diff = mean_err - mean_rest;
    if diff.iter().all(|&x| x == 0.0) {
        return Err(Error::DegenerateDirection);
    }
    let pooled = cov_rest.add(cov_err)?;
    let w = solve_spd(&pooled, ridge, &diff)?;
    let norm = w.norm();
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(Error::DegenerateDirection);
    }
    Ok(w / norm)
}

pub fn frobenius(m: &DMatrix<f64>) -> f64 {
    m.norm()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use rand::Rng;

    fn random_symmetric(d: usize, seed: u64) -> SymmetricMatrix {
        let mut r = rng::seeded(seed);
        let m = DMatrix::from_fn(d, d, |_, _| r.random_range(-1.0..1.0));
        SymmetricMatrix::from_lower(&m + m.transpose()).unwrap()
    }

    fn random_psd(d: usize, seed: u64) -> SymmetricMatrix {
        let mut r = rng::seeded(seed);
        let g = DMatrix::from_fn(d, d, |_, _| r.random_range(-1.0..1.0));
        SymmetricMatrix::from_lower(g.tr_mul(&g)).unwrap()
    }

    #[test]
    fn covariance_by_hand() {
        let ps = PointSet::from_rows(&[[0.0, 0.0], [2.0, 0.0]]).unwrap();
        let c = covariance(&ps).unwrap();
        assert_eq!(
            c.as_matrix(),
            &DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 0.0])
        );
        let one = PointSet::from_rows(&[[1.0, 2.0]]).unwrap();
        assert!(matches!(
            covariance(&one),
            Err(Error::InsufficientData { needed: 2, got: 1 })
        ));
    }

    #[test]
    fn covariance_is_psd() {
        let ps = crate::sampling::sample(&crate::sampling::DistributionSpec::unit_ball(8), 5, 1)
            .unwrap();
        let c = covariance(&ps).unwrap();
        let e = sym_eig(&c).unwrap();
        assert!(e.eigenvalues[0] >= -1e-12 * c.trace());
    }

    #[test]
    fn eig_identity() {
        let e = sym_eig(&SymmetricMatrix::identity(3)).unwrap();
        assert_eq!(e.eigenvalues.as_slice(), &[1.0, 1.0, 1.0]);
    }

    #[test]
    fn eig_two_by_two() {
        let a = SymmetricMatrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap();
        let e = sym_eig(&a).unwrap();
        assert!((e.eigenvalues[0] - 1.0).abs() < 1e-14);
        assert!((e.eigenvalues[1] - 3.0).abs() < 1e-14);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let v0 = e.eigenvectors.column(0);
        let v1 = e.eigenvectors.column(1);
        assert!((v0[0].abs() - s).abs() < 1e-14 && (v0[0] + v0[1]).abs() < 1e-14);
        assert!((v1[0].abs() - s).abs() < 1e-14 && (v1[0] - v1[1]).abs() < 1e-14);
    }

    #[test]
    fn eig_reconstructs_random() {
        let a = random_symmetric(50, 3);
        let e = sym_eig(&a).unwrap();
        let err = frobenius(&(e.reconstruct() - a.as_matrix()));
        assert!(err <= 1e-10 * (1.0 + frobenius(a.as_matrix())));
        let ortho =
            frobenius(&(e.eigenvectors.tr_mul(&e.eigenvectors) - DMatrix::identity(50, 50)));
        assert!(ortho <= 1e-10);
        assert!(e.eigenvalues.as_slice().windows(2).all(|w| w[0] <= w[1]));
        assert!((e.eigenvalues.sum() - a.trace()).abs() <= 1e-10 * (1.0 + a.trace().abs()));
    }

    #[test]
    fn inv_sqrt_cases() {
        let b = inv_sqrt(&SymmetricMatrix::identity(4), 0.0).unwrap();
        assert!(frobenius(&(b.as_matrix() - DMatrix::identity(4, 4))) < 1e-15);

        let b = inv_sqrt(&SymmetricMatrix::from_diagonal(&[4.0, 9.0]), 0.0).unwrap();
        assert!((b.get(0, 0) - 0.5).abs() < 1e-15);
        assert!((b.get(1, 1) - 1.0 / 3.0).abs() < 1e-15);
        assert!(b.get(0, 1).abs() < 1e-15);

        let a = random_psd(20, 8);
        let ridge = a.default_ridge();
        let b = inv_sqrt(&a, ridge).unwrap();
        let shifted = a.shifted(ridge);
        let resid = b.as_matrix() * shifted.as_matrix() * b.as_matrix() - DMatrix::identity(20, 20);
        assert!(frobenius(&resid) <= 1e-8 * 20.0, "{}", frobenius(&resid));
    }

    #[test]
    fn inv_sqrt_singular() {
        let a = SymmetricMatrix::from_diagonal(&[1.0, 0.0]);
        assert!(matches!(inv_sqrt(&a, 0.0), Err(Error::Singular { .. })));
        assert!(inv_sqrt(&a, 1e-6).is_ok());
    }

    #[test]
    fn fisher_identity_pooled() {
        let half = SymmetricMatrix::from_diagonal(&[0.5, 0.5]);
        let w = fisher_direction(
            &half,
            &half,
            &DVector::from_vec(vec![1.0, 0.0]),
            &DVector::from_vec(vec![0.0, 0.0]),
            0.0,
        )
        .unwrap();
        assert_eq!(w.as_slice(), &[1.0, 0.0]);
    }

    #[test]
    fn fisher_anisotropic() {
        let w = fisher_direction(
            &SymmetricMatrix::from_diagonal(&[4.0, 1.0]),
            &SymmetricMatrix::zeros(2),
            &DVector::from_vec(vec![1.0, 1.0]),
            &DVector::zeros(2),
            0.0,
        )
        .unwrap();
        // (1/4, 1) / sqrt(17/16)
        let norm = (17.0f64 / 16.0).sqrt();
        assert!((w[0] - 0.25 / norm).abs() < 1e-12);
        assert!((w[1] - 1.0 / norm).abs() < 1e-12);
    }

    #[test]
    fn fisher_degenerate() {
        let m = DVector::from_vec(vec![0.3, -0.2]);
        let r = fisher_direction(
            &SymmetricMatrix::identity(2),
            &SymmetricMatrix::zeros(2),
            &m,
            &m,
            0.0,
        );
        assert!(matches!(r, Err(Error::DegenerateDirection)));
        let r = fisher_direction(
            &SymmetricMatrix::zeros(2),
            &SymmetricMatrix::zeros(2),
            &DVector::from_vec(vec![1.0, 0.0]),
            &DVector::zeros(2),
            0.0,
        );
        assert!(matches!(r, Err(Error::Singular { .. })));
    }

    #[test]
    fn symmetry_is_enforced() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        assert!(SymmetricMatrix::new(m.clone()).is_err());
        let s = SymmetricMatrix::from_lower(m).unwrap();
        assert_eq!(s.get(0, 1), 3.0);
    }
}

//! Centering, principal-component projection and whitening.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::numerics::{self, SymmetricMatrix};
use crate::{Error, PointSet, Result};

use super::LabeledData;

/// Eigenvalues at or below this fraction of the trace are treated as zero.
pub const RANK_TOLERANCE: f64 = 1e-12;

/// Data whose eigenvalues are all at or below this fraction of the trace is
/// rejected as degenerate.
pub const DEGENERATE_TOLERANCE: f64 = 1e-14;

/// `x ↦ W·Hᵀ·(x − x̄)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PreprocessingPipeline {
    mean: DVector<f64>,
    projection: DMatrix<f64>,
    whitener: SymmetricMatrix,
    ridge: f64,
    retained_variance: f64,
    cond_ridge_applied: bool,
    // W·Hᵀ, row-major m × n
    combined: Vec<f64>,
}

impl PreprocessingPipeline {
    /// Assembles a pipeline from its parts; `projection` is `n × m` and
    /// `whitener` is `m × m`.
    pub fn from_parts(
        mean: DVector<f64>,
        projection: DMatrix<f64>,
        whitener: SymmetricMatrix,
        ridge: f64,
    ) -> Result<Self> {
        if projection.nrows() != mean.len() {
            return Err(Error::DimensionMismatch {
                expected: mean.len(),
                got: projection.nrows(),
            });
        }
        if whitener.order() != projection.ncols() {
            return Err(Error::DimensionMismatch {
                expected: projection.ncols(),
                got: whitener.order(),
            });
        }
        let c = whitener.as_matrix() * projection.transpose();
        let (m, n) = (c.nrows(), c.ncols());
        let mut combined = Vec::with_capacity(m * n);
        for i in 0..m {
            for j in 0..n {
                combined.push(c[(i, j)]);
            }
        }
        Ok(PreprocessingPipeline {
            mean,
            projection,
            whitener,
            ridge,
            retained_variance: 1.0,
            cond_ridge_applied: false,
            combined,
        })
    }

    /// The identity transform on `R^n` (up to the given centering).
    pub fn identity(mean: DVector<f64>) -> Self {
        let n = mean.len();
        Self::from_parts(
            mean,
            DMatrix::identity(n, n),
            SymmetricMatrix::identity(n),
            0.0,
        )
        .expect("consistent shapes")
    }

    pub fn input_dim(&self) -> usize {
        self.mean.len()
    }

    pub fn output_dim(&self) -> usize {
        self.projection.ncols()
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn projection(&self) -> &DMatrix<f64> {
        &self.projection
    }

    pub fn whitener(&self) -> &SymmetricMatrix {
        &self.whitener
    }

    pub fn ridge(&self) -> f64 {
        self.ridge
    }

    /// Fraction of total variance captured by the retained components.
    pub fn retained_variance(&self) -> f64 {
        self.retained_variance
    }

    /// Whether the whitener's ridge was raised to meet the condition cap.
    pub fn cond_ridge_applied(&self) -> bool {
        self.cond_ridge_applied
    }

    /// `W·Hᵀ·(x − x̄)`.
    pub fn transform(&self, x: &[f64]) -> Result<Vec<f64>> {
        let n = self.input_dim();
        if x.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: x.len(),
            });
        }
        let centered: Vec<f64> = x.iter().zip(self.mean.iter()).map(|(a, b)| a - b).collect();
        Ok(self
            .combined
            .chunks_exact(n)
            .map(|row| row.iter().zip(&centered).map(|(a, b)| a * b).sum())
            .collect())
    }

    /// Transforms every row; row `i` equals `transform(ps.row(i))` bit for bit.
    pub fn transform_set(&self, ps: &PointSet) -> Result<PointSet> {
        if ps.dim() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                got: ps.dim(),
            });
        }
        let rows: Vec<Vec<f64>> = (0..ps.len())
            .into_par_iter()
            .map(|i| self.transform(ps.row(i)))
            .collect::<Result<_>>()?;
        PointSet::new(self.output_dim(), rows.concat())
    }
}

/// Fits centering, projection and whitening on all samples of `data`.
///
/// Keeps the fewest leading principal components whose eigenvalues sum to at
/// least `variance_fraction` of the (numerically nonzero) total. If the kept
/// spectrum has `λ_max/λ_min > cond_cap`, the components are kept anyway and
/// the whitener's ridge is raised until `(λ_max+ρ)/(λ_min+ρ) = cond_cap`.
/// Otherwise the ridge is `1e-10·trace/m`.
pub fn fit_pipeline(
    data: &LabeledData,
    variance_fraction: f64,
    cond_cap: f64,
) -> Result<PreprocessingPipeline> {
    if !(variance_fraction > 0.0 && variance_fraction <= 1.0) {
        return Err(Error::param(format!(
            "variance fraction {variance_fraction} must lie in (0, 1]"
        )));
    }
    if !(cond_cap > 1.0) {
        return Err(Error::param(format!(
            "condition cap {cond_cap} must exceed 1"
        )));
    }
    let samples = data.samples();
    let correct = samples.len() - data.errors().len();
    if samples.len() < 2 || correct < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            got: samples.len().min(correct),
        });
    }
    let (mean, cov) = numerics::mean_and_covariance(samples.rows(), samples.dim())?;
    let eig = numerics::sym_eig(&cov)?;
    let n = samples.dim();
    let trace: f64 = cov.trace();
    let largest = eig.eigenvalues[n - 1];
    if !(trace > 0.0) || largest <= DEGENERATE_TOLERANCE * trace {
        return Err(Error::DegenerateData(
            "all covariance eigenvalues are numerically zero".into(),
        ));
    }

    // Descending order.
    let values: Vec<f64> = (0..n).rev().map(|i| eig.eigenvalues[i]).collect();
    let significant = values
        .iter()
        .take_while(|&&l| l > RANK_TOLERANCE * trace)
        .count()
        .max(1);
    let total: f64 = values[..significant].iter().sum();
    let target = variance_fraction * total * (1.0 - 1e-12);
    let mut kept = 0;
    let mut cumulative = 0.0;
    while kept < significant {
        cumulative += values[kept];
        kept += 1;
        if cumulative >= target {
            break;
        }
    }

    let mut projection = DMatrix::zeros(n, kept);
    for k in 0..kept {
        let col = eig.eigenvectors.column(n - 1 - k);
        // Sign convention: largest-magnitude entry positive.
        let pivot = col
            .iter()
            .copied()
            .fold(0.0f64, |a, b| if b.abs() > a.abs() { b } else { a });
        let sign = if pivot < 0.0 { -1.0 } else { 1.0 };
        for i in 0..n {
            projection[(i, k)] = sign * col[i];
        }
    }

    let reduced =
        SymmetricMatrix::from_lower(projection.transpose() * cov.as_matrix() * &projection)?;
    let (lmax, lmin) = (values[0], values[kept - 1]);
    let mut ridge = reduced.default_ridge();
    let mut cond_ridge_applied = false;
    if (lmax + ridge) / (lmin + ridge) > cond_cap {
        ridge = (lmax - cond_cap * lmin) / (cond_cap - 1.0);
        cond_ridge_applied = true;
    }
    let whitener = numerics::inv_sqrt(&reduced, ridge)?;
    let mut pipeline = PreprocessingPipeline::from_parts(mean, projection, whitener, ridge)?;
    pipeline.retained_variance = cumulative / trace;
    pipeline.cond_ridge_applied = cond_ridge_applied;
    Ok(pipeline)
}

pub(crate) fn restore(
    mean: DVector<f64>,
    projection: DMatrix<f64>,
    whitener: SymmetricMatrix,
    ridge: f64,
    retained_variance: f64,
    cond_ridge_applied: bool,
) -> Result<PreprocessingPipeline> {
    let mut p = PreprocessingPipeline::from_parts(mean, projection, whitener, ridge)?;
    p.retained_variance = retained_variance;
    p.cond_ridge_applied = cond_ridge_applied;
    Ok(p)
}

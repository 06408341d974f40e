//! One-shot linear correctors for a legacy classifier.
//!
//! Given every feature vector the legacy system produced and the subset it
//! got wrong, [`fit`] builds a [`CorrectorModel`]:
//!
//! 1. centre on the sample mean, project onto the leading principal
//!    components and whiten ([`fit_pipeline`]);
//! 2. group the whitened errors into positively correlated clusters
//!    ([`cluster_errors`]);
//! 3. for each cluster, take the Fisher direction `w` between the cluster and
//!    everything else, and the threshold `c = min (w, ξ)` over the cluster.
//!
//! [`apply`] flags a point when any unit's score `(w, ξ) − c` is nonnegative,
//! so every training error is flagged by construction. Models chain with
//! [`cascade_apply`].

mod cluster;
mod model;
mod pipeline;

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::numerics::{self, SymmetricMatrix};
use crate::{Error, PointSet, Result};

pub use cluster::{cluster_errors, Cluster, ClusterCount};
pub use model::MODEL_VERSION;
pub use pipeline::{fit_pipeline, PreprocessingPipeline, DEGENERATE_TOLERANCE, RANK_TOLERANCE};

/// All samples plus the indices of the ones the legacy system got wrong.
#[derive(Debug, Clone)]
pub struct LabeledData {
    samples: PointSet,
    errors: Vec<usize>,
}

impl LabeledData {
    pub fn new(samples: PointSet, errors: Vec<usize>) -> Result<Self> {
        if errors.is_empty() {
            return Err(Error::param("error index set is empty"));
        }
        let mut seen = vec![false; samples.len()];
        for &i in &errors {
            if i >= samples.len() {
                return Err(Error::param(format!(
                    "error index {i} out of range for {} samples",
                    samples.len()
                )));
            }
            if std::mem::replace(&mut seen[i], true) {
                return Err(Error::param(format!("duplicate error index {i}")));
            }
        }
        Ok(LabeledData { samples, errors })
    }

    pub fn samples(&self) -> &PointSet {
        &self.samples
    }

    pub fn errors(&self) -> &[usize] {
        &self.errors
    }
}

/// How `Cov(S_w ∖ Y_i)` is obtained for each cluster.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RestCovariance {
    /// Exact covariance of all samples outside the cluster.
    #[default]
    PerCluster,
    /// Covariance of the whole whitened set, shared by all clusters. Faster,
    /// but not the exact discriminant.
    Global,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub variance_fraction: f64,
    pub cond_cap: f64,
    pub clusters: ClusterCount,
    pub beta_threshold: f64,
    /// Threshold placed at `min − margin·spread`, spread being the range of
    /// the cluster's scores. Zero puts it exactly at the cluster minimum.
    pub margin: f64,
    pub rest_covariance: RestCovariance,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            variance_fraction: 0.999,
            cond_cap: 1e6,
            clusters: ClusterCount::Auto,
            beta_threshold: 0.5,
            margin: 0.0,
            rest_covariance: RestCovariance::PerCluster,
        }
    }
}

/// One separating functional `ℓ(ξ) = (w, ξ)` with threshold `c`, in whitened
/// coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct KnowledgeUnit {
    pub w: Vec<f64>,
    pub c: f64,
    pub cluster_size: usize,
    pub beta1: f64,
    pub beta2: f64,
}

impl KnowledgeUnit {
    pub fn score(&self, z: &[f64]) -> f64 {
        dot(&self.w, z)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitMeta {
    pub generator: String,
    pub samples: usize,
    pub errors: usize,
    pub clusters: usize,
    pub data_seed: Option<u64>,
    pub variance_fraction: f64,
    pub cond_cap: f64,
    pub beta_threshold: f64,
    pub margin: f64,
    pub rest_covariance: RestCovariance,
    pub retained_variance: f64,
    pub cond_ridge_applied: bool,
    /// Free-form caller annotations, e.g. a fit date.
    #[serde(default)]
    pub labels: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrectorModel {
    pub pipeline: PreprocessingPipeline,
    pub units: Vec<KnowledgeUnit>,
    pub meta: FitMeta,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Decision {
    pub flagged: bool,
    pub fired_units: Vec<usize>,
    /// `ℓ_i(x) − c_i` per unit.
    pub scores: Vec<f64>,
}

impl Decision {
    pub fn max_score(&self) -> Option<f64> {
        self.scores.iter().copied().reduce(f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CascadeDecision {
    pub stages: Vec<Decision>,
    /// First stage that flagged the point.
    pub first_stage: Option<usize>,
}

impl CascadeDecision {
    pub fn flagged(&self) -> bool {
        self.first_stage.is_some()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn lexicographic(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(std::cmp::Ordering::Equal)
}

/// Fits a corrector on `data`. Deterministic in `(data, options)`.
///
/// Errors are clustered in lexicographic order of their raw feature vectors,
/// so the result does not depend on the order samples are listed in.
pub fn fit(data: &LabeledData, options: &FitOptions) -> Result<CorrectorModel> {
    if !(options.beta_threshold > 0.0 && options.beta_threshold < 1.0) {
        return Err(Error::param(format!(
            "beta threshold {} must lie in (0, 1)",
            options.beta_threshold
        )));
    }
    if !(options.margin >= 0.0) {
        return Err(Error::param("margin must be nonnegative"));
    }
    if options.clusters == ClusterCount::AtMost(0) {
        return Err(Error::param("cluster count must be at least 1"));
    }
    let pipeline = fit_pipeline(data, options.variance_fraction, options.cond_cap)?;
    let samples = data.samples();
    let whitened = pipeline.transform_set(samples)?;
    let dim = whitened.dim();
    let total = whitened.len();

    let mut order: Vec<usize> = data.errors().to_vec();
    order.sort_by(|&a, &b| lexicographic(samples.row(a), samples.row(b)).then(a.cmp(&b)));
    let error_points: Vec<Vec<f64>> = order.iter().map(|&i| whitened.row(i).to_vec()).collect();
    let clusters = cluster_errors(&error_points, options.clusters, options.beta_threshold);

    // Running sums over the whitened set; per-cluster rest statistics are
    // obtained by removing the cluster's contribution.
    let data_matrix = DMatrix::from_row_slice(total, dim, whitened.data());
    let total_scatter = data_matrix.tr_mul(&data_matrix);
    let total_sum: DVector<f64> = data_matrix.row_sum().transpose();
    let global_cov = numerics::covariance(&whitened)?;

    let mut units = Vec::with_capacity(clusters.len());
    for cluster in &clusters {
        let members: Vec<&[f64]> = cluster
            .members
            .iter()
            .map(|&k| error_points[k].as_slice())
            .collect();
        let k = members.len();
        let mut cluster_sum = DVector::zeros(dim);
        let mut cluster_scatter = DMatrix::zeros(dim, dim);
        for z in &members {
            let v = DVector::from_column_slice(z);
            cluster_scatter += &v * v.transpose();
            cluster_sum += v;
        }
        let rest_n = total - k;
        if rest_n < 2 {
            return Err(Error::InsufficientData {
                needed: 2,
                got: rest_n,
            });
        }
        let mean_err = &cluster_sum / k as f64;
        let mean_rest = (&total_sum - &cluster_sum) / rest_n as f64;
        let cov_rest = match options.rest_covariance {
            RestCovariance::PerCluster => {
                let scatter = &total_scatter - &cluster_scatter;
                let centered = scatter - (&mean_rest * mean_rest.transpose()) * rest_n as f64;
                SymmetricMatrix::from_lower(centered / (rest_n - 1) as f64)?
            }
            RestCovariance::Global => global_cov.clone(),
        };
        let cov_err = if k >= 2 {
            numerics::mean_and_covariance(members.iter().copied(), dim)?.1
        } else {
            SymmetricMatrix::zeros(dim)
        };
        let ridge = cov_rest.add(&cov_err)?.default_ridge();
        let w = numerics::fisher_direction(&cov_rest, &cov_err, &mean_err, &mean_rest, ridge)?;
        let w: Vec<f64> = w.iter().copied().collect();
        let scores: Vec<f64> = members.iter().map(|z| dot(&w, z)).collect();
        let min = scores.iter().copied().fold(f64::INFINITY, f64::min);
        let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let c = if options.margin > 0.0 {
            min - options.margin * (max - min)
        } else {
            min
        };
        units.push(KnowledgeUnit {
            w,
            c,
            cluster_size: k,
            beta1: cluster.beta1,
            beta2: cluster.beta2,
        });
    }

    let meta = FitMeta {
        generator: crate::VERSION.to_string(),
        samples: total,
        errors: data.errors().len(),
        clusters: units.len(),
        data_seed: samples.origin().seed,
        variance_fraction: options.variance_fraction,
        cond_cap: options.cond_cap,
        beta_threshold: options.beta_threshold,
        margin: options.margin,
        rest_covariance: options.rest_covariance,
        retained_variance: pipeline.retained_variance(),
        cond_ridge_applied: pipeline.cond_ridge_applied(),
        labels: BTreeMap::new(),
    };
    Ok(CorrectorModel {
        pipeline,
        units,
        meta,
    })
}

impl CorrectorModel {
    pub fn input_dim(&self) -> usize {
        self.pipeline.input_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.pipeline.output_dim()
    }

    /// `(w_i, x)` composed with the pipeline: the unit's direction and offset in
    /// input coordinates, `ℓ_i(transform(x)) = (v, x) − (v, x̄)`.
    pub fn input_space_unit(&self, unit: usize) -> (Vec<f64>, f64) {
        let u = &self.units[unit];
        let p = &self.pipeline;
        let v = p.projection() * (p.whitener().as_matrix() * DVector::from_column_slice(&u.w));
        (v.iter().copied().collect(), u.c)
    }
}

/// Flags `x` when any unit's score `ℓ_i(transform(x)) − c_i` is nonnegative.
pub fn apply(model: &CorrectorModel, x: &[f64]) -> Result<Decision> {
    let z = model.pipeline.transform(x)?;
    Ok(decide(model, &z))
}

fn decide(model: &CorrectorModel, z: &[f64]) -> Decision {
    let scores: Vec<f64> = model.units.iter().map(|u| u.score(z) - u.c).collect();
    let fired_units: Vec<usize> = scores
        .iter()
        .enumerate()
        .filter(|(_, s)| **s >= 0.0)
        .map(|(i, _)| i)
        .collect();
    Decision {
        flagged: !fired_units.is_empty(),
        fired_units,
        scores,
    }
}

/// Applies to every row of `ps`.
pub fn apply_set(model: &CorrectorModel, ps: &PointSet) -> Result<Vec<Decision>> {
    let z = model.pipeline.transform_set(ps)?;
    Ok(z.rows().map(|row| decide(model, row)).collect())
}

/// Runs every stage in order and reports all of them, recording the first
/// stage that flagged `x`.
pub fn cascade_apply(models: &[CorrectorModel], x: &[f64]) -> Result<CascadeDecision> {
    if models.is_empty() {
        return Err(Error::param("cascade needs at least one model"));
    }
    let stages = models
        .iter()
        .map(|m| apply(m, x))
        .collect::<Result<Vec<_>>>()?;
    let first_stage = stages.iter().position(|d| d.flagged);
    Ok(CascadeDecision {
        stages,
        first_stage,
    })
}

/// Cascade over every row of `ps`.
pub fn cascade_apply_set(models: &[CorrectorModel], ps: &PointSet) -> Result<Vec<CascadeDecision>> {
    if models.is_empty() {
        return Err(Error::param("cascade needs at least one model"));
    }
    let per_stage = models
        .iter()
        .map(|m| apply_set(m, ps))
        .collect::<Result<Vec<_>>>()?;
    Ok((0..ps.len())
        .map(|i| {
            let stages: Vec<Decision> = per_stage.iter().map(|s| s[i].clone()).collect();
            let first_stage = stages.iter().position(|d| d.flagged);
            CascadeDecision {
                stages,
                first_stage,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::{sample, DistributionSpec};

    fn ball(n: usize, m: usize, seed: u64) -> PointSet {
        sample(&DistributionSpec::unit_ball(n), m, seed).unwrap()
    }

    #[test]
    fn labeled_data_validation() {
        let ps = ball(3, 10, 1);
        assert!(LabeledData::new(ps.clone(), vec![]).is_err());
        assert!(LabeledData::new(ps.clone(), vec![10]).is_err());
        assert!(LabeledData::new(ps.clone(), vec![1, 1]).is_err());
        assert!(LabeledData::new(ps, vec![9, 0]).is_ok());
    }

    #[test]
    fn single_error_in_high_dimension() {
        let ps = ball(100, 5000, 11);
        let data = LabeledData::new(ps.clone(), vec![1234]).unwrap();
        let model = fit(&data, &FitOptions::default()).unwrap();
        assert_eq!(model.units.len(), 1);
        let decisions = apply_set(&model, &ps).unwrap();
        assert!(decisions[1234].flagged);
        let false_flags = decisions
            .iter()
            .enumerate()
            .filter(|(i, d)| *i != 1234 && d.flagged)
            .count();
        assert!(false_flags as f64 <= 0.01 * 4999.0, "{false_flags}");
        let w = &model.units[0].w;
        assert!((dot(w, w).sqrt() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn identical_points_are_degenerate() {
        let ps = PointSet::from_rows(&[[0.5, 0.5, 0.5]; 10]).unwrap();
        let data = LabeledData::new(ps, vec![0]).unwrap();
        assert!(matches!(
            fit(&data, &FitOptions::default()),
            Err(Error::DegenerateData(_))
        ));
    }

    #[test]
    fn two_separated_clusters() {
        // Bulk: standard gaussian in R^6. Errors: two tight groups at ±10·e1.
        let dim = 6;
        let bulk = sample(&DistributionSpec::standard_gaussian(dim), 3000, 2).unwrap();
        let jitter = sample(&DistributionSpec::standard_gaussian(dim), 20, 3).unwrap();
        let mut rows: Vec<Vec<f64>> = bulk.rows().map(|r| r.to_vec()).collect();
        let mut errors = Vec::new();
        for (k, j) in jitter.rows().enumerate() {
            let sign = if k < 10 { 1.0 } else { -1.0 };
            let mut x: Vec<f64> = j.iter().map(|v| 0.05 * v).collect();
            x[0] += sign * 10.0;
            errors.push(rows.len());
            rows.push(x);
        }
        let ps = PointSet::from_rows(&rows).unwrap();
        let data = LabeledData::new(ps.clone(), errors.clone()).unwrap();
        let options = FitOptions {
            clusters: ClusterCount::AtMost(2),
            ..FitOptions::default()
        };
        let model = fit(&data, &options).unwrap();
        assert_eq!(model.units.len(), 2);
        assert!(model.units.iter().all(|u| u.cluster_size == 10));
        let decisions = apply_set(&model, &ps).unwrap();
        for (i, d) in decisions.iter().enumerate() {
            if i < 3000 {
                assert!(!d.flagged, "bulk point {i} flagged");
            } else {
                assert_eq!(d.fired_units.len(), 1, "error {i}");
            }
        }
        let pos: Vec<usize> = (3000..3010).map(|i| decisions[i].fired_units[0]).collect();
        let neg: Vec<usize> = (3010..3020).map(|i| decisions[i].fired_units[0]).collect();
        assert!(pos.iter().all(|&u| u == pos[0]));
        assert!(neg.iter().all(|&u| u == neg[0]));
        assert_ne!(pos[0], neg[0]);
    }

    #[test]
    fn zero_unit_model_never_flags() {
        let ps = ball(4, 50, 1);
        let data = LabeledData::new(ps.clone(), vec![0]).unwrap();
        let mut model = fit(&data, &FitOptions::default()).unwrap();
        model.units.clear();
        for row in ps.rows() {
            assert!(!apply(&model, row).unwrap().flagged);
        }
    }

    #[test]
    fn far_negative_point_is_not_fired() {
        let ps = ball(20, 500, 4);
        let data = LabeledData::new(ps, vec![7]).unwrap();
        let model = fit(&data, &FitOptions::default()).unwrap();
        let (v, _) = model.input_space_unit(0);
        let mean = model.pipeline.mean();
        let x: Vec<f64> = v
            .iter()
            .zip(mean.iter())
            .map(|(a, m)| m - 100.0 * a)
            .collect();
        let d = apply(&model, &x).unwrap();
        assert!(!d.flagged);
        assert!(d.scores[0] < -10.0);
    }

    #[test]
    fn input_space_unit_matches_score() {
        let ps = ball(10, 300, 5);
        let data = LabeledData::new(ps.clone(), vec![3, 4]).unwrap();
        let model = fit(&data, &FitOptions::default()).unwrap();
        let mean = model.pipeline.mean();
        for u in 0..model.units.len() {
            let (v, c) = model.input_space_unit(u);
            for row in ps.rows().take(20) {
                let direct: f64 = v
                    .iter()
                    .zip(row)
                    .zip(mean.iter())
                    .map(|((a, x), m)| a * (x - m))
                    .sum();
                let d = apply(&model, row).unwrap();
                assert!((direct - c - d.scores[u]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn margin_lowers_threshold() {
        let ps = ball(30, 800, 9);
        let data = LabeledData::new(ps, vec![1, 2, 3]).unwrap();
        let base = fit(
            &data,
            &FitOptions {
                beta_threshold: 0.01,
                clusters: ClusterCount::AtMost(1),
                ..FitOptions::default()
            },
        )
        .unwrap();
        let wide = fit(
            &data,
            &FitOptions {
                beta_threshold: 0.01,
                clusters: ClusterCount::AtMost(1),
                margin: 0.5,
                ..FitOptions::default()
            },
        )
        .unwrap();
        assert!(wide.units[0].c < base.units[0].c);
    }

    #[test]
    fn global_covariance_mode_runs() {
        let ps = ball(15, 400, 6);
        let data = LabeledData::new(ps.clone(), vec![0, 5, 9]).unwrap();
        let model = fit(
            &data,
            &FitOptions {
                rest_covariance: RestCovariance::Global,
                ..FitOptions::default()
            },
        )
        .unwrap();
        for &i in &[0, 5, 9] {
            assert!(apply(&model, ps.row(i)).unwrap().flagged);
        }
    }

    #[test]
    fn cascade_single_stage_equals_apply() {
        let ps = ball(10, 200, 3);
        let data = LabeledData::new(ps.clone(), vec![5]).unwrap();
        let model = fit(&data, &FitOptions::default()).unwrap();
        for row in ps.rows().take(30) {
            let c = cascade_apply(std::slice::from_ref(&model), row).unwrap();
            let a = apply(&model, row).unwrap();
            assert_eq!(c.stages[0], a);
            assert_eq!(c.flagged(), a.flagged);
        }
        assert!(cascade_apply(&[], ps.row(0)).is_err());
    }

    #[test]
    fn identity_covariance_data_gives_identity_whitener() {
        let n = 4;
        let reps = 12_500;
        let m = 2 * n * reps;
        let s = ((m - 1) as f64 / (2 * reps) as f64).sqrt();
        let mut rows = Vec::with_capacity(m);
        for _ in 0..reps {
            for i in 0..n {
                for sign in [1.0, -1.0] {
                    let mut x = vec![0.0; n];
                    x[i] = sign * s;
                    rows.push(x);
                }
            }
        }
        let ps = PointSet::from_rows(&rows).unwrap();
        let data = LabeledData::new(ps, vec![0]).unwrap();
        let p = fit_pipeline(&data, 1.0, 1e6).unwrap();
        assert_eq!(p.output_dim(), n);
        let w = p.whitener().as_matrix();
        assert!(numerics::frobenius(&(w - DMatrix::identity(n, n))) <= 1e-6);
    }
}

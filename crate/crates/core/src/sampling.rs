//! Seeded generators for the point ensembles the separation theorems are
//! stated over.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Beta, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::pointset::{Origin, PointSet};
use crate::rng;
use crate::{Error, Result};

const UNIFORM_MEAN: f64 = 0.5;
const UNIFORM_VARIANCE: f64 = 1.0 / 12.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DistributionKind {
    UnitBall,
    UnitSphere,
    UnitCubeProduct,
    Gaussian,
}

impl DistributionKind {
    pub fn as_str(self) -> &'static str {
        match self {
            DistributionKind::UnitBall => "unit-ball",
            DistributionKind::UnitSphere => "unit-sphere",
            DistributionKind::UnitCubeProduct => "unit-cube-product",
            DistributionKind::Gaussian => "gaussian",
        }
    }
}

impl fmt::Display for DistributionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DistributionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "unit-ball" | "ball" => Ok(DistributionKind::UnitBall),
            "unit-sphere" | "sphere" => Ok(DistributionKind::UnitSphere),
            "unit-cube-product" | "cube" => Ok(DistributionKind::UnitCubeProduct),
            "gaussian" | "gauss" => Ok(DistributionKind::Gaussian),
            other => Err(Error::param(format!("unknown distribution kind `{other}`"))),
        }
    }
}

/// A distribution in `R^n` to draw i.i.d. points from.
///
/// Cube-product coordinates are independent, supported on `[0, 1]`, with the
/// given means and variances. A coordinate with mean 1/2 and variance 1/12 is
/// drawn from `U(0, 1)`; any other feasible pair is realised by the Beta law
/// with matching moments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DistributionSpec {
    UnitBall {
        dim: usize,
    },
    UnitSphere {
        dim: usize,
    },
    UnitCubeProduct {
        means: Vec<f64>,
        variances: Vec<f64>,
    },
    Gaussian {
        mean: Vec<f64>,
        variances: Vec<f64>,
    },
}

impl DistributionSpec {
    pub fn unit_ball(dim: usize) -> Self {
        DistributionSpec::UnitBall { dim }
    }

    pub fn unit_sphere(dim: usize) -> Self {
        DistributionSpec::UnitSphere { dim }
    }

    /// All coordinates `U(0, 1)`.
    pub fn uniform_cube(dim: usize) -> Self {
        DistributionSpec::UnitCubeProduct {
            means: vec![UNIFORM_MEAN; dim],
            variances: vec![UNIFORM_VARIANCE; dim],
        }
    }

    pub fn standard_gaussian(dim: usize) -> Self {
        DistributionSpec::Gaussian {
            mean: vec![0.0; dim],
            variances: vec![1.0; dim],
        }
    }

    pub fn kind(&self) -> DistributionKind {
        match self {
            DistributionSpec::UnitBall { .. } => DistributionKind::UnitBall,
            DistributionSpec::UnitSphere { .. } => DistributionKind::UnitSphere,
            DistributionSpec::UnitCubeProduct { .. } => DistributionKind::UnitCubeProduct,
            DistributionSpec::Gaussian { .. } => DistributionKind::Gaussian,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            DistributionSpec::UnitBall { dim } | DistributionSpec::UnitSphere { dim } => *dim,
            DistributionSpec::UnitCubeProduct { means, .. } => means.len(),
            DistributionSpec::Gaussian { mean, .. } => mean.len(),
        }
    }

    /// Coordinate expectations, where they are known in closed form.
    pub fn expectation(&self) -> Vec<f64> {
        match self {
            DistributionSpec::UnitBall { dim } | DistributionSpec::UnitSphere { dim } => {
                vec![0.0; *dim]
            }
            DistributionSpec::UnitCubeProduct { means, .. } => means.clone(),
            DistributionSpec::Gaussian { mean, .. } => mean.clone(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim() == 0 {
            return Err(Error::param("dimension must be at least 1"));
        }
        match self {
            DistributionSpec::UnitBall { .. } | DistributionSpec::UnitSphere { .. } => Ok(()),
            DistributionSpec::UnitCubeProduct { means, variances } => {
                if means.len() != variances.len() {
                    return Err(Error::DimensionMismatch {
                        expected: means.len(),
                        got: variances.len(),
                    });
                }
                for (i, (&mu, &var)) in means.iter().zip(variances).enumerate() {
                    if !(mu > 0.0 && mu < 1.0) {
                        return Err(Error::param(format!(
                            "cube coordinate {i}: mean {mu} must lie in (0, 1)"
                        )));
                    }
                    if !(var > 0.0) {
                        return Err(Error::param(format!(
                            "cube coordinate {i}: variance {var} must be positive"
                        )));
                    }
                    // A law on [0,1] with mean mu has variance < mu(1-mu).
                    if var >= mu * (1.0 - mu) {
                        return Err(Error::param(format!(
                            "cube coordinate {i}: variance {var} infeasible on [0,1] with mean {mu}"
                        )));
                    }
                }
                Ok(())
            }
            DistributionSpec::Gaussian { mean, variances } => {
                if mean.len() != variances.len() {
                    return Err(Error::DimensionMismatch {
                        expected: mean.len(),
                        got: variances.len(),
                    });
                }
                if let Some((i, v)) = variances.iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
                    return Err(Error::param(format!(
                        "gaussian coordinate {i}: variance {v} must be positive"
                    )));
                }
                Ok(())
            }
        }
    }
}

enum CoordLaw {
    Uniform,
    Beta(Beta<f64>),
}

/// A validated spec prepared for repeated draws.
pub struct PointSampler {
    spec: DistributionSpec,
    coords: Vec<CoordLaw>,
    std_devs: Vec<f64>,
}

impl PointSampler {
    pub fn new(spec: &DistributionSpec) -> Result<Self> {
        spec.validate()?;
        let mut coords = Vec::new();
        let mut std_devs = Vec::new();
        match spec {
            DistributionSpec::UnitCubeProduct { means, variances } => {
                for (&mu, &var) in means.iter().zip(variances) {
                    if mu == UNIFORM_MEAN && var == UNIFORM_VARIANCE {
                        coords.push(CoordLaw::Uniform);
                    } else {
                        let k = mu * (1.0 - mu) / var - 1.0;
                        let beta = Beta::new(mu * k, (1.0 - mu) * k)
                            .map_err(|e| Error::param(format!("beta law: {e}")))?;
                        coords.push(CoordLaw::Beta(beta));
                    }
                }
            }
            DistributionSpec::Gaussian { variances, .. } => {
                std_devs = variances.iter().map(|v| v.sqrt()).collect();
            }
            _ => {}
        }
        Ok(PointSampler {
            spec: spec.clone(),
            coords,
            std_devs,
        })
    }

    pub fn spec(&self) -> &DistributionSpec {
        &self.spec
    }

    pub fn dim(&self) -> usize {
        self.spec.dim()
    }

    /// Writes one point into `out`, which must have length `dim()`.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.dim());
        match &self.spec {
            DistributionSpec::UnitSphere { .. } => unit_direction(rng, out),
            DistributionSpec::UnitBall { dim } => {
                unit_direction(rng, out);
                let u: f64 = rng.random();
                let radius = u.powf(1.0 / *dim as f64);
                out.iter_mut().for_each(|x| *x *= radius);
            }
            DistributionSpec::UnitCubeProduct { .. } => {
                for (x, law) in out.iter_mut().zip(&self.coords) {
                    *x = match law {
                        CoordLaw::Uniform => rng.random::<f64>(),
                        CoordLaw::Beta(b) => b.sample(rng),
                    };
                }
            }
            DistributionSpec::Gaussian { mean, .. } => {
                for ((x, mu), sd) in out.iter_mut().zip(mean).zip(&self.std_devs) {
                    let z: f64 = StandardNormal.sample(rng);
                    *x = mu + sd * z;
                }
            }
        }
    }

    /// Fills a row-major `count × dim` buffer.
    pub fn fill<R: Rng + ?Sized>(&self, rng: &mut R, buf: &mut [f64]) {
        for row in buf.chunks_exact_mut(self.dim()) {
            self.draw(rng, row);
        }
    }
}

/// Uniform direction on the unit sphere by normalising a standard gaussian.
fn unit_direction<R: Rng + ?Sized>(rng: &mut R, out: &mut [f64]) {
    loop {
        let mut sq = 0.0;
        for x in out.iter_mut() {
            let z: f64 = StandardNormal.sample(rng);
            *x = z;
            sq += z * z;
        }
        if sq > 0.0 {
            let inv = 1.0 / sq.sqrt();
            out.iter_mut().for_each(|x| *x *= inv);
            return;
        }
    }
}

/// Draws `count` i.i.d. points; a deterministic function of `(spec, count, seed)`.
pub fn sample(spec: &DistributionSpec, count: usize, seed: u64) -> Result<PointSet> {
    if count == 0 {
        return Err(Error::param("count must be at least 1"));
    }
    let sampler = PointSampler::new(spec)?;
    let dim = sampler.dim();
    let mut data = vec![0.0; count * dim];
    let mut rng = rng::seeded(seed);
    sampler.fill(&mut rng, &mut data);
    PointSet::with_origin(
        dim,
        data,
        Origin {
            kind: Some(spec.kind()),
            seed: Some(seed),
        },
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RadialStatistics {
    pub min_norm: f64,
    pub max_norm: f64,
    pub mean_square_norm: f64,
}

pub fn radial_statistics(ps: &PointSet) -> RadialStatistics {
    let mut min_norm = f64::INFINITY;
    let mut max_norm = 0.0f64;
    let mut sum_sq = 0.0;
    for row in ps.rows() {
        let sq: f64 = row.iter().map(|x| x * x).sum();
        let norm = sq.sqrt();
        min_norm = min_norm.min(norm);
        max_norm = max_norm.max(norm);
        sum_sq += sq;
    }
    RadialStatistics {
        min_norm,
        max_norm,
        mean_square_norm: sum_sq / ps.len() as f64,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn norms(ps: &PointSet) -> Vec<f64> {
        ps.rows()
            .map(|r| r.iter().map(|x| x * x).sum::<f64>().sqrt())
            .collect()
    }

    #[test]
    fn ball_in_one_dimension_is_symmetric() {
        let ps = sample(&DistributionSpec::unit_ball(1), 10_000, 7).unwrap();
        let mean = ps.rows().map(|r| r[0]).sum::<f64>() / 10_000.0;
        assert!(mean.abs() < 0.03, "mean {mean}");
        assert!(ps.rows().all(|r| r[0].abs() <= 1.0));
    }

    #[test]
    fn sphere_rows_have_unit_norm() {
        let ps = sample(&DistributionSpec::unit_sphere(3), 5, 1).unwrap();
        assert_eq!(ps.len(), 5);
        for n in norms(&ps) {
            assert!((n - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn uniform_cube_coordinate_variance() {
        let n = 100;
        let m = 20_000;
        let ps = sample(&DistributionSpec::uniform_cube(n), m, 3).unwrap();
        for j in 0..n {
            let mean = ps.rows().map(|r| r[j]).sum::<f64>() / m as f64;
            let var = ps.rows().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / (m - 1) as f64;
            assert!((var - 1.0 / 12.0).abs() < 0.005, "coord {j}: {var}");
        }
        assert!(ps.rows().flatten().all(|&x| (0.0..=1.0).contains(&x)));
    }

    #[test]
    fn beta_coordinates_match_moments() {
        let spec = DistributionSpec::UnitCubeProduct {
            means: vec![0.3, 0.7],
            variances: vec![0.01, 0.04],
        };
        let m = 50_000;
        let ps = sample(&spec, m, 11).unwrap();
        for (j, (mu, var)) in [(0.3, 0.01), (0.7, 0.04)].into_iter().enumerate() {
            let mean = ps.rows().map(|r| r[j]).sum::<f64>() / m as f64;
            let v = ps.rows().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / (m - 1) as f64;
            assert!((mean - mu).abs() < 0.005);
            assert!((v - var).abs() < 0.002);
        }
    }

    #[test]
    fn radial_statistics_of_origin() {
        let ps = PointSet::new(4, vec![0.0; 4]).unwrap();
        let s = radial_statistics(&ps);
        assert_eq!(
            (s.min_norm, s.max_norm, s.mean_square_norm),
            (0.0, 0.0, 0.0)
        );
    }

    #[test]
    fn radial_statistics_of_sphere() {
        let ps = sample(&DistributionSpec::unit_sphere(20), 100, 2).unwrap();
        let s = radial_statistics(&ps);
        assert!((s.min_norm - 1.0).abs() <= 1e-12);
        assert!((s.max_norm - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn ball_mass_concentrates_near_sphere() {
        // P(|x| > r) = 1 - r^n; 1 - 0.97^200 ~ 0.9977.
        let ps = sample(&DistributionSpec::unit_ball(200), 10_000, 5).unwrap();
        let frac = norms(&ps).iter().filter(|&&n| n > 0.97).count() as f64 / 10_000.0;
        assert!(frac >= 0.99, "{frac}");
    }

    #[test]
    fn ball_radius_law_is_uniform_in_norm_power() {
        let n = 30;
        let m = 10_000;
        let ps = sample(&DistributionSpec::unit_ball(n), m, 9).unwrap();
        let mut u: Vec<f64> = norms(&ps).iter().map(|r| r.powi(n as i32)).collect();
        u.sort_by(f64::total_cmp);
        let ks = u
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let lo = i as f64 / m as f64;
                let hi = (i + 1) as f64 / m as f64;
                (x - lo).abs().max((hi - x).abs())
            })
            .fold(0.0, f64::max);
        assert!(ks < 0.02, "KS statistic {ks}");
    }

    #[test]
    fn sphere_coordinates_are_centered() {
        let m = 4000;
        let ps = sample(&DistributionSpec::unit_sphere(10), m, 4).unwrap();
        for j in 0..10 {
            let mean = ps.rows().map(|r| r[j]).sum::<f64>() / m as f64;
            assert!(mean.abs() < 4.0 / (m as f64).sqrt());
        }
    }

    #[test]
    fn determinism() {
        let spec = DistributionSpec::standard_gaussian(7);
        let a = sample(&spec, 50, 99).unwrap();
        let b = sample(&spec, 50, 99).unwrap();
        assert_eq!(a.data(), b.data());
        let c = sample(&spec, 50, 100).unwrap();
        assert_ne!(a.data(), c.data());
    }

    #[test]
    fn invalid_specs_are_rejected() {
        assert!(sample(&DistributionSpec::unit_ball(0), 3, 0).is_err());
        assert!(sample(&DistributionSpec::unit_ball(3), 0, 0).is_err());
        let bad = DistributionSpec::Gaussian {
            mean: vec![0.0; 2],
            variances: vec![1.0, 0.0],
        };
        assert!(matches!(sample(&bad, 3, 0), Err(Error::Parameter(_))));
        let bad = DistributionSpec::UnitCubeProduct {
            means: vec![0.5],
            variances: vec![-1.0],
        };
        assert!(bad.validate().is_err());
    }
}

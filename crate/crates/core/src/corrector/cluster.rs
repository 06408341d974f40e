//! Partitioning error points into positively correlated clusters.
//!
//! Correlation is measured on the normalised scale: for a member `x` of a
//! cluster `C`, its average correlation is the mean cosine between `x` and
//! the other members. A cluster is admissible when every member's average
//! correlation is at least the threshold; its `beta2`/`beta1` are the
//! smallest/largest of these averages. Singletons are always admissible and
//! report `beta1 = beta2 = 1`.

use serde::Serialize;

/// How many clusters to form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ClusterCount {
    /// As many as the greedy agglomeration produces.
    #[default]
    Auto,
    /// At most this many; excess greedy clusters are merged by average
    /// linkage on cosine similarity.
    AtMost(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Cluster {
    /// Indices into the input slice, ascending.
    pub members: Vec<usize>,
    pub beta1: f64,
    pub beta2: f64,
}

impl Cluster {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

fn unit(v: &[f64]) -> Vec<f64> {
    let len = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if len > 0.0 {
        v.iter().map(|x| x / len).collect()
    } else {
        vec![0.0; v.len()]
    }
}

fn cosine_matrix(points: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let units: Vec<Vec<f64>> = points.iter().map(|p| unit(p)).collect();
    units
        .iter()
        .map(|a| {
            units
                .iter()
                .map(|b| a.iter().zip(b).map(|(x, y)| x * y).sum())
                .collect()
        })
        .collect()
}

/// Per-member average cosine to the other members.
fn member_averages(members: &[usize], cos: &[Vec<f64>]) -> Vec<f64> {
    if members.len() < 2 {
        return vec![1.0; members.len()];
    }
    let k = (members.len() - 1) as f64;
    members
        .iter()
        .map(|&i| {
            members
                .iter()
                .filter(|&&j| j != i)
                .map(|&j| cos[i][j])
                .sum::<f64>()
                / k
        })
        .collect()
}

fn finish(mut members: Vec<usize>, cos: &[Vec<f64>]) -> Cluster {
    members.sort_unstable();
    let avgs = member_averages(&members, cos);
    let beta1 = avgs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let beta2 = avgs.iter().copied().fold(f64::INFINITY, f64::min);
    Cluster {
        members,
        beta1,
        beta2,
    }
}

/// Greedy agglomeration in input order.
///
/// Each cluster starts from the first unassigned point. Unassigned points are
/// then scanned in order and added when their average cosine to the current
/// members is at least `beta_threshold` and, after adding, every member still
/// meets the threshold. Scanning repeats until a pass adds nothing.
pub fn cluster_errors(
    points: &[Vec<f64>],
    count: ClusterCount,
    beta_threshold: f64,
) -> Vec<Cluster> {
    let cos = cosine_matrix(points);
    let mut assigned = vec![false; points.len()];
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for seed in 0..points.len() {
        if assigned[seed] {
            continue;
        }
        assigned[seed] = true;
        let mut members = vec![seed];
        loop {
            let mut grew = false;
            for cand in 0..points.len() {
                if assigned[cand] {
                    continue;
                }
                let avg = members.iter().map(|&j| cos[cand][j]).sum::<f64>() / members.len() as f64;
                if avg < beta_threshold {
                    continue;
                }
                members.push(cand);
                if member_averages(&members, &cos)
                    .iter()
                    .all(|&a| a >= beta_threshold)
                {
                    assigned[cand] = true;
                    grew = true;
                } else {
                    members.pop();
                }
            }
            if !grew {
                break;
            }
        }
        groups.push(members);
    }

    if let ClusterCount::AtMost(p) = count {
        let p = p.max(1);
        while groups.len() > p {
            let mut best = (0, 1, f64::NEG_INFINITY);
            for a in 0..groups.len() {
                for b in a + 1..groups.len() {
                    let link = groups[a]
                        .iter()
                        .flat_map(|&i| groups[b].iter().map(move |&j| (i, j)))
                        .map(|(i, j)| cos[i][j])
                        .sum::<f64>()
                        / (groups[a].len() * groups[b].len()) as f64;
                    if link > best.2 {
                        best = (a, b, link);
                    }
                }
            }
            let merged = groups.remove(best.1);
            groups[best.0].extend(merged);
        }
    }

    groups.into_iter().map(|g| finish(g, &cos)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::{sample, DistributionSpec};

    #[test]
    fn single_point() {
        let c = cluster_errors(&[vec![0.3, 0.4]], ClusterCount::Auto, 0.5);
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].members, vec![0]);
    }

    #[test]
    fn identical_points_merge() {
        let v = vec![0.6, 0.8];
        let c = cluster_errors(&[v.clone(), v], ClusterCount::Auto, 0.5);
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].members, vec![0, 1]);
        assert!((c[0].beta1 - 1.0).abs() < 1e-15 && (c[0].beta2 - 1.0).abs() < 1e-15);
    }

    #[test]
    fn isotropic_points_stay_apart() {
        // Random directions in R^100 have cosines of order 0.1.
        let ps = sample(&DistributionSpec::unit_sphere(100), 10, 4).unwrap();
        let pts: Vec<Vec<f64>> = ps.rows().map(|r| r.to_vec()).collect();
        let c = cluster_errors(&pts, ClusterCount::Auto, 0.5);
        assert_eq!(c.len(), 10);
    }

    #[test]
    fn every_cluster_is_admissible() {
        let ps = sample(&DistributionSpec::unit_ball(3), 40, 2).unwrap();
        let pts: Vec<Vec<f64>> = ps.rows().map(|r| r.to_vec()).collect();
        let clusters = cluster_errors(&pts, ClusterCount::Auto, 0.5);
        let mut seen: Vec<usize> = clusters.iter().flat_map(|c| c.members.clone()).collect();
        seen.sort_unstable();
        assert_eq!(seen, (0..40).collect::<Vec<_>>());
        for c in clusters.iter().filter(|c| c.len() >= 2) {
            assert!(c.beta2 >= 0.5 && c.beta1 >= c.beta2);
        }
        assert!(clusters.len() < 40);
    }

    #[test]
    fn capped_count_merges() {
        let pts = vec![
            vec![1.0, 0.0],
            vec![0.0, 1.0],
            vec![-1.0, 0.0],
            vec![0.7, 0.7],
        ];
        let c = cluster_errors(&pts, ClusterCount::AtMost(2), 0.99);
        assert_eq!(c.len(), 2);
        let c = cluster_errors(&pts, ClusterCount::AtMost(10), 0.99);
        assert_eq!(c.len(), 4);
    }
}

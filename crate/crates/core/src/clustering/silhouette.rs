use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{dot, unit_rows, ClusteringError};
use crate::embedding::EmbeddingVector;

/// Per-sample silhouettes under cosine distance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SilhouetteResult {
    pub per_sample: Vec<f64>,
    /// Mean distance to the other members of the sample's own cluster.
    pub a_values: Vec<f64>,
    /// Smallest mean distance to the members of another cluster.
    pub b_values: Vec<f64>,
    pub mean: f64,
}

/// Silhouette coefficients `s(i) = (b(i) − a(i)) / max(a(i), b(i))`.
///
/// Samples alone in their cluster score 0, as do samples with
/// `a(i) = b(i) = 0`. Label values need not be contiguous.
pub fn silhouette(
    vectors: &[EmbeddingVector],
    labels: &[usize],
) -> Result<SilhouetteResult, ClusteringError> {
    if vectors.len() != labels.len() {
        return Err(ClusteringError::LabelCount {
            labels: labels.len(),
            samples: vectors.len(),
        });
    }
    let rows = unit_rows(vectors)?;
    compute(&rows, labels)
}

pub(crate) fn mean_for_rows(rows: &[Vec<f64>], labels: &[usize]) -> Result<f64, ClusteringError> {
    compute(rows, labels).map(|r| r.mean)
}

// For unit vectors the mean cosine distance from x to a set C is
// 1 − x·(Σ_C y)/|C|, so per-cluster sums make this O(N·k·D).
fn compute(rows: &[Vec<f64>], labels: &[usize]) -> Result<SilhouetteResult, ClusteringError> {
    let dim = rows.first().map(Vec::len).unwrap_or(0);
    let mut clusters: BTreeMap<usize, (usize, Vec<f64>)> = BTreeMap::new();
    for (r, &l) in rows.iter().zip(labels) {
        let entry = clusters.entry(l).or_insert_with(|| (0, vec![0.0; dim]));
        entry.0 += 1;
        for (s, x) in entry.1.iter_mut().zip(r) {
            *s += x;
        }
    }
    if clusters.len() < 2 {
        return Err(ClusteringError::SingleCluster);
    }

    let n = rows.len();
    let mut per_sample = Vec::with_capacity(n);
    let mut a_values = Vec::with_capacity(n);
    let mut b_values = Vec::with_capacity(n);
    for (r, &l) in rows.iter().zip(labels) {
        let (own_size, own_sum) = &clusters[&l];
        let a = if *own_size > 1 {
            let others = dot(r, own_sum) - dot(r, r);
            (1.0 - others / (*own_size - 1) as f64).max(0.0)
        } else {
            0.0
        };
        let b = clusters
            .iter()
            .filter(|(label, _)| **label != l)
            .map(|(_, (size, sum))| (1.0 - dot(r, sum) / *size as f64).max(0.0))
            .fold(f64::INFINITY, f64::min);
        let denom = a.max(b);
        let s = if *own_size < 2 || denom == 0.0 {
            0.0
        } else {
            (b - a) / denom
        };
        per_sample.push(s);
        a_values.push(a);
        b_values.push(b);
    }
    let mean = per_sample.iter().sum::<f64>() / n as f64;
    Ok(SilhouetteResult {
        per_sample,
        a_values,
        b_values,
        mean,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::cosine_distance;

    fn v(xs: &[f64]) -> EmbeddingVector {
        EmbeddingVector::new(xs.to_vec()).unwrap()
    }

    fn naive(vectors: &[EmbeddingVector], labels: &[usize]) -> Vec<f64> {
        let n = vectors.len();
        let mut out = Vec::new();
        for i in 0..n {
            let mut same = (0.0, 0usize);
            let mut other: BTreeMap<usize, (f64, usize)> = BTreeMap::new();
            for j in 0..n {
                if i == j {
                    continue;
                }
                let d = cosine_distance(&vectors[i], &vectors[j]).unwrap();
                if labels[j] == labels[i] {
                    same.0 += d;
                    same.1 += 1;
                } else {
                    let e = other.entry(labels[j]).or_insert((0.0, 0));
                    e.0 += d;
                    e.1 += 1;
                }
            }
            if same.1 == 0 {
                out.push(0.0);
                continue;
            }
            let a = same.0 / same.1 as f64;
            let b = other.values().map(|(s, c)| s / *c as f64).fold(f64::INFINITY, f64::min);
            out.push((b - a) / a.max(b));
        }
        out
    }

    #[test]
    fn tight_orthogonal_clusters_score_one() {
        let data = vec![
            v(&[1.0, 0.0]),
            v(&[1.0, 0.0]),
            v(&[0.0, 1.0]),
            v(&[0.0, 1.0]),
        ];
        let r = silhouette(&data, &[0, 0, 1, 1]).unwrap();
        assert!((r.mean - 1.0).abs() < 1e-9);
        assert!(r.a_values.iter().all(|a| a.abs() < 1e-12));
        assert!(r.b_values.iter().all(|b| (b - 1.0).abs() < 1e-12));
    }

    #[test]
    fn singleton_scores_zero() {
        let data = vec![v(&[1.0, 0.0]), v(&[0.9, 0.1]), v(&[0.0, 1.0])];
        let r = silhouette(&data, &[0, 0, 1]).unwrap();
        assert_eq!(r.per_sample[2], 0.0);
    }

    #[test]
    fn single_cluster_rejected() {
        let data = vec![v(&[1.0, 0.0]), v(&[0.0, 1.0])];
        assert_eq!(silhouette(&data, &[3, 3]).unwrap_err(), ClusteringError::SingleCluster);
        assert!(matches!(
            silhouette(&data, &[0]).unwrap_err(),
            ClusteringError::LabelCount { .. }
        ));
    }

    #[test]
    fn random_labels_on_one_blob_score_low() {
        let blob: Vec<_> = (0..8)
            .map(|i| v(&[1.0, 0.01 * (i as f64).sin(), 0.01 * (i as f64 * 1.3).cos()]))
            .collect();
        let labels = [0, 1, 0, 1, 1, 0, 1, 0];
        let r = silhouette(&blob, &labels).unwrap();
        let oracle = naive(&blob, &labels);
        let oracle_mean = oracle.iter().sum::<f64>() / oracle.len() as f64;
        assert!((r.mean - oracle_mean).abs() < 1e-9);
        assert!(r.mean <= 0.1, "mean {}", r.mean);
    }

    #[test]
    fn matches_naive_on_irregular_fixture() {
        let data = vec![
            v(&[1.0, 0.2, 0.0]),
            v(&[0.8, 0.1, 0.3]),
            v(&[0.1, 1.0, 0.2]),
            v(&[0.0, 0.9, -0.4]),
            v(&[0.3, 0.3, 1.0]),
            v(&[-0.2, 0.1, 0.7]),
            v(&[0.5, 0.5, 0.5]),
        ];
        let labels = [0, 0, 1, 1, 2, 2, 5];
        let r = silhouette(&data, &labels).unwrap();
        for (a, b) in r.per_sample.iter().zip(naive(&data, &labels)) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{dot, silhouette, unit_rows, ClusteringError, ClusteringResult};
use crate::embedding::EmbeddingVector;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LloydParams {
    pub max_iter: usize,
    /// Convergence threshold on the largest centroid displacement (cosine distance).
    pub tol: f64,
}

impl Default for LloydParams {
    fn default() -> Self {
        Self {
            max_iter: 300,
            tol: 1e-6,
        }
    }
}

/// Lloyd's k-means under cosine distance, seeded with cosine k-means++.
///
/// Centroids are the renormalized mean of their members. Iteration stops when
/// no assignment changes, the largest centroid shift drops below `tol`, or
/// `max_iter` is reached. Empty clusters are repaired by moving the point
/// farthest from its centroid.
pub fn lloyd_cosine(
    vectors: &[EmbeddingVector],
    k: usize,
    seed: u64,
    params: LloydParams,
) -> Result<ClusteringResult, ClusteringError> {
    if k < 2 {
        return Err(ClusteringError::KTooSmall(k));
    }
    let n = vectors.len();
    if k > n {
        return Err(ClusteringError::KTooLarge { k, n });
    }
    let rows = unit_rows(vectors)?;
    if rows.iter().all(|r| r == &rows[0]) {
        return Err(ClusteringError::Degenerate(k));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = plus_plus_init(&rows, k, &mut rng);
    let mut labels = assign(&rows, &centroids);
    let mut iterations = 0;
    let mut converged = false;

    while iterations < params.max_iter {
        repair_empty(&rows, &centroids, &mut labels, k);
        let updated = means(&rows, &labels, &centroids);
        let shift = centroids
            .iter()
            .zip(&updated)
            .map(|(a, b)| 1.0 - dot(a, b))
            .fold(0.0f64, f64::max);
        centroids = updated;
        iterations += 1;

        let next = assign(&rows, &centroids);
        let changes = next.iter().zip(&labels).filter(|(a, b)| a != b).count();
        labels = next;
        if changes == 0 || shift < params.tol {
            converged = true;
            break;
        }
    }

    repair_empty(&rows, &centroids, &mut labels, k);
    centroids = means(&rows, &labels, &centroids);
    let mean_silhouette = silhouette::mean_for_rows(&rows, &labels)?;

    Ok(ClusteringResult {
        k,
        labels,
        centroids,
        mean_silhouette,
        seed,
        iterations,
        converged,
    })
}

fn plus_plus_init(rows: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = rows.len();
    let mut chosen = vec![rng.gen_range(0..n)];
    let mut nearest: Vec<f64> = rows
        .iter()
        .map(|r| cosine_dist(r, &rows[chosen[0]]))
        .collect();
    while chosen.len() < k {
        let weights: Vec<f64> = nearest.iter().map(|d| d * d).collect();
        let total: f64 = weights.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.gen::<f64>() * total;
            let mut pick = None;
            for (i, w) in weights.iter().enumerate() {
                if *w <= 0.0 {
                    continue;
                }
                pick = Some(i);
                if target < *w {
                    break;
                }
                target -= w;
            }
            pick.expect("positive total weight has a positive entry")
        } else {
            // Every remaining point coincides with a chosen centroid.
            let free: Vec<usize> = (0..n).filter(|i| !chosen.contains(i)).collect();
            free[rng.gen_range(0..free.len())]
        };
        chosen.push(pick);
        for (d, r) in nearest.iter_mut().zip(rows) {
            *d = d.min(cosine_dist(r, &rows[pick]));
        }
    }
    chosen.into_iter().map(|i| rows[i].clone()).collect()
}

fn cosine_dist(a: &[f64], b: &[f64]) -> f64 {
    (1.0 - dot(a, b).clamp(-1.0, 1.0)).max(0.0)
}

// Nearest centroid by largest dot product; ties go to the lower index.
fn assign(rows: &[Vec<f64>], centroids: &[Vec<f64>]) -> Vec<usize> {
    rows.iter()
        .map(|r| {
            let mut best = 0;
            let mut best_sim = f64::NEG_INFINITY;
            for (c, centroid) in centroids.iter().enumerate() {
                let s = dot(r, centroid);
                if s > best_sim {
                    best_sim = s;
                    best = c;
                }
            }
            best
        })
        .collect()
}

fn repair_empty(rows: &[Vec<f64>], centroids: &[Vec<f64>], labels: &mut [usize], k: usize) {
    loop {
        let mut sizes = vec![0usize; k];
        for &l in labels.iter() {
            sizes[l] += 1;
        }
        let Some(empty) = sizes.iter().position(|&s| s == 0) else {
            return;
        };
        let mut far = None;
        let mut far_dist = f64::NEG_INFINITY;
        for (i, r) in rows.iter().enumerate() {
            if sizes[labels[i]] < 2 {
                continue;
            }
            let d = cosine_dist(r, &centroids[labels[i]]);
            if d > far_dist {
                far_dist = d;
                far = Some(i);
            }
        }
        let i = far.expect("k <= n leaves a cluster with spare members");
        labels[i] = empty;
    }
}

fn means(rows: &[Vec<f64>], labels: &[usize], previous: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let dim = rows[0].len();
    let mut sums = vec![vec![0.0; dim]; previous.len()];
    for (r, &l) in rows.iter().zip(labels) {
        for (s, x) in sums[l].iter_mut().zip(r) {
            *s += x;
        }
    }
    sums.into_iter()
        .zip(previous)
        .map(|(s, prev)| {
            let norm = dot(&s, &s).sqrt();
            if norm > 1e-12 {
                s.into_iter().map(|x| x / norm).collect()
            } else {
                // Members cancel out; keep the old direction.
                prev.clone()
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(xs: &[f64]) -> EmbeddingVector {
        EmbeddingVector::new(xs.to_vec()).unwrap()
    }

    fn antipodal_pairs() -> Vec<EmbeddingVector> {
        vec![
            v(&[1.0, 0.05, 0.0]),
            v(&[-1.0, 0.0, 0.05]),
            v(&[1.0, -0.05, 0.0]),
            v(&[-1.0, 0.0, -0.05]),
        ]
    }

    // Brute force over all 2-partitions, minimizing total within-cluster distance.
    fn best_two_partition(vectors: &[EmbeddingVector]) -> Vec<usize> {
        let rows = unit_rows(vectors).unwrap();
        let n = rows.len();
        let mut best = (f64::INFINITY, vec![]);
        for mask in 1..(1u32 << n) - 1 {
            let labels: Vec<usize> = (0..n).map(|i| ((mask >> i) & 1) as usize).collect();
            let mut cost = 0.0;
            for i in 0..n {
                for j in 0..n {
                    if labels[i] == labels[j] {
                        cost += cosine_dist(&rows[i], &rows[j]);
                    }
                }
            }
            if cost < best.0 - 1e-12 {
                best = (cost, labels);
            }
        }
        best.1
    }

    fn same_partition(a: &[usize], b: &[usize]) -> bool {
        a.len() == b.len()
            && (0..a.len()).all(|i| (0..a.len()).all(|j| (a[i] == a[j]) == (b[i] == b[j])))
    }

    #[test]
    fn antipodal_pairs_separate() {
        let data = antipodal_pairs();
        let oracle = best_two_partition(&data);
        for seed in 0..10 {
            let r = lloyd_cosine(&data, 2, seed, LloydParams::default()).unwrap();
            assert!(same_partition(&r.labels, &oracle), "seed {seed}: {:?}", r.labels);
            assert!(r.converged);
        }
    }

    #[test]
    fn n_equals_k_gives_singletons() {
        let data = vec![v(&[1.0, 0.0, 0.0]), v(&[0.0, 1.0, 0.0]), v(&[0.0, 0.0, 1.0])];
        let r = lloyd_cosine(&data, 3, 7, LloydParams::default()).unwrap();
        assert_eq!(r.cluster_sizes(), vec![1, 1, 1]);
        for (i, &l) in r.labels.iter().enumerate() {
            assert!((dot(&r.centroids[l], data[i].as_slice()) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn precondition_errors() {
        let data = vec![v(&[1.0, 0.0]), v(&[0.0, 1.0]), v(&[1.0, 1.0])];
        assert_eq!(
            lloyd_cosine(&data, 5, 0, LloydParams::default()).unwrap_err(),
            ClusteringError::KTooLarge { k: 5, n: 3 }
        );
        assert_eq!(
            lloyd_cosine(&data, 1, 0, LloydParams::default()).unwrap_err(),
            ClusteringError::KTooSmall(1)
        );
        let same = vec![v(&[1.0, 1.0]), v(&[2.0, 2.0]), v(&[1.0, 1.0])];
        assert_eq!(
            lloyd_cosine(&same, 2, 0, LloydParams::default()).unwrap_err(),
            ClusteringError::Degenerate(2)
        );
    }

    #[test]
    fn duplicates_do_not_leave_empty_clusters() {
        let mut data = vec![v(&[1.0, 0.0]); 5];
        data.push(v(&[0.0, 1.0]));
        let r = lloyd_cosine(&data, 4, 3, LloydParams::default()).unwrap();
        assert!(r.cluster_sizes().iter().all(|&s| s >= 1));
    }

    #[test]
    fn deterministic_for_seed() {
        let data: Vec<_> = (0..20)
            .map(|i| {
                let t = i as f64 * 0.7;
                v(&[t.cos(), t.sin(), (t * 0.3).cos()])
            })
            .collect();
        let a = lloyd_cosine(&data, 4, 11, LloydParams::default()).unwrap();
        let b = lloyd_cosine(&data, 4, 11, LloydParams::default()).unwrap();
        assert_eq!(a, b);
    }
}

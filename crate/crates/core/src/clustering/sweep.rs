use std::cmp::Ordering;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{lloyd_cosine, ClusteringError, ClusteringResult, LloydParams};
use crate::embedding::EmbeddingVector;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepParams {
    pub k_min: usize,
    pub k_max: usize,
    pub restarts: usize,
    pub seed: u64,
    pub top: usize,
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for SweepParams {
    fn default() -> Self {
        Self {
            k_min: 3,
            k_max: 12,
            restarts: 10,
            seed: 0,
            top: 5,
            max_iter: 300,
            tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    /// At most `top` runs, best silhouette first.
    pub runs: Vec<ClusteringResult>,
    /// Upper end of the k range actually swept.
    pub k_max_used: usize,
    pub warnings: Vec<String>,
}

/// Tries every k in `[k_min, k_max]` with `restarts` seeded runs each and
/// keeps the best run per k, then returns the `top` runs overall.
///
/// Restart `r` uses seed `seed + r`. Ordering is by silhouette descending,
/// then smaller k, then smaller seed, independent of thread scheduling.
/// A `k_max` that is not below the sample count is lowered to `N − 1`.
pub fn sweep_k(
    vectors: &[EmbeddingVector],
    params: SweepParams,
) -> Result<SweepResult, ClusteringError> {
    let n = vectors.len();
    if params.k_min < 2 {
        return Err(ClusteringError::KTooSmall(params.k_min));
    }
    if params.k_min > params.k_max {
        return Err(ClusteringError::InvalidParams(format!(
            "k_min {} > k_max {}",
            params.k_min, params.k_max
        )));
    }
    if params.restarts == 0 || params.top == 0 {
        return Err(ClusteringError::InvalidParams(
            "restarts and top must be at least 1".into(),
        ));
    }
    if n < params.k_min {
        return Err(ClusteringError::CorpusTooSmall {
            n,
            k_min: params.k_min,
        });
    }

    let mut warnings = Vec::new();
    let mut k_max = params.k_max;
    if k_max >= n {
        k_max = (n - 1).max(params.k_min);
        let msg = format!(
            "k_max {} truncated to {k_max} for {n} samples",
            params.k_max
        );
        tracing::warn!("{msg}");
        warnings.push(msg);
    }

    let lloyd = LloydParams {
        max_iter: params.max_iter,
        tol: params.tol,
    };
    let jobs: Vec<(usize, u64)> = (params.k_min..=k_max)
        .flat_map(|k| (0..params.restarts as u64).map(move |r| (k, params.seed.wrapping_add(r))))
        .collect();
    let fitted: Vec<ClusteringResult> = jobs
        .par_iter()
        .map(|&(k, seed)| lloyd_cosine(vectors, k, seed, lloyd))
        .collect::<Result<_, _>>()?;

    let mut best_per_k: Vec<ClusteringResult> = Vec::new();
    for run in fitted {
        match best_per_k.iter_mut().find(|r| r.k == run.k) {
            Some(best) => {
                if rank(&run, best) == Ordering::Less {
                    *best = run;
                }
            }
            None => best_per_k.push(run),
        }
    }
    best_per_k.sort_by(rank);
    best_per_k.truncate(params.top);

    Ok(SweepResult {
        runs: best_per_k,
        k_max_used: k_max,
        warnings,
    })
}

fn rank(a: &ClusteringResult, b: &ClusteringResult) -> Ordering {
    b.mean_silhouette
        .total_cmp(&a.mean_silhouette)
        .then(a.k.cmp(&b.k))
        .then(a.seed.cmp(&b.seed))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn blob(axis: usize, dim: usize, count: usize, jitter: f64) -> Vec<EmbeddingVector> {
        (0..count)
            .map(|i| {
                let mut xs = vec![0.0; dim];
                xs[axis] = 1.0;
                xs[(axis + 1) % dim] = jitter * (i as f64 + 1.0);
                EmbeddingVector::new(xs).unwrap()
            })
            .collect()
    }

    fn three_blobs() -> Vec<EmbeddingVector> {
        let mut data = blob(0, 6, 4, 0.01);
        data.extend(blob(2, 6, 4, 0.01));
        data.extend(blob(4, 6, 4, 0.01));
        data
    }

    #[test]
    fn three_blobs_pick_k3() {
        let params = SweepParams {
            k_min: 3,
            k_max: 5,
            restarts: 8,
            ..Default::default()
        };
        let out = sweep_k(&three_blobs(), params).unwrap();
        assert_eq!(out.runs[0].k, 3);
        assert!(out.runs[0].mean_silhouette > 0.99);
        assert!(out.warnings.is_empty());
    }

    #[test]
    fn default_top_five_sorted() {
        let mut data = Vec::new();
        for axis in 0..8 {
            data.extend(blob(axis, 8, 3, 0.05));
        }
        let out = sweep_k(&data, SweepParams::default()).unwrap();
        assert_eq!(out.runs.len(), 5);
        for w in out.runs.windows(2) {
            assert!(w[0].mean_silhouette >= w[1].mean_silhouette);
        }
        assert!(out.runs.iter().all(|r| (3..=12).contains(&r.k)));
    }

    #[test]
    fn small_corpus_truncates_k_max() {
        let mut data = blob(0, 5, 5, 0.02);
        data.extend(blob(3, 5, 5, 0.02));
        let out = sweep_k(&data, SweepParams::default()).unwrap();
        assert_eq!(out.k_max_used, 9);
        assert_eq!(out.warnings.len(), 1);
        assert!(out.runs.iter().all(|r| r.k <= 9));
    }

    #[test]
    fn too_small_corpus_errors() {
        let data = blob(0, 3, 2, 0.1);
        assert_eq!(
            sweep_k(&data, SweepParams::default()).unwrap_err(),
            ClusteringError::CorpusTooSmall { n: 2, k_min: 3 }
        );
    }

    #[test]
    fn reruns_are_identical() {
        let data = three_blobs();
        let params = SweepParams {
            restarts: 4,
            ..Default::default()
        };
        assert_eq!(sweep_k(&data, params).unwrap(), sweep_k(&data, params).unwrap());
    }
}

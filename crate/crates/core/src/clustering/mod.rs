//! Cosine-distance k-means, silhouette scoring and the k-sweep used to pick
//! the clusterings that feed the diversity metric.

mod document;
mod kmeans;
mod silhouette;
mod sweep;

pub use document::{cluster_corpus, ClusteringDocument, GroupClustering};
pub use kmeans::{lloyd_cosine, LloydParams};
pub use silhouette::{silhouette, SilhouetteResult};
pub use sweep::{sweep_k, SweepParams, SweepResult};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::embedding::EmbeddingVector;

#[derive(Debug, Error, PartialEq)]
pub enum ClusteringError {
    #[error("k must be at least 2, got {0}")]
    KTooSmall(usize),
    #[error("k = {k} exceeds the {n} available samples")]
    KTooLarge { k: usize, n: usize },
    #[error("all vectors are identical; cannot form {0} clusters")]
    Degenerate(usize),
    #[error("silhouette needs at least two clusters")]
    SingleCluster,
    #[error("labels length {labels} does not match {samples} samples")]
    LabelCount { labels: usize, samples: usize },
    #[error("vectors have inconsistent dimensions")]
    DimensionMismatch,
    #[error("zero-norm vector at position {0}")]
    ZeroNorm(usize),
    #[error("corpus of {n} samples is smaller than k_min = {k_min}")]
    CorpusTooSmall { n: usize, k_min: usize },
    #[error("invalid sweep parameters: {0}")]
    InvalidParams(String),
}

/// One fitted clustering.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusteringResult {
    pub k: usize,
    pub labels: Vec<usize>,
    pub centroids: Vec<Vec<f64>>,
    pub mean_silhouette: f64,
    pub seed: u64,
    pub iterations: usize,
    pub converged: bool,
}

impl ClusteringResult {
    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &l in &self.labels {
            sizes[l] += 1;
        }
        sizes
    }
}

/// Unit-normalized rows of equal dimension.
pub(crate) fn unit_rows(vectors: &[EmbeddingVector]) -> Result<Vec<Vec<f64>>, ClusteringError> {
    let dim = vectors.first().map(EmbeddingVector::dim).unwrap_or(0);
    vectors
        .iter()
        .enumerate()
        .map(|(i, v)| {
            if v.dim() != dim {
                return Err(ClusteringError::DimensionMismatch);
            }
            let norm = v.norm();
            if norm == 0.0 {
                return Err(ClusteringError::ZeroNorm(i));
            }
            Ok(v.as_slice().iter().map(|x| x / norm).collect())
        })
        .collect()
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

//! Cosine vector math and batch embedding of idea texts.

mod cache;
mod provider;
mod vector;

pub use cache::{embed_corpus, CacheEntry, EmbedOptions, EmbedStats, EmbeddingCache, RetryPolicy};
pub use provider::{EmbeddingProvider, HttpEmbeddingProvider, MockEmbeddingProvider, ProviderError};
pub use vector::{cosine_distance, cosine_similarity, unit_normalize, EmbeddingVector};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_DIM: usize = 3584;

#[derive(Debug, Error)]
pub enum EmbeddingError {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("zero-norm vector")]
    ZeroNorm,
    #[error("non-finite entry in vector")]
    NonFinite,
    #[error("empty vector")]
    Empty,
    #[error("dimension drift: cache holds {cached}-dimensional vectors, provider returned {provided}")]
    DimensionDrift { cached: usize, provided: usize },
    #[error("provider failed for `{id}` after {attempts} attempts: {source}")]
    Provider {
        id: String,
        attempts: u32,
        #[source]
        source: ProviderError,
    },
    #[error("cache line {line}: {message}")]
    CacheFormat { line: usize, message: String },
    #[error("no vector for record `{0}`")]
    MissingVector(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// Vectors addressed by record id, all of one dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingSet {
    pub dim: usize,
    pub provider_id: String,
    pub model_id: String,
    pub vectors: BTreeMap<String, EmbeddingVector>,
}

impl EmbeddingSet {
    pub fn new(dim: usize, provider_id: impl Into<String>, model_id: impl Into<String>) -> Self {
        Self {
            dim,
            provider_id: provider_id.into(),
            model_id: model_id.into(),
            vectors: BTreeMap::new(),
        }
    }

    pub fn insert(&mut self, id: impl Into<String>, v: EmbeddingVector) -> Result<(), EmbeddingError> {
        if v.dim() != self.dim {
            return Err(EmbeddingError::DimensionMismatch {
                left: self.dim,
                right: v.dim(),
            });
        }
        self.vectors.insert(id.into(), v);
        Ok(())
    }

    pub fn get(&self, id: &str) -> Option<&EmbeddingVector> {
        self.vectors.get(id)
    }

    /// Vectors for `ids` in the given order.
    pub fn select(&self, ids: &[String]) -> Result<Vec<EmbeddingVector>, EmbeddingError> {
        ids.iter()
            .map(|id| {
                self.vectors
                    .get(id)
                    .cloned()
                    .ok_or_else(|| EmbeddingError::MissingVector(id.clone()))
            })
            .collect()
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }
}

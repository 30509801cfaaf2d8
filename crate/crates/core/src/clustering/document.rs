use serde::{Deserialize, Serialize};

use super::{sweep_k, ClusteringResult, SweepParams};
use crate::corpus::{CorpusIndex, Group};
use crate::embedding::EmbeddingSet;
use crate::Error;

/// Retained clusterings of one group, fitted on all of its records pooled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupClustering {
    pub group: Group,
    /// Record ids in the order the `labels` of every run refer to.
    pub sample_ids: Vec<String>,
    pub runs: Vec<ClusteringResult>,
    pub k_max_used: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

/// The clustering artifact: sweep parameters plus one entry per group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusteringDocument {
    pub params: SweepParams,
    pub embedding_provider: String,
    pub embedding_model: String,
    pub groups: Vec<GroupClustering>,
}

/// Runs [`sweep_k`] on the pooled vectors of every group in the corpus.
pub fn cluster_corpus(
    index: &CorpusIndex,
    embeddings: &EmbeddingSet,
    params: SweepParams,
) -> Result<ClusteringDocument, Error> {
    let mut groups = Vec::new();
    for group in index.groups() {
        let sample_ids = index.group_ids(group);
        let vectors = embeddings.select(&sample_ids)?;
        let sweep = sweep_k(&vectors, params)?;
        groups.push(GroupClustering {
            group,
            sample_ids,
            runs: sweep.runs,
            k_max_used: sweep.k_max_used,
            warnings: sweep.warnings,
        });
    }
    Ok(ClusteringDocument {
        params,
        embedding_provider: embeddings.provider_id.clone(),
        embedding_model: embeddings.model_id.clone(),
        groups,
    })
}

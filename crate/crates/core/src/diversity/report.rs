use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::entropy::occupancy_with;
use super::{shannon_entropy, DiversityError};
use crate::clustering::GroupClustering;
use crate::corpus::{CorpusIndex, Group, IdeaClass, IdeaRecord};

/// How records are pooled into report cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Granularity {
    /// One cell per (group, class, participants), pooling models.
    Class,
    /// One cell per (group, class, model, participants).
    #[default]
    ClassModel,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReportOptions {
    pub base: f64,
    pub granularity: Granularity,
    pub per_topic: bool,
}

impl Default for ReportOptions {
    fn default() -> Self {
        Self {
            base: 2.0,
            granularity: Granularity::ClassModel,
            per_topic: false,
        }
    }
}

pub const POOLED_MODEL: &str = "*";

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
struct CellId {
    group: Group,
    class: IdeaClass,
    model: String,
    participants: u32,
}

impl CellId {
    fn of(record: &IdeaRecord, granularity: Granularity) -> Self {
        let c = &record.condition;
        Self {
            group: c.group,
            class: c.class,
            model: match granularity {
                Granularity::Class => POOLED_MODEL.to_string(),
                Granularity::ClassModel => c.model.clone(),
            },
            participants: c.participants,
        }
    }
}

/// Entropy statistics of one cell across the retained clusterings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellStats {
    pub group: Group,
    pub class: IdeaClass,
    /// Model id, or `*` when models are pooled.
    pub model: String,
    pub participants: u32,
    pub n: usize,
    pub entropy_mean: f64,
    pub entropy_sd: f64,
    /// One entropy per retained clustering, in clustering rank order.
    pub per_clustering: Vec<f64>,
    /// Set when the cell has fewer than two records.
    pub low_confidence: bool,
    /// Topic id to entropy averaged over the retained clusterings.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_topic: Option<BTreeMap<String, f64>>,
}

impl CellStats {
    /// `group/class/model/participants`, the key used on the command line.
    pub fn key(&self) -> String {
        format!("{}/{}/{}/{}", self.group, self.class, self.model, self.participants)
    }
}

impl fmt::Display for CellStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.key())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusteringMeta {
    pub group: Group,
    pub rank: usize,
    pub k: usize,
    pub silhouette: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiversityReport {
    pub base: f64,
    pub granularity: Granularity,
    pub per_topic: bool,
    pub clusterings: Vec<ClusteringMeta>,
    /// Sorted by (group, class, model, participants).
    pub cells: Vec<CellStats>,
}

impl DiversityReport {
    pub fn cell(&self, key: &str) -> Option<&CellStats> {
        self.cells.iter().find(|c| c.key() == key)
    }

    pub fn clusterings_for(&self, group: Group) -> impl Iterator<Item = &ClusteringMeta> {
        self.clusterings.iter().filter(move |m| m.group == group)
    }
}

/// Maps every group's retained clusterings back onto its cells and computes
/// the occupancy entropy per cell and clustering.
pub fn diversity_report(
    index: &CorpusIndex,
    clusterings: &[GroupClustering],
    options: ReportOptions,
) -> Result<DiversityReport, DiversityError> {
    let mut cells = Vec::new();
    let mut metas = Vec::new();

    for group in index.groups() {
        let gc = clusterings
            .iter()
            .find(|g| g.group == group)
            .ok_or_else(|| DiversityError::MissingClustering(group.to_string()))?;
        let position: HashMap<&str, usize> = gc
            .sample_ids
            .iter()
            .enumerate()
            .map(|(i, id)| (id.as_str(), i))
            .collect();
        for run in &gc.runs {
            if run.labels.len() != gc.sample_ids.len() {
                return Err(DiversityError::LabelCount {
                    labels: run.labels.len(),
                    samples: gc.sample_ids.len(),
                });
            }
        }
        metas.extend(gc.runs.iter().enumerate().map(|(rank, run)| ClusteringMeta {
            group,
            rank,
            k: run.k,
            silhouette: run.mean_silhouette,
            seed: run.seed,
        }));

        let mut members: BTreeMap<CellId, Vec<&IdeaRecord>> = BTreeMap::new();
        for record in index.records().iter().filter(|r| r.condition.group == group) {
            members
                .entry(CellId::of(record, options.granularity))
                .or_default()
                .push(record);
        }

        for (cell, records) in members {
            let ids: Vec<String> = records.iter().map(|r| r.id.clone()).collect();
            let per_clustering = gc
                .runs
                .iter()
                .map(|run| {
                    let dist = occupancy_with(&run.labels, &ids, &position)?;
                    Ok(shannon_entropy(&dist, options.base)?.value)
                })
                .collect::<Result<Vec<f64>, DiversityError>>()?;

            let per_topic = if options.per_topic {
                let mut by_topic: BTreeMap<&str, Vec<String>> = BTreeMap::new();
                for r in &records {
                    by_topic.entry(r.topic_id.as_str()).or_default().push(r.id.clone());
                }
                let mut out = BTreeMap::new();
                for (topic, topic_ids) in by_topic {
                    let values = gc
                        .runs
                        .iter()
                        .map(|run| {
                            let dist = occupancy_with(&run.labels, &topic_ids, &position)?;
                            Ok(shannon_entropy(&dist, options.base)?.value)
                        })
                        .collect::<Result<Vec<f64>, DiversityError>>()?;
                    out.insert(topic.to_string(), mean_sd(&values).0);
                }
                Some(out)
            } else {
                None
            };

            let (entropy_mean, entropy_sd) = mean_sd(&per_clustering);
            cells.push(CellStats {
                group: cell.group,
                class: cell.class,
                model: cell.model,
                participants: cell.participants,
                n: ids.len(),
                entropy_mean,
                entropy_sd,
                per_clustering,
                low_confidence: ids.len() < 2,
                per_topic,
            });
        }
    }

    Ok(DiversityReport {
        base: options.base,
        granularity: options.granularity,
        per_topic: options.per_topic,
        clusterings: metas,
        cells,
    })
}

/// Mean and sample standard deviation (0 for fewer than two values).
pub(crate) fn mean_sd(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

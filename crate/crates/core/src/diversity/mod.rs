//! K-means/entropy diversity: cluster occupancy of each condition cell and
//! its Shannon entropy, aggregated over the retained clusterings.

mod compare;
mod entropy;
mod report;

pub use compare::{compare_conditions, compare_samples, relative_improvement, ComparisonResult, Improvement, TestKind};
pub use entropy::{occupancy_distribution, shannon_entropy, EntropyValue, LabelDistribution};
pub use report::{
    diversity_report, CellStats, ClusteringMeta, DiversityReport, Granularity, ReportOptions,
};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum DiversityError {
    #[error("cell has no members")]
    EmptyCell,
    #[error("record `{0}` is not part of the clustering")]
    UnknownSample(String),
    #[error("invalid logarithm base {0}")]
    InvalidBase(f64),
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("no clustering supplied for group {0}")]
    MissingClustering(String),
    #[error("labels ({labels}) and sample ids ({samples}) differ in length")]
    LabelCount { labels: usize, samples: usize },
    #[error("unknown cell `{0}`")]
    UnknownCell(String),
    #[error("report has no per-topic entropies; rebuild it with per-topic mode on")]
    NoPerTopic,
    #[error("need at least 2 samples per cell, got {n_a} and {n_b}")]
    InsufficientSamples { n_a: usize, n_b: usize },
}

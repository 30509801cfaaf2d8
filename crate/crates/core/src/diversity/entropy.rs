use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::DiversityError;

const SUM_TOLERANCE: f64 = 1e-9;

/// Empirical distribution over cluster indices. `probabilities[i]` is the
/// mass of cluster `support[i]`; only clusters with mass are listed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelDistribution {
    pub probabilities: Vec<f64>,
    pub support: Vec<usize>,
    pub n: usize,
}

impl LabelDistribution {
    /// Wraps an explicit probability vector; outcome `i` is labelled `i`.
    pub fn from_probabilities(probabilities: Vec<f64>) -> Result<Self, DiversityError> {
        if probabilities.is_empty() {
            return Err(DiversityError::InvalidDistribution("no outcomes".into()));
        }
        if probabilities.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(DiversityError::InvalidDistribution(
                "probabilities must be finite and non-negative".into(),
            ));
        }
        let sum: f64 = probabilities.iter().sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(DiversityError::InvalidDistribution(format!(
                "probabilities sum to {sum}"
            )));
        }
        let support = (0..probabilities.len()).collect();
        Ok(Self {
            probabilities,
            support,
            n: 0,
        })
    }

    pub fn from_counts(counts: &BTreeMap<usize, usize>) -> Result<Self, DiversityError> {
        let n: usize = counts.values().sum();
        if n == 0 {
            return Err(DiversityError::EmptyCell);
        }
        let (support, probabilities) = counts
            .iter()
            .filter(|(_, &c)| c > 0)
            .map(|(&label, &c)| (label, c as f64 / n as f64))
            .unzip();
        Ok(Self {
            probabilities,
            support,
            n,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntropyValue {
    pub value: f64,
    pub base: f64,
}

/// Share of a cell's members in each cluster of a group-level clustering.
pub fn occupancy_distribution(
    labels: &[usize],
    cell_member_ids: &[String],
    sample_ids: &[String],
) -> Result<LabelDistribution, DiversityError> {
    if labels.len() != sample_ids.len() {
        return Err(DiversityError::LabelCount {
            labels: labels.len(),
            samples: sample_ids.len(),
        });
    }
    let position: HashMap<&str, usize> = sample_ids
        .iter()
        .enumerate()
        .map(|(i, id)| (id.as_str(), i))
        .collect();
    occupancy_with(labels, cell_member_ids, &position)
}

pub(crate) fn occupancy_with(
    labels: &[usize],
    cell_member_ids: &[String],
    position: &HashMap<&str, usize>,
) -> Result<LabelDistribution, DiversityError> {
    if cell_member_ids.is_empty() {
        return Err(DiversityError::EmptyCell);
    }
    let mut counts = BTreeMap::new();
    for id in cell_member_ids {
        let i = position
            .get(id.as_str())
            .ok_or_else(|| DiversityError::UnknownSample(id.clone()))?;
        *counts.entry(labels[*i]).or_insert(0) += 1;
    }
    LabelDistribution::from_counts(&counts)
}

/// `H = −Σ p log_b p`, with `0 · log 0 = 0`.
pub fn shannon_entropy(
    dist: &LabelDistribution,
    base: f64,
) -> Result<EntropyValue, DiversityError> {
    if !base.is_finite() || base <= 1.0 {
        return Err(DiversityError::InvalidBase(base));
    }
    let sum: f64 = dist.probabilities.iter().sum();
    if (sum - 1.0).abs() > SUM_TOLERANCE || dist.probabilities.iter().any(|p| *p < 0.0) {
        return Err(DiversityError::InvalidDistribution(format!(
            "probabilities sum to {sum}"
        )));
    }
    let log = |p: f64| if base == 2.0 { p.log2() } else { p.ln() / base.ln() };
    let value = -dist
        .probabilities
        .iter()
        .filter(|p| **p > 0.0)
        .map(|&p| p * log(p))
        .sum::<f64>();
    Ok(EntropyValue {
        value: value.max(0.0),
        base,
    })
}

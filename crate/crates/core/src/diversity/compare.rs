use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal, StudentsT};

use super::report::mean_sd;
use super::{DiversityError, DiversityReport};

/// Percentage change of a treatment entropy over a baseline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Improvement {
    Percent(f64),
    /// Baseline entropy was zero.
    Infinite,
}

impl std::fmt::Display for Improvement {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Improvement::Percent(p) => write!(f, "{p:.1}"),
            Improvement::Infinite => f.write_str("inf"),
        }
    }
}

/// `100 · (treatment − baseline) / baseline`.
pub fn relative_improvement(h_treatment: f64, h_baseline: f64) -> Improvement {
    if h_baseline == 0.0 {
        return Improvement::Infinite;
    }
    Improvement::Percent(100.0 * (h_treatment - h_baseline) / h_baseline)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestKind {
    #[default]
    Welch,
    MannWhitney,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonResult {
    pub test: TestKind,
    pub statistic: f64,
    pub p_value: f64,
    pub n_a: usize,
    pub n_b: usize,
}

/// Two-sided test over the per-topic entropies of two cells.
pub fn compare_conditions(
    report: &DiversityReport,
    cell_a: &str,
    cell_b: &str,
    test: TestKind,
) -> Result<ComparisonResult, DiversityError> {
    let samples = |key: &str| -> Result<Vec<f64>, DiversityError> {
        let cell = report
            .cell(key)
            .ok_or_else(|| DiversityError::UnknownCell(key.to_string()))?;
        let topics = cell.per_topic.as_ref().ok_or(DiversityError::NoPerTopic)?;
        Ok(topics.values().copied().collect())
    };
    let a = samples(cell_a)?;
    let b = samples(cell_b)?;
    compare_samples(&a, &b, test)
}

pub fn compare_samples(a: &[f64], b: &[f64], test: TestKind) -> Result<ComparisonResult, DiversityError> {
    let (n_a, n_b) = (a.len(), b.len());
    if n_a < 2 || n_b < 2 {
        return Err(DiversityError::InsufficientSamples { n_a, n_b });
    }
    let (statistic, p_value) = match test {
        TestKind::Welch => welch(a, b),
        TestKind::MannWhitney => mann_whitney(a, b),
    };
    Ok(ComparisonResult {
        test,
        statistic,
        p_value,
        n_a,
        n_b,
    })
}

fn welch(a: &[f64], b: &[f64]) -> (f64, f64) {
    let (ma, sa) = mean_sd(a);
    let (mb, sb) = mean_sd(b);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (va, vb) = (sa * sa / na, sb * sb / nb);
    let se2 = va + vb;
    if se2 == 0.0 {
        return if ma == mb {
            (0.0, 1.0)
        } else {
            (f64::INFINITY.copysign(ma - mb), 0.0)
        };
    }
    let t = (ma - mb) / se2.sqrt();
    let df = se2 * se2 / (va * va / (na - 1.0) + vb * vb / (nb - 1.0));
    let dist = StudentsT::new(0.0, 1.0, df).expect("positive degrees of freedom");
    let p = 2.0 * dist.cdf(-t.abs());
    (t, p.min(1.0))
}

/// U statistic of `a` with the tie-corrected normal approximation and a
/// continuity correction.
fn mann_whitney(a: &[f64], b: &[f64]) -> (f64, f64) {
    let (na, nb) = (a.len(), b.len());
    let mut pooled: Vec<(f64, bool)> = a
        .iter()
        .map(|&x| (x, true))
        .chain(b.iter().map(|&x| (x, false)))
        .collect();
    pooled.sort_by(|x, y| x.0.total_cmp(&y.0));

    let n = pooled.len();
    let mut rank_sum_a = 0.0;
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && pooled[j + 1].0 == pooled[i].0 {
            j += 1;
        }
        let avg_rank = (i + j) as f64 / 2.0 + 1.0;
        let t = (j - i + 1) as f64;
        tie_term += t * t * t - t;
        rank_sum_a += pooled[i..=j].iter().filter(|p| p.1).count() as f64 * avg_rank;
        i = j + 1;
    }

    let (na_f, nb_f, n_f) = (na as f64, nb as f64, n as f64);
    let u = rank_sum_a - na_f * (na_f + 1.0) / 2.0;
    let mean = na_f * nb_f / 2.0;
    let var = na_f * nb_f / 12.0 * ((n_f + 1.0) - tie_term / (n_f * (n_f - 1.0)));
    if var <= 0.0 {
        return (u, 1.0);
    }
    let diff = (u - mean).abs();
    let z = ((diff - 0.5).max(0.0)) / var.sqrt();
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    (u, (2.0 * normal.cdf(-z)).min(1.0))
}

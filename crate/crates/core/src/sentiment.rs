//! Sentiment of interview text from a model's next-token distribution.
//!
//! The model is prompted so that its next token should be a verdict. The
//! top candidate tokens' probabilities `P` are projected onto the cosine
//! similarities `C` between each candidate's vector and the `positive` /
//! `negative` anchor vectors: `S = PᵀC`, then normalized to sum to one.
//! Scores from several models are averaged.

use std::collections::BTreeMap;
use std::io::Read;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::embedding::{cosine_similarity, EmbeddingError, EmbeddingVector};

#[derive(Debug, Error)]
pub enum SentimentError {
    #[error("interview text is empty")]
    EmptyText,
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error(transparent)]
    Vector(#[from] EmbeddingError),
    #[error("no scores to aggregate")]
    NoScores,
    #[error("every provider failed for interview `{0}`")]
    AllProvidersFailed(String),
    #[error("provider `{model}` has no distribution for interview `{interview_id}`")]
    MissingFixture { model: String, interview_id: String },
    #[error("fixture parse error: {0}")]
    Fixture(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptKind {
    #[default]
    General,
    Reasoning,
}

pub const QUESTION: &str = "what emotion does this passage express?";
pub const GENERAL_INSTRUCTION: &str = "(Please choose one from 'positive' and 'negative' only)";
pub const REASONING_INSTRUCTION: &str =
    "(Please choose one from 'positive' and 'negative' only; do not generate any other content)";
pub const ANSWER_CUE: &str = "Answer: ";
pub const THINK_CLOSE: &str = "</think>";

/// Verdict-eliciting prompt. General models get an `Answer: ` cue; reasoning
/// models get a closing think tag so the next token is the verdict.
pub fn build_sentiment_prompt(text: &str, kind: PromptKind) -> Result<String, SentimentError> {
    if text.trim().is_empty() {
        return Err(SentimentError::EmptyText);
    }
    Ok(match kind {
        PromptKind::General => format!("{text}\n{QUESTION}\n{GENERAL_INSTRUCTION}\n{ANSWER_CUE}"),
        PromptKind::Reasoning => format!("{text}\n{QUESTION}\n{REASONING_INSTRUCTION}\n{THINK_CLOSE}"),
    })
}

/// Top candidate next tokens with their vectors and the two anchor vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NextTokenDistribution {
    pub tokens: Vec<String>,
    /// Renormalized over the listed tokens.
    pub probs: Vec<f64>,
    pub token_vectors: Vec<EmbeddingVector>,
    pub anchor_pos: EmbeddingVector,
    pub anchor_neg: EmbeddingVector,
    pub source_model: String,
}

impl NextTokenDistribution {
    /// Validates shapes and renormalizes `probs` to sum to one.
    pub fn new(
        tokens: Vec<String>,
        probs: Vec<f64>,
        token_vectors: Vec<EmbeddingVector>,
        anchor_pos: EmbeddingVector,
        anchor_neg: EmbeddingVector,
        source_model: impl Into<String>,
    ) -> Result<Self, SentimentError> {
        let n = tokens.len();
        if n == 0 {
            return Err(SentimentError::InvalidDistribution("no tokens".into()));
        }
        if probs.len() != n || token_vectors.len() != n {
            return Err(SentimentError::InvalidDistribution(format!(
                "{n} tokens, {} probabilities, {} vectors",
                probs.len(),
                token_vectors.len()
            )));
        }
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(SentimentError::InvalidDistribution(
                "probabilities must be finite and non-negative".into(),
            ));
        }
        let total: f64 = probs.iter().sum();
        if total <= 0.0 {
            return Err(SentimentError::InvalidDistribution("zero probability mass".into()));
        }
        let dim = anchor_pos.dim();
        if anchor_neg.dim() != dim || token_vectors.iter().any(|v| v.dim() != dim) {
            return Err(SentimentError::InvalidDistribution(
                "vectors differ in dimension".into(),
            ));
        }
        Ok(Self {
            tokens,
            probs: probs.iter().map(|p| p / total).collect(),
            token_vectors,
            anchor_pos,
            anchor_neg,
            source_model: source_model.into(),
        })
    }
}

/// Cosine similarity of every candidate to the positive and negative anchors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityRows {
    pub pos: Vec<f64>,
    pub neg: Vec<f64>,
}

pub fn similarity_rows(dist: &NextTokenDistribution) -> Result<SimilarityRows, SentimentError> {
    let row = |anchor: &EmbeddingVector| -> Result<Vec<f64>, SentimentError> {
        dist.token_vectors
            .iter()
            .map(|v| Ok(cosine_similarity(anchor, v)?))
            .collect()
    };
    Ok(SimilarityRows {
        pos: row(&dist.anchor_pos)?,
        neg: row(&dist.anchor_neg)?,
    })
}

/// How the raw `(PᵀC_pos, PᵀC_neg)` pair becomes a score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// Shift both components up by any negative minimum, then divide by the sum.
    #[default]
    ShiftFloor,
    /// Divide by the raw sum; components may leave `[0, 1]`.
    RawSum,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentimentScore {
    pub s_pos: f64,
    pub s_neg: f64,
    pub raw: [f64; 2],
    pub model: String,
}

pub fn score(dist: &NextTokenDistribution, normalization: Normalization) -> Result<SentimentScore, SentimentError> {
    let rows = similarity_rows(dist)?;
    let project = |row: &[f64]| dist.probs.iter().zip(row).map(|(p, c)| p * c).sum::<f64>();
    let raw = [project(&rows.pos), project(&rows.neg)];
    let (s_pos, s_neg) = normalize_pair(raw, normalization);
    Ok(SentimentScore {
        s_pos,
        s_neg,
        raw,
        model: dist.source_model.clone(),
    })
}

fn normalize_pair(raw: [f64; 2], normalization: Normalization) -> (f64, f64) {
    let [pos, neg] = match normalization {
        Normalization::ShiftFloor => {
            let shift = raw[0].min(raw[1]).min(0.0);
            [raw[0] - shift, raw[1] - shift]
        }
        Normalization::RawSum => raw,
    };
    let sum = pos + neg;
    if sum == 0.0 {
        (0.5, 0.5)
    } else {
        (pos / sum, neg / sum)
    }
}

/// Component-wise mean of several models' scores, renormalized.
pub fn aggregate_models(scores: &[SentimentScore]) -> Result<SentimentScore, SentimentError> {
    if scores.is_empty() {
        return Err(SentimentError::NoScores);
    }
    let n = scores.len() as f64;
    let mean = |f: &dyn Fn(&SentimentScore) -> f64| scores.iter().map(f).sum::<f64>() / n;
    let pos = mean(&|s| s.s_pos);
    let neg = mean(&|s| s.s_neg);
    let sum = pos + neg;
    let (s_pos, s_neg) = if sum == 0.0 { (0.5, 0.5) } else { (pos / sum, neg / sum) };
    Ok(SentimentScore {
        s_pos,
        s_neg,
        raw: [mean(&|s| s.raw[0]), mean(&|s| s.raw[1])],
        model: "ensemble".into(),
    })
}

/// Source of next-token distributions for a prompt.
pub trait LogitProvider: Send + Sync {
    fn model_id(&self) -> &str;
    fn prompt_kind(&self) -> PromptKind;
    fn next_token_distribution(
        &self,
        interview_id: &str,
        prompt: &str,
    ) -> Result<NextTokenDistribution, SentimentError>;
}

/// Recorded distribution, one per `(model, interview_id)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionFixture {
    pub model: String,
    pub interview_id: String,
    pub tokens: Vec<String>,
    pub probs: Vec<f64>,
    pub token_vectors: Vec<Vec<f64>>,
    pub anchor_pos: Vec<f64>,
    pub anchor_neg: Vec<f64>,
}

impl DistributionFixture {
    pub fn to_distribution(&self) -> Result<NextTokenDistribution, SentimentError> {
        NextTokenDistribution::new(
            self.tokens.clone(),
            self.probs.clone(),
            self.token_vectors
                .iter()
                .map(|v| EmbeddingVector::new(v.clone()))
                .collect::<Result<_, _>>()?,
            EmbeddingVector::new(self.anchor_pos.clone())?,
            EmbeddingVector::new(self.anchor_neg.clone())?,
            self.model.clone(),
        )
    }
}

/// Reads fixtures from a JSON array or JSON-Lines.
pub fn read_fixtures<R: Read>(mut reader: R) -> Result<Vec<DistributionFixture>, SentimentError> {
    let mut text = String::new();
    reader.read_to_string(&mut text)?;
    if text.trim_start().starts_with('[') {
        return serde_json::from_str(&text).map_err(|e| SentimentError::Fixture(e.to_string()));
    }
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| SentimentError::Fixture(format!("line {}: {e}", i + 1)))
        })
        .collect()
}

/// Replays recorded distributions for one model.
#[derive(Debug, Clone)]
pub struct ReplayProvider {
    model: String,
    kind: PromptKind,
    by_interview: BTreeMap<String, DistributionFixture>,
}

impl ReplayProvider {
    /// One provider per model found in `fixtures`, ordered by model id.
    pub fn from_fixtures(fixtures: Vec<DistributionFixture>, kind: PromptKind) -> Vec<ReplayProvider> {
        let mut by_model: BTreeMap<String, BTreeMap<String, DistributionFixture>> = BTreeMap::new();
        for f in fixtures {
            by_model
                .entry(f.model.clone())
                .or_default()
                .insert(f.interview_id.clone(), f);
        }
        by_model
            .into_iter()
            .map(|(model, by_interview)| ReplayProvider {
                model,
                kind,
                by_interview,
            })
            .collect()
    }
}

impl LogitProvider for ReplayProvider {
    fn model_id(&self) -> &str {
        &self.model
    }

    fn prompt_kind(&self) -> PromptKind {
        self.kind
    }

    fn next_token_distribution(
        &self,
        interview_id: &str,
        _prompt: &str,
    ) -> Result<NextTokenDistribution, SentimentError> {
        self.by_interview
            .get(interview_id)
            .ok_or_else(|| SentimentError::MissingFixture {
                model: self.model.clone(),
                interview_id: interview_id.to_string(),
            })?
            .to_distribution()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Interview {
    pub interview_id: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedModel {
    pub model: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterviewSentiment {
    pub interview_id: String,
    pub scores: Vec<SentimentScore>,
    pub ensemble: SentimentScore,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub skipped: Vec<SkippedModel>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentimentReport {
    pub normalization: Normalization,
    pub items: Vec<InterviewSentiment>,
}

impl SentimentReport {
    /// `interview_id,model,s_pos,s_neg`, per-model rows followed by the ensemble row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("interview_id,model,s_pos,s_neg\n");
        for item in &self.items {
            for s in item.scores.iter().chain(std::iter::once(&item.ensemble)) {
                out.push_str(&format!("{},{},{},{}\n", item.interview_id, s.model, s.s_pos, s.s_neg));
            }
        }
        out
    }
}

/// Scores every interview with every provider and averages per interview.
///
/// A provider failing on an item is skipped and recorded; an item on which
/// every provider fails is an error.
pub fn score_interviews(
    interviews: &[Interview],
    providers: &[&dyn LogitProvider],
    normalization: Normalization,
    concurrency: usize,
) -> Result<SentimentReport, SentimentError> {
    let jobs: Vec<(usize, usize)> = (0..interviews.len())
        .flat_map(|i| (0..providers.len()).map(move |p| (i, p)))
        .collect();
    let results = crate::par::bounded_map(&jobs, concurrency, |&(i, p)| {
        let interview = &interviews[i];
        let provider = providers[p];
        let prompt = build_sentiment_prompt(&interview.text, provider.prompt_kind())?;
        let dist = provider.next_token_distribution(&interview.interview_id, &prompt)?;
        let mut s = score(&dist, normalization)?;
        s.model = provider.model_id().to_string();
        Ok::<_, SentimentError>(s)
    });

    let mut items = Vec::with_capacity(interviews.len());
    let mut results = results.into_iter();
    for interview in interviews {
        let mut scores = Vec::new();
        let mut skipped = Vec::new();
        for provider in providers {
            match results.next().expect("one result per job") {
                Ok(s) => scores.push(s),
                Err(e) => skipped.push(SkippedModel {
                    model: provider.model_id().to_string(),
                    reason: e.to_string(),
                }),
            }
        }
        if scores.is_empty() {
            return Err(SentimentError::AllProvidersFailed(interview.interview_id.clone()));
        }
        let ensemble = aggregate_models(&scores)?;
        items.push(InterviewSentiment {
            interview_id: interview.interview_id.clone(),
            scores,
            ensemble,
            skipped,
        });
    }
    Ok(SentimentReport {
        normalization,
        items,
    })
}


#[cfg(test)]
mod fixture_tests {
    use super::*;

    /// Unit vectors with prescribed cosines to the orthonormal anchors `e1`, `e2`.
    fn with_cosines(c_pos: f64, c_neg: f64) -> EmbeddingVector {
        let rest = (1.0 - c_pos * c_pos - c_neg * c_neg).sqrt();
        EmbeddingVector::new(vec![c_pos, c_neg, rest]).unwrap()
    }

    #[test]
    fn three_token_reduced_fixture() {
        let d = NextTokenDistribution::new(
            vec!["good".into(), "bad".into(), "fine".into()],
            vec![0.6, 0.3, 0.1],
            vec![with_cosines(0.9, 0.1), with_cosines(0.2, 0.8), with_cosines(0.5, 0.5)],
            EmbeddingVector::new(vec![1.0, 0.0, 0.0]).unwrap(),
            EmbeddingVector::new(vec![0.0, 1.0, 0.0]).unwrap(),
            "fixture",
        )
        .unwrap();
        let rows = similarity_rows(&d).unwrap();
        for (got, want) in rows.pos.iter().zip([0.9, 0.2, 0.5]) {
            assert!((got - want).abs() < 1e-12);
        }
        let s = score(&d, Normalization::ShiftFloor).unwrap();
        assert!((s.raw[0] - 0.65).abs() < 1e-12 && (s.raw[1] - 0.35).abs() < 1e-12);
        assert!((s.s_pos - 0.65).abs() < 1e-12 && (s.s_neg - 0.35).abs() < 1e-12);
    }
}

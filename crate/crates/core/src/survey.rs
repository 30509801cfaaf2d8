//! Standard scoring for the System Usability Scale and Raw NASA-TLX.

use std::io::Read;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SurveyError {
    #[error("expected {expected} values, got {got}")]
    WrongLength { expected: usize, got: usize },
    #[error("{field} = {value} is outside {min}..={max}")]
    OutOfRange {
        field: String,
        value: i64,
        min: i64,
        max: i64,
    },
    #[error("bad header: expected columns {expected:?}, got {got:?}")]
    BadHeader { expected: Vec<String>, got: Vec<String> },
    #[error("row {row}: {message}")]
    BadRow { row: usize, message: String },
    #[error("no responses")]
    Empty,
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub const SUS_ITEMS: usize = 10;
pub const TLX_DIMENSIONS: [&str; 6] = ["mental", "physical", "temporal", "effort", "performance", "frustration"];

fn check(field: String, value: i64, min: i64, max: i64) -> Result<u8, SurveyError> {
    if (min..=max).contains(&value) {
        Ok(value as u8)
    } else {
        Err(SurveyError::OutOfRange { field, value, min, max })
    }
}

/// Ten SUS items, each rated 1..=5, in questionnaire order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SusResponse {
    items: [u8; SUS_ITEMS],
}

impl SusResponse {
    pub fn new(items: &[i64]) -> Result<Self, SurveyError> {
        if items.len() != SUS_ITEMS {
            return Err(SurveyError::WrongLength { expected: SUS_ITEMS, got: items.len() });
        }
        let mut out = [0u8; SUS_ITEMS];
        for (i, &v) in items.iter().enumerate() {
            out[i] = check(format!("q{}", i + 1), v, 1, 5)?;
        }
        Ok(Self { items: out })
    }

    pub fn items(&self) -> &[u8; SUS_ITEMS] {
        &self.items
    }
}

/// Odd items contribute `item - 1`, even items `5 - item`; the sum is scaled by 2.5.
pub fn sus_score(r: &SusResponse) -> f64 {
    let sum: u32 = r
        .items
        .iter()
        .enumerate()
        .map(|(i, &v)| if i % 2 == 0 { v as u32 - 1 } else { 5 - v as u32 })
        .sum();
    sum as f64 * 2.5
}

/// Six TLX ratings on 0..=100 in the order of [`TLX_DIMENSIONS`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TlxResponse {
    dims: [u8; 6],
}

impl TlxResponse {
    pub fn new(dims: &[i64]) -> Result<Self, SurveyError> {
        if dims.len() != TLX_DIMENSIONS.len() {
            return Err(SurveyError::WrongLength { expected: TLX_DIMENSIONS.len(), got: dims.len() });
        }
        let mut out = [0u8; 6];
        for (i, &v) in dims.iter().enumerate() {
            out[i] = check(TLX_DIMENSIONS[i].to_string(), v, 0, 100)?;
        }
        Ok(Self { dims: out })
    }

    pub fn dims(&self) -> &[u8; 6] {
        &self.dims
    }
}

/// Unweighted mean of the six ratings. With `invert_performance`, the
/// performance rating counts as `100 - rating`.
pub fn tlx_raw(r: &TlxResponse, invert_performance: bool) -> f64 {
    let sum: u32 = r
        .dims
        .iter()
        .enumerate()
        .map(|(i, &v)| if invert_performance && i == 4 { 100 - v as u32 } else { v as u32 })
        .sum();
    sum as f64 / 6.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Instrument {
    Sus,
    Tlx,
}

impl Instrument {
    pub fn columns(self) -> Vec<String> {
        match self {
            Instrument::Sus => (1..=SUS_ITEMS).map(|i| format!("q{i}")).collect(),
            Instrument::Tlx => TLX_DIMENSIONS.iter().map(|s| s.to_string()).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredResponse {
    pub id: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurveySummary {
    pub instrument: Instrument,
    pub n: usize,
    pub mean: f64,
    /// Sample standard deviation; zero for a single response.
    pub sd: f64,
    pub min: f64,
    pub max: f64,
    pub responses: Vec<ScoredResponse>,
}

impl SurveySummary {
    pub fn from_scores(instrument: Instrument, responses: Vec<ScoredResponse>) -> Result<Self, SurveyError> {
        if responses.is_empty() {
            return Err(SurveyError::Empty);
        }
        let n = responses.len();
        let scores: Vec<f64> = responses.iter().map(|r| r.score).collect();
        let mean = scores.iter().sum::<f64>() / n as f64;
        let sd = if n > 1 {
            (scores.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Ok(Self {
            instrument,
            n,
            mean,
            sd,
            min: scores.iter().cloned().fold(f64::INFINITY, f64::min),
            max: scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
            responses,
        })
    }

    /// `instrument,n,mean,sd,min,max` header and one row.
    pub fn to_csv(&self) -> String {
        let name = match self.instrument {
            Instrument::Sus => "sus",
            Instrument::Tlx => "tlx",
        };
        format!(
            "instrument,n,mean,sd,min,max\n{name},{},{},{},{},{}\n",
            self.n, self.mean, self.sd, self.min, self.max
        )
    }
}

/// Scores a CSV of responses, one per row.
///
/// The header must be the instrument's columns (`q1..q10` or the six TLX
/// dimension names), optionally preceded by an `id` column. Rows without an
/// id are numbered from 1.
pub fn score_csv<R: Read>(
    reader: R,
    instrument: Instrument,
    invert_performance: bool,
) -> Result<SurveySummary, SurveyError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(|h| h.to_ascii_lowercase()).collect();
    let expected = instrument.columns();
    let has_id = header.first().map(String::as_str) == Some("id");
    let value_cols = if has_id { &header[1..] } else { &header[..] };
    if value_cols != expected.as_slice() {
        let mut want = expected.clone();
        if has_id {
            want.insert(0, "id".into());
        }
        return Err(SurveyError::BadHeader { expected: want, got: header });
    }

    let mut scored = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let row = row?;
        let line = i + 1;
        let mut fields = row.iter();
        let id = if has_id {
            fields.next().unwrap_or_default().to_string()
        } else {
            line.to_string()
        };
        let values = fields
            .map(|f| {
                f.parse::<i64>().map_err(|_| SurveyError::BadRow {
                    row: line,
                    message: format!("`{f}` is not an integer"),
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        let wrap = |e: SurveyError| SurveyError::BadRow { row: line, message: e.to_string() };
        let score = match instrument {
            Instrument::Sus => sus_score(&SusResponse::new(&values).map_err(wrap)?),
            Instrument::Tlx => tlx_raw(&TlxResponse::new(&values).map_err(wrap)?, invert_performance),
        };
        scored.push(ScoredResponse { id, score });
    }
    SurveySummary::from_scores(instrument, scored)
}

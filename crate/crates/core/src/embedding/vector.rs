use serde::{Deserialize, Serialize};

use super::EmbeddingError;

/// Fixed-length real vector with finite entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct EmbeddingVector(Vec<f64>);

impl EmbeddingVector {
    pub fn new(values: Vec<f64>) -> Result<Self, EmbeddingError> {
        if values.is_empty() {
            return Err(EmbeddingError::Empty);
        }
        if values.iter().any(|x| !x.is_finite()) {
            return Err(EmbeddingError::NonFinite);
        }
        Ok(Self(values))
    }

    /// Validates and unit-normalizes provider output. Zero vectors are rejected.
    pub fn ingest(values: Vec<f64>) -> Result<Self, EmbeddingError> {
        unit_normalize(&Self::new(values)?)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn norm(&self) -> f64 {
        self.dot_raw(&self.0).sqrt()
    }

    pub fn scaled(&self, factor: f64) -> Result<Self, EmbeddingError> {
        Self::new(self.0.iter().map(|x| x * factor).collect())
    }

    fn dot_raw(&self, other: &[f64]) -> f64 {
        self.0.iter().zip(other).map(|(a, b)| a * b).sum()
    }

    pub fn dot(&self, other: &EmbeddingVector) -> Result<f64, EmbeddingError> {
        check_dims(self, other)?;
        Ok(self.dot_raw(&other.0))
    }
}

impl TryFrom<Vec<f64>> for EmbeddingVector {
    type Error = EmbeddingError;

    fn try_from(values: Vec<f64>) -> Result<Self, Self::Error> {
        Self::new(values)
    }
}

impl From<EmbeddingVector> for Vec<f64> {
    fn from(v: EmbeddingVector) -> Self {
        v.0
    }
}

fn check_dims(a: &EmbeddingVector, b: &EmbeddingVector) -> Result<(), EmbeddingError> {
    if a.dim() != b.dim() {
        return Err(EmbeddingError::DimensionMismatch {
            left: a.dim(),
            right: b.dim(),
        });
    }
    Ok(())
}

/// `(a·b) / (‖a‖‖b‖)`, clamped to `[-1, 1]`.
pub fn cosine_similarity(a: &EmbeddingVector, b: &EmbeddingVector) -> Result<f64, EmbeddingError> {
    check_dims(a, b)?;
    let (na, nb) = (a.norm(), b.norm());
    if na == 0.0 || nb == 0.0 {
        return Err(EmbeddingError::ZeroNorm);
    }
    Ok((a.dot_raw(&b.0) / (na * nb)).clamp(-1.0, 1.0))
}

/// `1 − cosine_similarity(a, b)`, in `[0, 2]`.
pub fn cosine_distance(a: &EmbeddingVector, b: &EmbeddingVector) -> Result<f64, EmbeddingError> {
    Ok(1.0 - cosine_similarity(a, b)?)
}

pub fn unit_normalize(v: &EmbeddingVector) -> Result<EmbeddingVector, EmbeddingError> {
    let norm = v.norm();
    if norm == 0.0 {
        return Err(EmbeddingError::ZeroNorm);
    }
    Ok(EmbeddingVector(v.0.iter().map(|x| x / norm).collect()))
}

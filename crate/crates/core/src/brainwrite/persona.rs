use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::BrainwriteError;
use crate::corpus::{ConditionKey, Domain};

const BUNDLED_POOL: &str = include_str!("../../resources/personas.json");

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentPersona {
    pub index: u32,
    pub expertise: String,
    pub language: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PoolEntry {
    pub expertise: String,
    pub domains: Vec<Domain>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PersonaPool {
    entries: Vec<PoolEntry>,
}

impl PersonaPool {
    pub fn bundled() -> Self {
        Self::from_json(BUNDLED_POOL).expect("bundled persona pool is valid")
    }

    pub fn from_json(json: &str) -> Result<Self, BrainwriteError> {
        let entries: Vec<PoolEntry> =
            serde_json::from_str(json).map_err(|e| BrainwriteError::InvalidPool(e.to_string()))?;
        let mut seen = std::collections::HashSet::new();
        for e in &entries {
            if !seen.insert(e.expertise.as_str()) {
                return Err(BrainwriteError::InvalidPool(format!(
                    "duplicate expertise `{}`",
                    e.expertise
                )));
            }
        }
        Ok(Self { entries })
    }

    pub fn for_domain(&self, domain: Domain) -> Vec<&PoolEntry> {
        self.entries
            .iter()
            .filter(|e| e.domains.contains(&domain))
            .collect()
    }
}

/// Draws `participants` distinct domain-tagged personas.
///
/// The draw depends only on `(seed, domain, participants)`, so every class
/// and model of one experiment shares the same panel.
pub fn build_personas(
    condition: &ConditionKey,
    domain: Domain,
    seed: u64,
    language: &str,
    pool: &PersonaPool,
) -> Result<Vec<AgentPersona>, BrainwriteError> {
    let needed = condition.participants as usize;
    if needed == 0 {
        return Err(BrainwriteError::InvalidConfig(
            "participants must be at least 1".into(),
        ));
    }
    let mut candidates = pool.for_domain(domain);
    if candidates.len() < needed {
        return Err(BrainwriteError::PoolTooSmall {
            domain: domain.as_str().to_string(),
            available: candidates.len(),
            needed,
        });
    }
    let mut hasher = Sha256::new();
    hasher.update(seed.to_le_bytes());
    hasher.update(domain.as_str().as_bytes());
    hasher.update(condition.participants.to_le_bytes());
    let mut rng_seed = [0u8; 32];
    rng_seed.copy_from_slice(&hasher.finalize());
    let mut rng = ChaCha8Rng::from_seed(rng_seed);
    candidates.shuffle(&mut rng);
    Ok(candidates
        .into_iter()
        .take(needed)
        .enumerate()
        .map(|(i, e)| AgentPersona {
            index: i as u32,
            expertise: e.expertise.clone(),
            language: language.to_string(),
        })
        .collect())
}

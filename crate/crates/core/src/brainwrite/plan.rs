use std::io::BufRead;

use serde::{Deserialize, Serialize};

use super::{
    build_personas, run_session, BrainwriteError, GenerationBackend, PersonaPool, SessionConfig,
    SessionTranscript, SupervisorNote, DEFAULT_INCREMENT_LIMIT,
};
use crate::corpus::{ConditionKey, Domain};

/// A discussion topic. `background` is required for `bk`/`spbk` sessions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Topic {
    pub topic_id: String,
    pub domain: Domain,
    pub title: String,
    #[serde(default)]
    pub background: Option<String>,
}

pub fn parse_topics<R: BufRead>(reader: R) -> Result<Vec<Topic>, BrainwriteError> {
    let mut topics = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let topic: Topic = serde_json::from_str(&line).map_err(|e| BrainwriteError::InvalidTopic {
            line: idx + 1,
            message: e.to_string(),
        })?;
        topics.push(topic);
    }
    Ok(topics)
}

/// Supervisor note for the plan; applies to every topic when `topic_id` is absent.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanNote {
    #[serde(default)]
    pub topic_id: Option<String>,
    pub after_round: u32,
    pub text: String,
}

/// Every condition crossed with every topic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentPlan {
    pub conditions: Vec<ConditionKey>,
    /// Brainwrite rounds; defaults to the participant count.
    #[serde(default)]
    pub rounds: Option<u32>,
    #[serde(default = "default_limit")]
    pub increment_limit: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_lang")]
    pub lang: String,
    #[serde(default = "default_attempts")]
    pub max_attempts: u32,
    #[serde(default)]
    pub retry_delay_ms: u64,
    #[serde(default)]
    pub notes: Vec<PlanNote>,
}

fn default_limit() -> usize {
    DEFAULT_INCREMENT_LIMIT
}

fn default_lang() -> String {
    "en".into()
}

fn default_attempts() -> u32 {
    3
}

impl ExperimentPlan {
    pub fn new(conditions: Vec<ConditionKey>, seed: u64) -> Self {
        Self {
            conditions,
            rounds: None,
            increment_limit: DEFAULT_INCREMENT_LIMIT,
            seed,
            lang: default_lang(),
            max_attempts: default_attempts(),
            retry_delay_ms: 0,
            notes: Vec::new(),
        }
    }

    pub fn session_config(
        &self,
        condition: &ConditionKey,
        topic: &Topic,
        backend_id: &str,
        pool: &PersonaPool,
    ) -> Result<SessionConfig, BrainwriteError> {
        let personas = build_personas(condition, topic.domain, self.seed, &self.lang, pool)?;
        let background = if condition.class.has_background() {
            Some(topic.background.clone().ok_or_else(|| {
                BrainwriteError::InvalidConfig(format!(
                    "topic {} has no background for class {}",
                    topic.topic_id, condition.class
                ))
            })?)
        } else {
            None
        };
        let mut config =
            SessionConfig::new(condition.clone(), personas, background, backend_id, self.seed);
        if let Some(r) = self.rounds {
            config.rounds = r;
        }
        config.increment_limit = self.increment_limit;
        config.max_attempts = self.max_attempts;
        config.retry_delay_ms = self.retry_delay_ms;
        config.supervisor_notes = self
            .notes
            .iter()
            .filter(|n| n.topic_id.as_deref().is_none_or(|t| t == topic.topic_id))
            .map(|n| SupervisorNote {
                after_round: n.after_round,
                text: n.text.clone(),
            })
            .collect();
        config.validate()?;
        Ok(config)
    }
}

/// Runs all sessions of a plan with at most `concurrency` in flight.
/// Transcripts come back in plan order (conditions outer, topics inner).
pub fn run_plan(
    plan: &ExperimentPlan,
    topics: &[Topic],
    backend: &dyn GenerationBackend,
    pool: &PersonaPool,
    concurrency: usize,
) -> Result<Vec<SessionTranscript>, BrainwriteError> {
    let mut jobs = Vec::new();
    for condition in &plan.conditions {
        for topic in topics {
            jobs.push((plan.session_config(condition, topic, backend.backend_id(), pool)?, topic));
        }
    }
    crate::par::bounded_map(&jobs, concurrency, |(config, topic)| run_session(config, topic, backend))
        .into_iter()
        .collect()
}

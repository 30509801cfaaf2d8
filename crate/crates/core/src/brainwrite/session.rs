use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{
    build_prompt, AgentPersona, BrainwriteError, GenerationBackend, PromptInput, SamplingParams, Topic,
};
use crate::corpus::{ConditionKey, IdeaRecord};
use crate::embedding::RetryPolicy;

pub const DEFAULT_INCREMENT_LIMIT: usize = 600;

/// Scripted supervisor input, shown to every prompt after round `after_round`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SupervisorNote {
    pub after_round: u32,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionConfig {
    pub condition: ConditionKey,
    pub rounds: u32,
    pub increment_limit: usize,
    #[serde(default)]
    pub background: Option<String>,
    pub personas: Vec<AgentPersona>,
    pub backend_id: String,
    pub seed: u64,
    #[serde(default)]
    pub supervisor_notes: Vec<SupervisorNote>,
    #[serde(default = "default_attempts")]
    pub max_attempts: u32,
    #[serde(default)]
    pub retry_delay_ms: u64,
}

fn default_attempts() -> u32 {
    3
}

impl SessionConfig {
    /// Config with the default round count (`C` for Brainwrite, 1 for `sp*`).
    pub fn new(
        condition: ConditionKey,
        personas: Vec<AgentPersona>,
        background: Option<String>,
        backend_id: impl Into<String>,
        seed: u64,
    ) -> Self {
        let rounds = if condition.class.is_independent() {
            1
        } else {
            condition.participants
        };
        Self {
            condition,
            rounds,
            increment_limit: DEFAULT_INCREMENT_LIMIT,
            background,
            personas,
            backend_id: backend_id.into(),
            seed,
            supervisor_notes: Vec::new(),
            max_attempts: default_attempts(),
            retry_delay_ms: 0,
        }
    }

    pub fn effective_rounds(&self) -> u32 {
        if self.condition.class.is_independent() {
            1
        } else {
            self.rounds
        }
    }

    pub fn validate(&self) -> Result<(), BrainwriteError> {
        let invalid = |m: String| Err(BrainwriteError::InvalidConfig(m));
        let c = &self.condition;
        if self.personas.len() != c.participants as usize {
            return invalid(format!(
                "{} personas for {} participants",
                self.personas.len(),
                c.participants
            ));
        }
        for (i, p) in self.personas.iter().enumerate() {
            if p.index as usize != i {
                return invalid(format!("persona at position {i} has index {}", p.index));
            }
        }
        if self.rounds == 0 {
            return invalid("rounds must be at least 1".into());
        }
        if self.increment_limit == 0 {
            return invalid("increment_limit must be positive".into());
        }
        if self.background.is_some() != c.class.has_background() {
            return invalid(format!(
                "class {} {} a background",
                c.class,
                if c.class.has_background() { "requires" } else { "forbids" }
            ));
        }
        Ok(())
    }

    fn retry(&self) -> RetryPolicy {
        RetryPolicy {
            max_attempts: self.max_attempts.max(1),
            base_delay: Duration::from_millis(self.retry_delay_ms),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionTranscript {
    pub config: SessionConfig,
    pub topic_id: String,
    pub records: Vec<IdeaRecord>,
    /// Contribution ids per sheet, in writing order. Empty for `sp*` sessions.
    pub note_sheets: Vec<Vec<String>>,
    /// Prompt sent for each record, aligned with `records`.
    pub prompts: Vec<String>,
    pub partial: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
}

/// Sheet written by each agent in round `round_index` (0-based):
/// agent `a` gets sheet `(a + round_index) mod C`.
pub fn rotate_sheets(round_index: usize, participants: usize) -> Vec<usize> {
    (0..participants)
        .map(|a| (a + round_index) % participants)
        .collect()
}

fn is_terminator(c: char) -> bool {
    matches!(c, '.' | '!' | '?' | '。' | '！' | '？' | '…')
}

/// Caps `text` at `limit` characters, preferring the last sentence end that
/// fits and falling back to a hard cut.
pub fn truncate_increment(text: &str, limit: usize) -> String {
    let chars: Vec<char> = text.chars().collect();
    if chars.len() <= limit {
        return text.to_string();
    }
    let mut cut = None;
    for i in 0..limit.min(chars.len()) {
        let c = chars[i];
        if !is_terminator(c) {
            continue;
        }
        let next = chars.get(i + 1);
        let ascii = c.is_ascii();
        if !ascii || next.is_none_or(|n| n.is_whitespace()) {
            cut = Some(i + 1);
        }
    }
    match cut {
        Some(end) => chars[..end].iter().collect::<String>().trim_end().to_string(),
        None => chars[..limit].iter().collect(),
    }
}

fn record_id(topic: &Topic, c: &ConditionKey, round: u32, agent: u32) -> String {
    format!(
        "{}-{}-{}-{}-c{}-r{}-a{}",
        topic.topic_id, c.group, c.class, c.model, c.participants, round, agent
    )
}

/// Runs one session. A backend failure that survives the retries ends the
/// session early: completed rounds are kept and the transcript is marked
/// partial.
pub fn run_session(
    config: &SessionConfig,
    topic: &Topic,
    backend: &dyn GenerationBackend,
) -> Result<SessionTranscript, BrainwriteError> {
    config.validate()?;
    let c = &config.condition;
    let participants = c.participants as usize;
    let independent = c.class.is_independent();
    let params = SamplingParams::new(c.model.clone(), config.seed);
    let retry = config.retry();

    let mut transcript = SessionTranscript {
        config: config.clone(),
        topic_id: topic.topic_id.clone(),
        records: Vec::new(),
        note_sheets: if independent {
            Vec::new()
        } else {
            vec![Vec::new(); participants]
        },
        prompts: Vec::new(),
        partial: false,
        failure: None,
    };
    // Sheet contents by text, parallel to note_sheets.
    let mut sheet_texts: Vec<Vec<String>> = vec![Vec::new(); participants];

    for round in 1..=config.effective_rounds() {
        let assignment = rotate_sheets(round as usize - 1, participants);
        let notes: Vec<String> = config
            .supervisor_notes
            .iter()
            .filter(|n| n.after_round < round)
            .map(|n| n.text.clone())
            .collect();
        let mut round_output = Vec::with_capacity(participants);
        for (agent, persona) in config.personas.iter().enumerate() {
            let sheet = assignment[agent];
            let history: &[String] = if independent { &[] } else { &sheet_texts[sheet] };
            let prompt = build_prompt(&PromptInput {
                persona,
                topic: &topic.title,
                sheet_history: history,
                strategy: c.strategy(),
                background: config.background.as_deref(),
                supervisor_notes: &notes,
                increment_limit: config.increment_limit,
            });
            match retry.run(|| backend.generate(&prompt, &params)) {
                Ok(raw) => {
                    let text = truncate_increment(raw.trim(), config.increment_limit);
                    round_output.push((agent, sheet, prompt, text));
                }
                Err((err, attempts)) => {
                    transcript.partial = true;
                    transcript.failure = Some(format!(
                        "round {round}, agent {agent}: {err} (after {attempts} attempts)"
                    ));
                    tracing::warn!(topic = %topic.topic_id, "session stopped early: {err}");
                    return Ok(transcript);
                }
            }
        }
        for (agent, sheet, prompt, text) in round_output {
            let id = record_id(topic, c, round, agent as u32);
            if !independent {
                transcript.note_sheets[sheet].push(id.clone());
                sheet_texts[sheet].push(text.clone());
            }
            transcript.records.push(IdeaRecord {
                id,
                topic_id: topic.topic_id.clone(),
                domain: topic.domain,
                condition: c.clone(),
                round,
                agent: agent as u32,
                lang: config.personas[agent].language.clone(),
                text,
            });
            transcript.prompts.push(prompt);
        }
    }
    Ok(transcript)
}

//! Scripted multi-agent Brainwrite sessions and independent (`sp*`) baselines.
//!
//! In Brainwrite mode every agent owns one note sheet at the start; each round
//! agent `a` writes on sheet `(a + round_index) mod C`, seeing everything
//! already on that sheet. Independent mode asks each agent once with no
//! shared history.

mod backend;
mod persona;
mod plan;
mod prompt;
mod session;

pub use backend::{BackendError, GenerationBackend, HttpChatBackend, MockBackend, SamplingParams};
pub use persona::{build_personas, AgentPersona, PersonaPool, PoolEntry};
pub use plan::{parse_topics, run_plan, ExperimentPlan, PlanNote, Topic};
pub use prompt::{build_prompt, PromptInput, COT_SCAFFOLD, ZERO_SHOT_SCAFFOLD};
pub use session::{
    rotate_sheets, run_session, truncate_increment, SessionConfig, SessionTranscript, SupervisorNote,
    DEFAULT_INCREMENT_LIMIT,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum BrainwriteError {
    #[error("persona pool has {available} entries for {domain}, need {needed}")]
    PoolTooSmall {
        domain: String,
        available: usize,
        needed: usize,
    },
    #[error("invalid session config: {0}")]
    InvalidConfig(String),
    #[error("invalid persona pool: {0}")]
    InvalidPool(String),
    #[error("topics line {line}: {message}")]
    InvalidTopic { line: usize, message: String },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

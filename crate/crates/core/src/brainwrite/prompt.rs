//! Contribution prompt templates.
//!
//! A prompt is the following sections joined by a blank line, in order;
//! optional sections are omitted entirely when empty:
//!
//! ```text
//! You are participant {index+1} in an idea-generation panel, contributing as a {expertise}. Write in language "{language}".
//! Topic: {topic}
//! Background:\n{background}                                  (only with background)
//! Ideas already on this sheet, oldest first:\n1. {idea}\n... (only with history)
//! Supervisor notes:\n- {note}\n...                           (only with notes)
//! {ZERO_SHOT_SCAFFOLD | COT_SCAFFOLD}
//! Add exactly one new idea in at most {increment_limit} characters.
//! ```

use super::AgentPersona;
use crate::corpus::Strategy;

pub const ZERO_SHOT_SCAFFOLD: &str = "State your idea directly, without preamble.";
pub const COT_SCAFFOLD: &str = "Let's think step by step. Reason briefly about the topic and the ideas above, then state your idea.";

#[derive(Debug, Clone)]
pub struct PromptInput<'a> {
    pub persona: &'a AgentPersona,
    pub topic: &'a str,
    pub sheet_history: &'a [String],
    pub strategy: Strategy,
    pub background: Option<&'a str>,
    pub supervisor_notes: &'a [String],
    pub increment_limit: usize,
}

pub fn build_prompt(input: &PromptInput<'_>) -> String {
    let mut sections = vec![
        format!(
            "You are participant {} in an idea-generation panel, contributing as a {}. Write in language \"{}\".",
            input.persona.index + 1,
            input.persona.expertise,
            input.persona.language
        ),
        format!("Topic: {}", input.topic),
    ];
    if let Some(bg) = input.background.filter(|b| !b.trim().is_empty()) {
        sections.push(format!("Background:\n{bg}"));
    }
    if !input.sheet_history.is_empty() {
        let items: Vec<String> = input
            .sheet_history
            .iter()
            .enumerate()
            .map(|(i, idea)| format!("{}. {idea}", i + 1))
            .collect();
        sections.push(format!(
            "Ideas already on this sheet, oldest first:\n{}",
            items.join("\n")
        ));
    }
    if !input.supervisor_notes.is_empty() {
        let items: Vec<String> = input
            .supervisor_notes
            .iter()
            .map(|n| format!("- {n}"))
            .collect();
        sections.push(format!("Supervisor notes:\n{}", items.join("\n")));
    }
    sections.push(
        match input.strategy {
            Strategy::ZeroShot => ZERO_SHOT_SCAFFOLD,
            Strategy::Cot => COT_SCAFFOLD,
        }
        .to_string(),
    );
    sections.push(format!(
        "Add exactly one new idea in at most {} characters.",
        input.increment_limit
    ));
    sections.join("\n\n")
}

use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Duration;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Clone, Error)]
#[error("{0}")]
pub struct BackendError(pub String);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingParams {
    /// Opaque model id passed through to the backend.
    pub model: String,
    pub temperature: f64,
    pub top_p: f64,
    pub max_tokens: u32,
    pub seed: u64,
}

impl SamplingParams {
    pub fn new(model: impl Into<String>, seed: u64) -> Self {
        Self {
            model: model.into(),
            temperature: 0.7,
            top_p: 0.9,
            max_tokens: 512,
            seed,
        }
    }
}

/// Text generation backend.
pub trait GenerationBackend: Send + Sync {
    fn backend_id(&self) -> &str;
    fn generate(&self, prompt: &str, params: &SamplingParams) -> Result<String, BackendError>;
}

const OPENERS: &[&str] = &[
    "Consider", "Propose", "Explore", "Reframe the question around", "Pilot", "Measure",
    "Challenge the assumption behind", "Combine",
];
const ADJECTIVES: &[&str] = &[
    "decentralised", "long-horizon", "behavioural", "counterfactual", "modular", "adaptive",
    "transparent", "cross-border", "probabilistic", "community-led", "low-cost", "regulated",
];
const NOUNS: &[&str] = &[
    "incentives", "ledgers", "risk models", "feedback loops", "institutions", "proofs",
    "markets", "narratives", "thought experiments", "data trusts", "benchmarks", "norms",
];

/// Deterministic offline backend. Output is a function of
/// `(model, seed, prompt)` only.
#[derive(Debug, Default)]
pub struct MockBackend {
    calls: AtomicUsize,
    fail_from_call: Option<usize>,
}

impl MockBackend {
    pub fn new() -> Self {
        Self::default()
    }

    /// A backend whose calls fail once `ok_calls` calls have succeeded.
    pub fn failing_after(ok_calls: usize) -> Self {
        Self {
            calls: AtomicUsize::new(0),
            fail_from_call: Some(ok_calls),
        }
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    pub fn render(prompt: &str, params: &SamplingParams) -> String {
        let mut hasher = Sha256::new();
        hasher.update(params.model.as_bytes());
        hasher.update(params.seed.to_le_bytes());
        hasher.update(prompt.as_bytes());
        let mut seed = [0u8; 32];
        seed.copy_from_slice(&hasher.finalize());
        let mut rng = ChaCha8Rng::from_seed(seed);
        let sentences = rng.gen_range(2..=5);
        (0..sentences)
            .map(|_| {
                format!(
                    "{} {} {} alongside {} {}.",
                    OPENERS.choose(&mut rng).unwrap(),
                    ADJECTIVES.choose(&mut rng).unwrap(),
                    NOUNS.choose(&mut rng).unwrap(),
                    ADJECTIVES.choose(&mut rng).unwrap(),
                    NOUNS.choose(&mut rng).unwrap(),
                )
            })
            .collect::<Vec<_>>()
            .join(" ")
    }
}

impl GenerationBackend for MockBackend {
    fn backend_id(&self) -> &str {
        "mock"
    }

    fn generate(&self, prompt: &str, params: &SamplingParams) -> Result<String, BackendError> {
        let call = self.calls.fetch_add(1, Ordering::SeqCst);
        if matches!(self.fail_from_call, Some(limit) if call >= limit) {
            return Err(BackendError("injected mock failure".into()));
        }
        Ok(Self::render(prompt, params))
    }
}

/// Client for an OpenAI-compatible `POST {base_url}/chat/completions` endpoint.
pub struct HttpChatBackend {
    agent: ureq::Agent,
    base_url: String,
    api_key: Option<String>,
}

impl HttpChatBackend {
    pub fn new(base_url: impl Into<String>, api_key: Option<String>) -> Self {
        Self {
            agent: ureq::AgentBuilder::new()
                .timeout(Duration::from_secs(300))
                .build(),
            base_url: base_url.into().trim_end_matches('/').to_string(),
            api_key,
        }
    }
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<ChatChoice>,
}

#[derive(Deserialize)]
struct ChatChoice {
    message: ChatMessage,
}

#[derive(Deserialize)]
struct ChatMessage {
    content: String,
}

impl GenerationBackend for HttpChatBackend {
    fn backend_id(&self) -> &str {
        "http"
    }

    fn generate(&self, prompt: &str, params: &SamplingParams) -> Result<String, BackendError> {
        let mut req = self
            .agent
            .post(&format!("{}/chat/completions", self.base_url))
            .set("Content-Type", "application/json");
        if let Some(key) = &self.api_key {
            req = req.set("Authorization", &format!("Bearer {key}"));
        }
        let body = serde_json::json!({
            "model": params.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": params.temperature,
            "top_p": params.top_p,
            "max_tokens": params.max_tokens,
            "seed": params.seed,
        });
        let resp: ChatResponse = req
            .send_json(body)
            .map_err(|e| BackendError(e.to_string()))?
            .into_json()
            .map_err(|e| BackendError(format!("invalid response body: {e}")))?;
        resp.choices
            .into_iter()
            .next()
            .map(|c| c.message.content)
            .ok_or_else(|| BackendError("response contained no choices".into()))
    }
}

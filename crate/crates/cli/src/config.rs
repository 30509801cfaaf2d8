//! Pipeline configuration file.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crowdwrite_core::clustering::SweepParams;
use crowdwrite_core::diversity::{Granularity, ReportOptions};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const BASE_URL_VAR: &str = "CW_PROVIDER_BASE_URL";
pub const API_KEY_VAR: &str = "CW_PROVIDER_API_KEY";

/// Artifact locations. Relative paths resolve against the config file's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Paths {
    pub plan: PathBuf,
    pub topics: PathBuf,
    pub corpus: PathBuf,
    pub transcripts: PathBuf,
    pub cache: PathBuf,
    pub clusterings: PathBuf,
    pub report: PathBuf,
    /// Rendered report (`report` stage); its format follows the extension
    /// unless `diversity.format` is set.
    pub rendered: PathBuf,
    pub manifest: PathBuf,
    #[serde(default)]
    pub personas: Option<PathBuf>,
}

impl Paths {
    /// Conventional file names inside `dir`.
    pub fn in_dir(dir: &Path) -> Self {
        Self {
            plan: dir.join("plan.json"),
            topics: dir.join("topics.jsonl"),
            corpus: dir.join("corpus.jsonl"),
            transcripts: dir.join("transcripts.json"),
            cache: dir.join("vectors.jsonl"),
            clusterings: dir.join("clusterings.json"),
            report: dir.join("report.json"),
            rendered: dir.join("report.md"),
            manifest: dir.join("manifest.json"),
            personas: None,
        }
    }

    fn all(&self) -> Vec<(&'static str, &PathBuf)> {
        let mut v = vec![
            ("plan", &self.plan),
            ("topics", &self.topics),
            ("corpus", &self.corpus),
            ("transcripts", &self.transcripts),
            ("cache", &self.cache),
            ("clusterings", &self.clusterings),
            ("report", &self.report),
            ("rendered", &self.rendered),
            ("manifest", &self.manifest),
        ];
        if let Some(p) = &self.personas {
            v.push(("personas", p));
        }
        v
    }

    fn resolve(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.plan);
        fix(&mut self.topics);
        fix(&mut self.corpus);
        fix(&mut self.transcripts);
        fix(&mut self.cache);
        fix(&mut self.clusterings);
        fix(&mut self.report);
        fix(&mut self.rendered);
        fix(&mut self.manifest);
        if let Some(p) = &mut self.personas {
            fix(p);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProviderKind {
    #[default]
    Mock,
    Http,
}

impl FromStr for ProviderKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "mock" => Ok(ProviderKind::Mock),
            "http" => Ok(ProviderKind::Http),
            other => Err(format!("unknown provider kind `{other}` (expected mock or http)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenerationConfig {
    #[serde(default)]
    pub backend: ProviderKind,
    /// Suffix selecting `CW_PROVIDER_*_<NAME>` variables.
    #[serde(default)]
    pub provider_name: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EmbeddingConfig {
    pub provider: ProviderKind,
    pub provider_name: Option<String>,
    pub model: String,
    /// Vector length of the mock provider.
    pub dim: usize,
    pub max_attempts: u32,
    pub retry_delay_ms: u64,
}

impl Default for EmbeddingConfig {
    fn default() -> Self {
        Self {
            provider: ProviderKind::Mock,
            provider_name: None,
            model: "mock-embed".into(),
            dim: crowdwrite_core::embedding::DEFAULT_DIM,
            max_attempts: 3,
            retry_delay_ms: 500,
        }
    }
}

impl EmbeddingConfig {
    /// Identifier stored with cached vectors.
    pub fn provider_id(&self) -> String {
        match (self.provider, &self.provider_name) {
            (ProviderKind::Mock, _) => "mock".into(),
            (ProviderKind::Http, Some(name)) => name.to_ascii_lowercase(),
            (ProviderKind::Http, None) => "http".into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClusteringConfig {
    pub k_min: usize,
    pub k_max: usize,
    pub restarts: usize,
    pub top: usize,
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for ClusteringConfig {
    fn default() -> Self {
        let d = SweepParams::default();
        Self {
            k_min: d.k_min,
            k_max: d.k_max,
            restarts: d.restarts,
            top: d.top,
            max_iter: d.max_iter,
            tol: d.tol,
        }
    }
}

impl ClusteringConfig {
    pub fn sweep(&self, seed: u64) -> SweepParams {
        SweepParams {
            k_min: self.k_min,
            k_max: self.k_max,
            restarts: self.restarts,
            seed,
            top: self.top,
            max_iter: self.max_iter,
            tol: self.tol,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Md,
    Csv,
    Json,
}

impl ReportFormat {
    pub fn from_extension(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("csv") => ReportFormat::Csv,
            Some("json") => ReportFormat::Json,
            _ => ReportFormat::Md,
        }
    }
}

impl FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "md" => Ok(ReportFormat::Md),
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            other => Err(format!("unknown report format `{other}` (expected md, csv or json)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DiversityConfig {
    pub base: f64,
    pub granularity: Granularity,
    pub per_topic: bool,
    pub format: Option<ReportFormat>,
}

impl Default for DiversityConfig {
    fn default() -> Self {
        let d = ReportOptions::default();
        Self {
            base: d.base,
            granularity: d.granularity,
            per_topic: d.per_topic,
            format: None,
        }
    }
}

impl DiversityConfig {
    pub fn options(&self) -> ReportOptions {
        ReportOptions {
            base: self.base,
            granularity: self.granularity,
            per_topic: self.per_topic,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Concurrency {
    pub sessions: usize,
    pub embedding: usize,
}

impl Default for Concurrency {
    fn default() -> Self {
        Self {
            sessions: 4,
            embedding: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub paths: Paths,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub generation: GenerationConfig,
    #[serde(default)]
    pub embedding: EmbeddingConfig,
    #[serde(default)]
    pub clustering: ClusteringConfig,
    #[serde(default)]
    pub diversity: DiversityConfig,
    #[serde(default)]
    pub concurrency: Concurrency,
}

impl PipelineConfig {
    pub fn new(paths: Paths) -> Self {
        Self {
            paths,
            seed: None,
            generation: GenerationConfig::default(),
            embedding: EmbeddingConfig::default(),
            clustering: ClusteringConfig::default(),
            diversity: DiversityConfig::default(),
            concurrency: Concurrency::default(),
        }
    }

    /// Loads, resolves relative paths against the file's directory and validates.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let mut config: PipelineConfig = crate::io::read_json(path)?;
        let base = path.parent().unwrap_or(Path::new(""));
        config.paths.resolve(base);
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let mut seen = BTreeSet::new();
        for (name, path) in self.paths.all() {
            if !seen.insert(path) {
                return Err(CliError::Config(format!(
                    "path for `{name}` ({}) is used twice",
                    path.display()
                )));
            }
        }
        let c = &self.clustering;
        if c.k_min > c.k_max {
            return Err(CliError::Config(format!("k_min {} > k_max {}", c.k_min, c.k_max)));
        }
        if c.k_min < 2 {
            return Err(CliError::Config("k_min must be at least 2".into()));
        }
        if c.top == 0 || c.restarts == 0 {
            return Err(CliError::Config("top and restarts must be at least 1".into()));
        }
        let b = self.diversity.base;
        if !(b.is_finite() && b > 0.0 && b != 1.0) {
            return Err(CliError::Config(format!("entropy base {b} is not a valid log base")));
        }
        if self.concurrency.sessions == 0 || self.concurrency.embedding == 0 {
            return Err(CliError::Config("concurrency limits must be at least 1".into()));
        }
        Ok(())
    }
}

/// Endpoint and key for an HTTP provider.
#[derive(Clone)]
pub struct Credentials {
    pub base_url: String,
    pub api_key: Option<String>,
}

impl std::fmt::Debug for Credentials {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Credentials")
            .field("base_url", &self.base_url)
            .field("api_key", &self.api_key.as_ref().map(|_| "<redacted>"))
            .finish()
    }
}

/// Reads `CW_PROVIDER_BASE_URL[_NAME]` and `CW_PROVIDER_API_KEY[_NAME]`,
/// preferring the suffixed variables when a provider name is given.
pub fn credentials(name: Option<&str>) -> Result<Credentials, CliError> {
    credentials_from(name, |k| std::env::var(k).ok())
}

pub fn credentials_from(
    name: Option<&str>,
    lookup: impl Fn(&str) -> Option<String>,
) -> Result<Credentials, CliError> {
    let get = |var: &str| {
        name.and_then(|n| lookup(&format!("{var}_{}", n.to_ascii_uppercase())))
            .or_else(|| lookup(var))
            .filter(|v| !v.is_empty())
    };
    let base_url = get(BASE_URL_VAR).ok_or_else(|| {
        let var = match name {
            Some(n) => format!("{BASE_URL_VAR}_{} or {BASE_URL_VAR}", n.to_ascii_uppercase()),
            None => BASE_URL_VAR.to_string(),
        };
        CliError::Config(format!("{var} is not set"))
    })?;
    Ok(Credentials {
        base_url,
        api_key: get(API_KEY_VAR),
    })
}

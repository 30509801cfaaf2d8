//! Pipeline stages. Each reads the previous stage's artifact, writes its own
//! through a `.partial` file and reports what it consumed and produced.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Duration;

use crowdwrite_core::brainwrite::{
    parse_topics, run_plan, ExperimentPlan, GenerationBackend, HttpChatBackend, MockBackend, PersonaPool,
};
use crowdwrite_core::clustering::{cluster_corpus, ClusteringDocument, SweepParams};
use crowdwrite_core::corpus::{parse_records, partition, write_records, CorpusIndex, IdeaRecord};
use crowdwrite_core::diversity::{diversity_report, DiversityReport, ReportOptions};
use crowdwrite_core::embedding::{
    embed_corpus, EmbedOptions, EmbeddingCache, EmbeddingProvider, HttpEmbeddingProvider, MockEmbeddingProvider,
    RetryPolicy,
};
use serde_json::json;
use tracing::{info, warn};

use crate::config::{credentials, EmbeddingConfig, GenerationConfig, PipelineConfig, ProviderKind, ReportFormat};
use crate::error::CliError;
use crate::io::{open, read_json, require, to_json_bytes, write_atomic, write_partial};
use crate::manifest::{digest, Manifest, StageRecord};
use crate::render::render;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Stage {
    Session,
    Embed,
    Cluster,
    Diversity,
    Report,
}

impl Stage {
    pub const ALL: [Stage; 5] = [Stage::Session, Stage::Embed, Stage::Cluster, Stage::Diversity, Stage::Report];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Session => "session",
            Stage::Embed => "embed",
            Stage::Cluster => "cluster",
            Stage::Diversity => "diversity",
            Stage::Report => "report",
        }
    }

    /// Whether the stage draws on the seed.
    pub fn is_randomized(self) -> bool {
        matches!(self, Stage::Session | Stage::Cluster)
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Stage {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Stage::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| format!("unknown stage `{s}`"))
    }
}

/// Parses `session,embed` style lists; `all` selects every stage.
pub fn parse_stages(list: &str) -> Result<Vec<Stage>, String> {
    if list.trim() == "all" {
        return Ok(Stage::ALL.to_vec());
    }
    let mut stages = list
        .split(',')
        .map(|s| s.trim().parse())
        .collect::<Result<Vec<Stage>, _>>()?;
    stages.sort();
    stages.dedup();
    Ok(stages)
}

/// What a stage consumed and produced.
#[derive(Debug, Clone)]
pub struct StageOutput {
    pub seed: Option<u64>,
    pub params: serde_json::Value,
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
}

impl StageOutput {
    pub fn record(&self, base: &Path) -> Result<StageRecord, CliError> {
        let digests = |paths: &[PathBuf]| -> Result<Vec<_>, CliError> {
            paths.iter().filter(|p| p.exists()).map(|p| digest(p, base)).collect()
        };
        Ok(StageRecord {
            seed: self.seed,
            params: self.params.clone(),
            inputs: digests(&self.inputs)?,
            outputs: digests(&self.outputs)?,
        })
    }
}

pub fn load_records(path: &Path) -> Result<Vec<IdeaRecord>, CliError> {
    parse_records(open(path)?).map_err(|e| CliError::parse(path, e))
}

pub fn load_corpus(path: &Path) -> Result<CorpusIndex, CliError> {
    Ok(partition(load_records(path)?)?)
}

pub struct SessionArgs<'a> {
    pub plan: &'a Path,
    pub topics: &'a Path,
    pub corpus: &'a Path,
    pub transcripts: &'a Path,
    pub personas: Option<&'a Path>,
    pub seed: u64,
    pub concurrency: usize,
}

/// Runs every (condition, topic) session of the plan. When a session ends
/// early the corpus and transcripts are left as `.partial` files.
pub fn session_stage(args: &SessionArgs, backend: &dyn GenerationBackend) -> Result<StageOutput, CliError> {
    let mut plan: ExperimentPlan = read_json(args.plan)?;
    plan.seed = args.seed;
    let topics = parse_topics(open(args.topics)?).map_err(|e| CliError::parse(args.topics, e))?;
    let pool = match args.personas {
        Some(p) => {
            require(p)?;
            let text = std::fs::read_to_string(p).map_err(|e| CliError::io(p, e))?;
            PersonaPool::from_json(&text)?
        }
        None => PersonaPool::bundled(),
    };
    let transcripts = run_plan(&plan, &topics, backend, &pool, args.concurrency)?;
    let records: Vec<IdeaRecord> = transcripts.iter().flat_map(|t| t.records.iter().cloned()).collect();
    let mut corpus = Vec::new();
    write_records(&mut corpus, &records)?;
    let transcript_bytes = to_json_bytes(&transcripts);

    let failures: Vec<String> = transcripts
        .iter()
        .filter(|t| t.partial)
        .map(|t| {
            format!(
                "{} {}: {}",
                t.topic_id,
                t.config.condition.cell(),
                t.failure.as_deref().unwrap_or("unknown failure")
            )
        })
        .collect();
    if !failures.is_empty() {
        let c = write_partial(args.corpus, &corpus)?;
        let t = write_partial(args.transcripts, &transcript_bytes)?;
        return Err(CliError::Partial(format!(
            "{} session(s) ended early ({}); kept {} and {}",
            failures.len(),
            failures.join("; "),
            c.display(),
            t.display()
        )));
    }
    write_atomic(args.corpus, &corpus)?;
    write_atomic(args.transcripts, &transcript_bytes)?;
    info!(sessions = transcripts.len(), records = records.len(), "sessions complete");

    let mut inputs = vec![args.plan.to_path_buf(), args.topics.to_path_buf()];
    inputs.extend(args.personas.map(Path::to_path_buf));
    Ok(StageOutput {
        seed: Some(args.seed),
        params: json!({ "plan": plan, "backend": backend.backend_id() }),
        inputs,
        outputs: vec![args.corpus.to_path_buf(), args.transcripts.to_path_buf()],
    })
}

pub struct EmbedArgs<'a> {
    pub corpus: &'a Path,
    pub cache: &'a Path,
    pub concurrency: usize,
    pub retry: RetryPolicy,
}

pub fn embed_stage(args: &EmbedArgs, provider: &dyn EmbeddingProvider) -> Result<StageOutput, CliError> {
    let records = load_records(args.corpus)?;
    let mut cache = EmbeddingCache::open(args.cache)?;
    let options = EmbedOptions {
        concurrency: args.concurrency,
        retry: args.retry,
    };
    let (set, stats) = embed_corpus(&records, provider, &mut cache, options)?;
    info!(hits = stats.cache_hits, embedded = stats.embedded, dim = set.dim, "embedding complete");
    Ok(StageOutput {
        seed: None,
        params: json!({ "provider": provider.provider_id(), "model": provider.model_id(), "dim": set.dim }),
        inputs: vec![args.corpus.to_path_buf()],
        outputs: vec![args.cache.to_path_buf()],
    })
}

pub struct ClusterArgs<'a> {
    pub corpus: &'a Path,
    pub cache: &'a Path,
    pub clusterings: &'a Path,
    pub sweep: SweepParams,
}

pub fn cluster_stage(args: &ClusterArgs) -> Result<StageOutput, CliError> {
    let index = load_corpus(args.corpus)?;
    require(args.cache)?;
    let cache = EmbeddingCache::open(args.cache)?;
    let ids: Vec<String> = index.records().iter().map(|r| r.id.clone()).collect();
    let set = cache.to_set(&ids)?;
    let doc = cluster_corpus(&index, &set, args.sweep)?;
    for g in &doc.groups {
        for w in &g.warnings {
            warn!(group = %g.group, "{w}");
        }
    }
    write_atomic(args.clusterings, &to_json_bytes(&doc))?;
    Ok(StageOutput {
        seed: Some(args.sweep.seed),
        params: json!({ "sweep": args.sweep }),
        inputs: vec![args.corpus.to_path_buf(), args.cache.to_path_buf()],
        outputs: vec![args.clusterings.to_path_buf()],
    })
}

pub struct DiversityArgs<'a> {
    pub corpus: &'a Path,
    pub clusterings: &'a Path,
    pub report: &'a Path,
    pub options: ReportOptions,
}

pub fn diversity_stage(args: &DiversityArgs) -> Result<StageOutput, CliError> {
    let index = load_corpus(args.corpus)?;
    let doc: ClusteringDocument = read_json(args.clusterings)?;
    let report = diversity_report(&index, &doc.groups, args.options)?;
    write_atomic(args.report, &to_json_bytes(&report))?;
    Ok(StageOutput {
        seed: Some(doc.params.seed),
        params: json!({ "options": args.options }),
        inputs: vec![args.corpus.to_path_buf(), args.clusterings.to_path_buf()],
        outputs: vec![args.report.to_path_buf()],
    })
}

pub fn report_stage(report: &Path, rendered: &Path, format: ReportFormat) -> Result<StageOutput, CliError> {
    let parsed: DiversityReport = read_json(report)?;
    write_atomic(rendered, render(&parsed, format).as_bytes())?;
    Ok(StageOutput {
        seed: None,
        params: json!({ "format": format }),
        inputs: vec![report.to_path_buf()],
        outputs: vec![rendered.to_path_buf()],
    })
}

pub fn generation_backend(config: &GenerationConfig) -> Result<Box<dyn GenerationBackend>, CliError> {
    Ok(match config.backend {
        ProviderKind::Mock => Box::new(MockBackend::new()),
        ProviderKind::Http => {
            let c = credentials(config.provider_name.as_deref())?;
            Box::new(HttpChatBackend::new(c.base_url, c.api_key))
        }
    })
}

pub fn embedding_provider(config: &EmbeddingConfig) -> Result<Box<dyn EmbeddingProvider>, CliError> {
    Ok(match config.provider {
        ProviderKind::Mock => Box::new(MockEmbeddingProvider::new(config.model.clone(), config.dim)),
        ProviderKind::Http => {
            let c = credentials(config.provider_name.as_deref())?;
            Box::new(HttpEmbeddingProvider::new(
                config.provider_id(),
                c.base_url,
                c.api_key,
                config.model.clone(),
            ))
        }
    })
}

pub fn retry_policy(config: &EmbeddingConfig) -> RetryPolicy {
    RetryPolicy {
        max_attempts: config.max_attempts,
        base_delay: Duration::from_millis(config.retry_delay_ms),
    }
}

/// Runs `stages` in pipeline order, recording each completed stage in the
/// manifest before starting the next.
pub fn run_pipeline(config: &PipelineConfig, stages: &[Stage], seed: u64) -> Result<Manifest, CliError> {
    config.validate()?;
    let p = &config.paths;
    let base = p.manifest.parent().unwrap_or(Path::new("")).to_path_buf();
    let mut manifest = Manifest::load_or_default(&p.manifest)?;
    let mut ordered = stages.to_vec();
    ordered.sort();
    ordered.dedup();

    for stage in ordered {
        info!(%stage, "starting stage");
        let output = match stage {
            Stage::Session => {
                let backend = generation_backend(&config.generation)?;
                session_stage(
                    &SessionArgs {
                        plan: &p.plan,
                        topics: &p.topics,
                        corpus: &p.corpus,
                        transcripts: &p.transcripts,
                        personas: p.personas.as_deref(),
                        seed,
                        concurrency: config.concurrency.sessions,
                    },
                    backend.as_ref(),
                )?
            }
            Stage::Embed => {
                let provider = embedding_provider(&config.embedding)?;
                embed_stage(
                    &EmbedArgs {
                        corpus: &p.corpus,
                        cache: &p.cache,
                        concurrency: config.concurrency.embedding,
                        retry: retry_policy(&config.embedding),
                    },
                    provider.as_ref(),
                )?
            }
            Stage::Cluster => cluster_stage(&ClusterArgs {
                corpus: &p.corpus,
                cache: &p.cache,
                clusterings: &p.clusterings,
                sweep: config.clustering.sweep(seed),
            })?,
            Stage::Diversity => diversity_stage(&DiversityArgs {
                corpus: &p.corpus,
                clusterings: &p.clusterings,
                report: &p.report,
                options: config.diversity.options(),
            })?,
            Stage::Report => {
                let format = config
                    .diversity
                    .format
                    .unwrap_or_else(|| ReportFormat::from_extension(&p.rendered));
                report_stage(&p.report, &p.rendered, format)?
            }
        };
        manifest.stages.insert(stage.name().to_string(), output.record(&base)?);
        manifest.save(&p.manifest)?;
    }
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stage_lists() {
        assert_eq!(parse_stages("diversity,cluster").unwrap(), vec![Stage::Cluster, Stage::Diversity]);
        assert_eq!(parse_stages("all").unwrap(), Stage::ALL.to_vec());
        assert!(parse_stages("cluster,plot").is_err());
    }
}

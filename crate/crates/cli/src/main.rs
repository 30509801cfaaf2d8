use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use crowdwrite::config::{self, credentials, PipelineConfig, ProviderKind, ReportFormat};
use crowdwrite::error::CliError;
use crowdwrite::io::{open, read_json, require, to_json_bytes, write_atomic};
use crowdwrite::render::render;
use crowdwrite::stages::{self, parse_stages, ClusterArgs, DiversityArgs, EmbedArgs, SessionArgs};
use crowdwrite_core::clustering::SweepParams;
use crowdwrite_core::corpus::validate_corpus;
use crowdwrite_core::diversity::{
    compare_conditions, relative_improvement, DiversityReport, Granularity, ReportOptions, TestKind,
};
use crowdwrite_core::sentiment::{
    read_fixtures, score_interviews, Interview, LogitProvider, Normalization, PromptKind, ReplayProvider,
};
use crowdwrite_core::survey::{score_csv, Instrument};
use serde_json::json;

#[derive(Parser)]
#[command(name = "crowdwrite", version, about = "Brainwrite idea generation and diversity evaluation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate Brainwrite sessions.
    #[command(subcommand)]
    Session(SessionCommand),
    /// Embed every record of a corpus through the vector cache.
    Embed(EmbedCmd),
    /// Sweep k and keep the best clusterings per group.
    Cluster(ClusterCmd),
    /// Per-cell cluster-occupancy entropy.
    Diversity(DiversityCmd),
    /// Compare two cells of a diversity report.
    Compare(CompareCmd),
    /// Render a diversity report.
    Report(ReportCmd),
    /// Next-token sentiment scoring.
    #[command(subcommand)]
    Sentiment(SentimentCommand),
    /// Questionnaire scoring.
    #[command(subcommand)]
    Survey(SurveyCommand),
    /// Check a corpus for gaps and inconsistencies.
    Validate(ValidateCmd),
    /// Run a subset of stages from a config file.
    Pipeline(PipelineCmd),
}

#[derive(Subcommand)]
enum SessionCommand {
    Run(SessionRunCmd),
}

#[derive(Args)]
struct SeedArg {
    /// Seed for every randomized step. Defaults to 0.
    #[arg(long)]
    seed: Option<u64>,
}

impl SeedArg {
    fn resolve(&self, fallback: Option<u64>) -> u64 {
        self.seed.or(fallback).unwrap_or_else(|| {
            eprintln!("notice: no --seed given; using seed 0");
            0
        })
    }
}

#[derive(Args)]
struct SessionRunCmd {
    #[arg(long)]
    plan: PathBuf,
    #[arg(long)]
    topics: PathBuf,
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    transcripts: PathBuf,
    /// Persona pool JSON replacing the bundled one.
    #[arg(long)]
    personas: Option<PathBuf>,
    #[arg(long, default_value = "mock")]
    backend: ProviderKind,
    /// Selects `CW_PROVIDER_*_<NAME>` credentials.
    #[arg(long)]
    provider_name: Option<String>,
    #[arg(long, default_value_t = 4)]
    concurrency: usize,
    #[command(flatten)]
    seed: SeedArg,
}

#[derive(Args)]
struct EmbedCmd {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    cache: PathBuf,
    #[arg(long, default_value = "mock")]
    provider: ProviderKind,
    #[arg(long)]
    provider_name: Option<String>,
    #[arg(long, default_value = "mock-embed")]
    model: String,
    /// Vector length of the mock provider.
    #[arg(long, default_value_t = crowdwrite_core::embedding::DEFAULT_DIM)]
    dim: usize,
    #[arg(long, default_value_t = 4)]
    concurrency: usize,
    #[arg(long, default_value_t = 3)]
    max_attempts: u32,
    #[arg(long, default_value_t = 500)]
    retry_delay_ms: u64,
}

#[derive(Args)]
struct ClusterCmd {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    cache: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 3)]
    k_min: usize,
    #[arg(long, default_value_t = 12)]
    k_max: usize,
    #[arg(long, default_value_t = 10)]
    restarts: usize,
    #[arg(long, default_value_t = 5)]
    top: usize,
    #[arg(long, default_value_t = 300)]
    max_iter: usize,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    #[command(flatten)]
    seed: SeedArg,
}

#[derive(Clone, Copy, ValueEnum)]
enum GranularityArg {
    Class,
    ClassModel,
}

#[derive(Args)]
struct DiversityCmd {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    clusterings: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 2.0)]
    base: f64,
    #[arg(long, value_enum, default_value = "class-model")]
    granularity: GranularityArg,
    /// Also report entropy per topic (needed by `compare`).
    #[arg(long)]
    per_topic: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum TestArg {
    Welch,
    MannWhitney,
}

#[derive(Args)]
struct CompareCmd {
    #[arg(long)]
    report: PathBuf,
    /// Treatment cell key, e.g. `G1/bk/*/2`.
    #[arg(long)]
    a: String,
    /// Baseline cell key.
    #[arg(long)]
    b: String,
    #[arg(long, value_enum, default_value = "welch")]
    test: TestArg,
}

#[derive(Args)]
struct ReportCmd {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value = "md")]
    format: ReportFormat,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum SentimentCommand {
    Score(SentimentScoreCmd),
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    General,
    Reasoning,
}

#[derive(Clone, Copy, ValueEnum)]
enum NormalizationArg {
    ShiftFloor,
    RawSum,
}

#[derive(Args)]
struct SentimentScoreCmd {
    /// JSON-Lines of `{interview_id, text}`.
    #[arg(long)]
    interviews: PathBuf,
    /// Recorded distributions (JSON array or JSON-Lines).
    #[arg(long)]
    fixtures: PathBuf,
    #[arg(long, value_enum, default_value = "general")]
    kind: KindArg,
    #[arg(long, value_enum, default_value = "shift-floor")]
    normalization: NormalizationArg,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long, default_value_t = 4)]
    concurrency: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum SummaryFormat {
    Json,
    Csv,
}

#[derive(Args)]
struct SurveyArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum, default_value = "json")]
    format: SummaryFormat,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum SurveyCommand {
    /// System Usability Scale, columns `q1..q10`.
    Sus(SurveyArgs),
    /// Raw NASA-TLX, columns `mental..frustration`.
    Tlx {
        #[command(flatten)]
        args: SurveyArgs,
        /// Score performance as `100 - rating`.
        #[arg(long)]
        invert_performance: bool,
    },
}

#[derive(Args)]
struct ValidateCmd {
    #[arg(long)]
    corpus: PathBuf,
}

#[derive(Args)]
struct PipelineCmd {
    #[arg(long)]
    config: PathBuf,
    /// Comma-separated subset of session,embed,cluster,diversity,report, or `all`.
    #[arg(long, default_value = "all")]
    stages: String,
    #[command(flatten)]
    seed: SeedArg,
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(p) => write_atomic(p, text.as_bytes()),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .map_err(|e| CliError::io(Path::new("<stdout>"), e))
        }
    }
}

fn read_interviews(path: &Path) -> Result<Vec<Interview>, CliError> {
    use std::io::BufRead;
    let mut out = Vec::new();
    for (i, line) in open(path)?.lines().enumerate() {
        let line = line.map_err(|e| CliError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| CliError::parse(path, format!("line {}: {e}", i + 1)))?);
    }
    Ok(out)
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Session(SessionCommand::Run(cmd)) => {
            let seed = cmd.seed.resolve(None);
            let backend = stages::generation_backend(&config::GenerationConfig {
                backend: cmd.backend,
                provider_name: cmd.provider_name.clone(),
            })?;
            stages::session_stage(
                &SessionArgs {
                    plan: &cmd.plan,
                    topics: &cmd.topics,
                    corpus: &cmd.corpus,
                    transcripts: &cmd.transcripts,
                    personas: cmd.personas.as_deref(),
                    seed,
                    concurrency: cmd.concurrency.max(1),
                },
                backend.as_ref(),
            )?;
        }
        Command::Embed(cmd) => {
            let config = config::EmbeddingConfig {
                provider: cmd.provider,
                provider_name: cmd.provider_name,
                model: cmd.model,
                dim: cmd.dim,
                max_attempts: cmd.max_attempts,
                retry_delay_ms: cmd.retry_delay_ms,
            };
            if config.provider == ProviderKind::Http {
                credentials(config.provider_name.as_deref())?;
            }
            let provider = stages::embedding_provider(&config)?;
            stages::embed_stage(
                &EmbedArgs {
                    corpus: &cmd.corpus,
                    cache: &cmd.cache,
                    concurrency: cmd.concurrency.max(1),
                    retry: stages::retry_policy(&config),
                },
                provider.as_ref(),
            )?;
        }
        Command::Cluster(cmd) => {
            let seed = cmd.seed.resolve(None);
            stages::cluster_stage(&ClusterArgs {
                corpus: &cmd.corpus,
                cache: &cmd.cache,
                clusterings: &cmd.out,
                sweep: SweepParams {
                    k_min: cmd.k_min,
                    k_max: cmd.k_max,
                    restarts: cmd.restarts,
                    seed,
                    top: cmd.top,
                    max_iter: cmd.max_iter,
                    tol: cmd.tol,
                },
            })?;
        }
        Command::Diversity(cmd) => {
            stages::diversity_stage(&DiversityArgs {
                corpus: &cmd.corpus,
                clusterings: &cmd.clusterings,
                report: &cmd.out,
                options: ReportOptions {
                    base: cmd.base,
                    granularity: match cmd.granularity {
                        GranularityArg::Class => Granularity::Class,
                        GranularityArg::ClassModel => Granularity::ClassModel,
                    },
                    per_topic: cmd.per_topic,
                },
            })?;
        }
        Command::Compare(cmd) => {
            let report: DiversityReport = read_json(&cmd.report)?;
            let mean = |key: &str| {
                report
                    .cell(key)
                    .map(|c| c.entropy_mean)
                    .ok_or_else(|| CliError::Config(format!("no cell `{key}` in {}", cmd.report.display())))
            };
            let (mean_a, mean_b) = (mean(&cmd.a)?, mean(&cmd.b)?);
            let test = match cmd.test {
                TestArg::Welch => TestKind::Welch,
                TestArg::MannWhitney => TestKind::MannWhitney,
            };
            let result = compare_conditions(&report, &cmd.a, &cmd.b, test)?;
            let out = json!({
                "a": cmd.a,
                "b": cmd.b,
                "entropy_mean_a": mean_a,
                "entropy_mean_b": mean_b,
                "relative_improvement_percent": relative_improvement(mean_a, mean_b).to_string(),
                "test": result,
            });
            emit(None, &String::from_utf8(to_json_bytes(&out)).expect("utf-8"))?;
        }
        Command::Report(cmd) => {
            let report: DiversityReport = read_json(&cmd.input)?;
            emit(cmd.out.as_deref(), &render(&report, cmd.format))?;
        }
        Command::Sentiment(SentimentCommand::Score(cmd)) => {
            let interviews = read_interviews(&cmd.interviews)?;
            let fixtures = read_fixtures(open(&cmd.fixtures)?)?;
            let kind = match cmd.kind {
                KindArg::General => PromptKind::General,
                KindArg::Reasoning => PromptKind::Reasoning,
            };
            let normalization = match cmd.normalization {
                NormalizationArg::ShiftFloor => Normalization::ShiftFloor,
                NormalizationArg::RawSum => Normalization::RawSum,
            };
            let providers = ReplayProvider::from_fixtures(fixtures, kind);
            let refs: Vec<&dyn LogitProvider> = providers.iter().map(|p| p as &dyn LogitProvider).collect();
            let report = score_interviews(&interviews, &refs, normalization, cmd.concurrency.max(1))?;
            write_atomic(&cmd.out, &to_json_bytes(&report))?;
            if let Some(csv) = &cmd.csv {
                write_atomic(csv, report.to_csv().as_bytes())?;
            }
        }
        Command::Survey(cmd) => {
            let (args, instrument, invert) = match &cmd {
                SurveyCommand::Sus(a) => (a, Instrument::Sus, false),
                SurveyCommand::Tlx { args, invert_performance } => (args, Instrument::Tlx, *invert_performance),
            };
            let summary = score_csv(open(&args.input)?, instrument, invert)?;
            let text = match args.format {
                SummaryFormat::Json => String::from_utf8(to_json_bytes(&summary)).expect("utf-8"),
                SummaryFormat::Csv => summary.to_csv(),
            };
            emit(args.out.as_deref(), &text)?;
        }
        Command::Validate(cmd) => {
            let index = stages::load_corpus(&cmd.corpus)?;
            let report = validate_corpus(&index);
            emit(None, &String::from_utf8(to_json_bytes(&report)).expect("utf-8"))?;
            if !report.is_clean() {
                return Err(CliError::Config(format!("{} issue(s) found", report.issues.len())));
            }
        }
        Command::Pipeline(cmd) => {
            require(&cmd.config)?;
            let config = PipelineConfig::load(&cmd.config)?;
            let stages = parse_stages(&cmd.stages).map_err(CliError::Config)?;
            let seed = if stages.iter().any(|s| s.is_randomized()) {
                cmd.seed.resolve(config.seed)
            } else {
                cmd.seed.seed.or(config.seed).unwrap_or(0)
            };
            stages::run_pipeline(&config, &stages, seed)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env()
                .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new("warn")),
        )
        .with_writer(std::io::stderr)
        .init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

//! The `scope` command line.
//!
//! Settings resolve as flags, then environment variables, then the TOML
//! config file, then defaults. Errors print one line,
//! `error: <category>: <message>`, and exit with 2 for usage errors and 1
//! otherwise.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use crate::agents::{AgentError, BuildRecord, Pipeline, PipelineConfig, PromptSet};
use crate::bench::{
    dataset_to_jsonl, evaluate_with, generate_dataset, load_dataset, report, sample_per_level, BenchError,
    DatasetAdapter, EvalConfig, EvalContext, Method, OracleInputAgent,
};
use crate::domains::{DomainError, Instance};
use crate::engine::{infer, BundleError, EngineError, Inference, Limit, SolverBundle};
use crate::fsutil::write_atomic;
use crate::llm::{
    ChatProvider, LiveConfig, LiveProvider, LlmError, PricingTable, RecordingProvider, ReplayStore,
    ScriptedProvider,
};
use crate::repr::{ExampleCase, ReprError, StructuredRepresentation};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {msg}")]
    Io { path: String, msg: String },
    #[error(transparent)]
    Provider(#[from] LlmError),
    #[error(transparent)]
    Pipeline(#[from] AgentError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Bundle(#[from] BundleError),
    #[error(transparent)]
    Dataset(#[from] BenchError),
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error(transparent)]
    Representation(#[from] ReprError),
}

impl CliError {
    pub fn category(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Io { .. } => "io",
            CliError::Provider(_) => "provider",
            CliError::Pipeline(AgentError::Provider(_)) => "provider",
            CliError::Pipeline(AgentError::PatienceExhausted { .. }) => "patience_exhausted",
            CliError::Pipeline(AgentError::SchemaDrift { .. }) => "schema_drift",
            CliError::Pipeline(AgentError::AgentOutputUnparseable { .. }) => "agent_output",
            CliError::Pipeline(_) => "pipeline",
            CliError::Engine(_) => "engine",
            CliError::Bundle(_) => "bundle",
            CliError::Dataset(_) => "dataset",
            CliError::Domain(_) => "instance",
            CliError::Representation(_) => "representation",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            _ => 1,
        }
    }
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io {
        path: path.display().to_string(),
        msg: e.to_string(),
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| io_err(path, e))
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    write_atomic(path, text.as_bytes()).map_err(|e| io_err(path, e))
}

#[derive(Debug, Parser)]
#[command(name = "scope", version, about = "Build solvers from one worked example and run them")]
pub struct Cli {
    /// TOML config file.
    #[arg(long, global = true, env = "SCOPE_CONFIG")]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run Stages I and II on a worked example and write a bundle directory.
    BuildSolver(BuildArgs),
    /// Run a bundle on one query.
    Infer(InferArgs),
    /// Run a bundle over a dataset and write a report.
    Eval(EvalArgs),
    /// Print the reference answer of an instance file.
    Oracle(OracleArgs),
    /// Write a synthetic dataset.
    GenData(GenDataArgs),
    /// Build a solver and record every agent exchange to a transcript.
    Record(RecordArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProviderKind {
    /// OpenAI-compatible HTTP endpoint.
    Live,
    /// Recorded `.transcript.jsonl`.
    Replay,
    /// JSON file of canned responses per role.
    Scripted,
    /// Input Agent answering from the domain query parser.
    Oracle,
}

#[derive(Debug, Clone, Args)]
pub struct ProviderArgs {
    #[arg(long, value_enum, env = "SCOPE_PROVIDER")]
    pub provider: Option<ProviderKind>,
    /// Transcript to replay from.
    #[arg(long)]
    pub transcript: Option<PathBuf>,
    /// Script of canned responses.
    #[arg(long)]
    pub script: Option<PathBuf>,
    #[arg(long, env = "SCOPE_BASE_URL")]
    pub base_url: Option<String>,
    #[arg(long, env = "SCOPE_API_KEY", hide_env_values = true)]
    pub api_key: Option<String>,
    #[arg(long, env = "SCOPE_MODEL")]
    pub model: Option<String>,
    /// Append every exchange to this transcript.
    #[arg(long)]
    pub record_to: Option<PathBuf>,
    /// Directory of prompt template overrides.
    #[arg(long)]
    pub prompts: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct PipelineArgs {
    #[arg(long)]
    pub patience: Option<u32>,
    /// Put every parameter in the combinations.
    #[arg(long)]
    pub no_split: bool,
    /// Skip the three representation passes.
    #[arg(long)]
    pub no_optimization: bool,
    /// Keep the first usable spec of each stage.
    #[arg(long)]
    pub no_refinement: bool,
    #[arg(long)]
    pub candidate_limit: Option<usize>,
}

#[derive(Debug, Args)]
pub struct BuildArgs {
    /// Worked example (`.ex.json`).
    #[arg(long)]
    pub example: PathBuf,
    /// Bundle directory to write.
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub provider: ProviderArgs,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
}

#[derive(Debug, Args)]
#[command(group = clap::ArgGroup::new("input").required(true).args(["query", "query_file", "instance", "representation"]))]
pub struct InferArgs {
    #[arg(long)]
    pub bundle: PathBuf,
    /// Query text, read by the Input Agent.
    #[arg(long)]
    pub query: Option<String>,
    /// File holding the query text.
    #[arg(long)]
    pub query_file: Option<PathBuf>,
    /// Instance file; its exact representation skips the Input Agent.
    #[arg(long)]
    pub instance: Option<PathBuf>,
    /// Representation file; skips the Input Agent.
    #[arg(long)]
    pub representation: Option<PathBuf>,
    /// Also write the answer here.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub provider: ProviderArgs,
    #[arg(long)]
    pub candidate_limit: Option<usize>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Solver bundle; required by the `scope` method.
    #[arg(long)]
    pub bundle: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = EvalMethod::Scope)]
    pub method: EvalMethod,
    #[arg(long)]
    pub dataset: PathBuf,
    /// Directory for report.csv, report.json and outcomes.jsonl.
    #[arg(long)]
    pub report: PathBuf,
    /// Worker threads.
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Evaluate only the first N instances of each complexity level.
    #[arg(long)]
    pub sample_per_level: Option<usize>,
    /// Extra pricing rows (TOML).
    #[arg(long)]
    pub pricing: Option<PathBuf>,
    #[command(flatten)]
    pub provider: ProviderArgs,
    #[arg(long)]
    pub candidate_limit: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EvalMethod {
    /// Input Agent, then the solver bundle.
    Scope,
    /// One model call per query, reply scored as the answer.
    Direct,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[arg(long)]
    pub instance: PathBuf,
    /// Print the structured solution instead of the answer text.
    #[arg(long)]
    pub structured: bool,
}

#[derive(Debug, Args)]
pub struct GenDataArgs {
    #[arg(long, value_parser = ["trip", "meeting"])]
    pub domain: String,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub count: usize,
    #[arg(long)]
    pub min_level: u32,
    #[arg(long)]
    pub max_level: u32,
    /// Dataset file (JSON lines).
    #[arg(long)]
    pub out: PathBuf,
    /// Also write one `.inst.json` per instance here.
    #[arg(long)]
    pub instances_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RecordArgs {
    #[arg(long)]
    pub example: PathBuf,
    /// Transcript to write.
    #[arg(long)]
    pub out: PathBuf,
    /// Replace an existing transcript.
    #[arg(long)]
    pub force: bool,
    /// Also write the built bundle here.
    #[arg(long)]
    pub bundle_out: Option<PathBuf>,
    #[command(flatten)]
    pub provider: ProviderArgs,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
}

/// Contents of the `--config` file. Every key is optional.
#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub provider: ProviderFileConfig,
    pub pipeline: PipelineFileConfig,
    pub eval: EvalFileConfig,
    pub dataset: Option<DatasetAdapter>,
    pub pricing: Option<toml::Table>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProviderFileConfig {
    pub kind: Option<ProviderKind>,
    pub base_url: Option<String>,
    pub model: Option<String>,
    pub transcript: Option<PathBuf>,
    pub script: Option<PathBuf>,
    pub prompts: Option<PathBuf>,
    pub temperature: Option<f64>,
    pub max_retries: Option<u32>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineFileConfig {
    pub patience: Option<u32>,
    pub enable_formalization_split: Option<bool>,
    pub enable_optimization: Option<bool>,
    pub enable_refinement: Option<bool>,
    pub candidate_limit: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalFileConfig {
    pub jobs: Option<usize>,
    pub sample_per_level: Option<usize>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        match path {
            None => Ok(FileConfig::default()),
            Some(p) => toml::from_str(&read(p)?).map_err(|e| CliError::Usage(format!("config {}: {e}", p.display()))),
        }
    }

    fn pricing_table(&self, extra: Option<&Path>) -> Result<PricingTable, CliError> {
        let base = match &self.pricing {
            Some(t) => toml::to_string(t).map_err(|e| CliError::Usage(format!("config pricing: {e}")))?,
            None => String::new(),
        };
        let mut table = PricingTable::with_toml(&base)?;
        if let Some(p) = extra {
            let more = PricingTable::with_toml(&read(p)?)?;
            table.models.extend(more.models);
            table.aliases.extend(more.aliases);
        }
        Ok(table)
    }
}

fn pipeline_config(args: &PipelineArgs, file: &PipelineFileConfig) -> PipelineConfig {
    let d = PipelineConfig::default();
    PipelineConfig {
        patience: args.patience.or(file.patience).unwrap_or(d.patience),
        enable_formalization_split: !args.no_split
            && file.enable_formalization_split.unwrap_or(d.enable_formalization_split),
        enable_optimization: !args.no_optimization
            && file.enable_optimization.unwrap_or(d.enable_optimization),
        enable_refinement: !args.no_refinement && file.enable_refinement.unwrap_or(d.enable_refinement),
        candidate_limit: args
            .candidate_limit
            .or(file.candidate_limit)
            .unwrap_or(d.candidate_limit),
    }
}

fn prompt_set(args: &ProviderArgs, file: &FileConfig) -> Result<PromptSet, CliError> {
    match args.prompts.as_ref().or(file.provider.prompts.as_ref()) {
        Some(dir) => PromptSet::with_overrides(dir).map_err(|e| CliError::Pipeline(e.into())),
        None => Ok(PromptSet::default()),
    }
}

/// The provider selected by flags, env and config; `fallback` when nothing
/// selects one.
fn make_provider(
    args: &ProviderArgs,
    file: &FileConfig,
    fallback: Option<ProviderKind>,
) -> Result<Box<dyn ChatProvider>, CliError> {
    let kind = args
        .provider
        .or(file.provider.kind)
        .or(fallback)
        .ok_or_else(|| CliError::Usage("no provider selected; pass --provider or set SCOPE_PROVIDER".into()))?;
    let base: Box<dyn ChatProvider> = match kind {
        ProviderKind::Replay => {
            let path = args
                .transcript
                .as_ref()
                .or(file.provider.transcript.as_ref())
                .ok_or_else(|| CliError::Usage("replay needs --transcript".into()))?;
            Box::new(ReplayStore::load(path)?.provider())
        }
        ProviderKind::Scripted => {
            let path = args
                .script
                .as_ref()
                .or(file.provider.script.as_ref())
                .ok_or_else(|| CliError::Usage("scripted provider needs --script".into()))?;
            Box::new(ScriptedProvider::load(path)?)
        }
        ProviderKind::Oracle => Box::new(OracleInputAgent::default()),
        ProviderKind::Live => {
            let base_url = args
                .base_url
                .clone()
                .or_else(|| file.provider.base_url.clone())
                .ok_or_else(|| CliError::Usage("live provider needs --base-url or SCOPE_BASE_URL".into()))?;
            let model = args
                .model
                .clone()
                .or_else(|| file.provider.model.clone())
                .ok_or_else(|| CliError::Usage("live provider needs --model or SCOPE_MODEL".into()))?;
            let mut cfg = LiveConfig::new(base_url, model);
            cfg.api_key = args.api_key.clone();
            if let Some(t) = file.provider.temperature {
                cfg.temperature = Some(t);
            }
            if let Some(r) = file.provider.max_retries {
                cfg.max_retries = r;
            }
            Box::new(LiveProvider::new(cfg)?)
        }
    };
    match &args.record_to {
        Some(path) => Ok(Box::new(RecordingProvider::new(base, path)?)),
        None => Ok(base),
    }
}

fn load_example(path: &Path) -> Result<ExampleCase, CliError> {
    serde_json::from_str(&read(path)?).map_err(|e| io_err(path, format!("not a worked example: {e}")))
}

fn build(
    example: &Path,
    out: &Path,
    provider: &dyn ChatProvider,
    prompts: &PromptSet,
    config: PipelineConfig,
    stdout: &mut dyn Write,
) -> Result<(), CliError> {
    let example = load_example(example)?;
    let mut pipeline = Pipeline::new(provider, prompts, config);
    let built = pipeline.build(&example)?;
    built.save(out)?;
    let trace = &built.record.trace;
    let _ = writeln!(
        stdout,
        "bundle written to {} ({} agent calls, {} reflection rounds)",
        out.display(),
        built.exchanges.len(),
        trace.total_reflection_rounds()
    );
    Ok(())
}

fn cmd_build(args: BuildArgs, file: &FileConfig, stdout: &mut dyn Write) -> Result<(), CliError> {
    let provider = make_provider(&args.provider, file, None)?;
    let prompts = prompt_set(&args.provider, file)?;
    let config = pipeline_config(&args.pipeline, &file.pipeline);
    build(&args.example, &args.out, &*provider, &prompts, config, stdout)
}

fn cmd_record(args: RecordArgs, file: &FileConfig, stdout: &mut dyn Write) -> Result<(), CliError> {
    if args.out.exists() {
        if !args.force {
            return Err(CliError::Usage(format!(
                "{} exists; pass --force to replace it",
                args.out.display()
            )));
        }
        std::fs::remove_file(&args.out).map_err(|e| io_err(&args.out, e))?;
    }
    let inner = make_provider(&args.provider, file, None)?;
    let provider = RecordingProvider::new(inner, &args.out)?;
    let prompts = prompt_set(&args.provider, file)?;
    let config = pipeline_config(&args.pipeline, &file.pipeline);
    let example = load_example(&args.example)?;
    let built = Pipeline::new(&provider, &prompts, config).build(&example)?;
    if let Some(dir) = &args.bundle_out {
        built.save(dir)?;
    }
    let _ = writeln!(
        stdout,
        "recorded {} exchanges to {}",
        built.exchanges.len(),
        args.out.display()
    );
    Ok(())
}

fn limit(arg: Option<usize>, file: &FileConfig) -> Limit {
    arg.or(file.pipeline.candidate_limit)
        .map_or_else(Limit::default, Limit::Exhaustive)
}

fn cmd_infer(args: InferArgs, file: &FileConfig, stdout: &mut dyn Write) -> Result<(), CliError> {
    let bundle = SolverBundle::load(&args.bundle)?;
    let rep = if let Some(p) = &args.instance {
        Instance::load(p)?.to_representation()
    } else if let Some(p) = &args.representation {
        let json = crate::value::parse_json_strict(&read(p)?).map_err(|e| io_err(p, e))?;
        if json.get("combinations_description").is_some() {
            StructuredRepresentation::from_json(&json)?
        } else {
            StructuredRepresentation::from_parameters(&json, &bundle.schema)?
        }
    } else {
        let query = match (&args.query, &args.query_file) {
            (Some(q), _) => q.clone(),
            (None, Some(p)) => read(p)?,
            (None, None) => unreachable!("clap requires one input"),
        };
        let record = BuildRecord::load(&args.bundle)?;
        let provider = make_provider(&args.provider, file, None)?;
        let prompts = prompt_set(&args.provider, file)?;
        Pipeline::new(&*provider, &prompts, PipelineConfig::default())
            .input_agent(&record.exemplar(&bundle), &query)?
    };
    let text = match infer(&bundle, &rep, limit(args.candidate_limit, file))? {
        Inference::Delivered { answer, .. } => answer,
        Inference::NonDelivery => "NON-DELIVERY".to_string(),
    };
    if let Some(out) = &args.out {
        write(out, &format!("{text}\n"))?;
    }
    let _ = writeln!(stdout, "{text}");
    Ok(())
}

fn cmd_eval(args: EvalArgs, file: &FileConfig, stdout: &mut dyn Write) -> Result<(), CliError> {
    let adapter = file.dataset.clone().unwrap_or_default();
    let mut instances = load_dataset(&args.dataset, &adapter)?;
    if let Some(n) = args.sample_per_level.or(file.eval.sample_per_level) {
        instances = sample_per_level(&instances, n);
    }
    let prompts = prompt_set(&args.provider, file)?;
    let config = EvalConfig {
        jobs: args.jobs.or(file.eval.jobs).unwrap_or(1),
        limit: limit(args.candidate_limit, file),
        model: args.provider.model.clone().or_else(|| file.provider.model.clone()),
        pricing: file.pricing_table(args.pricing.as_deref())?,
    };
    if config.jobs == 0 {
        return Err(CliError::Usage("--jobs must be at least 1".into()));
    }
    let outcomes = match args.method {
        EvalMethod::Scope => {
            let dir = args
                .bundle
                .as_ref()
                .ok_or_else(|| CliError::Usage("the scope method needs --bundle".into()))?;
            let bundle = SolverBundle::load(dir)?;
            let exemplar = BuildRecord::load(dir)?.exemplar(&bundle);
            let provider = make_provider(&args.provider, file, Some(ProviderKind::Oracle))?;
            let ctx = EvalContext {
                bundle: &bundle,
                exemplar: &exemplar,
                prompts: &prompts,
            };
            evaluate_with(Method::Scope(ctx), &*provider, &instances, &config)?
        }
        EvalMethod::Direct => {
            let provider = make_provider(&args.provider, file, None)?;
            evaluate_with(Method::Direct(&prompts), &*provider, &instances, &config)?
        }
    };
    let rep = report(&outcomes);
    std::fs::create_dir_all(&args.report).map_err(|e| io_err(&args.report, e))?;
    let csv = rep.to_csv();
    write(&args.report.join("report.csv"), &csv)?;
    write(&args.report.join("report.json"), &rep.to_json_string())?;
    let lines: String = outcomes
        .iter()
        .map(|o| serde_json::to_string(o).expect("outcome serializes") + "\n")
        .collect();
    write(&args.report.join("outcomes.jsonl"), &lines)?;
    let _ = write!(stdout, "{csv}");
    Ok(())
}

fn cmd_oracle(args: OracleArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let inst = Instance::load(&args.instance)?;
    let text = if args.structured {
        inst.solve().map(|s| s.to_canonical_string())
    } else {
        inst.solve_and_render()
    };
    let text = text.unwrap_or_else(|| "NON-DELIVERY".into());
    let _ = writeln!(stdout, "{}", text.trim_end_matches('\n'));
    Ok(())
}

fn cmd_gen_data(args: GenDataArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    if args.min_level > args.max_level {
        return Err(CliError::Usage("--min-level must not exceed --max-level".into()));
    }
    let data = generate_dataset(&args.domain, args.seed, args.count, args.min_level..=args.max_level)?;
    if let Some(dir) = &args.instances_dir {
        std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
        for (b, inst) in &data {
            inst.save(&dir.join(format!("{}.inst.json", b.id)))?;
        }
    }
    let instances: Vec<_> = data.into_iter().map(|(b, _)| b).collect();
    write(&args.out, &dataset_to_jsonl(&instances))?;
    let _ = writeln!(stdout, "wrote {} instances to {}", instances.len(), args.out.display());
    Ok(())
}

/// Parses `argv` (program name first) and runs the command.
pub fn run<I, T>(argv: I, stdout: &mut dyn Write) -> Result<(), CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv).map_err(|e| match e.kind() {
        clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
            let _ = write!(stdout, "{e}");
            CliError::Usage(String::new())
        }
        _ => CliError::Usage(e.to_string()),
    })?;
    let file = FileConfig::load(cli.config.as_deref())?;
    match cli.command {
        Command::BuildSolver(a) => cmd_build(a, &file, stdout),
        Command::Infer(a) => cmd_infer(a, &file, stdout),
        Command::Eval(a) => cmd_eval(a, &file, stdout),
        Command::Oracle(a) => cmd_oracle(a, stdout),
        Command::GenData(a) => cmd_gen_data(a, stdout),
        Command::Record(a) => cmd_record(a, &file, stdout),
    }
}

/// Runs the command line and returns the process exit code.
pub fn main_with<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match run(argv, stdout) {
        Ok(()) => 0,
        // Help and version output.
        Err(CliError::Usage(msg)) if msg.is_empty() => 0,
        Err(e) => {
            let msg = e.to_string();
            let first = msg
                .lines()
                .map(str::trim)
                .filter(|l| !l.is_empty())
                .collect::<Vec<_>>()
                .join("; ");
            let _ = writeln!(stderr, "error: {}: {first}", e.category());
            e.exit_code()
        }
    }
}

//! `logsentinel` command-line interface.
//!
//! Each subcommand runs one pipeline stage and reads or writes only the files
//! named by its flags. `pipeline` chains every stage from a JSON run config.
//! Exit codes: 0 on success, 1 on usage errors, 2 on data errors.

pub mod config;
mod pipeline;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use logsentinel_core::dataset::{self, Dataset, ReplayOptions, TimingModel};
use logsentinel_core::filter_features;
use logsentinel_core::harness::{self, AutomlConfig, HarnessConfig, ReportFormat, SplitRatios};
use logsentinel_core::log_ingest::{self, FlatRecord, IngestOptions, DEFAULT_QUERY_MESSAGE};
use logsentinel_core::models::{self, Family, Hyperparameters, ModelSpec};
use logsentinel_core::projections::{self, Embedding, EmbeddingKind, TsneConfig};
use logsentinel_core::stats::{self, MwuMode, SelectionConfig, DEFAULT_ALPHA};

pub use config::{RunConfig, SeedRange};

/// Environment variable capping worker threads (0 = automatic).
pub const THREADS_ENV: &str = "LOGSENTINEL_THREADS";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: logsentinel_core::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Stage { .. } => 2,
        }
    }
}

/// Attach a stage name to a core result.
pub(crate) trait StageExt<T> {
    fn stage(self, stage: &'static str) -> Result<T, CliError>;
}

impl<T> StageExt<T> for logsentinel_core::Result<T> {
    fn stage(self, stage: &'static str) -> Result<T, CliError> {
        self.map_err(|source| CliError::Stage { stage, source })
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "logsentinel",
    version,
    about = "Injection classification from MongoDB query logs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse a mongod JSON log into flattened query records (JSON lines).
    Ingest(IngestArgs),
    /// Print filter features for one filter or every query of a corpus.
    Extract(ExtractArgs),
    /// Join query records with labels into a dataset CSV.
    Build(BuildArgs),
    /// Run per-feature significance tests and print the selection report.
    Select(SelectArgs),
    /// Write a 2-D (or 1-D for LDA) projection of a dataset.
    Project(ProjectArgs),
    /// Fit one model on a whole dataset and save it as JSON.
    Train(TrainArgs),
    /// Evaluate model families across seeds and print the results table.
    Evaluate(EvaluateArgs),
    /// Seeded random search over model families within a time budget.
    Automl(AutomlArgs),
    /// Render a saved evaluation JSON as a table.
    Report(ReportArgs),
    /// Generate synthetic mongod log lines for a labeled corpus.
    Synth(SynthArgs),
    /// Write a mongosh script that replays a labeled corpus.
    ReplayScript(ReplayArgs),
    /// Run every stage from a JSON run config.
    Pipeline(PipelineArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Markdown,
    Csv,
}

impl From<Format> for ReportFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Markdown => ReportFormat::Markdown,
            Format::Csv => ReportFormat::Csv,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Mwu {
    Auto,
    Exact,
    Approx,
}

impl From<Mwu> for MwuMode {
    fn from(m: Mwu) -> Self {
        match m {
            Mwu::Auto => MwuMode::Auto,
            Mwu::Exact => MwuMode::Exact,
            Mwu::Approx => MwuMode::Approx,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Method {
    Lda,
    Pca,
    Tsne,
}

impl From<Method> for EmbeddingKind {
    fn from(m: Method) -> Self {
        match m {
            Method::Lda => EmbeddingKind::Lda,
            Method::Pca => EmbeddingKind::Pca,
            Method::Tsne => EmbeddingKind::Tsne,
        }
    }
}

#[derive(Debug, Args)]
struct IngestArgs {
    #[arg(long)]
    log: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Fail on the first malformed line.
    #[arg(long)]
    strict: bool,
    /// Log message that marks query entries.
    #[arg(long, default_value = DEFAULT_QUERY_MESSAGE)]
    query_message: String,
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false, id = "source")]
struct ExtractSource {
    /// A single filter text.
    #[arg(long)]
    filter: Option<String>,
    /// A labeled corpus (JSON array of `{text, label}`).
    #[arg(long)]
    queries: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ExtractArgs {
    #[command(flatten)]
    source: ExtractSource,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false, id = "input")]
struct BuildSource {
    /// Records written by `ingest`.
    #[arg(long)]
    records: Option<PathBuf>,
    /// A mongod log, ingested on the fly.
    #[arg(long)]
    log: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct BuildArgs {
    #[command(flatten)]
    source: BuildSource,
    #[arg(long)]
    queries: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    strict: bool,
}

#[derive(Debug, Args)]
struct SelectArgs {
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long, default_value_t = DEFAULT_ALPHA)]
    alpha: f64,
    /// Apply the continuity correction to chi-square tests.
    #[arg(long)]
    yates: bool,
    #[arg(long, value_enum, default_value = "auto")]
    mwu_mode: Mwu,
    #[arg(long, value_enum, default_value = "markdown")]
    format: Format,
    /// Write the report here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the dataset reduced to the selected features.
    #[arg(long)]
    reduced_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ProjectArgs {
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long, value_enum)]
    method: Method,
    #[arg(long)]
    out: PathBuf,
    /// Also write a scatter plot.
    #[arg(long)]
    svg: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 30.0)]
    perplexity: f64,
    #[arg(long, default_value_t = 1000)]
    iterations: usize,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long, value_parser = parse_family)]
    family: Family,
    /// Hyperparameters as a JSON object; missing fields take defaults.
    #[arg(long)]
    hyperparameters: Option<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    #[arg(long)]
    dataset: PathBuf,
    /// Inclusive seed range `start:end`.
    #[arg(long, default_value = "1:50")]
    seeds: SeedRange,
    #[arg(long, default_value_t = harness::DEFAULT_K)]
    k: usize,
    /// Comma-separated families; all seven by default.
    #[arg(long, value_delimiter = ',', value_parser = parse_family)]
    families: Vec<Family>,
    /// Split ratios `train,val,test`.
    #[arg(long, value_delimiter = ',', num_args = 1, default_value = "0.6,0.2,0.2")]
    ratios: Vec<f64>,
    /// Stratify splits and folds by label.
    #[arg(long)]
    stratify: bool,
    #[arg(long, value_enum, default_value = "markdown")]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also save the full results as JSON (input for `report`).
    #[arg(long)]
    json_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct AutomlArgs {
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long, default_value_t = 60.0)]
    budget: f64,
    #[arg(long, default_value_t = harness::DEFAULT_MAX_CANDIDATES)]
    max_candidates: usize,
    #[arg(long, default_value_t = harness::DEFAULT_K)]
    k: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ReportArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum, default_value = "markdown")]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long)]
    queries: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Debug, Args)]
struct ReplayArgs {
    #[arg(long)]
    queries: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    database: Option<String>,
    #[arg(long)]
    collection: Option<String>,
}

#[derive(Debug, Args)]
pub(crate) struct PipelineArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub seeds: Option<SeedRange>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub budget: Option<f64>,
    #[arg(long)]
    pub max_candidates: Option<usize>,
    #[arg(long)]
    pub yates: bool,
    #[arg(long)]
    pub strict_ingest: bool,
    #[arg(long)]
    pub stratify: bool,
}

fn parse_family(s: &str) -> Result<Family, String> {
    Family::parse(s).ok_or_else(|| {
        let names: Vec<&str> = Family::ALL.iter().map(|f| f.as_str()).collect();
        format!("unknown family {s:?}; expected one of {}", names.join(", "))
    })
}

/// Parse `argv` (including the program name), run, and return the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let pool = match thread_pool() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("logsentinel: {e}");
            return e.exit_code();
        }
    };
    match pool.install(|| dispatch(cli.command)) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("logsentinel: {e}");
            e.exit_code()
        }
    }
}

fn thread_pool() -> Result<rayon::ThreadPool, CliError> {
    let threads = match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map_err(|_| CliError::Usage(format!("{THREADS_ENV} must be a non-negative integer, got {v:?}")))?,
        Err(_) => 0,
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start worker threads: {e}")))
}

fn dispatch(cmd: Command) -> Result<(), CliError> {
    match cmd {
        Command::Ingest(a) => ingest(a),
        Command::Extract(a) => extract(a),
        Command::Build(a) => build(a),
        Command::Select(a) => select(a),
        Command::Project(a) => project(a),
        Command::Train(a) => train(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Automl(a) => automl(a),
        Command::Report(a) => report(a),
        Command::Synth(a) => synth(a),
        Command::ReplayScript(a) => replay(a),
        Command::Pipeline(a) => pipeline::run(a),
    }
}

/// Write `text` to `path`, or to standard output when no path is given.
pub(crate) fn emit(path: Option<&Path>, text: &str, stage: &'static str) -> Result<(), CliError> {
    match path {
        Some(p) => write_file(p, text, stage),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| logsentinel_core::Error::io(Path::new("<stdout>"), e))
                .stage(stage)
        }
    }
}

pub(crate) fn write_file(path: &Path, text: &str, stage: &'static str) -> Result<(), CliError> {
    std::fs::write(path, text)
        .map_err(|e| logsentinel_core::Error::io(path, e))
        .stage(stage)
}

fn read_file(path: &Path, stage: &'static str) -> Result<String, CliError> {
    std::fs::read_to_string(path)
        .map_err(|e| logsentinel_core::Error::io(path, e))
        .stage(stage)
}

pub(crate) fn records_jsonl(records: &[FlatRecord]) -> Result<String, CliError> {
    let mut s = String::new();
    for r in records {
        s.push_str(
            &serde_json::to_string(r)
                .map_err(logsentinel_core::Error::from)
                .stage("ingest")?,
        );
        s.push('\n');
    }
    Ok(s)
}

fn read_records(path: &Path) -> Result<Vec<FlatRecord>, CliError> {
    read_file(path, "build")?
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            serde_json::from_str(l)
                .map_err(logsentinel_core::Error::from)
                .stage("build")
        })
        .collect()
}

fn ingest_opts(strict: bool, query_message: &str) -> IngestOptions {
    IngestOptions {
        strict,
        query_message: query_message.to_string(),
    }
}

fn ingest(a: IngestArgs) -> Result<(), CliError> {
    let (records, st) = log_ingest::ingest_file(&a.log, &ingest_opts(a.strict, &a.query_message)).stage("ingest")?;
    eprintln!(
        "ingest: {} lines, {} query records, {} malformed",
        st.total_lines, st.query_lines, st.malformed_lines
    );
    write_file(&a.out, &records_jsonl(&records)?, "ingest")
}

fn extract(a: ExtractArgs) -> Result<(), CliError> {
    let text = match (a.source.filter, a.source.queries) {
        (Some(f), _) => {
            let mut s = serde_json::to_string_pretty(&filter_features::extract(&f).to_json())
                .map_err(logsentinel_core::Error::from)
                .stage("extract")?;
            s.push('\n');
            s
        }
        (None, Some(path)) => {
            let queries = dataset::load_queries(&path).stage("extract")?;
            let mut s = String::new();
            for q in &queries {
                let mut obj = serde_json::Map::new();
                obj.insert("text".into(), q.text.clone().into());
                obj.insert("label".into(), u8::from(q.label).into());
                obj.insert("features".into(), filter_features::extract(&q.text).to_json());
                s.push_str(&serde_json::Value::Object(obj).to_string());
                s.push('\n');
            }
            s
        }
        (None, None) => return Err(CliError::Usage("extract needs --filter or --queries".into())),
    };
    emit(a.out.as_deref(), &text, "extract")
}

fn build(a: BuildArgs) -> Result<(), CliError> {
    let records = match (a.source.records, a.source.log) {
        (Some(r), _) => read_records(&r)?,
        (None, Some(log)) => {
            log_ingest::ingest_file(&log, &ingest_opts(a.strict, DEFAULT_QUERY_MESSAGE))
                .stage("ingest")?
                .0
        }
        (None, None) => return Err(CliError::Usage("build needs --records or --log".into())),
    };
    let queries = dataset::load_queries(&a.queries).stage("build")?;
    let (ds, join, dropped) = dataset::build_dataset(&records, &queries).stage("build")?;
    eprintln!(
        "build: {} rows, {} unmatched records, {} unmatched queries, {} constant columns dropped",
        join.matched,
        join.unmatched_records,
        join.unmatched_queries,
        dropped.len()
    );
    dataset::write_csv(&ds, &a.out).stage("build")
}

fn read_dataset(path: &Path, stage: &'static str) -> Result<Dataset, CliError> {
    dataset::read_csv(path).stage(stage)
}

fn check_alpha(alpha: f64) -> Result<(), CliError> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(CliError::Usage(format!("alpha must lie in (0, 1), got {alpha}")))
    }
}

fn select(a: SelectArgs) -> Result<(), CliError> {
    check_alpha(a.alpha)?;
    let ds = read_dataset(&a.dataset, "select")?;
    let cfg = SelectionConfig {
        alpha: a.alpha,
        yates: a.yates,
        mwu_mode: a.mwu_mode.into(),
    };
    let (rep, reduced) = stats::select_features(&ds, &cfg).stage("select")?;
    let text = match a.format {
        Format::Markdown => stats::selection_markdown(&rep),
        Format::Csv => stats::selection_csv(&rep),
    };
    emit(a.out.as_deref(), &text, "select")?;
    if let Some(path) = a.reduced_out {
        dataset::write_csv(&reduced, &path).stage("select")?;
    }
    Ok(())
}

/// Standardize the features of `ds` and embed them.
pub(crate) fn embed(ds: &Dataset, kind: EmbeddingKind, tsne: &TsneConfig) -> logsentinel_core::Result<Embedding> {
    let (_, x) = ds.feature_matrix();
    let labels = ds.labels();
    let (z, _) = projections::standardize(&x)?;
    match kind {
        EmbeddingKind::Lda => projections::lda(&z, &labels),
        EmbeddingKind::Pca => projections::pca(&z, &labels, 2),
        EmbeddingKind::Tsne => projections::tsne(&z, &labels, tsne),
    }
}

fn project(a: ProjectArgs) -> Result<(), CliError> {
    if a.perplexity.is_nan() || a.perplexity <= 0.0 || a.iterations == 0 {
        return Err(CliError::Usage("perplexity and iterations must be positive".into()));
    }
    let ds = read_dataset(&a.dataset, "project")?;
    let cfg = TsneConfig {
        perplexity: a.perplexity,
        iterations: a.iterations,
        seed: a.seed,
        ..TsneConfig::default()
    };
    let e = embed(&ds, a.method.into(), &cfg).stage("project")?;
    write_file(&a.out, &e.to_csv(), "project")?;
    if let Some(svg) = a.svg {
        projections::write_scatter_svg(&e, &svg, a.seed).stage("project")?;
    }
    Ok(())
}

fn train(a: TrainArgs) -> Result<(), CliError> {
    let params = match &a.hyperparameters {
        None => Hyperparameters::default_for(a.family),
        Some(text) => {
            let value: serde_json::Value = serde_json::from_str(text)
                .map_err(|e| CliError::Usage(format!("--hyperparameters is not valid JSON: {e}")))?;
            let tagged = serde_json::json!({ "family": a.family, "hyperparameters": value });
            serde_json::from_value(tagged)
                .map_err(|e| CliError::Usage(format!("invalid hyperparameters for {}: {e}", a.family.as_str())))?
        }
    };
    let spec = ModelSpec::new(params, a.seed);
    let ds = read_dataset(&a.dataset, "train")?;
    let model = models::fit_dataset(&spec, &ds).stage("train")?;
    let mut json = model.to_json().stage("train")?;
    json.push('\n');
    write_file(&a.out, &json, "train")
}

fn ratios_from(v: &[f64]) -> Result<SplitRatios, CliError> {
    match v {
        [train, val, test] => {
            let r = SplitRatios {
                train: *train,
                val: *val,
                test: *test,
            };
            r.validate().map_err(|e| CliError::Usage(e.to_string()))?;
            Ok(r)
        }
        _ => Err(CliError::Usage("--ratios takes three values: train,val,test".into())),
    }
}

fn check_k(k: usize) -> Result<(), CliError> {
    if k >= 2 {
        Ok(())
    } else {
        Err(CliError::Usage(format!("k must be at least 2, got {k}")))
    }
}

pub(crate) fn report_json(r: &harness::EvalReport, stage: &'static str) -> Result<String, CliError> {
    let mut s = serde_json::to_string_pretty(r)
        .map_err(logsentinel_core::Error::from)
        .stage(stage)?;
    s.push('\n');
    Ok(s)
}

fn evaluate(a: EvaluateArgs) -> Result<(), CliError> {
    check_k(a.k)?;
    let ratios = ratios_from(&a.ratios)?;
    let families = if a.families.is_empty() {
        Family::ALL.to_vec()
    } else {
        a.families
    };
    let ds = read_dataset(&a.dataset, "evaluate")?;
    let specs: Vec<ModelSpec> = families.iter().map(|&f| ModelSpec::default_for(f)).collect();
    let cfg = HarnessConfig {
        seeds: a.seeds.seeds(),
        k: a.k,
        ratios,
        stratified: a.stratify,
    };
    let mut r = harness::run_seeds(&specs, &ds, &cfg).stage("evaluate")?;
    r.config
        .insert("dataset".into(), a.dataset.display().to_string().into());
    r.config.insert("seeds".into(), String::from(a.seeds).into());
    let names: Vec<&str> = families.iter().map(|f| f.as_str()).collect();
    r.config.insert("families".into(), names.into());
    emit(a.out.as_deref(), &harness::report(&r, a.format.into()), "evaluate")?;
    if let Some(path) = a.json_out {
        write_file(&path, &report_json(&r, "evaluate")?, "evaluate")?;
    }
    Ok(())
}

fn automl(a: AutomlArgs) -> Result<(), CliError> {
    check_k(a.k)?;
    if !(a.budget.is_finite() && a.budget > 0.0) {
        return Err(CliError::Usage(format!("--budget must be positive, got {}", a.budget)));
    }
    let ds = read_dataset(&a.dataset, "automl")?;
    let cfg = AutomlConfig {
        budget_seconds: a.budget,
        max_candidates: a.max_candidates,
        k: a.k,
        seed: a.seed,
    };
    let result = harness::automl_search(&ds, &cfg).stage("automl")?;
    let mut s = serde_json::to_string_pretty(&result)
        .map_err(logsentinel_core::Error::from)
        .stage("automl")?;
    s.push('\n');
    emit(a.out.as_deref(), &s, "automl")
}

fn report(a: ReportArgs) -> Result<(), CliError> {
    let text = read_file(&a.input, "report")?;
    let r: harness::EvalReport = serde_json::from_str(&text)
        .map_err(logsentinel_core::Error::from)
        .stage("report")?;
    emit(a.out.as_deref(), &harness::report(&r, a.format.into()), "report")
}

pub(crate) fn synth_text(queries: &[dataset::LabeledQuery], seed: u64) -> String {
    let mut s = dataset::synth_logs(queries, seed, &TimingModel::default()).join("\n");
    s.push('\n');
    s
}

fn synth(a: SynthArgs) -> Result<(), CliError> {
    let queries = dataset::load_queries(&a.queries).stage("synth")?;
    write_file(&a.out, &synth_text(&queries, a.seed), "synth")
}

fn replay(a: ReplayArgs) -> Result<(), CliError> {
    let queries = dataset::load_queries(&a.queries).stage("replay-script")?;
    let defaults = ReplayOptions::default();
    let opts = ReplayOptions {
        database: a.database.unwrap_or(defaults.database),
        collection: a.collection.unwrap_or(defaults.collection),
    };
    dataset::write_replay_script(&queries, &a.out, &opts).stage("replay-script")?;
    Ok(())
}

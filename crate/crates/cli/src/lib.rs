//! Subcommands of the `tierlens` binary.
//!
//! Every command returns a [`CommandResult`]. Exit code 1 is a usage error,
//! 2 a data error; both print a diagnostic on stderr.

use std::collections::BTreeSet;
use std::fmt;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use tierlens::analysis::{
    io_bandwidth, io_time, shared_files, timeline_segments, write_csv_bandwidth, write_csv_sharing, write_csv_time,
    GroupBy, Pretty,
};
use tierlens::dataset::{build_dataset, mean_repetitions, Dataset, PairedRun};
use tierlens::dtree::{fit, load_model, repeated_baseline, repeated_eval, save_model, TrainConfig};
use tierlens::features::{extract_all, write_features_csv, FeatureOptions, FeatureSchema};
use tierlens::synth::{sweep_seeded, Grid, StorageParams};
use tierlens::trace::{parse_trace, write_trace, Category, EventFilter, IOFrame};

pub mod plan;
pub mod svg;

pub use plan::{predict_plan, PlacementPlan, PlanRow};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommandResult {
    pub exit_code: i32,
    pub artifacts: Vec<PathBuf>,
    /// Set when `exit_code` is nonzero; already printed to stderr.
    pub diagnostic: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CliError {
    Usage(String),
    Data(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
        }
    }

    fn data(context: impl fmt::Display, e: impl fmt::Display) -> Self {
        CliError::Data(format!("{context}: {e}"))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Data(m) => f.write_str(m),
        }
    }
}

impl std::error::Error for CliError {}

#[derive(Debug, Parser)]
#[command(
    name = "tierlens",
    version,
    about = "Per-file burst buffer vs parallel file system placement"
)]
pub struct Cli {
    /// Suppress all non-error output.
    #[arg(long, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse and validate a trace; optionally rewrite it in canonical order.
    Ingest(IngestArgs),
    /// Aggregated bandwidth, time or sharing report as CSV.
    Analyze(AnalyzeArgs),
    /// Per-file feature extraction.
    Features(FeaturesArgs),
    /// Per-rank timeline of function calls as SVG.
    Timeline(TimelineArgs),
    /// Labeled dataset from paired runs of the same workload on both tiers.
    Dataset(DatasetArgs),
    /// Fit a tree, report held-out accuracy and save the model.
    Train(TrainArgs),
    /// Placement plan for every file in a trace.
    Predict(PredictArgs),
    /// Simulated parameter sweep written as a dataset.
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Args, Default)]
pub struct Filters {
    /// Comma-separated rank IDs.
    #[arg(long, value_delimiter = ',')]
    pub ranks: Vec<u32>,
    /// Glob over file paths.
    #[arg(long)]
    pub files: Option<String>,
    /// read, write, metadata or other.
    #[arg(long)]
    pub category: Option<Category>,
}

#[derive(Debug, Clone, Args)]
pub struct IngestArgs {
    #[arg(long)]
    pub trace: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct AnalyzeArgs {
    #[arg(long)]
    pub trace: PathBuf,
    /// bandwidth, time or shared.
    #[arg(long, default_value = "bandwidth")]
    pub report: String,
    /// Aggregate bandwidth per file instead of per (file, rank).
    #[arg(long)]
    pub per_file: bool,
    #[command(flatten)]
    pub filters: Filters,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct FeaturesArgs {
    #[arg(long)]
    pub trace: PathBuf,
    /// Glob over file paths.
    #[arg(long)]
    pub files: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct TimelineArgs {
    #[arg(long)]
    pub trace: PathBuf,
    #[command(flatten)]
    pub filters: Filters,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct DatasetArgs {
    /// Trace recorded on the parallel file system; pairs with the `--bb` at the same position.
    #[arg(long, required = true)]
    pub pfs: Vec<PathBuf>,
    /// Trace of the same workload recorded on the burst buffer.
    #[arg(long, required = true)]
    pub bb: Vec<PathBuf>,
    /// standard, extended or a schema file.
    #[arg(long, default_value = "standard")]
    pub schema: String,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long)]
    pub model: PathBuf,
    /// standard, extended or a schema file.
    #[arg(long, default_value = "standard")]
    pub schema: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 10)]
    pub repeats: usize,
    #[arg(long, default_value_t = 0.1)]
    pub test_fraction: f64,
    #[arg(long, default_value_t = 12)]
    pub max_depth: u32,
}

#[derive(Debug, Clone, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub trace: PathBuf,
    #[arg(long)]
    pub model: PathBuf,
    /// standard, extended or a schema file.
    #[arg(long, default_value = "standard")]
    pub schema: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    /// Grid TOML; the default sweep when absent.
    #[arg(long)]
    pub grid: Option<PathBuf>,
    /// StorageParams TOML; defaults when absent.
    #[arg(long)]
    pub params: Option<PathBuf>,
    /// standard, extended or a schema file.
    #[arg(long, default_value = "standard")]
    pub schema: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

/// Stdout sink that honors `--quiet`.
#[derive(Debug, Clone, Copy)]
pub struct Console {
    pub quiet: bool,
}

impl Console {
    fn say(&self, text: impl fmt::Display) {
        if !self.quiet {
            println!("{text}");
        }
    }
}

type Outcome = Result<Vec<PathBuf>, CliError>;

fn finish(outcome: Outcome) -> CommandResult {
    match outcome {
        Ok(artifacts) => CommandResult {
            exit_code: 0,
            artifacts,
            diagnostic: None,
        },
        Err(e) => {
            eprintln!("error: {e}");
            CommandResult {
                exit_code: e.exit_code(),
                artifacts: Vec::new(),
                diagnostic: Some(e.to_string()),
            }
        }
    }
}

pub fn run(cli: &Cli) -> CommandResult {
    let console = Console { quiet: cli.quiet };
    match &cli.command {
        Command::Ingest(a) => cmd_ingest(a, console),
        Command::Analyze(a) => cmd_analyze(a, console),
        Command::Features(a) => cmd_features(a, console),
        Command::Timeline(a) => cmd_timeline(a, console),
        Command::Dataset(a) => cmd_dataset(a, console),
        Command::Train(a) => cmd_train(a, console),
        Command::Predict(a) => cmd_predict(a, console),
        Command::Synth(a) => cmd_synth(a, console),
    }
}

pub fn read_frame(path: &Path) -> Result<IOFrame, CliError> {
    let file = File::open(path).map_err(|e| CliError::data(path.display(), e))?;
    let events = parse_trace(BufReader::new(file)).map_err(|e| CliError::data(path.display(), e))?;
    IOFrame::build(events).map_err(|e| CliError::data(path.display(), e))
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::data(path.display(), e))
}

fn flush(mut w: BufWriter<File>, path: &Path) -> Result<(), CliError> {
    w.flush().map_err(|e| CliError::data(path.display(), e))
}

/// `standard`, `extended`, or a path to a saved schema.
pub fn resolve_schema(spec: &str) -> Result<FeatureSchema, CliError> {
    match spec {
        "standard" => Ok(FeatureSchema::standard()),
        "extended" => Ok(FeatureSchema::extended()),
        path => {
            let file = File::open(path).map_err(|e| CliError::data(path, e))?;
            FeatureSchema::load(BufReader::new(file)).map_err(|e| CliError::data(path, e))
        }
    }
}

fn file_glob(pattern: &str) -> Result<glob::Pattern, CliError> {
    glob::Pattern::new(pattern).map_err(|e| CliError::Usage(format!("--files `{pattern}`: {e}")))
}

impl Filters {
    pub fn to_event_filter(&self, frame: &IOFrame) -> Result<EventFilter, CliError> {
        let mut filter = EventFilter::new();
        if !self.ranks.is_empty() {
            filter = filter.ranks(self.ranks.iter().copied());
        }
        if let Some(pattern) = &self.files {
            let glob = file_glob(pattern)?;
            let matched: Vec<String> = frame.files().filter(|f| glob.matches(f)).map(str::to_owned).collect();
            filter = filter.files(matched);
        }
        if let Some(c) = self.category {
            filter = filter.categories([c]);
        }
        Ok(filter)
    }

    /// Ranks drawn as timeline bands.
    fn bands(&self, frame: &IOFrame) -> Vec<u32> {
        frame
            .ranks()
            .filter(|r| self.ranks.is_empty() || self.ranks.contains(r))
            .collect()
    }
}

pub fn cmd_ingest(args: &IngestArgs, console: Console) -> CommandResult {
    finish((|| {
        let frame = read_frame(&args.trace)?;
        let files: Vec<&str> = frame.files().collect();
        let mut warnings = Vec::new();
        for file in &files {
            let ranks: BTreeSet<u32> = frame.file_events(file).map(|e| e.rank).collect();
            for rank in ranks {
                warnings.extend(frame.sessions(file, rank).warnings);
            }
        }
        let span = frame.epoch_span().map_or(0.0, |(a, b)| b.nanos_since(a) as f64 / 1e9);
        console.say(format_args!(
            "{} events, {} ranks, {} files, {span:.9} s",
            frame.len(),
            frame.ranks().count(),
            files.len()
        ));
        for w in &warnings {
            console.say(format_args!("warning: {w}"));
        }
        let mut artifacts = Vec::new();
        if let Some(out) = &args.out {
            let mut w = create(out)?;
            write_trace(&mut w, frame.events()).map_err(|e| CliError::data(out.display(), e))?;
            flush(w, out)?;
            artifacts.push(out.clone());
        }
        Ok(artifacts)
    })())
}

pub fn cmd_analyze(args: &AnalyzeArgs, console: Console) -> CommandResult {
    finish((|| {
        if !matches!(args.report.as_str(), "bandwidth" | "time" | "shared") {
            return Err(CliError::Usage(format!(
                "unknown report `{}`; expected bandwidth, time or shared",
                args.report
            )));
        }
        let frame = read_frame(&args.trace)?;
        let filter = args.filters.to_event_filter(&frame)?;
        let mut csv = Vec::new();
        let pretty = match args.report.as_str() {
            "bandwidth" => {
                let by = if args.per_file {
                    GroupBy::File
                } else {
                    GroupBy::FileRank
                };
                let t = io_bandwidth(&frame, by, &filter);
                write_csv_bandwidth(&mut csv, &t).map_err(|e| CliError::data("csv", e))?;
                t.pretty()
            }
            "time" => {
                let t = io_time(&frame, &filter);
                write_csv_time(&mut csv, &t).map_err(|e| CliError::data("csv", e))?;
                t.pretty()
            }
            _ => {
                let t = shared_files(&frame.filter(&filter));
                write_csv_sharing(&mut csv, &t).map_err(|e| CliError::data("csv", e))?;
                t.pretty()
            }
        };
        console.say(pretty.trim_end());
        write_artifact(args.out.as_deref(), &csv)
    })())
}

fn write_artifact(out: Option<&Path>, bytes: &[u8]) -> Outcome {
    let Some(path) = out else {
        return Ok(Vec::new());
    };
    std::fs::write(path, bytes).map_err(|e| CliError::data(path.display(), e))?;
    Ok(vec![path.to_owned()])
}

pub fn cmd_features(args: &FeaturesArgs, console: Console) -> CommandResult {
    finish((|| {
        let frame = read_frame(&args.trace)?;
        let mut all =
            extract_all(&frame, FeatureOptions::default()).map_err(|e| CliError::data(args.trace.display(), e))?;
        if let Some(pattern) = &args.files {
            let glob = file_glob(pattern)?;
            all.retain(|f| glob.matches(&f.file));
        }
        for f in &all {
            console.say(format_args!(
                "{:<40} {:<6} {:<4} ts {:>12} reads {:>6} writes {:>6}",
                f.file, f.interface, f.io_type, f.transfer_size_mean, f.num_reads, f.num_writes
            ));
        }
        let mut csv = Vec::new();
        write_features_csv(&mut csv, &all).map_err(|e| CliError::data("csv", e))?;
        write_artifact(args.out.as_deref(), &csv)
    })())
}

pub fn cmd_timeline(args: &TimelineArgs, console: Console) -> CommandResult {
    finish((|| {
        let frame = read_frame(&args.trace)?;
        let filter = args.filters.to_event_filter(&frame)?;
        let segments = timeline_segments(&frame, &filter);
        let span = frame.epoch_span().unwrap_or_default();
        let doc = svg::render(&segments, &args.filters.bands(&frame), span);
        console.say(format_args!("{} segments", segments.len()));
        write_artifact(Some(&args.out), doc.as_bytes())
    })())
}

/// Pairs each file of the PFS trace with the same path in the BB trace.
/// Features come from the PFS side; bandwidth is bytes over summed transfer
/// time per file.
pub fn paired_runs(pfs: &Path, bb: &Path) -> Result<Vec<PairedRun>, CliError> {
    let pfs_frame = read_frame(pfs)?;
    let bb_frame = read_frame(bb)?;
    let pfs_bw = io_bandwidth(&pfs_frame, GroupBy::File, &EventFilter::new());
    let bb_bw = io_bandwidth(&bb_frame, GroupBy::File, &EventFilter::new());
    let features = extract_all(&pfs_frame, FeatureOptions::default()).map_err(|e| CliError::data(pfs.display(), e))?;
    features
        .into_iter()
        .map(|f| {
            let bw = |table: &tierlens::analysis::BandwidthTable, path: &Path| {
                table
                    .row(&f.file, None)
                    .and_then(|r| r.bandwidth)
                    .ok_or_else(|| CliError::Data(format!("{}: no transfer time for `{}`", path.display(), f.file)))
            };
            Ok(PairedRun {
                bw_pfs: bw(&pfs_bw, pfs)?,
                bw_bb: bw(&bb_bw, bb)?,
                source: format!("{}:{}", pfs.display(), f.file),
                features: f,
            })
        })
        .collect()
}

pub fn cmd_dataset(args: &DatasetArgs, console: Console) -> CommandResult {
    finish((|| {
        if args.pfs.len() != args.bb.len() {
            return Err(CliError::Usage(format!(
                "{} --pfs traces but {} --bb traces",
                args.pfs.len(),
                args.bb.len()
            )));
        }
        let schema = resolve_schema(&args.schema)?;
        let mut runs = Vec::new();
        for (pfs, bb) in args.pfs.iter().zip(&args.bb) {
            runs.extend(paired_runs(pfs, bb)?);
        }
        let dataset = build_dataset(&schema, &mean_repetitions(&runs)).map_err(|e| CliError::data("dataset", e))?;
        save_dataset(&dataset, &args.out, console)
    })())
}

fn save_dataset(dataset: &Dataset, out: &Path, console: Console) -> Outcome {
    let mut w = create(out)?;
    dataset.save_csv(&mut w).map_err(|e| CliError::data(out.display(), e))?;
    flush(w, out)?;
    console.say(format_args!(
        "{} samples: {} BB, {} PFS",
        dataset.len(),
        dataset.count(tierlens::dataset::Tier::BB),
        dataset.count(tierlens::dataset::Tier::PFS)
    ));
    Ok(vec![out.to_owned()])
}

pub fn cmd_train(args: &TrainArgs, console: Console) -> CommandResult {
    finish((|| {
        let schema = resolve_schema(&args.schema)?;
        let file = File::open(&args.dataset).map_err(|e| CliError::data(args.dataset.display(), e))?;
        let dataset =
            Dataset::load_csv(BufReader::new(file), &schema).map_err(|e| CliError::data(args.dataset.display(), e))?;
        if dataset.is_empty() {
            return Err(CliError::Data(format!("{}: dataset is empty", args.dataset.display())));
        }
        let config = TrainConfig {
            max_depth: args.max_depth,
            seed: args.seed,
            ..TrainConfig::default()
        };
        config.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        if !(args.test_fraction > 0.0 && args.test_fraction < 1.0) {
            return Err(CliError::Usage(format!(
                "--test-fraction {} must lie in (0, 1)",
                args.test_fraction
            )));
        }
        let eval = repeated_eval(&dataset, &config, args.repeats, args.test_fraction, args.seed)
            .map_err(|e| CliError::data("evaluation", e))?;
        let baseline = repeated_baseline(&dataset, args.repeats, args.test_fraction, args.seed)
            .map_err(|e| CliError::data("baseline", e))?;
        let tree = fit(&dataset, &config).map_err(|e| CliError::data("fit", e))?;

        console.say(format_args!(
            "held-out accuracy {:.4} (std {:.4}, {} repeats, test fraction {})",
            eval.mean, eval.stddev, eval.n_repeats, args.test_fraction
        ));
        console.say(format_args!("majority baseline {:.4}", baseline.mean));
        let names: Vec<&str> = schema.names().collect();
        console.say("feature importances:");
        for (i, imp) in tree.ranked_importances() {
            console.say(format_args!("  {:<20} {imp:.4}", names.get(i).copied().unwrap_or("?")));
        }

        let mut w = create(&args.model)?;
        save_model(&tree, &mut w).map_err(|e| CliError::data(args.model.display(), e))?;
        flush(w, &args.model)?;
        Ok(vec![args.model.clone()])
    })())
}

pub fn cmd_predict(args: &PredictArgs, console: Console) -> CommandResult {
    finish((|| {
        let frame = read_frame(&args.trace)?;
        let file = File::open(&args.model).map_err(|e| CliError::data(args.model.display(), e))?;
        let tree = load_model(BufReader::new(file)).map_err(|e| CliError::data(args.model.display(), e))?;
        let schema = resolve_schema(&args.schema)?;
        let plan = predict_plan(&frame, &tree, &schema)?;
        console.say(plan.table().trim_end());
        let mut csv = Vec::new();
        plan.write_csv(&mut csv).map_err(|e| CliError::data("csv", e))?;
        write_artifact(args.out.as_deref(), &csv)
    })())
}

pub fn cmd_synth(args: &SynthArgs, console: Console) -> CommandResult {
    finish((|| {
        let grid = match &args.grid {
            None => Grid::default_sweep(),
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| CliError::data(path.display(), e))?;
                Grid::from_toml(&text).map_err(|e| match e {
                    tierlens::synth::GridError::EmptyField(_) => CliError::Usage(format!("{}: {e}", path.display())),
                    e => CliError::data(path.display(), e),
                })?
            }
        };
        let params = match &args.params {
            None => StorageParams::default(),
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| CliError::data(path.display(), e))?;
                toml::from_str(&text).map_err(|e| CliError::data(path.display(), e))?
            }
        };
        params.validate().map_err(|e| CliError::Usage(format!("params: {e}")))?;
        let configs = grid.expand();
        if configs.is_empty() {
            return Err(CliError::Usage("grid has no feasible configuration".into()));
        }
        let schema = resolve_schema(&args.schema)?;
        let dataset = sweep_seeded(&configs, &params, &schema, args.seed).map_err(|e| CliError::data("sweep", e))?;
        console.say(format_args!(
            "{} of {} grid points feasible",
            configs.len(),
            grid.product_len()
        ));
        save_dataset(&dataset, &args.out, console)
    })())
}

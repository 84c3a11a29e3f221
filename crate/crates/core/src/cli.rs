//! The `cowshade` command line.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 data validation, 3 lookup
//! failure (unknown date), 4 numerical divergence, 64 usage error.

use std::collections::BTreeSet;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::dataset::{self, ColumnSchema, ExclusionReport, FoldPlan, GroupingConfig, IngestConfig};
use crate::error::{Error, Result};
use crate::eval::{self, ComparisonSpecs};
use crate::features::{self, LabeledExample};
use crate::forest::{self, ForestConfig};
use crate::model::{self, ModelFile, ModelSpec};
use crate::nn::{self, NetConfig, NnGridPoint, Optimizer};
use crate::synth::{self, SynthConfig};
use crate::tree::{SplitWeighting, TreeConfig};

/// Seed used when `--seed` is not given.
pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_FOLDS: usize = 5;

pub const EXIT_IO: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_LOOKUP: i32 = 3;
pub const EXIT_DIVERGENCE: i32 = 4;
pub const EXIT_USAGE: i32 = 64;

#[derive(Debug, Parser)]
#[command(name = "cowshade", version, about = "Shade-use prediction from temperature-humidity features")]
pub struct Cli {
    /// Worker threads for folds and trees (default: all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic sensor log.
    Synth(SynthArgs),
    /// Validate a sensor log and build the feature table.
    Ingest(IngestArgs),
    /// Cross-validate one model.
    Cv(CvArgs),
    /// Cross-validate a grid of configurations.
    Sweep(SweepArgs),
    /// Fit one model on the whole feature table.
    Train(TrainArgs),
    /// Actual and predicted counts for one day.
    Trace(TraceArgs),
    /// Cross-validate the tree, forest and network side by side.
    Compare(CompareArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 75)]
    pub days: usize,
    #[arg(long, default_value = "2023-07-11")]
    pub first_day: NaiveDate,
    #[arg(long, default_value_t = 7.5)]
    pub cadence_minutes: f64,
    #[arg(long, default_value_t = 80)]
    pub herd_size: u32,
    #[arg(long, default_value_t = 8.0)]
    pub noise_std: f64,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out_dir: PathBuf,
    #[arg(long, default_value_t = 80)]
    pub herd_size: u32,
    #[arg(long, default_value_t = 0.10)]
    pub max_reject_fraction: f64,
    /// Days with fewer daytime rows are dropped.
    #[arg(long, default_value_t = 30)]
    pub min_day_obs: usize,
    /// Dates known to be badly recorded (repeatable).
    #[arg(long = "flag-date")]
    pub flagged_dates: Vec<NaiveDate>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Tree,
    Forest,
    Nn,
    Mean,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WeightingArg {
    SizeWeighted,
    Unweighted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerArg {
    Sgd,
    Adam,
}

/// Model and protocol settings. Each may also come from the `--config` JSON
/// file (same names, with dashes); flags take precedence.
#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct RunArgs {
    /// JSON file with defaults for these settings.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub folds: Option<usize>,
    #[arg(long, value_enum)]
    pub model: Option<ModelKind>,
    /// Maximum tree depth; 0 means unlimited.
    #[arg(long)]
    pub depth: Option<usize>,
    #[arg(long)]
    pub min_samples_split: Option<usize>,
    #[arg(long, value_enum)]
    pub split_weighting: Option<WeightingArg>,
    #[arg(long)]
    pub trees: Option<usize>,
    #[arg(long)]
    pub features_per_tree: Option<usize>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub no_bootstrap: Option<bool>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub width: Option<usize>,
    #[arg(long)]
    pub layers: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub patience: Option<usize>,
    #[arg(long, value_enum)]
    pub optimizer: Option<OptimizerArg>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub scale_target: Option<bool>,
}

macro_rules! prefer {
    ($a:expr, $b:expr, $($f:ident),*) => {
        RunArgs { config: None, $($f: $a.$f.or($b.$f)),* }
    };
}

impl RunArgs {
    /// Applies the config file, if any, underneath the flags.
    pub fn resolve(&self) -> Result<RunArgs> {
        let Some(path) = &self.config else {
            return Ok(self.clone());
        };
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let file: RunArgs = serde_json::from_str(&text)
            .map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))?;
        Ok(prefer!(
            self, file, seed, folds, model, depth, min_samples_split, split_weighting, trees,
            features_per_tree, no_bootstrap, lr, width, layers, epochs, batch_size, patience,
            optimizer, scale_target
        ))
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(DEFAULT_SEED)
    }

    pub fn fold_count(&self) -> usize {
        self.folds.unwrap_or(DEFAULT_FOLDS)
    }

    pub fn tree_config(&self) -> TreeConfig {
        let d = TreeConfig::default();
        TreeConfig {
            max_depth: match self.depth {
                Some(0) => None,
                Some(n) => Some(n),
                None => d.max_depth,
            },
            min_samples_split: self.min_samples_split.unwrap_or(d.min_samples_split),
            split_weighting: match self.split_weighting {
                Some(WeightingArg::SizeWeighted) => SplitWeighting::SizeWeighted,
                Some(WeightingArg::Unweighted) => SplitWeighting::Unweighted,
                None => d.split_weighting,
            },
        }
    }

    pub fn forest_config(&self) -> ForestConfig {
        let d = ForestConfig::default();
        ForestConfig {
            n_trees: self.trees.unwrap_or(d.n_trees),
            tree: self.tree_config(),
            features_per_tree: self.features_per_tree.unwrap_or(d.features_per_tree),
            bootstrap: !self.no_bootstrap.unwrap_or(false),
            seed: self.seed(),
        }
    }

    pub fn net_config(&self) -> NetConfig {
        let d = NetConfig::default();
        NetConfig {
            hidden_layers: self.layers.unwrap_or(d.hidden_layers),
            width: self.width.unwrap_or(d.width),
            learning_rate: self.lr.unwrap_or(d.learning_rate),
            optimizer: match self.optimizer {
                Some(OptimizerArg::Sgd) => Optimizer::Sgd,
                Some(OptimizerArg::Adam) => Optimizer::Adam,
                None => d.optimizer,
            },
            epochs: self.epochs.unwrap_or(d.epochs),
            batch_size: self.batch_size.unwrap_or(d.batch_size),
            early_stopping_patience: self.patience.or(d.early_stopping_patience),
            scale_target: self.scale_target.unwrap_or(d.scale_target),
            seed: self.seed(),
        }
    }

    pub fn spec(&self, default: ModelKind) -> Result<ModelSpec> {
        let spec = match self.model.unwrap_or(default) {
            ModelKind::Tree => ModelSpec::Tree(self.tree_config()),
            ModelKind::Forest => ModelSpec::Forest(self.forest_config()),
            ModelKind::Nn => ModelSpec::Nn(self.net_config()),
            ModelKind::Mean => ModelSpec::Mean,
        };
        match &spec {
            ModelSpec::Tree(c) => c.validate()?,
            ModelSpec::Forest(c) => c.validate(features::N_FEATURES)?,
            ModelSpec::Nn(c) => c.validate()?,
            ModelSpec::Mean => {}
        }
        Ok(spec)
    }
}

#[derive(Debug, Args)]
pub struct CvArgs {
    #[arg(long)]
    pub features: PathBuf,
    #[arg(long)]
    pub out_dir: PathBuf,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub features: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Tree depths (tree and forest sweeps).
    #[arg(long, value_delimiter = ',', num_args = 0..)]
    pub depths: Option<Vec<usize>>,
    /// Forest sizes (forest sweep).
    #[arg(long, value_delimiter = ',', num_args = 0..)]
    pub tree_counts: Option<Vec<usize>>,
    /// Learning rates (network sweep).
    #[arg(long, value_delimiter = ',', num_args = 0..)]
    pub learning_rates: Option<Vec<f64>>,
    /// Hidden-layer widths (network sweep).
    #[arg(long, value_delimiter = ',', num_args = 0..)]
    pub widths: Option<Vec<usize>>,
    /// Hidden-layer counts (network sweep).
    #[arg(long, value_delimiter = ',', num_args = 0..)]
    pub layer_counts: Option<Vec<usize>>,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub features: PathBuf,
    /// Model JSON to write.
    #[arg(long)]
    pub out: PathBuf,
    /// Per-epoch loss CSV (networks only).
    #[arg(long)]
    pub trace: Option<PathBuf>,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Args)]
pub struct TraceArgs {
    #[arg(long)]
    pub features: PathBuf,
    #[arg(long)]
    pub model_file: PathBuf,
    #[arg(long)]
    pub date: NaiveDate,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[arg(long)]
    pub features: PathBuf,
    #[arg(long)]
    pub out_dir: PathBuf,
    #[command(flatten)]
    pub run: RunArgs,
}

/// Tool version, master seed and a digest of the effective configuration,
/// stamped into every output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool: String,
    pub version: String,
    pub seed: Option<u64>,
    pub config_hash: String,
}

impl Provenance {
    pub fn new(seed: Option<u64>, config: &Value) -> Self {
        let digest = Sha256::digest(config.to_string().as_bytes());
        Provenance {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            seed,
            config_hash: digest.iter().map(|b| format!("{b:02x}")).collect(),
        }
    }

    fn csv_header(&self) -> String {
        let seed = self.seed.map_or("none".to_string(), |s| s.to_string());
        format!("# {} {} seed={} config_sha256={}\n", self.tool, self.version, seed, self.config_hash)
    }
}

/// Exit code for an error.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Io { .. } => EXIT_IO,
        Error::UnknownDate(_) => EXIT_LOOKUP,
        Error::NonFiniteLoss { .. } => EXIT_DIVERGENCE,
        Error::InvalidConfig(_) => EXIT_USAGE,
        _ => EXIT_DATA,
    }
}

/// Parses `args` and runs the command; returns the process exit code.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { 0 };
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn run(cli: Cli) -> Result<()> {
    if let Some(j) = cli.jobs {
        if j == 0 {
            return Err(Error::InvalidConfig("--jobs must be at least 1".into()));
        }
        // Fails only if a pool already exists, in which case it is reused.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(j).build_global();
    }
    match cli.command {
        Command::Synth(a) => cmd_synth(&a),
        Command::Ingest(a) => cmd_ingest(&a),
        Command::Cv(a) => cmd_cv(&a),
        Command::Sweep(a) => cmd_sweep(&a),
        Command::Train(a) => cmd_train(&a),
        Command::Trace(a) => cmd_trace(&a),
        Command::Compare(a) => cmd_compare(&a),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    Ok(BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?))
}

fn write_csv_file(path: &Path, prov: &Provenance, body: impl FnOnce(&mut BufWriter<File>) -> Result<()>) -> Result<()> {
    let mut f = create(path)?;
    f.write_all(prov.csv_header().as_bytes()).map_err(|e| Error::io(path, e))?;
    body(&mut f)?;
    f.flush().map_err(|e| Error::io(path, e))
}

fn write_json_file(path: &Path, prov: &Provenance, value: Value) -> Result<()> {
    let mut v = value;
    if let Value::Object(map) = &mut v {
        map.insert("provenance".into(), serde_json::to_value(prov)?);
    }
    let mut f = create(path)?;
    serde_json::to_writer_pretty(&mut f, &v)?;
    f.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    f.flush().map_err(|e| Error::io(path, e))
}

fn read_features(path: &Path) -> Result<Vec<LabeledExample>> {
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    let examples = features::read_feature_csv(std::io::BufReader::new(f))?;
    if examples.is_empty() {
        return Err(Error::EmptyFile);
    }
    Ok(examples)
}

fn plan_folds(examples: &[LabeledExample], run: &RunArgs) -> Result<FoldPlan> {
    let dates: BTreeSet<NaiveDate> = examples.iter().map(|e| e.date).collect();
    dataset::make_folds(&dates, run.fold_count(), run.seed())
}

fn cmd_synth(a: &SynthArgs) -> Result<()> {
    let config = SynthConfig {
        n_days: a.days,
        first_day: a.first_day,
        cadence_minutes: a.cadence_minutes,
        herd_size: a.herd_size,
        noise_std: a.noise_std,
        seed: a.seed,
        ..SynthConfig::default()
    };
    let data = synth::generate(&config)?;
    let prov = Provenance::new(Some(a.seed), &json!({ "command": "synth", "config": config }));
    write_csv_file(&a.out, &prov, |w| synth::write_observations_csv(w, &data.observations))
}

fn cmd_ingest(a: &IngestArgs) -> Result<()> {
    let ingest = IngestConfig {
        herd_size: a.herd_size,
        max_reject_fraction: a.max_reject_fraction,
    };
    let grouping_config = GroupingConfig {
        min_day_obs: a.min_day_obs,
        require_night: true,
        flagged_dates: a.flagged_dates.iter().copied().collect(),
    };
    let ingested = dataset::ingest_csv(&a.input, &ColumnSchema::default(), &ingest)?;
    let grouping = dataset::group_days(&ingested.observations, &grouping_config);
    let examples = features::build_all(&grouping.days)?;
    let report = ExclusionReport::new(&ingested, &grouping);
    let prov = Provenance::new(
        None,
        &json!({ "command": "ingest", "ingest": ingest, "grouping": grouping_config }),
    );

    write_csv_file(&a.out_dir.join("features.csv"), &prov, |w| features::write_feature_csv(w, &examples))?;
    write_json_file(&a.out_dir.join("exclusions.json"), &prov, serde_json::to_value(&report)?)?;
    let metadata = json!({
        "input": a.input.display().to_string(),
        "total_rows": ingested.total_rows,
        "accepted_rows": ingested.observations.len(),
        "rejected_rows": ingested.rejected.len(),
        "usable_days": grouping.days.len(),
        "excluded_days": grouping.excluded_days.iter().map(|d| d.date).collect::<Vec<_>>(),
        "orphan_observations": grouping.orphans.len(),
        "examples": examples.len(),
    });
    write_json_file(&a.out_dir.join("metadata.json"), &prov, metadata)?;
    println!(
        "{} rows, {} rejected, {} usable days, {} examples",
        ingested.total_rows,
        ingested.rejected.len(),
        grouping.days.len(),
        examples.len()
    );
    Ok(())
}

fn cmd_cv(a: &CvArgs) -> Result<()> {
    let run = a.run.resolve()?;
    let spec = run.spec(ModelKind::Forest)?;
    let examples = read_features(&a.features)?;
    let folds = plan_folds(&examples, &run)?;
    let report = eval::cross_validate(&examples, &folds, &spec)?;
    let prov = Provenance::new(
        Some(run.seed()),
        &json!({ "command": "cv", "spec": spec, "folds": run.fold_count() }),
    );
    write_json_file(&a.out_dir.join("report.json"), &prov, serde_json::to_value(&report)?)?;
    write_csv_file(&a.out_dir.join("per_day.csv"), &prov, |w| eval::write_per_day_csv(w, &report))?;
    let q = report.quartiles;
    println!(
        "{}: overall RMSE {:.4} (pooled {:.4}); per-day Q1 {:.3} median {:.3} Q3 {:.3}",
        report.model, report.overall_rmse, report.pooled_rmse, q.q1, q.median, q.q3
    );
    Ok(())
}

fn non_empty<T: Clone>(name: &str, given: &Option<Vec<T>>, default: &[T]) -> Result<Vec<T>> {
    match given {
        Some(v) if v.is_empty() => Err(Error::InvalidConfig(format!("--{name} needs at least one value"))),
        Some(v) => Ok(v.clone()),
        None => Ok(default.to_vec()),
    }
}

fn cmd_sweep(a: &SweepArgs) -> Result<()> {
    let run = a.run.resolve()?;
    let kind = run.model.unwrap_or(ModelKind::Tree);
    let empty = [
        ("depths", a.depths.as_ref().map(Vec::len)),
        ("tree-counts", a.tree_counts.as_ref().map(Vec::len)),
        ("learning-rates", a.learning_rates.as_ref().map(Vec::len)),
        ("widths", a.widths.as_ref().map(Vec::len)),
        ("layer-counts", a.layer_counts.as_ref().map(Vec::len)),
    ];
    if let Some((name, _)) = empty.iter().find(|(_, n)| *n == Some(0)) {
        return Err(Error::InvalidConfig(format!("--{name} needs at least one value")));
    }
    let examples = read_features(&a.features)?;
    let folds = plan_folds(&examples, &run)?;
    match kind {
        ModelKind::Tree => {
            let depths = non_empty("depths", &a.depths, &[1, 3, 5, 10, 15, 25, 50])?;
            let base = run.tree_config();
            base.validate()?;
            let rows = eval::sweep_tree(&examples, &depths, &folds, &base)?;
            let prov = Provenance::new(
                Some(run.seed()),
                &json!({ "command": "sweep", "model": kind, "depths": depths, "base": base, "folds": run.fold_count() }),
            );
            write_csv_file(&a.out, &prov, |w| eval::write_tree_sweep_csv(w, &rows))?;
            for r in &rows {
                println!("depth {:>3}: RMSE {:.4} ± {:.4}", r.depth, r.rmse_mean, r.rmse_std);
            }
        }
        ModelKind::Forest => {
            let depths = non_empty("depths", &a.depths, &[1, 3, 5, 10])?;
            let counts = non_empty("tree-counts", &a.tree_counts, &[1, 5, 10, 25, 50, 100])?;
            let base = run.forest_config();
            base.validate(features::N_FEATURES)?;
            let cells = forest::sweep_forest(&examples, &depths, &counts, &folds, &base)?;
            let prov = Provenance::new(
                Some(run.seed()),
                &json!({ "command": "sweep", "model": kind, "depths": depths, "tree_counts": counts, "base": base, "folds": run.fold_count() }),
            );
            write_csv_file(&a.out, &prov, |w| forest::write_forest_sweep_csv(w, &cells))?;
            for c in &cells {
                println!("depth {:>3}, {:>4} trees: RMSE {:.4} ± {:.4}", c.depth, c.n_trees, c.rmse_mean, c.rmse_std);
            }
        }
        ModelKind::Nn => {
            let lrs = non_empty("learning-rates", &a.learning_rates, &[1e-3, 1e-2])?;
            let widths = non_empty("widths", &a.widths, &[16, 64])?;
            let layer_counts = non_empty("layer-counts", &a.layer_counts, &[1, 3])?;
            let mut grid = Vec::new();
            for &learning_rate in &lrs {
                for &width in &widths {
                    for &hidden_layers in &layer_counts {
                        grid.push(NnGridPoint { learning_rate, width, hidden_layers });
                    }
                }
            }
            let base = run.net_config();
            let rows = nn::sweep_nn(&examples, &grid, &base, &folds)?;
            let prov = Provenance::new(
                Some(run.seed()),
                &json!({ "command": "sweep", "model": kind, "grid": grid, "base": base, "folds": run.fold_count() }),
            );
            write_csv_file(&a.out, &prov, |w| nn::write_nn_sweep_csv(w, &rows))?;
            for r in &rows {
                println!(
                    "lr {:<8} width {:>5} layers {:>2} params {:>7}: RMSE {:.4} ± {:.4}",
                    r.learning_rate, r.width, r.hidden_layers, r.param_count, r.rmse_mean, r.rmse_std
                );
            }
        }
        ModelKind::Mean => return Err(Error::InvalidConfig("the mean baseline has nothing to sweep".into())),
    }
    Ok(())
}

fn cmd_train(a: &TrainArgs) -> Result<()> {
    let run = a.run.resolve()?;
    let spec = run.spec(ModelKind::Forest)?;
    let examples = read_features(&a.features)?;
    let (fitted, trace) = model::fit_model_traced(&spec, &examples)?;
    let prov = Provenance::new(Some(run.seed()), &json!({ "command": "train", "spec": spec }));
    let file = ModelFile { spec, model: fitted };
    write_json_file(&a.out, &prov, serde_json::to_value(&file)?)?;
    match (&a.trace, trace) {
        (Some(path), Some(trace)) => write_csv_file(path, &prov, |w| nn::write_trace_csv(w, &trace))?,
        (Some(_), None) => eprintln!("note: --trace applies to networks only; nothing written"),
        _ => {}
    }
    if let model::FittedModel::Tree(t) = &file.model {
        print!("{}", t.export_text());
    }
    Ok(())
}

fn cmd_trace(a: &TraceArgs) -> Result<()> {
    let text = fs::read_to_string(&a.model_file).map_err(|e| Error::io(&a.model_file, e))?;
    let file: ModelFile = serde_json::from_str(&text)?;
    let examples = read_features(&a.features)?;
    let trace = eval::day_trace_examples(&file.model, a.date, &examples)?;
    let prov = Provenance::new(
        file.spec.seed(),
        &json!({ "command": "trace", "spec": file.spec, "date": a.date }),
    );
    write_csv_file(&a.out, &prov, |w| eval::write_day_trace_csv(w, &trace))
}

fn cmd_compare(a: &CompareArgs) -> Result<()> {
    let run = a.run.resolve()?;
    let specs = ComparisonSpecs {
        tree: run.tree_config(),
        forest: run.forest_config(),
        nn: run.net_config(),
    };
    specs.tree.validate()?;
    specs.forest.validate(features::N_FEATURES)?;
    specs.nn.validate()?;
    let examples = read_features(&a.features)?;
    let folds = plan_folds(&examples, &run)?;
    let rows = eval::compare_models(&examples, &folds, &specs)?;
    let prov = Provenance::new(
        Some(run.seed()),
        &json!({ "command": "compare", "specs": specs, "folds": run.fold_count() }),
    );
    write_csv_file(&a.out_dir.join("comparison.csv"), &prov, |w| eval::write_comparison_csv(w, &rows))?;
    let text = eval::render_comparison(&rows);
    let path = a.out_dir.join("comparison.txt");
    let mut f = create(&path)?;
    f.write_all(prov.csv_header().as_bytes())
        .and_then(|_| f.write_all(text.as_bytes()))
        .and_then(|_| f.flush())
        .map_err(|e| Error::io(&path, e))?;
    print!("{text}");
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flag_defaults_resolve_to_library_defaults() {
        let run = RunArgs::default();
        assert_eq!(run.tree_config(), TreeConfig::default());
        assert_eq!(run.forest_config(), ForestConfig { seed: DEFAULT_SEED, ..ForestConfig::default() });
        assert_eq!(run.net_config(), NetConfig { seed: DEFAULT_SEED, ..NetConfig::default() });
        assert_eq!(RunArgs { depth: Some(0), ..RunArgs::default() }.tree_config().max_depth, None);
    }

    #[test]
    fn flags_win_over_config_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        fs::write(&path, r#"{"depth": 3, "trees": 7, "seed": 5, "no-bootstrap": true}"#).unwrap();
        let run = RunArgs { config: Some(path.clone()), depth: Some(4), ..RunArgs::default() }.resolve().unwrap();
        let f = run.forest_config();
        assert_eq!((f.tree.max_depth, f.n_trees, f.seed, f.bootstrap), (Some(4), 7, 5, false));
        fs::write(&path, r#"{"dept": 3}"#).unwrap();
        let err = RunArgs { config: Some(path), ..RunArgs::default() }.resolve().unwrap_err();
        assert_eq!(exit_code(&err), EXIT_USAGE);
    }

    #[test]
    fn provenance_is_stable() {
        let a = Provenance::new(Some(1), &json!({"x": 1}));
        assert_eq!(a, Provenance::new(Some(1), &json!({"x": 1})));
        assert_ne!(a.config_hash, Provenance::new(Some(1), &json!({"x": 2})).config_hash);
        assert_eq!(a.config_hash.len(), 64);
    }

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Error::UnknownDate(NaiveDate::MIN)), EXIT_LOOKUP);
        assert_eq!(exit_code(&Error::TooManyRejects { rejected: 5, total: 10, max_fraction: 0.1 }), EXIT_DATA);
        assert_eq!(exit_code(&Error::NonFiniteLoss { epoch: 1, loss: f64::NAN, best: 1.0 }), EXIT_DIVERGENCE);
        assert_eq!(run_from(["cowshade", "sweep", "--features", "x.csv", "--out", "y.csv", "--depths"]), EXIT_USAGE);
        assert_eq!(run_from(["cowshade", "bogus"]), EXIT_USAGE);
    }
}

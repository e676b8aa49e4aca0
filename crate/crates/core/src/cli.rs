//! `hsifc` command line.
//!
//! Exit codes: 0 success, 1 pipeline failure, 2 usage or configuration error.

use std::collections::HashMap;
use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::band_select::{greedy_band_selection, project_bands, read_band_list, write_band_list};
use crate::data::apply_standardization;
use crate::error::Error;
use crate::evaluation::{write_map, Palette};
use crate::nn::{predict, read_model, write_model, TrainConfig};
use crate::pipeline::{
    data_root, load_source, registered_paths, run_experiments, run_pipeline, BalanceOrder,
    BandSelection, DataSource, LoadedData, PipelineConfig, PipelineOutcome, StreamSeeds,
    BAND_SELECT, DATA_DIR_ENV, DEFAULT_HIDDEN, EVALUATION, HSI_DATA, NN_CORE, SAMPLING,
};
use crate::registry::DatasetName;
use crate::sampling::{stratified_split, DEFAULT_TEST_FRACTION};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "hsifc",
    version,
    about = "Spectral-only hyperspectral pixel classification"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Show bands, classes, class counts and the registered architecture.
    Info(CommonArgs),
    /// Split, balance, standardize, train and evaluate once.
    Train(CommonArgs),
    /// Repeat the training pipeline with consecutive seeds.
    Experiment {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        repeats: Option<usize>,
    },
    /// Greedy divergence band selection on the training partition.
    Bands {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        k: usize,
        /// Retrain on the selected bands and write a model and report.
        #[arg(long)]
        retrain: bool,
    },
    /// Render a classification map of the labeled pixels as a PPM image.
    Map {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        model: PathBuf,
    },
}

#[derive(Debug, Args, Default)]
struct CommonArgs {
    /// JSON run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Registered dataset name (indian_pines, salinas, pavia_centre, pavia_university, botswana).
    #[arg(long)]
    dataset: Option<String>,
    #[arg(long)]
    cube: Option<PathBuf>,
    #[arg(long)]
    gt: Option<PathBuf>,
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_parser = parse_balance_order)]
    balance_order: Option<BalanceOrder>,
    #[arg(long)]
    i_understand_leakage: bool,
    #[arg(long)]
    epochs: Option<usize>,
    /// Output directory (train, experiment, bands) or image path (map).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_balance_order(s: &str) -> Result<BalanceOrder, String> {
    match s {
        "post_split" => Ok(BalanceOrder::PostSplit),
        "pre_split_unsafe" => Ok(BalanceOrder::PreSplitUnsafe),
        other => Err(format!(
            "expected post_split or pre_split_unsafe, got {other:?}"
        )),
    }
}

/// On-disk run configuration. Command-line flags override file values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub dataset: Option<String>,
    pub data_dir: Option<PathBuf>,
    pub cube: Option<PathBuf>,
    pub gt: Option<PathBuf>,
    pub csv: Option<PathBuf>,
    pub test_fraction: f64,
    pub balance: bool,
    pub balance_order: BalanceOrder,
    pub i_understand_leakage: bool,
    pub hidden_sizes: Option<Vec<usize>>,
    pub train: TrainConfig,
    /// Fixed cube band indices.
    pub bands: Option<Vec<usize>>,
    /// File with one band index per line.
    pub band_file: Option<PathBuf>,
    /// Greedy band selection size, applied per training partition.
    pub band_k: Option<usize>,
    pub seed: u64,
    pub repeats: usize,
    pub out: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            dataset: None,
            data_dir: None,
            cube: None,
            gt: None,
            csv: None,
            test_fraction: DEFAULT_TEST_FRACTION,
            balance: true,
            balance_order: BalanceOrder::PostSplit,
            i_understand_leakage: false,
            hidden_sizes: None,
            train: TrainConfig::default(),
            bands: None,
            band_file: None,
            band_k: None,
            seed: 0,
            repeats: 1,
            out: None,
        }
    }
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Pipeline(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e.untagged() {
            Error::Config(msg) => CliError::Usage(msg.clone()),
            _ => CliError::Pipeline(e),
        }
    }
}

type CliResult<T> = Result<T, CliError>;

const CLI: &str = "cli";

fn tagged(module: &'static str, e: Error) -> CliError {
    CliError::Pipeline(Error::in_module(module)(e))
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

pub fn main() -> i32 {
    run(std::env::args_os())
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let result = match cli.command {
        Command::Info(common) => cmd_info(&common),
        Command::Train(common) => cmd_train(&common),
        Command::Experiment { common, repeats } => cmd_experiment(&common, repeats),
        Command::Bands { common, k, retrain } => cmd_bands(&common, k, retrain),
        Command::Map { common, model } => cmd_map(&common, &model),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            eprintln!("run `hsifc --help` for usage");
            EXIT_USAGE
        }
        Err(CliError::Pipeline(e)) => {
            eprintln!("error: {e}");
            EXIT_FAILURE
        }
    }
}

fn load_config(common: &CommonArgs) -> CliResult<RunConfig> {
    let mut cfg = match &common.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
            serde_json::from_str(&text)
                .map_err(|e| usage(format!("bad config {}: {e}", path.display())))?
        }
        None => RunConfig::default(),
    };
    if common.dataset.is_some()
        || common.cube.is_some()
        || common.gt.is_some()
        || common.csv.is_some()
    {
        cfg.dataset = common.dataset.clone();
        cfg.cube = common.cube.clone();
        cfg.gt = common.gt.clone();
        cfg.csv = common.csv.clone();
    }
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(order) = common.balance_order {
        cfg.balance_order = order;
    }
    if common.i_understand_leakage {
        cfg.i_understand_leakage = true;
    }
    if let Some(epochs) = common.epochs {
        cfg.train.epochs = epochs;
    }
    if let Some(out) = &common.out {
        cfg.out = Some(out.clone());
    }
    Ok(cfg)
}

fn dataset_name(cfg: &RunConfig) -> CliResult<Option<DatasetName>> {
    cfg.dataset
        .as_deref()
        .map(|s| s.parse::<DatasetName>().map_err(CliError::from))
        .transpose()
}

fn require_file(path: &Path) -> CliResult<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(usage(format!("input file not found: {}", path.display())))
    }
}

fn resolve_source(cfg: &RunConfig) -> CliResult<DataSource> {
    let source = match (dataset_name(cfg)?, &cfg.cube, &cfg.gt, &cfg.csv) {
        (_, Some(cube), Some(gt), None) => DataSource::Envi {
            cube: cube.clone(),
            gt: gt.clone(),
        },
        (_, None, None, Some(csv)) => DataSource::Csv(csv.clone()),
        (Some(name), None, None, None) => {
            let root = data_root(cfg.data_dir.as_deref()).ok_or_else(|| {
                usage(format!(
                    "no data directory for {name}: set `data_dir` in the config or {DATA_DIR_ENV}"
                ))
            })?;
            let (cube, gt) = registered_paths(&root, name);
            DataSource::Envi { cube, gt }
        }
        (_, Some(_), None, _) | (_, None, Some(_), _) => {
            return Err(usage("--cube and --gt must be given together"))
        }
        (None, None, None, None) => {
            return Err(usage("no input data: give --dataset, --cube/--gt or --csv"))
        }
        _ => return Err(usage("give either --cube/--gt or --csv, not both")),
    };
    match &source {
        DataSource::Envi { cube, gt } => {
            require_file(cube)?;
            require_file(gt)?;
        }
        DataSource::Csv(path) => require_file(path)?,
    }
    Ok(source)
}

fn load_data(cfg: &RunConfig) -> CliResult<LoadedData> {
    let source = resolve_source(cfg)?;
    let data = load_source(&source)?;
    if let Some(name) = dataset_name(cfg)? {
        let d = name.descriptor();
        if data.dataset.bands() != d.bands {
            return Err(tagged(
                HSI_DATA,
                Error::invalid(format!(
                    "{name} is registered with {} bands, data has {}",
                    d.bands,
                    data.dataset.bands()
                )),
            ));
        }
    }
    if data.dataset.is_empty() {
        return Err(tagged(
            HSI_DATA,
            Error::invalid("dataset has no labeled records"),
        ));
    }
    Ok(data)
}

fn pipeline_config(cfg: &RunConfig) -> CliResult<PipelineConfig> {
    let hidden = match (&cfg.hidden_sizes, dataset_name(cfg)?) {
        (Some(h), _) => h.clone(),
        (None, Some(name)) => name.descriptor().hidden_sizes.to_vec(),
        (None, None) => DEFAULT_HIDDEN.to_vec(),
    };
    let bands = match (&cfg.bands, &cfg.band_file, cfg.band_k) {
        (None, None, None) => BandSelection::All,
        (Some(list), None, None) => BandSelection::List(list.clone()),
        (None, Some(file), None) => BandSelection::List(read_band_list(file)?),
        (None, None, Some(k)) => BandSelection::Greedy(k),
        _ => return Err(usage("use only one of `bands`, `band_file`, `band_k`")),
    };
    if !(cfg.test_fraction > 0.0 && cfg.test_fraction < 1.0) {
        return Err(usage(format!(
            "test_fraction must lie in (0, 1), got {}",
            cfg.test_fraction
        )));
    }
    Ok(PipelineConfig {
        test_fraction: cfg.test_fraction,
        balance: cfg.balance,
        balance_order: cfg.balance_order,
        allow_leakage: cfg.i_understand_leakage,
        hidden_sizes: hidden,
        train: cfg.train.clone(),
        bands,
    })
}

fn out_dir(cfg: &RunConfig) -> CliResult<PathBuf> {
    let dir = cfg
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from("hsifc-out"));
    fs::create_dir_all(&dir).map_err(|e| tagged(CLI, Error::io(&dir, e)))?;
    Ok(dir)
}

fn write_json(path: &Path, value: &serde_json::Value) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value).expect("json values serialize");
    fs::write(path, text + "\n").map_err(|e| tagged(CLI, Error::io(path, e)))
}

fn class_names(cfg: &RunConfig, classes: usize) -> CliResult<Vec<String>> {
    Ok(match dataset_name(cfg)? {
        Some(name) => name
            .descriptor()
            .class_names
            .iter()
            .map(|s| s.to_string())
            .collect(),
        None => (1..=classes).map(|c| format!("class {c}")).collect(),
    })
}

fn cmd_info(common: &CommonArgs) -> CliResult<()> {
    let cfg = load_config(common)?;
    let name = dataset_name(&cfg)?;
    let has_files = cfg.cube.is_some() || cfg.gt.is_some() || cfg.csv.is_some();
    if let (Some(name), false) = (name, has_files) {
        let d = name.descriptor();
        println!("dataset: {name}");
        println!("bands: {}", d.bands);
        println!("classes: {}", d.num_classes());
        println!("hidden: {:?}", d.hidden_sizes);
        println!("labeled pixels: {}", d.total_labeled());
        println!(
            "reference OA/AA: {:.1} / {:.1}",
            d.reference_oa, d.reference_aa
        );
        for (i, (n, c)) in d.class_names.iter().zip(d.class_counts).enumerate() {
            println!("  {:>2} {:<30} {c}", i + 1, n);
        }
        return Ok(());
    }
    let data = load_data(&cfg)?;
    let ds = &data.dataset;
    let names = class_names(&cfg, ds.num_classes() as usize)?;
    let hidden = pipeline_config(&cfg)?.hidden_sizes;
    println!("bands: {}", ds.bands());
    println!("classes: {}", ds.num_classes());
    println!("hidden: {hidden:?}");
    println!("labeled pixels: {}", ds.len());
    for (i, c) in ds.class_counts().iter().enumerate() {
        let n = names.get(i).map(String::as_str).unwrap_or("");
        println!("  {:>2} {:<30} {c}", i + 1, n);
    }
    Ok(())
}

fn outcome_report(cfg: &RunConfig, outcome: &PipelineOutcome) -> CliResult<serde_json::Value> {
    let m = &outcome.metrics;
    let names = class_names(cfg, m.per_class.len())?;
    let rows = m.confusion.rows();
    let per_class: Vec<_> = m
        .per_class
        .iter()
        .enumerate()
        .map(|(c, acc)| {
            json!({
                "class": c + 1,
                "name": names.get(c),
                "correct": rows[c][c],
                "total": rows[c].iter().sum::<u64>(),
                "accuracy": acc,
            })
        })
        .collect();
    Ok(json!({
        "oa": m.oa,
        "aa": m.aa,
        "per_class": per_class,
        "confusion": rows,
        "leakage_overlap": outcome.leakage_overlap,
        "leakage_warning": outcome.leakage_overlap > 0,
        "train_records": outcome.train_count,
        "test_records": outcome.test_pixels.len(),
        "bands": outcome.model.bands,
        "train": {
            "epoch_losses": outcome.train_report.epoch_losses,
            "train_accuracy": outcome.train_report.train_accuracy,
        },
        "seed": outcome.seed,
        "streams": outcome.streams,
        "config": cfg,
    }))
}

fn train_and_report(cfg: &RunConfig, pcfg: &PipelineConfig, data: &LoadedData) -> CliResult<()> {
    let dir = out_dir(cfg)?;
    let outcome = run_pipeline(&data.dataset, pcfg, cfg.seed)?;
    eprintln!(
        "seed {}: OA {:.2}%  AA {:.2}%  ({:.1}s training)",
        cfg.seed, outcome.metrics.oa, outcome.metrics.aa, outcome.train_report.seconds
    );
    if outcome.leakage_overlap > 0 {
        eprintln!(
            "warning: {} train/test record pairs share a pixel; test accuracy is inflated",
            outcome.leakage_overlap
        );
    }
    write_model(&outcome.model, &dir.join("model.hsm")).map_err(Error::in_module(NN_CORE))?;
    write_json(&dir.join("report.json"), &outcome_report(cfg, &outcome)?)
}

fn cmd_train(common: &CommonArgs) -> CliResult<()> {
    let cfg = load_config(common)?;
    let pcfg = pipeline_config(&cfg)?;
    let data = load_data(&cfg)?;
    train_and_report(&cfg, &pcfg, &data)
}

fn cmd_experiment(common: &CommonArgs, repeats: Option<usize>) -> CliResult<()> {
    let mut cfg = load_config(common)?;
    if let Some(r) = repeats {
        cfg.repeats = r;
    }
    if cfg.repeats == 0 {
        return Err(usage("--repeats must be at least 1"));
    }
    let pcfg = pipeline_config(&cfg)?;
    let data = load_data(&cfg)?;
    let dir = out_dir(&cfg)?;
    let summary = run_experiments(&data.dataset, &pcfg, cfg.repeats, cfg.seed)?;
    eprintln!(
        "{} repeats: OA {:.2} +/- {:.2}  AA {:.2} +/- {:.2}",
        summary.repeats, summary.oa_mean, summary.oa_std, summary.aa_mean, summary.aa_std
    );
    let mut value = serde_json::to_value(&summary).expect("summary serializes");
    value["config"] = serde_json::to_value(&cfg).expect("config serializes");
    if let Some(name) = dataset_name(&cfg)? {
        let d = name.descriptor();
        value["reference"] = json!({ "oa": d.reference_oa, "aa": d.reference_aa });
    }
    write_json(&dir.join("summary.json"), &value)
}

fn cmd_bands(common: &CommonArgs, k: usize, retrain: bool) -> CliResult<()> {
    let mut cfg = load_config(common)?;
    let data = load_data(&cfg)?;
    let bands = data.dataset.bands();
    if k == 0 || k > bands {
        return Err(usage(format!("--k must lie in 1..={bands}, got {k}")));
    }
    let dir = out_dir(&cfg)?;
    let streams = StreamSeeds::from_seed(cfg.seed);
    let split = stratified_split(&data.dataset, cfg.test_fraction, streams.split)
        .map_err(Error::in_module(SAMPLING))?;
    let selected = greedy_band_selection(&split.train, k)
        .and_then(|b| write_band_list(&b, &dir.join("bands.txt")).map(|_| b))
        .map_err(Error::in_module(BAND_SELECT))?;
    eprintln!("selected {k} of {bands} bands: {selected:?}");
    if retrain {
        cfg.bands = None;
        cfg.band_file = None;
        cfg.band_k = Some(k);
        let pcfg = pipeline_config(&cfg)?;
        train_and_report(&cfg, &pcfg, &data)?;
    }
    Ok(())
}

fn cmd_map(common: &CommonArgs, model_path: &Path) -> CliResult<()> {
    let cfg = load_config(common)?;
    require_file(model_path)?;
    let out = cfg
        .out
        .clone()
        .ok_or_else(|| usage("map needs --out <image.ppm>"))?;
    let model = read_model(model_path).map_err(Error::in_module(NN_CORE))?;
    let source = resolve_source(&cfg)?;
    if matches!(source, DataSource::Csv(_)) {
        return Err(usage(
            "map needs a cube and ground truth, not a csv dataset",
        ));
    }
    let data = load_source(&source)?;
    let gt = data.gt.as_ref().expect("envi source has ground truth");
    let cube_bands = data.dataset.bands();
    let expected = model.network.input_size();
    let mismatch = || {
        tagged(
            NN_CORE,
            Error::invalid(format!(
                "model expects {expected} bands, cube has {cube_bands}"
            )),
        )
    };
    let ds = match &model.bands {
        Some(b) if b.iter().any(|&i| i >= cube_bands) => {
            return Err(tagged(
                NN_CORE,
                Error::invalid(format!(
                    "model selects band {} but cube has {cube_bands} bands",
                    b.iter().max().copied().unwrap_or(0)
                )),
            ))
        }
        Some(b) => project_bands(&data.dataset, b).map_err(Error::in_module(BAND_SELECT))?,
        None if cube_bands != expected => return Err(mismatch()),
        None => data.dataset,
    };
    let z = apply_standardization(&ds, &model.stats).map_err(Error::in_module(HSI_DATA))?;
    let labels = predict(&model.network, &z).map_err(Error::in_module(NN_CORE))?;
    let predictions: HashMap<usize, u32> = z.pixel_indices().iter().copied().zip(labels).collect();
    write_map(gt, &predictions, &Palette::default(), &out).map_err(Error::in_module(EVALUATION))?;
    eprintln!("wrote {}", out.display());
    Ok(())
}

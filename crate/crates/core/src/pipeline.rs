//! End-to-end experiment: split, optional band selection, balancing,
//! standardization, training and test-set evaluation.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::band_select::{greedy_band_selection, project_bands};
use crate::data::{
    apply_standardization, extract_labeled_pixels, fit_band_stats, load_csv_dataset,
    load_envi_cube, load_label_raster, LabelRaster, PixelDataset, SpectralCube,
};
use crate::error::{Error, Result};
use crate::evaluation::{ExperimentSummary, MetricsReport};
use crate::nn::{init_network, predict, train, ModelFile, NetworkSpec, TrainConfig, TrainReport};
use crate::registry::DatasetName;
use crate::rng::{self, derive_seed};
use crate::sampling::{
    balance_by_duplication, leakage_overlap, stratified_split, DEFAULT_TEST_FRACTION,
};

/// Hidden layer widths for data without a registered architecture.
pub const DEFAULT_HIDDEN: [usize; 4] = [64, 64, 64, 64];

pub const HSI_DATA: &str = "hsi_data";
pub const SAMPLING: &str = "sampling";
pub const NN_CORE: &str = "nn_core";
pub const BAND_SELECT: &str = "band_select";
pub const EVALUATION: &str = "evaluation";

/// Environment variable naming the directory that holds converted scenes.
pub const DATA_DIR_ENV: &str = "HSIFC_DATA_DIR";

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BalanceOrder {
    /// Split first, then balance the training partition only.
    #[default]
    PostSplit,
    /// Balance the whole dataset, then split. Copies of one pixel end up in
    /// both partitions; only useful to demonstrate that leakage.
    PreSplitUnsafe,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BandSelection {
    All,
    /// Fixed cube band indices, in order.
    List(Vec<usize>),
    /// Greedy divergence selection of `k` bands on each training partition.
    Greedy(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub test_fraction: f64,
    pub balance: bool,
    pub balance_order: BalanceOrder,
    /// Required to run [`BalanceOrder::PreSplitUnsafe`].
    pub allow_leakage: bool,
    pub hidden_sizes: Vec<usize>,
    pub train: TrainConfig,
    pub bands: BandSelection,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            test_fraction: DEFAULT_TEST_FRACTION,
            balance: true,
            balance_order: BalanceOrder::PostSplit,
            allow_leakage: false,
            hidden_sizes: DEFAULT_HIDDEN.to_vec(),
            train: TrainConfig::default(),
            bands: BandSelection::All,
        }
    }
}

/// Seeds of the independent random streams used by one pipeline run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StreamSeeds {
    pub split: u64,
    pub balance: u64,
    pub init: u64,
    pub shuffle: u64,
}

impl StreamSeeds {
    pub fn from_seed(seed: u64) -> Self {
        Self {
            split: derive_seed(seed, rng::stream::SPLIT),
            balance: derive_seed(seed, rng::stream::BALANCE),
            init: derive_seed(seed, rng::stream::INIT),
            shuffle: derive_seed(seed, rng::stream::SHUFFLE),
        }
    }
}

#[derive(Debug, Clone)]
pub struct PipelineOutcome {
    pub seed: u64,
    pub streams: StreamSeeds,
    pub model: ModelFile,
    pub train_report: TrainReport,
    pub metrics: MetricsReport,
    /// (train, test) record pairs sharing a pixel; 0 unless balancing ran
    /// before the split.
    pub leakage_overlap: u64,
    pub train_count: usize,
    pub test_pixels: Vec<usize>,
    pub test_predictions: Vec<u32>,
}

pub(crate) fn validate_config(cfg: &PipelineConfig) -> Result<()> {
    if cfg.balance && cfg.balance_order == BalanceOrder::PreSplitUnsafe && !cfg.allow_leakage {
        return Err(Error::Config(
            "pre_split_unsafe balancing leaks duplicated pixels into the test set; \
             it needs an explicit acknowledgment (--i-understand-leakage)"
                .into(),
        ));
    }
    Ok(())
}

pub fn run_pipeline(ds: &PixelDataset, cfg: &PipelineConfig, seed: u64) -> Result<PipelineOutcome> {
    validate_config(cfg)?;
    let streams = StreamSeeds::from_seed(seed);

    let pre_split = cfg.balance && cfg.balance_order == BalanceOrder::PreSplitUnsafe;
    let split = if pre_split {
        balance_by_duplication(ds, streams.balance)
            .and_then(|all| stratified_split(&all, cfg.test_fraction, streams.split))
    } else {
        stratified_split(ds, cfg.test_fraction, streams.split)
    }
    .map_err(Error::in_module(SAMPLING))?;

    let bands = match &cfg.bands {
        BandSelection::All => None,
        BandSelection::List(list) => Some(list.clone()),
        BandSelection::Greedy(k) => {
            Some(greedy_band_selection(&split.train, *k).map_err(Error::in_module(BAND_SELECT))?)
        }
    };
    let (train_part, test_part) = match &bands {
        None => (split.train, split.test),
        Some(b) => (
            project_bands(&split.train, b).map_err(Error::in_module(BAND_SELECT))?,
            project_bands(&split.test, b).map_err(Error::in_module(BAND_SELECT))?,
        ),
    };

    let train_part = if cfg.balance && !pre_split {
        balance_by_duplication(&train_part, streams.balance).map_err(Error::in_module(SAMPLING))?
    } else {
        train_part
    };
    let leakage = leakage_overlap(&train_part, &test_part);

    let (stats, train_z, test_z) = fit_band_stats(&train_part)
        .and_then(|stats| {
            let train_z = apply_standardization(&train_part, &stats)?;
            let test_z = apply_standardization(&test_part, &stats)?;
            Ok((stats, train_z, test_z))
        })
        .map_err(Error::in_module(HSI_DATA))?;

    let spec = NetworkSpec::new(
        train_z.bands(),
        &cfg.hidden_sizes,
        ds.num_classes() as usize,
    );
    let train_cfg = TrainConfig {
        shuffle_seed: streams.shuffle,
        ..cfg.train.clone()
    };
    let (net, train_report, predicted) = init_network::<f32>(&spec, streams.init)
        .and_then(|net| train(net, &train_z, &train_cfg))
        .and_then(|(net, report)| {
            let predicted = predict(&net, &test_z)?;
            Ok((net, report, predicted))
        })
        .map_err(Error::in_module(NN_CORE))?;
    let metrics = MetricsReport::evaluate(test_z.labels(), &predicted, ds.num_classes() as usize)
        .map_err(Error::in_module(EVALUATION))?;

    Ok(PipelineOutcome {
        seed,
        streams,
        model: ModelFile {
            network: net,
            stats,
            bands,
        },
        train_report,
        metrics,
        leakage_overlap: leakage,
        train_count: train_z.len(),
        test_pixels: test_z.pixel_indices().to_vec(),
        test_predictions: predicted,
    })
}

/// Runs the pipeline `repeats` times with seeds `base_seed + r`. Repeats run
/// in parallel and are reported in repeat order.
pub fn run_experiments(
    ds: &PixelDataset,
    cfg: &PipelineConfig,
    repeats: usize,
    base_seed: u64,
) -> Result<ExperimentSummary> {
    if repeats == 0 {
        return Err(Error::invalid("repeats must be at least 1"));
    }
    validate_config(cfg)?;
    let runs = (0..repeats)
        .into_par_iter()
        .map(|r| {
            let seed = base_seed.wrapping_add(r as u64);
            run_pipeline(ds, cfg, seed)
                .map(|o| (seed, o.metrics.oa, o.metrics.aa))
                .map_err(|e| Error::Repeat {
                    repeat: r,
                    source: Box::new(e),
                })
        })
        .collect::<Result<Vec<_>>>()?;
    ExperimentSummary::from_repeats(&runs)
}

// ---------------------------------------------------------------------------
// Data sources
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    Envi { cube: PathBuf, gt: PathBuf },
    Csv(PathBuf),
}

/// Scene files for a registered dataset: `<root>/<name>.hdr` and
/// `<root>/<name>_gt.hdr`.
pub fn registered_paths(root: &Path, name: DatasetName) -> (PathBuf, PathBuf) {
    (
        root.join(format!("{}.hdr", name.as_str())),
        root.join(format!("{}_gt.hdr", name.as_str())),
    )
}

/// Directory from `explicit`, else from `HSIFC_DATA_DIR`.
pub fn data_root(explicit: Option<&Path>) -> Option<PathBuf> {
    explicit
        .map(Path::to_path_buf)
        .or_else(|| std::env::var_os(DATA_DIR_ENV).map(PathBuf::from))
}

#[derive(Debug, Clone)]
pub struct LoadedData {
    pub dataset: PixelDataset,
    pub cube: Option<SpectralCube>,
    pub gt: Option<LabelRaster>,
}

pub fn load_source(source: &DataSource) -> Result<LoadedData> {
    load_source_untagged(source).map_err(Error::in_module(HSI_DATA))
}

fn load_source_untagged(source: &DataSource) -> Result<LoadedData> {
    match source {
        DataSource::Csv(path) => Ok(LoadedData {
            dataset: load_csv_dataset(path)?,
            cube: None,
            gt: None,
        }),
        DataSource::Envi { cube, gt } => {
            let cube = load_envi_cube(cube)?;
            let gt = load_label_raster(gt)?;
            let dataset = extract_labeled_pixels(&cube, &gt)?;
            Ok(LoadedData {
                dataset,
                cube: Some(cube),
                gt: Some(gt),
            })
        }
    }
}

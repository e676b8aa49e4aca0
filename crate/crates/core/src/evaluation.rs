//! Confusion matrices, overall/average accuracy and classification maps.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::LabelRaster;
use crate::error::{Error, Result};

/// Rows are true classes, columns predicted classes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    classes: usize,
    counts: Vec<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class_names: Option<Vec<String>>,
}

impl ConfusionMatrix {
    pub fn zeros(classes: usize) -> Self {
        Self {
            classes,
            counts: vec![0; classes * classes],
            class_names: None,
        }
    }

    pub fn from_rows(rows: &[Vec<u64>]) -> Result<Self> {
        let classes = rows.len();
        if rows.iter().any(|r| r.len() != classes) {
            return Err(Error::invalid("confusion matrix must be square"));
        }
        Ok(Self {
            classes,
            counts: rows.concat(),
            class_names: None,
        })
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn get(&self, truth: u32, predicted: u32) -> u64 {
        self.counts[(truth as usize - 1) * self.classes + predicted as usize - 1]
    }

    pub fn rows(&self) -> Vec<Vec<u64>> {
        self.counts
            .chunks(self.classes.max(1))
            .map(<[u64]>::to_vec)
            .collect()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.classes)
            .map(|c| self.counts[c * self.classes + c])
            .sum()
    }

    pub fn row_sums(&self) -> Vec<u64> {
        self.counts
            .chunks(self.classes.max(1))
            .map(|r| r.iter().sum())
            .collect()
    }

    /// Per-class recall in `[0, 1]`.
    pub fn per_class_accuracy(&self) -> Result<Vec<f64>> {
        self.row_sums()
            .iter()
            .enumerate()
            .map(|(c, &n)| {
                if n == 0 {
                    Err(Error::invalid(format!(
                        "class {} has no test records",
                        c + 1
                    )))
                } else {
                    Ok(self.counts[c * self.classes + c] as f64 / n as f64)
                }
            })
            .collect()
    }
}

pub fn confusion_matrix(
    truth: &[u32],
    predicted: &[u32],
    classes: usize,
) -> Result<ConfusionMatrix> {
    if truth.len() != predicted.len() {
        return Err(Error::invalid(format!(
            "{} true labels but {} predictions",
            truth.len(),
            predicted.len()
        )));
    }
    let mut cm = ConfusionMatrix::zeros(classes);
    for (&t, &p) in truth.iter().zip(predicted) {
        for l in [t, p] {
            if l == 0 || l as usize > classes {
                return Err(Error::invalid(format!("label {l} outside 1..={classes}")));
            }
        }
        cm.counts[(t as usize - 1) * classes + p as usize - 1] += 1;
    }
    Ok(cm)
}

/// Percentage of records on the diagonal.
pub fn overall_accuracy(cm: &ConfusionMatrix) -> Result<f64> {
    let total = cm.total();
    if total == 0 {
        return Err(Error::invalid(
            "overall accuracy of an empty confusion matrix",
        ));
    }
    Ok(100.0 * cm.trace() as f64 / total as f64)
}

/// Mean per-class accuracy, in percent. Every class needs test records.
pub fn average_accuracy(cm: &ConfusionMatrix) -> Result<f64> {
    let per_class = cm.per_class_accuracy()?;
    if per_class.is_empty() {
        return Err(Error::invalid(
            "average accuracy of an empty confusion matrix",
        ));
    }
    Ok(100.0 * per_class.iter().sum::<f64>() / per_class.len() as f64)
}

/// Rounds half away from zero to one decimal place, the way result tables
/// are printed.
pub fn round1(value: f64) -> f64 {
    (value * 10.0).round() / 10.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub oa: f64,
    pub aa: f64,
    /// Per-class accuracy in percent.
    pub per_class: Vec<f64>,
    pub confusion: ConfusionMatrix,
}

impl MetricsReport {
    pub fn from_confusion(confusion: ConfusionMatrix) -> Result<Self> {
        let per_class = confusion
            .per_class_accuracy()?
            .into_iter()
            .map(|a| 100.0 * a)
            .collect();
        Ok(Self {
            oa: overall_accuracy(&confusion)?,
            aa: average_accuracy(&confusion)?,
            per_class,
            confusion,
        })
    }

    pub fn evaluate(truth: &[u32], predicted: &[u32], classes: usize) -> Result<Self> {
        Self::from_confusion(confusion_matrix(truth, predicted, classes)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub repeats: usize,
    pub seeds: Vec<u64>,
    pub oa: Vec<f64>,
    pub aa: Vec<f64>,
    pub oa_mean: f64,
    pub oa_std: f64,
    pub aa_mean: f64,
    pub aa_std: f64,
}

/// Mean and population standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

impl ExperimentSummary {
    /// `(seed, OA, AA)` per repeat, in repeat order.
    pub fn from_repeats(runs: &[(u64, f64, f64)]) -> Result<Self> {
        if runs.is_empty() {
            return Err(Error::invalid("no repeats to summarize"));
        }
        let oa: Vec<f64> = runs.iter().map(|r| r.1).collect();
        let aa: Vec<f64> = runs.iter().map(|r| r.2).collect();
        let (oa_mean, oa_std) = mean_std(&oa);
        let (aa_mean, aa_std) = mean_std(&aa);
        Ok(Self {
            repeats: runs.len(),
            seeds: runs.iter().map(|r| r.0).collect(),
            oa,
            aa,
            oa_mean,
            oa_std,
            aa_mean,
            aa_std,
        })
    }
}

// ---------------------------------------------------------------------------
// Classification maps
// ---------------------------------------------------------------------------

/// Class colors for rendered maps; background is always black.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Palette {
    colors: Vec<[u8; 3]>,
}

/// Sixteen high-contrast colors; class `c` uses entry `(c - 1) % 16`.
pub const DEFAULT_PALETTE: [[u8; 3]; 16] = [
    [230, 25, 75],
    [60, 180, 75],
    [255, 225, 25],
    [0, 130, 200],
    [245, 130, 48],
    [145, 30, 180],
    [70, 240, 240],
    [240, 50, 230],
    [210, 245, 60],
    [250, 190, 212],
    [0, 128, 128],
    [220, 190, 255],
    [170, 110, 40],
    [255, 250, 200],
    [128, 0, 0],
    [170, 255, 195],
];

impl Default for Palette {
    fn default() -> Self {
        Self {
            colors: DEFAULT_PALETTE.to_vec(),
        }
    }
}

impl Palette {
    pub fn new(colors: Vec<[u8; 3]>) -> Result<Self> {
        if colors.is_empty() {
            return Err(Error::invalid("palette needs at least one color"));
        }
        Ok(Self { colors })
    }

    /// Color for a label; 0 is black.
    pub fn color(&self, label: u32) -> [u8; 3] {
        if label == 0 {
            [0, 0, 0]
        } else {
            self.colors[(label as usize - 1) % self.colors.len()]
        }
    }
}

/// Binary PPM (P6, maxval 255) of the predicted classes at every labeled
/// ground-truth pixel. Background pixels are black.
pub fn render_map(
    gt: &LabelRaster,
    predictions: &HashMap<usize, u32>,
    palette: &Palette,
) -> Result<Vec<u8>> {
    let labels = gt.labels();
    let mut out = format!("P6\n{} {}\n255\n", gt.samples(), gt.lines()).into_bytes();
    out.reserve(3 * labels.len());
    for (p, &truth) in labels.iter().enumerate() {
        let color = if truth == 0 {
            if predictions.contains_key(&p) {
                return Err(Error::invalid(format!(
                    "prediction given for background pixel {p}"
                )));
            }
            [0, 0, 0]
        } else {
            let label = predictions
                .get(&p)
                .ok_or_else(|| Error::invalid(format!("no prediction for labeled pixel {p}")))?;
            palette.color(*label)
        };
        out.extend_from_slice(&color);
    }
    if predictions.keys().any(|&p| p >= labels.len()) {
        return Err(Error::invalid("prediction for a pixel outside the raster"));
    }
    Ok(out)
}

pub fn write_map(
    gt: &LabelRaster,
    predictions: &HashMap<usize, u32>,
    palette: &Palette,
    path: &Path,
) -> Result<()> {
    let bytes = render_map(gt, predictions, palette)?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

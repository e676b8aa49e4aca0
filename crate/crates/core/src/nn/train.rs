use std::time::Instant;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::adam::{adam_step, OptimizerState};
use super::matrix::{Matrix, Scalar};
use super::network::{predict, Mode, Network};
use crate::data::PixelDataset;
use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_epsilon: f64,
    pub shuffle_seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 100,
            batch_size: 256,
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            adam_epsilon: 1e-8,
            shuffle_seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    /// Mean cross-entropy per epoch, weighted by batch size.
    pub epoch_losses: Vec<f64>,
    /// Inference-mode accuracy on the training set, in `[0, 1]`.
    pub train_accuracy: f64,
    pub seconds: f64,
}

/// Mini-batch Adam training.
///
/// Each epoch visits the records in a fresh seeded shuffle. A trailing
/// mini-batch is used if it holds at least two records (batch norm needs a
/// variance) and dropped otherwise. The returned network is in inference
/// mode unless `epochs == 0`, in which case it is returned unchanged.
pub fn train<T: Scalar>(
    mut net: Network<T>,
    train_set: &PixelDataset,
    cfg: &TrainConfig,
) -> Result<(Network<T>, TrainReport)> {
    let start = Instant::now();
    if train_set.bands() != net.input_size() {
        return Err(Error::invalid(format!(
            "training set has {} bands, network expects {}",
            train_set.bands(),
            net.input_size()
        )));
    }
    if let Some(&bad) = train_set
        .labels()
        .iter()
        .find(|&&l| l as usize > net.num_classes())
    {
        return Err(Error::invalid(format!(
            "label {bad} exceeds the network's {} classes",
            net.num_classes()
        )));
    }
    if cfg.batch_size < 2 {
        return Err(Error::invalid("batch size must be at least 2"));
    }
    if cfg.batch_size > train_set.len() {
        return Err(Error::invalid(format!(
            "batch size {} exceeds training set size {}",
            cfg.batch_size,
            train_set.len()
        )));
    }
    if cfg.epochs == 0 {
        return Ok((
            net,
            TrainReport {
                epoch_losses: Vec::new(),
                train_accuracy: 0.0,
                seconds: start.elapsed().as_secs_f64(),
            },
        ));
    }

    net.set_mode(Mode::Training);
    let mut state = OptimizerState::new(&net);
    let mut rng = rng::seeded(cfg.shuffle_seed);
    let bands = train_set.bands();
    let features = train_set.features();
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut epoch_losses = Vec::with_capacity(cfg.epochs);
    let mut batch_labels: Vec<u32> = Vec::with_capacity(cfg.batch_size);

    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        let mut seen = 0usize;
        for chunk in order.chunks(cfg.batch_size) {
            if chunk.len() < 2 {
                continue;
            }
            let mut batch_data = Vec::with_capacity(chunk.len() * bands);
            batch_labels.clear();
            for &i in chunk {
                batch_data.extend(
                    features[i * bands..(i + 1) * bands]
                        .iter()
                        .map(|&v| T::lit(v)),
                );
                batch_labels.push(train_set.label(i));
            }
            let batch = Matrix::from_vec(chunk.len(), bands, batch_data);
            let (loss, grads) = net.loss_and_gradients(&batch, &batch_labels)?;
            adam_step(&mut net, &grads, &mut state, cfg)?;
            loss_sum += loss.to_f64().unwrap_or(f64::NAN) * chunk.len() as f64;
            seen += chunk.len();
        }
        let epoch_loss = loss_sum / seen as f64;
        if !epoch_loss.is_finite() {
            return Err(Error::invalid(format!(
                "training diverged: epoch {} loss is {epoch_loss}",
                epoch_losses.len() + 1
            )));
        }
        epoch_losses.push(epoch_loss);
    }

    net.set_mode(Mode::Inference);
    let predicted = predict(&net, train_set)?;
    let correct = predicted
        .iter()
        .zip(train_set.labels())
        .filter(|(p, l)| p == l)
        .count();
    Ok((
        net,
        TrainReport {
            epoch_losses,
            train_accuracy: correct as f64 / train_set.len() as f64,
            seconds: start.elapsed().as_secs_f64(),
        },
    ))
}

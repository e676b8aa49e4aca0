use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::matrix::{affine, column_sums, input_grad, weight_grad, Matrix, Scalar};
use crate::data::PixelDataset;
use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkSpec {
    pub input_size: usize,
    pub hidden_sizes: Vec<usize>,
    pub output_size: usize,
    #[serde(default = "default_bn_epsilon")]
    pub bn_epsilon: f64,
    #[serde(default = "default_bn_momentum")]
    pub bn_momentum: f64,
}

fn default_bn_epsilon() -> f64 {
    1e-5
}

fn default_bn_momentum() -> f64 {
    0.9
}

impl NetworkSpec {
    pub fn new(input_size: usize, hidden_sizes: &[usize], output_size: usize) -> Self {
        Self {
            input_size,
            hidden_sizes: hidden_sizes.to_vec(),
            output_size,
            bn_epsilon: default_bn_epsilon(),
            bn_momentum: default_bn_momentum(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_size == 0 || self.output_size == 0 || self.hidden_sizes.contains(&0) {
            return Err(Error::invalid(format!(
                "layer sizes must be positive: {self:?}"
            )));
        }
        if !(self.bn_epsilon > 0.0) {
            return Err(Error::invalid("batch-norm epsilon must be positive"));
        }
        if !(self.bn_momentum > 0.0 && self.bn_momentum < 1.0) {
            return Err(Error::invalid("batch-norm momentum must lie in (0, 1)"));
        }
        Ok(())
    }

    /// Dense weights and biases plus batch-norm scale and shift.
    pub fn parameter_count(&self) -> usize {
        let mut fan_in = self.input_size;
        let mut total = 0;
        for &h in &self.hidden_sizes {
            total += fan_in * h + h + 2 * h;
            fan_in = h;
        }
        total + fan_in * self.output_size + self.output_size
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    Training,
    Inference,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dense<T> {
    pub inputs: usize,
    pub outputs: usize,
    /// `outputs x inputs`, row-major.
    pub weights: Vec<T>,
    pub bias: Vec<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchNorm<T> {
    pub gamma: Vec<T>,
    pub beta: Vec<T>,
    pub running_mean: Vec<T>,
    pub running_var: Vec<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HiddenBlock<T> {
    pub dense: Dense<T>,
    pub bn: BatchNorm<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network<T> {
    pub spec: NetworkSpec,
    pub hidden: Vec<HiddenBlock<T>>,
    pub output: Dense<T>,
    pub mode: Mode,
}

/// Parameter-shaped gradient buffers, ordered like [`Network::parameters`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients<T> {
    pub tensors: Vec<Vec<T>>,
}

/// Per-block values kept from a training-mode forward pass.
pub(crate) struct BlockCache<T> {
    input: Matrix<T>,
    normalized: Matrix<T>,
    /// Post-affine, pre-ReLU activations.
    activated: Matrix<T>,
    pub(crate) batch_mean: Vec<T>,
    pub(crate) batch_var: Vec<T>,
    inv_std: Vec<T>,
}

pub(crate) struct ForwardCache<T> {
    pub(crate) blocks: Vec<BlockCache<T>>,
    last_hidden: Matrix<T>,
}

/// He-initialized network: weights ~ N(0, 2 / fan_in), zero biases,
/// `gamma = 1`, `beta = 0`, running statistics `(0, 1)`, training mode.
pub fn init_network<T: Scalar>(spec: &NetworkSpec, seed: u64) -> Result<Network<T>> {
    spec.validate()?;
    let mut rng = rng::seeded(seed);
    let mut dense = |inputs: usize, outputs: usize| {
        let normal = Normal::new(0.0, (2.0 / inputs as f64).sqrt()).unwrap();
        Dense {
            inputs,
            outputs,
            weights: (0..inputs * outputs)
                .map(|_| T::lit(normal.sample(&mut rng)))
                .collect(),
            bias: vec![T::zero(); outputs],
        }
    };
    let mut fan_in = spec.input_size;
    let mut hidden = Vec::with_capacity(spec.hidden_sizes.len());
    for &h in &spec.hidden_sizes {
        hidden.push(HiddenBlock {
            dense: dense(fan_in, h),
            bn: BatchNorm {
                gamma: vec![T::one(); h],
                beta: vec![T::zero(); h],
                running_mean: vec![T::zero(); h],
                running_var: vec![T::one(); h],
            },
        });
        fan_in = h;
    }
    let output = dense(fan_in, spec.output_size);
    Ok(Network {
        spec: spec.clone(),
        hidden,
        output,
        mode: Mode::Training,
    })
}

impl<T: Scalar> Network<T> {
    pub fn input_size(&self) -> usize {
        self.spec.input_size
    }

    pub fn num_classes(&self) -> usize {
        self.spec.output_size
    }

    pub fn set_mode(&mut self, mode: Mode) {
        self.mode = mode;
    }

    /// Trainable tensors: per hidden block `[W, b, gamma, beta]`, then the
    /// output `[W, b]`.
    pub fn parameters(&self) -> Vec<&[T]> {
        let mut out = Vec::with_capacity(4 * self.hidden.len() + 2);
        for block in &self.hidden {
            out.push(block.dense.weights.as_slice());
            out.push(block.dense.bias.as_slice());
            out.push(block.bn.gamma.as_slice());
            out.push(block.bn.beta.as_slice());
        }
        out.push(self.output.weights.as_slice());
        out.push(self.output.bias.as_slice());
        out
    }

    pub fn parameters_mut(&mut self) -> Vec<&mut [T]> {
        let mut out = Vec::with_capacity(4 * self.hidden.len() + 2);
        for block in &mut self.hidden {
            out.push(block.dense.weights.as_mut_slice());
            out.push(block.dense.bias.as_mut_slice());
            out.push(block.bn.gamma.as_mut_slice());
            out.push(block.bn.beta.as_mut_slice());
        }
        out.push(self.output.weights.as_mut_slice());
        out.push(self.output.bias.as_mut_slice());
        out
    }

    pub fn parameter_count(&self) -> usize {
        self.parameters().iter().map(|p| p.len()).sum()
    }

    pub fn zero_gradients(&self) -> Gradients<T> {
        Gradients {
            tensors: self
                .parameters()
                .iter()
                .map(|p| vec![T::zero(); p.len()])
                .collect(),
        }
    }

    fn check_input(&self, batch: &Matrix<T>) -> Result<()> {
        if batch.cols() != self.spec.input_size {
            return Err(Error::invalid(format!(
                "batch has {} features, network expects {}",
                batch.cols(),
                self.spec.input_size
            )));
        }
        Ok(())
    }

    /// Logits for `batch`. In training mode this normalizes with batch
    /// statistics and folds them into the running statistics; in inference
    /// mode it uses the running statistics and leaves the network untouched.
    pub fn forward(&mut self, batch: &Matrix<T>) -> Result<Matrix<T>> {
        match self.mode {
            Mode::Inference => self.forward_inference(batch),
            Mode::Training => {
                let (logits, cache) = self.forward_training(batch)?;
                self.update_running_stats(&cache);
                Ok(logits)
            }
        }
    }

    /// Inference-path logits regardless of the current mode.
    pub fn forward_inference(&self, batch: &Matrix<T>) -> Result<Matrix<T>> {
        self.check_input(batch)?;
        let eps = T::lit(self.spec.bn_epsilon);
        let mut a = batch.clone();
        for block in &self.hidden {
            let mut z = affine(&a, &block.dense.weights, &block.dense.bias);
            let bn = &block.bn;
            let scale: Vec<T> = bn
                .running_var
                .iter()
                .zip(&bn.gamma)
                .map(|(&v, &g)| g / (v + eps).sqrt())
                .collect();
            for r in 0..z.rows() {
                for (j, v) in z.row_mut(r).iter_mut().enumerate() {
                    let y = (*v - bn.running_mean[j]) * scale[j] + bn.beta[j];
                    *v = y.max(T::zero());
                }
            }
            a = z;
        }
        Ok(affine(&a, &self.output.weights, &self.output.bias))
    }

    /// Training-path forward pass with batch statistics. Does not touch the
    /// running statistics.
    pub(crate) fn forward_training(
        &self,
        batch: &Matrix<T>,
    ) -> Result<(Matrix<T>, ForwardCache<T>)> {
        self.check_input(batch)?;
        let n = batch.rows();
        if n < 2 {
            return Err(Error::invalid(format!(
                "training-mode batch needs at least 2 records, got {n}"
            )));
        }
        let eps = T::lit(self.spec.bn_epsilon);
        let inv_n = T::one() / T::lit(n as f64);
        let mut blocks = Vec::with_capacity(self.hidden.len());
        let mut a = batch.clone();
        for block in &self.hidden {
            // The dense bias cancels under batch centering, so it is left out
            // of the batch statistics and only folded into the running mean.
            // This keeps the training-mode loss exactly independent of it.
            let width = block.dense.outputs;
            let z = affine(&a, &block.dense.weights, &vec![T::zero(); width]);
            let mean: Vec<T> = column_sums(&z).into_iter().map(|s| s * inv_n).collect();
            let mut var = vec![T::zero(); width];
            for r in 0..n {
                for (j, &v) in z.row(r).iter().enumerate() {
                    let d = v - mean[j];
                    var[j] = var[j] + d * d;
                }
            }
            var.iter_mut().for_each(|v| *v = *v * inv_n);
            let inv_std: Vec<T> = var.iter().map(|&v| T::one() / (v + eps).sqrt()).collect();

            let mut normalized = z;
            let mut activated = Matrix::zeros(n, width);
            let mut out = Matrix::zeros(n, width);
            let bn = &block.bn;
            for r in 0..n {
                for j in 0..width {
                    let xh = (normalized.get(r, j) - mean[j]) * inv_std[j];
                    normalized.row_mut(r)[j] = xh;
                    let y = bn.gamma[j] * xh + bn.beta[j];
                    activated.row_mut(r)[j] = y;
                    out.row_mut(r)[j] = y.max(T::zero());
                }
            }
            blocks.push(BlockCache {
                input: a,
                normalized,
                activated,
                batch_mean: mean
                    .iter()
                    .zip(&block.dense.bias)
                    .map(|(&m, &b)| m + b)
                    .collect(),
                batch_var: var,
                inv_std,
            });
            a = out;
        }
        let logits = affine(&a, &self.output.weights, &self.output.bias);
        Ok((
            logits,
            ForwardCache {
                blocks,
                last_hidden: a,
            },
        ))
    }

    /// `running <- momentum * running + (1 - momentum) * batch`, with the
    /// biased batch variance.
    pub(crate) fn update_running_stats(&mut self, cache: &ForwardCache<T>) {
        let m = T::lit(self.spec.bn_momentum);
        let rest = T::one() - m;
        for (block, c) in self.hidden.iter_mut().zip(&cache.blocks) {
            for (r, &b) in block.bn.running_mean.iter_mut().zip(&c.batch_mean) {
                *r = m * *r + rest * b;
            }
            for (r, &b) in block.bn.running_var.iter_mut().zip(&c.batch_var) {
                *r = m * *r + rest * b;
            }
        }
    }

    fn check_labels(&self, batch: &Matrix<T>, labels: &[u32]) -> Result<()> {
        if labels.len() != batch.rows() {
            return Err(Error::invalid(format!(
                "{} labels for {} records",
                labels.len(),
                batch.rows()
            )));
        }
        let c = self.spec.output_size as u32;
        if let Some(&bad) = labels.iter().find(|&&l| l == 0 || l > c) {
            return Err(Error::invalid(format!("label {bad} outside 1..={c}")));
        }
        Ok(())
    }

    /// Batch-normalized activations of every hidden block, before the
    /// `gamma`/`beta` affine, from a training-mode pass over `batch`.
    pub fn normalized_activations(&self, batch: &Matrix<T>) -> Result<Vec<Matrix<T>>> {
        let (_, cache) = self.forward_training(batch)?;
        Ok(cache.blocks.into_iter().map(|b| b.normalized).collect())
    }

    /// Mean softmax cross-entropy of a training-mode forward pass. Pure: the
    /// running statistics are not updated.
    pub fn batch_loss(&self, batch: &Matrix<T>, labels: &[u32]) -> Result<T> {
        self.check_labels(batch, labels)?;
        let (logits, _) = self.forward_training(batch)?;
        Ok(cross_entropy(&logits, labels).0)
    }

    /// Loss and exact gradients of a training-mode step. Folds the batch
    /// statistics into the running statistics, like [`Network::forward`].
    pub fn loss_and_gradients(
        &mut self,
        batch: &Matrix<T>,
        labels: &[u32],
    ) -> Result<(T, Gradients<T>)> {
        if self.mode != Mode::Training {
            return Err(Error::invalid("loss_and_gradients requires training mode"));
        }
        self.check_labels(batch, labels)?;
        let (logits, cache) = self.forward_training(batch)?;
        let (loss, dlogits) = cross_entropy(&logits, labels);
        let grads = self.backward(&cache, dlogits);
        self.update_running_stats(&cache);
        Ok((loss, grads))
    }

    fn backward(&self, cache: &ForwardCache<T>, dlogits: Matrix<T>) -> Gradients<T> {
        let mut tensors: Vec<Vec<T>> = Vec::with_capacity(4 * self.hidden.len() + 2);
        let out_w = weight_grad(&dlogits, &cache.last_hidden);
        let out_b = column_sums(&dlogits);
        let mut da = input_grad(&dlogits, &self.output.weights, self.output.inputs);

        let mut per_block = Vec::with_capacity(self.hidden.len());
        for (block, c) in self.hidden.iter().zip(&cache.blocks).rev() {
            let n = da.rows();
            let width = da.cols();
            let nt = T::lit(n as f64);

            // ReLU gate, then the affine part of batch norm.
            let mut dy = da;
            for r in 0..n {
                for (j, v) in dy.row_mut(r).iter_mut().enumerate() {
                    if c.activated.get(r, j) <= T::zero() {
                        *v = T::zero();
                    }
                }
            }
            let mut dgamma = vec![T::zero(); width];
            let mut dbeta = vec![T::zero(); width];
            let mut sum_dxhat = vec![T::zero(); width];
            let mut sum_dxhat_xhat = vec![T::zero(); width];
            for r in 0..n {
                for j in 0..width {
                    let g = dy.get(r, j);
                    let xh = c.normalized.get(r, j);
                    dgamma[j] = dgamma[j] + g * xh;
                    dbeta[j] = dbeta[j] + g;
                    let dxh = g * block.bn.gamma[j];
                    sum_dxhat[j] = sum_dxhat[j] + dxh;
                    sum_dxhat_xhat[j] = sum_dxhat_xhat[j] + dxh * xh;
                }
            }
            // dz = inv_std / N * (N dxhat - sum(dxhat) - xhat * sum(dxhat xhat))
            let mut dz = dy;
            for r in 0..n {
                for j in 0..width {
                    let dxh = dz.get(r, j) * block.bn.gamma[j];
                    let xh = c.normalized.get(r, j);
                    dz.row_mut(r)[j] =
                        c.inv_std[j] / nt * (nt * dxh - sum_dxhat[j] - xh * sum_dxhat_xhat[j]);
                }
            }
            let dw = weight_grad(&dz, &c.input);
            let db = column_sums(&dz);
            da = input_grad(&dz, &block.dense.weights, block.dense.inputs);
            per_block.push([dw, db, dgamma, dbeta]);
        }
        for grads in per_block.into_iter().rev() {
            tensors.extend(grads);
        }
        tensors.push(out_w);
        tensors.push(out_b);
        Gradients { tensors }
    }
}

/// Row-wise softmax with max subtraction.
pub fn softmax_rows<T: Scalar>(logits: &Matrix<T>) -> Matrix<T> {
    let mut p = logits.clone();
    for r in 0..p.rows() {
        let row = p.row_mut(r);
        let max = row.iter().copied().fold(T::neg_infinity(), T::max);
        let mut sum = T::zero();
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum = sum + *v;
        }
        row.iter_mut().for_each(|v| *v = *v / sum);
    }
    p
}

/// Mean negative log-likelihood and its gradient w.r.t. the logits.
fn cross_entropy<T: Scalar>(logits: &Matrix<T>, labels: &[u32]) -> (T, Matrix<T>) {
    let n = logits.rows();
    let inv_n = T::one() / T::lit(n as f64);
    let mut grad = Matrix::zeros(n, logits.cols());
    let mut total = T::zero();
    for (r, &label) in labels.iter().enumerate() {
        let row = logits.row(r);
        let max = row.iter().copied().fold(T::neg_infinity(), T::max);
        let sum: T = row.iter().map(|&v| (v - max).exp()).sum();
        let log_sum = sum.ln();
        let target = label as usize - 1;
        total = total - (row[target] - max - log_sum);
        for (j, g) in grad.row_mut(r).iter_mut().enumerate() {
            let p = (row[j] - max - log_sum).exp();
            let onehot = if j == target { T::one() } else { T::zero() };
            *g = (p - onehot) * inv_n;
        }
    }
    (total * inv_n, grad)
}

/// 1-based index of the largest logit; ties go to the lowest index.
pub fn argmax_label<T: Scalar>(logits: &[T]) -> u32 {
    let mut best = 0;
    for (j, &v) in logits.iter().enumerate().skip(1) {
        if v > logits[best] {
            best = j;
        }
    }
    best as u32 + 1
}

const PREDICT_CHUNK: usize = 4096;

/// Class label per record from inference-mode logits.
pub fn predict<T: Scalar>(net: &Network<T>, ds: &PixelDataset) -> Result<Vec<u32>> {
    if net.mode != Mode::Inference {
        return Err(Error::invalid("predict requires inference mode"));
    }
    if ds.bands() != net.spec.input_size {
        return Err(Error::invalid(format!(
            "dataset has {} bands, network expects {}",
            ds.bands(),
            net.spec.input_size
        )));
    }
    let b = ds.bands();
    let mut labels = Vec::with_capacity(ds.len());
    for start in (0..ds.len()).step_by(PREDICT_CHUNK) {
        let end = (start + PREDICT_CHUNK).min(ds.len());
        let batch = Matrix::from_f64(end - start, b, &ds.features()[start * b..end * b]);
        let logits = net.forward_inference(&batch)?;
        labels.extend((0..logits.rows()).map(|r| argmax_label(logits.row(r))));
    }
    Ok(labels)
}

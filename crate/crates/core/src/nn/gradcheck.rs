//! Finite-difference verification of the analytic gradients.

use rand::Rng;

use super::matrix::Matrix;
use super::network::{init_network, Gradients, Mode, Network, NetworkSpec};
use crate::error::{Error, Result};
use crate::rng;

/// Central-difference step.
pub const GRADCHECK_STEP: f64 = 1e-5;

const RELATIVE_FLOOR: f64 = 1e-8;

/// Central-difference gradients of the training-mode batch loss.
pub fn numeric_gradients(
    net: &Network<f64>,
    batch: &Matrix<f64>,
    labels: &[u32],
) -> Result<Gradients<f64>> {
    let mut probe = net.clone();
    let shapes: Vec<usize> = net.parameters().iter().map(|p| p.len()).collect();
    let mut tensors = Vec::with_capacity(shapes.len());
    for (t, &len) in shapes.iter().enumerate() {
        let mut grad = Vec::with_capacity(len);
        for i in 0..len {
            let original = probe.parameters()[t][i];
            probe.parameters_mut()[t][i] = original + GRADCHECK_STEP;
            let up = probe.batch_loss(batch, labels)?;
            probe.parameters_mut()[t][i] = original - GRADCHECK_STEP;
            let down = probe.batch_loss(batch, labels)?;
            probe.parameters_mut()[t][i] = original;
            grad.push((up - down) / (2.0 * GRADCHECK_STEP));
        }
        tensors.push(grad);
    }
    Ok(Gradients { tensors })
}

/// Max over every parameter of
/// `|analytic - numeric| / max(|analytic| + |numeric|, 1e-8)`, with numeric
/// gradients from [`numeric_gradients`].
pub fn compare_gradients(
    net: &Network<f64>,
    batch: &Matrix<f64>,
    labels: &[u32],
    analytic: &Gradients<f64>,
) -> Result<f64> {
    let shapes: Vec<usize> = net.parameters().iter().map(|p| p.len()).collect();
    if shapes.len() != analytic.tensors.len()
        || shapes
            .iter()
            .zip(&analytic.tensors)
            .any(|(&n, g)| n != g.len())
    {
        return Err(Error::invalid("gradient shapes do not match the network"));
    }
    let numeric = numeric_gradients(net, batch, labels)?;
    let worst = analytic
        .tensors
        .iter()
        .flatten()
        .zip(numeric.tensors.iter().flatten())
        .map(|(&a, &n)| (a - n).abs() / (a.abs() + n.abs()).max(RELATIVE_FLOOR))
        .fold(0.0, f64::max);
    Ok(worst)
}

/// Smallest distance from zero allowed for any pre-ReLU activation of the
/// evaluation point, so that a central-difference stencil of
/// [`GRADCHECK_STEP`] stays on one side of every ReLU kink.
pub const KINK_MARGIN: f64 = 1e-3;

const JITTER_ATTEMPTS: usize = 64;

/// The evaluation point used by [`gradient_check`]: a seeded `f64` network
/// for `spec` whose biases and batch-norm affine parameters are jittered
/// away from their init values, so that every parameter has a non-trivial
/// gradient. The jitter is redrawn (up to 64 times) until no pre-ReLU
/// activation on `batch` lies within [`KINK_MARGIN`] of zero.
pub fn gradcheck_network(
    spec: &NetworkSpec,
    seed: u64,
    batch: &Matrix<f64>,
) -> Result<Network<f64>> {
    let base = init_network::<f64>(spec, seed)?;
    let mut rng = rng::seeded(rng::derive_seed(seed, 0x6772_6164));
    let mut net = base.clone();
    for _ in 0..JITTER_ATTEMPTS {
        net = base.clone();
        for block in &mut net.hidden {
            for g in &mut block.bn.gamma {
                *g = rng.random_range(0.5..1.5);
            }
            for v in block.bn.beta.iter_mut().chain(block.dense.bias.iter_mut()) {
                *v = rng.random_range(-0.5..0.5);
            }
        }
        for v in &mut net.output.bias {
            *v = rng.random_range(-0.5..0.5);
        }
        if min_pre_activation(&net, batch)? >= KINK_MARGIN {
            break;
        }
    }
    net.set_mode(Mode::Training);
    Ok(net)
}

/// Max relative error between analytic and numeric gradients of
/// [`gradcheck_network`] on `batch`.
pub fn gradient_check(
    spec: &NetworkSpec,
    seed: u64,
    batch: &Matrix<f64>,
    labels: &[u32],
) -> Result<f64> {
    let net = gradcheck_network(spec, seed, batch)?;
    let (_, analytic) = net.clone().loss_and_gradients(batch, labels)?;
    compare_gradients(&net, batch, labels, &analytic)
}

/// Smallest `|gamma * xhat + beta|` over all hidden units and records.
fn min_pre_activation(net: &Network<f64>, batch: &Matrix<f64>) -> Result<f64> {
    let mut min = f64::INFINITY;
    for (xh, block) in net.normalized_activations(batch)?.iter().zip(&net.hidden) {
        for r in 0..xh.rows() {
            for (j, &v) in xh.row(r).iter().enumerate() {
                min = min.min((block.bn.gamma[j] * v + block.bn.beta[j]).abs());
            }
        }
    }
    Ok(min)
}

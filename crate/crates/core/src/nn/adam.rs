use super::matrix::Scalar;
use super::network::{Gradients, Network};
use super::train::TrainConfig;
use crate::error::{Error, Result};

/// Adam moment estimates, shaped like [`Network::parameters`].
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState<T> {
    pub m: Vec<Vec<T>>,
    pub v: Vec<Vec<T>>,
    pub t: u64,
}

impl<T: Scalar> OptimizerState<T> {
    pub fn new(net: &Network<T>) -> Self {
        let zeros = net.zero_gradients().tensors;
        Self {
            m: zeros.clone(),
            v: zeros,
            t: 0,
        }
    }
}

/// One bias-corrected Adam update.
pub fn adam_step<T: Scalar>(
    net: &mut Network<T>,
    grads: &Gradients<T>,
    state: &mut OptimizerState<T>,
    cfg: &TrainConfig,
) -> Result<()> {
    let mut params = net.parameters_mut();
    let shapes_match = params.len() == grads.tensors.len()
        && params.len() == state.m.len()
        && params
            .iter()
            .zip(&grads.tensors)
            .zip(&state.m)
            .all(|((p, g), m)| p.len() == g.len() && p.len() == m.len());
    if !shapes_match {
        return Err(Error::invalid("gradient shapes do not match the network"));
    }

    state.t += 1;
    let t = state.t as i32;
    let b1 = T::lit(cfg.beta1);
    let b2 = T::lit(cfg.beta2);
    let one = T::one();
    let c1 = one - b1.powi(t);
    let c2 = one - b2.powi(t);
    let lr = T::lit(cfg.learning_rate);
    let eps = T::lit(cfg.adam_epsilon);

    for (((p, g), m), v) in params
        .iter_mut()
        .zip(&grads.tensors)
        .zip(state.m.iter_mut())
        .zip(state.v.iter_mut())
    {
        for i in 0..p.len() {
            m[i] = b1 * m[i] + (one - b1) * g[i];
            v[i] = b2 * v[i] + (one - b2) * g[i] * g[i];
            let m_hat = m[i] / c1;
            let v_hat = v[i] / c2;
            p[i] = p[i] - lr * m_hat / (v_hat.sqrt() + eps);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{init_network, NetworkSpec};

    #[test]
    fn zero_gradients_leave_parameters() {
        let mut net = init_network::<f32>(&NetworkSpec::new(3, &[4], 2), 5).unwrap();
        let before = net.clone();
        let mut state = OptimizerState::new(&net);
        let grads = net.zero_gradients();
        for _ in 0..3 {
            adam_step(&mut net, &grads, &mut state, &TrainConfig::default()).unwrap();
        }
        assert_eq!(net, before);
        assert_eq!(state.t, 3);
    }

    #[test]
    fn first_step_magnitude() {
        let mut net = init_network::<f64>(&NetworkSpec::new(1, &[], 1), 0).unwrap();
        net.output.weights[0] = 0.0;
        let mut state = OptimizerState::new(&net);
        let grads = Gradients {
            tensors: vec![vec![1.0], vec![0.0]],
        };
        let cfg = TrainConfig {
            learning_rate: 1e-3,
            ..TrainConfig::default()
        };
        adam_step(&mut net, &grads, &mut state, &cfg).unwrap();
        // m_hat = v_hat = 1 at t = 1, so the step is lr / (1 + eps).
        let want = 1e-3 / (1.0 + 1e-8);
        assert!((net.output.weights[0] + want).abs() < 1e-15);
        assert_eq!(net.output.bias[0], 0.0);
    }

    #[test]
    fn identical_inputs_identical_updates() {
        let mut a = init_network::<f32>(&NetworkSpec::new(3, &[4], 2), 5).unwrap();
        let mut b = a.clone();
        let mut grads = a.zero_gradients();
        for (k, t) in grads.tensors.iter_mut().enumerate() {
            for (i, g) in t.iter_mut().enumerate() {
                *g = ((k * 31 + i) % 7) as f32 - 3.0;
            }
        }
        let (mut sa, mut sb) = (OptimizerState::new(&a), OptimizerState::new(&b));
        let cfg = TrainConfig::default();
        adam_step(&mut a, &grads, &mut sa, &cfg).unwrap();
        adam_step(&mut b, &grads, &mut sb, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn shape_mismatch_is_error() {
        let mut net = init_network::<f32>(&NetworkSpec::new(3, &[4], 2), 5).unwrap();
        let mut state = OptimizerState::new(&net);
        let grads = Gradients {
            tensors: vec![vec![0.0]],
        };
        assert!(adam_step(&mut net, &grads, &mut state, &TrainConfig::default()).is_err());
    }
}

//! Adam with decoupled weight decay.

use super::{Gradients, ModelParams};
use crate::math;
use crate::{Error, Result, TrainConfig};

/// First and second moment estimates for every parameter tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    m: ModelParams,
    v: ModelParams,
    step: u64,
}

fn zeros_like(p: &ModelParams) -> ModelParams {
    ModelParams {
        weights: p
            .weights
            .iter()
            .map(|w| crate::Matrix::zeros(w.rows(), w.cols()))
            .collect(),
        biases: p.biases.iter().map(|b| alloc::vec![0.0; b.len()]).collect(),
    }
}

fn check_grads(params: &ModelParams, grads: &Gradients) -> Result<()> {
    for (k, (p, g)) in params.weights.iter().zip(&grads.weights).enumerate() {
        if p.rows() != g.rows() || p.cols() != g.cols() {
            return Err(Error::Shape {
                context: alloc::format!("gradient weights[{k}]"),
                expected: p.as_slice().len(),
                actual: g.as_slice().len(),
            });
        }
    }
    for (k, (p, g)) in params.biases.iter().zip(&grads.biases).enumerate() {
        if p.len() != g.len() {
            return Err(Error::Shape {
                context: alloc::format!("gradient biases[{k}]"),
                expected: p.len(),
                actual: g.len(),
            });
        }
    }
    if params.weights.len() != grads.weights.len() || params.biases.len() != grads.biases.len() {
        return Err(Error::Shape {
            context: "gradient layer count".into(),
            expected: params.weights.len(),
            actual: grads.weights.len(),
        });
    }
    if let Some(name) = grads.first_non_finite() {
        return Err(Error::NonFinite {
            tensor: alloc::format!("gradient {name}"),
        });
    }
    Ok(())
}

struct Hyper {
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    correction1: f64,
    correction2: f64,
}

fn update(p: &mut [f64], g: &[f64], m: &mut [f64], v: &mut [f64], h: &Hyper) {
    for (((p, &g), m), v) in p.iter_mut().zip(g).zip(m.iter_mut()).zip(v.iter_mut()) {
        *m = h.beta1 * *m + (1.0 - h.beta1) * g;
        *v = h.beta2 * *v + (1.0 - h.beta2) * g * g;
        let m_hat = *m / h.correction1;
        let v_hat = *v / h.correction2;
        *p -= h.lr * m_hat / (math::sqrt(v_hat) + h.eps);
    }
}

impl AdamState {
    pub fn new(params: &ModelParams) -> Self {
        Self {
            m: zeros_like(params),
            v: zeros_like(params),
            step: 0,
        }
    }

    /// Number of updates applied so far.
    pub fn steps(&self) -> u64 {
        self.step
    }

    /// One bias-corrected Adam update followed by multiplying every weight
    /// (not bias) by `1 - lr * weight_decay`.
    ///
    /// Gradients are validated before anything is modified, so a rejected
    /// step leaves both `params` and the moments untouched.
    pub fn step(&mut self, params: &mut ModelParams, grads: &Gradients, config: &TrainConfig) -> Result<()> {
        check_grads(params, grads)?;
        self.step += 1;
        let h = Hyper {
            lr: config.learning_rate,
            beta1: config.beta1,
            beta2: config.beta2,
            eps: config.adam_eps,
            correction1: 1.0 - libm::pow(config.beta1, self.step as f64),
            correction2: 1.0 - libm::pow(config.beta2, self.step as f64),
        };
        let decay = 1.0 - config.learning_rate * config.weight_decay;
        for k in 0..params.weights.len() {
            update(
                params.weights[k].as_mut_slice(),
                grads.weights[k].as_slice(),
                self.m.weights[k].as_mut_slice(),
                self.v.weights[k].as_mut_slice(),
                &h,
            );
            if decay != 1.0 {
                params.weights[k].map_inplace(|w| w * decay);
            }
            update(
                &mut params.biases[k],
                &grads.biases[k],
                &mut self.m.biases[k],
                &mut self.v.biases[k],
                &h,
            );
        }
        Ok(())
    }
}

/// Stateless convenience: apply a single step from fresh moments, as the
/// `step_count`-th update.
pub fn optimizer_step(
    params: &ModelParams,
    grads: &Gradients,
    config: &TrainConfig,
    step_count: u64,
) -> Result<ModelParams> {
    if step_count == 0 {
        return Err(Error::InvalidConfig("step_count must be >= 1".into()));
    }
    let mut state = AdamState::new(params);
    state.step = step_count - 1;
    let mut out = params.clone();
    state.step(&mut out, grads, config)?;
    Ok(out)
}

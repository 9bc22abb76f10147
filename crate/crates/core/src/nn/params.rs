use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::ArchitectureSpec;
use crate::rng::{self, Stream};
use crate::{Error, Matrix, Result};

/// Weights and biases of the `L + 1` dense layers (hidden layers first,
/// output layer last). `weights[k]` is `fan_out x fan_in`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub weights: Vec<Matrix>,
    pub biases: Vec<Vec<f64>>,
}

/// Parameter gradients share the parameter layout.
pub type Gradients = ModelParams;

impl ModelParams {
    pub fn zeros(arch: &ArchitectureSpec) -> Self {
        let (weights, biases) = (0..=arch.depth())
            .map(|k| {
                let (fan_in, fan_out) = arch.layer_dims(k);
                (Matrix::zeros(fan_out, fan_in), vec![0.0; fan_out])
            })
            .unzip();
        Self { weights, biases }
    }

    pub fn num_layers(&self) -> usize {
        self.weights.len()
    }

    pub fn num_parameters(&self) -> usize {
        self.weights.iter().map(|w| w.as_slice().len()).sum::<usize>()
            + self.biases.iter().map(Vec::len).sum::<usize>()
    }

    /// Check the parameter shapes against `arch`.
    pub fn check_shapes(&self, arch: &ArchitectureSpec) -> Result<()> {
        if self.weights.len() != arch.depth() + 1 || self.biases.len() != arch.depth() + 1 {
            return Err(Error::Shape {
                context: "parameter layer count".into(),
                expected: arch.depth() + 1,
                actual: self.weights.len(),
            });
        }
        for k in 0..=arch.depth() {
            let (fan_in, fan_out) = arch.layer_dims(k);
            let w = &self.weights[k];
            if w.cols() != fan_in {
                return Err(Error::Shape {
                    context: format!("weights[{k}] columns"),
                    expected: fan_in,
                    actual: w.cols(),
                });
            }
            if w.rows() != fan_out {
                return Err(Error::Shape {
                    context: format!("weights[{k}] rows"),
                    expected: fan_out,
                    actual: w.rows(),
                });
            }
            if self.biases[k].len() != fan_out {
                return Err(Error::Shape {
                    context: format!("biases[{k}]"),
                    expected: fan_out,
                    actual: self.biases[k].len(),
                });
            }
        }
        Ok(())
    }

    /// Name of the first tensor holding a NaN or infinity.
    pub fn first_non_finite(&self) -> Option<alloc::string::String> {
        for (k, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            if !w.is_finite() {
                return Some(format!("weights[{k}]"));
            }
            if !b.iter().all(|v| v.is_finite()) {
                return Some(format!("biases[{k}]"));
            }
        }
        None
    }
}

/// HE initialization: weights ~ N(0, 2 / fan_in), biases zero.
///
/// Layers are drawn in order from one stream, so two architectures sharing a
/// prefix of layer shapes get identical weights on that prefix.
pub fn he_init(arch: &ArchitectureSpec, seed: u64) -> ModelParams {
    let mut rng = rng::stream(seed, Stream::Init);
    let mut params = ModelParams::zeros(arch);
    for (k, w) in params.weights.iter_mut().enumerate() {
        let (fan_in, _) = arch.layer_dims(k);
        let std = crate::math::sqrt(2.0 / fan_in as f64);
        let normal = Normal::new(0.0, std).expect("finite positive std");
        for v in w.as_mut_slice() {
            *v = normal.sample(&mut rng);
        }
    }
    params
}

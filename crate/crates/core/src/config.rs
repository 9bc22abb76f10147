use alloc::format;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Hyperparameters for training, probing and the experiment drivers.
///
/// Defaults follow the reference setup: Adam-style optimizer with learning
/// rate 1e-3, decoupled weight decay 1e-2, mini-batches of 64, bundling
/// resolution 1e-8 and a probe subset of 2048 training samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub weight_decay: f64,
    pub epochs: usize,
    pub seed: u64,
    /// Bundling resolution in the scaled infinity-norm predicate.
    pub gamma: f64,
    /// Offset inside the bundle-entropy logarithm.
    pub entropy_eps: f64,
    pub eval_subset_size: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_eps: f64,
    /// Shift/brightness augmentation of 28x28 image rows during training.
    pub augment: bool,
    /// Epochs trained before the auto-tuner acts on a conflict.
    pub probe_epochs: usize,
    /// Epochs trained by the boundary search on each deepest network.
    pub boundary_epochs: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            batch_size: 64,
            weight_decay: 1e-2,
            epochs: 50,
            seed: 0,
            gamma: 1e-8,
            entropy_eps: 1e-12,
            eval_subset_size: 2048,
            beta1: 0.9,
            beta2: 0.999,
            adam_eps: 1e-8,
            augment: false,
            probe_epochs: 1,
            boundary_epochs: 1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("learning_rate", self.learning_rate),
            ("gamma", self.gamma),
            ("entropy_eps", self.entropy_eps),
            ("adam_eps", self.adam_eps),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidConfig(format!("{name} must be > 0, got {v}")));
            }
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "weight_decay must be >= 0, got {}",
                self.weight_decay
            )));
        }
        for (name, v) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(0.0..1.0).contains(&v) {
                return Err(Error::InvalidConfig(format!("{name} must be in [0, 1), got {v}")));
            }
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidConfig("batch_size must be >= 1".into()));
        }
        if self.eval_subset_size == 0 {
            return Err(Error::InvalidConfig("eval_subset_size must be >= 1".into()));
        }
        Ok(())
    }
}

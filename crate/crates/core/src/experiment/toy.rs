//! The two-neuron, two-layer toy study of fully conflicting bundles.

use alloc::vec::Vec;
use core::ops::ControlFlow;

use serde::{Deserialize, Serialize};

use crate::bundle::{gradient_input_correlation, probe_model, training_bundle_entropy, EntropyRecord, GradientSeries};
use crate::data::{probe_subset, toy_dataset};
use crate::nn::{accuracy, he_init, mean_output, train_from, ArchitectureSpec, ModelParams, TrainingLog};
use crate::{Matrix, Result, TrainConfig};

pub const TOY_SAMPLES: usize = 1000;
pub const TOY_WIDTH: usize = 2;
pub const TOY_DEPTH: usize = 2;
pub const IMBALANCED_FRACTION: f64 = 0.66;
pub const SWEEP_POINTS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ToyVariant {
    /// Injective manual init on balanced data.
    Clean,
    /// Zero first layer on balanced data.
    ConflictBalanced,
    /// Zero first layer on 66/34 data.
    ConflictImbalanced,
}

impl ToyVariant {
    pub fn class1_fraction(self) -> f64 {
        match self {
            Self::Clean | Self::ConflictBalanced => 0.5,
            Self::ConflictImbalanced => IMBALANCED_FRACTION,
        }
    }

    pub fn conflicting_init(self) -> bool {
        !matches!(self, Self::Clean)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToyEpoch {
    pub epoch: usize,
    /// Mean softmax output per class over the training set.
    pub output_means: Vec<f64>,
    /// Accuracy over the full training set at the end of the epoch.
    pub train_accuracy: f64,
    pub entropy: EntropyRecord,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToyReport {
    pub variant: ToyVariant,
    pub arch: ArchitectureSpec,
    /// Epoch 0 (before training) followed by every trained epoch.
    pub epochs: Vec<ToyEpoch>,
    pub layer_entropy: Vec<f64>,
    pub gradient: GradientSeries,
    pub params: ModelParams,
    pub log: TrainingLog,
}

impl ToyReport {
    pub fn last(&self) -> &ToyEpoch {
        self.epochs.last().expect("epoch 0 is always recorded")
    }

    pub fn records(&self) -> Vec<EntropyRecord> {
        self.epochs.iter().map(|e| e.entropy.clone()).collect()
    }
}

pub fn toy_arch() -> ArchitectureSpec {
    ArchitectureSpec::uniform(1, TOY_WIDTH, TOY_DEPTH, 2).expect("valid toy architecture")
}

/// Manual init under which no two distinct toy inputs share a bundle: the
/// first layer emits `(x, 1 - x)`, the second is the identity and the
/// output layer starts at zero. Shaped for [`toy_arch`].
pub fn non_conflicting_init() -> ModelParams {
    let mut params = ModelParams::zeros(&toy_arch());
    params.weights[0] = Matrix::from_vec(2, 1, alloc::vec![1.0, -1.0]).expect("2x1");
    params.biases[0] = alloc::vec![0.0, 1.0];
    params.weights[1] = Matrix::identity(2);
    params
}

/// HE init with the first hidden layer zeroed: every input maps to the zero
/// vector, so the whole batch is one bundle from the start.
pub fn conflicting_init(arch: &ArchitectureSpec, seed: u64) -> ModelParams {
    let mut params = he_init(arch, seed);
    params.weights[0].map_inplace(|_| 0.0);
    params.biases[0].iter_mut().for_each(|b| *b = 0.0);
    params
}

pub fn run_toy_experiment(variant: ToyVariant, config: &TrainConfig) -> Result<ToyReport> {
    config.validate()?;
    let arch = toy_arch();
    let data = toy_dataset(TOY_SAMPLES, variant.class1_fraction(), config.seed)?;
    let probe = probe_subset(&data, config.eval_subset_size, config.seed);
    let init = if variant.conflicting_init() {
        conflicting_init(&arch, config.seed)
    } else {
        non_conflicting_init()
    };

    let mut epochs = Vec::with_capacity(config.epochs + 1);
    let mut hook = |epoch: usize, p: &ModelParams| -> Result<ControlFlow<()>> {
        epochs.push(ToyEpoch {
            epoch,
            output_means: mean_output(p, &arch, data.inputs())?,
            train_accuracy: accuracy(p, &arch, data.samples())?,
            entropy: probe_model(p, &arch, &probe, config, epoch)?,
        });
        Ok(ControlFlow::Continue(()))
    };
    let (params, log) = train_from(init, &arch, &data, None, config, &mut hook)?;

    let records: Vec<EntropyRecord> = epochs.iter().map(|e| e.entropy.clone()).collect();
    let layer_entropy = training_bundle_entropy(&records)?;
    let gradient = gradient_input_correlation(&params, &arch, &sweep_points(SWEEP_POINTS), 0)?;

    Ok(ToyReport {
        variant,
        arch,
        epochs,
        layer_entropy,
        gradient,
        params,
        log,
    })
}

/// Evenly spaced points covering `[0, 1]`.
fn sweep_points(n: usize) -> Vec<f64> {
    let denom = (n.max(2) - 1) as f64;
    (0..n).map(|i| i as f64 / denom).collect()
}

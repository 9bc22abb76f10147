//! Shuffled mini-batch training with a per-epoch hook.

use alloc::vec::Vec;
use core::ops::ControlFlow;

use serde::{Deserialize, Serialize};

use super::network::{accuracy, argmax, backward, cross_entropy, forward};
use super::{he_init, AdamState, ArchitectureSpec, ModelParams};
use crate::data::{augment_rows, Dataset};
use crate::rng::{self, Stream};
use crate::{Error, Matrix, Result, TrainConfig};

/// Statistics of one finished epoch. Train loss and accuracy are running
/// means over the epoch's mini-batches, measured before each update.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_accuracy: f64,
    pub test_accuracy: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingLog {
    pub epochs: Vec<EpochStats>,
}

impl TrainingLog {
    pub fn last(&self) -> Option<&EpochStats> {
        self.epochs.last()
    }

    /// Mean test accuracy over the last `n` epochs that recorded one.
    pub fn tail_test_accuracy(&self, n: usize) -> Option<f64> {
        let tail: Vec<f64> = self
            .epochs
            .iter()
            .rev()
            .filter_map(|e| e.test_accuracy)
            .take(n)
            .collect();
        (!tail.is_empty()).then(|| tail.iter().sum::<f64>() / tail.len() as f64)
    }
}

/// Called with `(epoch, params)` before the first epoch (`epoch == 0`) and
/// after every finished epoch. Returning `Break` stops training.
pub trait EpochHook {
    fn on_epoch(&mut self, epoch: usize, params: &ModelParams) -> Result<ControlFlow<()>>;
}

impl<F> EpochHook for F
where
    F: FnMut(usize, &ModelParams) -> Result<ControlFlow<()>>,
{
    fn on_epoch(&mut self, epoch: usize, params: &ModelParams) -> Result<ControlFlow<()>> {
        self(epoch, params)
    }
}

/// A hook that never interrupts.
pub struct NoHook;

impl EpochHook for NoHook {
    fn on_epoch(&mut self, _: usize, _: &ModelParams) -> Result<ControlFlow<()>> {
        Ok(ControlFlow::Continue(()))
    }
}

/// HE-initialize from `config.seed` and train.
pub fn train(
    arch: &ArchitectureSpec,
    train_set: &Dataset,
    test_set: Option<&Dataset>,
    config: &TrainConfig,
    hook: &mut dyn EpochHook,
) -> Result<(ModelParams, TrainingLog)> {
    let params = he_init(arch, config.seed);
    train_from(params, arch, train_set, test_set, config, hook)
}

fn augmented_inputs(train_set: &Dataset, inputs: Matrix, rng: &mut rand_chacha::ChaCha8Rng) -> Matrix {
    let (Some((h, w)), Some(stats)) = (train_set.image_shape(), train_set.standardization()) else {
        return inputs;
    };
    let mut raw = inputs;
    raw.map_inplace(|v| stats.invert(v));
    let mut out = augment_rows(&raw, h, w, rng);
    out.map_inplace(|v| stats.apply(v));
    out
}

/// Train starting from the given parameters.
pub fn train_from(
    mut params: ModelParams,
    arch: &ArchitectureSpec,
    train_set: &Dataset,
    test_set: Option<&Dataset>,
    config: &TrainConfig,
    hook: &mut dyn EpochHook,
) -> Result<(ModelParams, TrainingLog)> {
    config.validate()?;
    if train_set.is_empty() {
        return Err(Error::EmptyDataset);
    }
    params.check_shapes(arch)?;
    let mut log = TrainingLog::default();
    if hook.on_epoch(0, &params)?.is_break() {
        return Ok((params, log));
    }

    let mut adam = AdamState::new(&params);
    let n = train_set.len();
    for epoch in 1..=config.epochs {
        let order = rng::permutation(n, &mut rng::stream(config.seed, Stream::Shuffle { epoch: epoch as u64 }));
        let mut aug_rng = rng::stream(config.seed, Stream::Augment { epoch: epoch as u64 });
        let mut loss_sum = 0.0;
        let mut correct = 0usize;
        for chunk in order.chunks(config.batch_size) {
            let mut batch = train_set.batch(chunk);
            if config.augment {
                let inputs = augmented_inputs(train_set, batch.inputs().clone(), &mut aug_rng);
                batch = batch.with_inputs(inputs)?;
            }
            let trace = forward(&params, arch, batch.inputs())?;
            loss_sum += cross_entropy(&trace.softmax_out, batch.labels()) * chunk.len() as f64;
            correct += trace
                .softmax_out
                .row_iter()
                .zip(batch.classes())
                .filter(|(h, &c)| argmax(h) == c)
                .count();
            let grads = backward(&trace, &params, arch, &batch)?;
            adam.step(&mut params, &grads, config)?;
        }
        if let Some(name) = params.first_non_finite() {
            return Err(Error::NonFinite { tensor: name });
        }
        let test_accuracy = test_set
            .map(|t| accuracy(&params, arch, t.samples()))
            .transpose()?;
        log.epochs.push(EpochStats {
            epoch,
            train_loss: loss_sum / n as f64,
            train_accuracy: correct as f64 / n as f64,
            test_accuracy,
        });
        if hook.on_epoch(epoch, &params)?.is_break() {
            break;
        }
    }
    Ok((params, log))
}

use alloc::vec::Vec;
use core::ops::ControlFlow;

use crate::bundle::{probe_model, EntropyRecord};
use crate::data::Dataset;
use crate::nn::{train_from, ArchitectureSpec, Batch, ModelParams, TrainingLog};
use crate::{Result, TrainConfig};

/// Outcome of a training run probed at epoch 0 and after every epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbedRun {
    pub params: ModelParams,
    pub log: TrainingLog,
    pub records: Vec<EntropyRecord>,
}

/// Train from `params`, probing bundle statistics on `probe` at every epoch
/// boundary. `stop` sees each fresh record and may end training early.
pub fn train_probed(
    params: ModelParams,
    arch: &ArchitectureSpec,
    train_set: &Dataset,
    test_set: Option<&Dataset>,
    config: &TrainConfig,
    probe: &Batch,
    mut stop: impl FnMut(&EntropyRecord) -> bool,
) -> Result<ProbedRun> {
    let mut records = Vec::with_capacity(config.epochs + 1);
    let mut hook = |epoch: usize, p: &ModelParams| -> Result<ControlFlow<()>> {
        let record = probe_model(p, arch, probe, config, epoch)?;
        let halt = stop(&record);
        records.push(record);
        Ok(if halt {
            ControlFlow::Break(())
        } else {
            ControlFlow::Continue(())
        })
    };
    let (params, log) = train_from(params, arch, train_set, test_set, config, &mut hook)?;
    Ok(ProbedRun {
        params,
        log,
        records,
    })
}

//! Depth auto-tuning by pruning at the first conflicting layer.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::probed::train_probed;
use crate::bundle::{first_conflicting_layer, EntropyRecord};
use crate::data::{probe_subset, Dataset};
use crate::nn::{he_init, ArchitectureSpec, ModelParams, TrainingLog};
use crate::{Error, Result, TrainConfig};

/// Hidden widths of the starting network.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WidthSchedule {
    Uniform(usize),
    /// One width per hidden layer; its length must equal the depth.
    PerLayer(Vec<usize>),
}

impl WidthSchedule {
    pub fn widths(&self, depth: usize) -> Result<Vec<usize>> {
        match self {
            Self::Uniform(w) => Ok(vec![*w; depth]),
            Self::PerLayer(ws) if ws.len() == depth => Ok(ws.clone()),
            Self::PerLayer(ws) => Err(Error::InvalidConfig(alloc::format!(
                "width schedule has {} entries for depth {depth}",
                ws.len()
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PruneRound {
    pub arch_before: ArchitectureSpec,
    /// Epoch of the probe that ended the round.
    pub epoch_probed: usize,
    pub first_conflicting_layer: Option<usize>,
    pub layers_removed: usize,
    pub arch_after: ArchitectureSpec,
    /// The round that trained to completion.
    pub terminal: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PruneTrace {
    pub rounds: Vec<PruneRound>,
}

impl PruneTrace {
    /// Number of architecture changes.
    pub fn prunes(&self) -> usize {
        self.rounds.iter().filter(|r| r.layers_removed > 0).count()
    }

    pub fn final_arch(&self) -> Option<&ArchitectureSpec> {
        self.rounds.last().map(|r| &r.arch_after)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AutoTuneResult {
    pub trace: PruneTrace,
    pub arch: ArchitectureSpec,
    pub params: ModelParams,
    pub log: TrainingLog,
    /// Probes of the final training run.
    pub records: Vec<EntropyRecord>,
}

/// Train, probe after `config.probe_epochs` epochs, and on a conflict at
/// layer `l` keep hidden layers `1..l`, reinitialize everything and restart.
///
/// The surviving network keeps being probed after every epoch; a conflict
/// showing up later in its training triggers another prune, so the returned
/// network was conflict-free at every probe after its first epoch. The
/// epoch-0 probe of each round is recorded but never triggers a prune.
pub fn auto_tune(
    max_depth: usize,
    widths: &WidthSchedule,
    train_set: &Dataset,
    test_set: Option<&Dataset>,
    config: &TrainConfig,
) -> Result<AutoTuneResult> {
    config.validate()?;
    if max_depth < 2 {
        return Err(Error::InvalidConfig("auto-tune needs max_depth >= 2".into()));
    }
    let mut arch = ArchitectureSpec::new(
        train_set.input_dim(),
        widths.widths(max_depth)?,
        train_set.num_classes(),
        vec![false; max_depth],
    )?;
    let probe = probe_subset(train_set, config.eval_subset_size, config.seed);
    let mut trace = PruneTrace::default();

    loop {
        let mut conflict: Option<usize> = None;
        let mut last_step = 0;
        let run = train_probed(he_init(&arch, config.seed), &arch, train_set, test_set, config, &probe, |record| {
            last_step = record.step;
            // the untrained probe is recorded but not acted on
            let trained = record.step > 0 || config.probe_epochs == 0;
            if let Some(l) = first_conflicting_layer(record).filter(|_| trained) {
                conflict = Some(conflict.map_or(l, |c| c.min(l)));
            }
            conflict.is_some() && record.step >= config.probe_epochs
        })?;

        match conflict {
            None => {
                trace.rounds.push(PruneRound {
                    arch_before: arch.clone(),
                    epoch_probed: last_step,
                    first_conflicting_layer: None,
                    layers_removed: 0,
                    arch_after: arch.clone(),
                    terminal: true,
                });
                return Ok(AutoTuneResult {
                    trace,
                    arch,
                    params: run.params,
                    log: run.log,
                    records: run.records,
                });
            }
            Some(layer) => {
                let pruned = arch.truncated(layer - 1)?;
                trace.rounds.push(PruneRound {
                    arch_before: arch.clone(),
                    epoch_probed: last_step,
                    first_conflicting_layer: Some(layer),
                    layers_removed: arch.depth() - pruned.depth(),
                    arch_after: pruned.clone(),
                    terminal: false,
                });
                arch = pruned;
            }
        }
    }
}

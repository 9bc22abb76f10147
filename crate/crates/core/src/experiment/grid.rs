//! Single grid cells and conflicting-boundary runs.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::probed::train_probed;
use crate::bundle::{first_conflicting_layer, probe_model, training_bundle_entropy, EntropyRecord};
use crate::data::{probe_subset, Dataset};
use crate::nn::{he_init, ArchitectureSpec, NoHook, train_from, TrainingLog};
use crate::{Error, Result, TrainConfig};

/// Test accuracy of a run is the mean over this many final epochs.
pub const ACCURACY_TAIL_EPOCHS: usize = 5;

/// One (width, depth) point of a grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CellSpec {
    pub width: usize,
    pub depth: usize,
    pub residual: bool,
}

impl CellSpec {
    pub fn new(width: usize, depth: usize) -> Self {
        Self {
            width,
            depth,
            residual: false,
        }
    }

    pub fn arch(&self, input_dim: usize, num_classes: usize) -> Result<ArchitectureSpec> {
        if self.residual {
            ArchitectureSpec::uniform_residual(input_dim, self.width, self.depth, num_classes)
        } else {
            ArchitectureSpec::uniform(input_dim, self.width, self.depth, num_classes)
        }
    }
}

/// Every combination of the given widths and depths, width-major.
pub fn grid_cells(widths: &[usize], depths: &[usize]) -> Result<Vec<CellSpec>> {
    if widths.is_empty() || depths.is_empty() {
        return Err(Error::InvalidConfig("grid needs at least one width and one depth".into()));
    }
    Ok(widths
        .iter()
        .flat_map(|&w| depths.iter().map(move |&d| CellSpec::new(w, d)))
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub cell: CellSpec,
    pub seed: u64,
    /// Mean test accuracy over the last few epochs; train accuracy when no
    /// test set was given.
    pub test_accuracy: f64,
    /// Training-averaged entropy of every hidden layer.
    pub layer_entropy: Vec<f64>,
    /// Earliest layer seen conflicting at any probe.
    pub first_conflicting_layer: Option<usize>,
    pub records: Vec<EntropyRecord>,
    pub log: TrainingLog,
}

impl CellResult {
    /// Training-averaged entropy of the last hidden layer.
    pub fn bundle_entropy(&self) -> f64 {
        self.layer_entropy.last().copied().unwrap_or(0.0)
    }
}

/// Earliest conflicting layer across the probes taken after training
/// started; the epoch-0 probe only counts when it is the only one.
pub fn earliest_conflict(records: &[EntropyRecord]) -> Option<usize> {
    let trained = records.iter().any(|r| r.step > 0);
    records
        .iter()
        .filter(|r| r.step > 0 || !trained)
        .filter_map(first_conflicting_layer)
        .min()
}

/// Train one grid cell from HE init with probing after every epoch.
pub fn run_cell(cell: CellSpec, train_set: &Dataset, test_set: Option<&Dataset>, config: &TrainConfig) -> Result<CellResult> {
    config.validate()?;
    let arch = cell.arch(train_set.input_dim(), train_set.num_classes())?;
    let probe = probe_subset(train_set, config.eval_subset_size, config.seed);
    let run = train_probed(he_init(&arch, config.seed), &arch, train_set, test_set, config, &probe, |_| false)?;
    let test_accuracy = match run.log.tail_test_accuracy(ACCURACY_TAIL_EPOCHS) {
        Some(a) => a,
        None => {
            let tail: Vec<f64> = run
                .log
                .epochs
                .iter()
                .rev()
                .take(ACCURACY_TAIL_EPOCHS)
                .map(|e| e.train_accuracy)
                .collect();
            if tail.is_empty() {
                crate::nn::accuracy(&run.params, &arch, train_set.samples())?
            } else {
                tail.iter().sum::<f64>() / tail.len() as f64
            }
        }
    };
    Ok(CellResult {
        cell,
        seed: config.seed,
        test_accuracy,
        layer_entropy: training_bundle_entropy(&run.records)?,
        first_conflicting_layer: earliest_conflict(&run.records),
        records: run.records,
        log: run.log,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryPoint {
    pub width: usize,
    pub max_depth: usize,
    pub first_conflicting_layer: Option<usize>,
    pub record: EntropyRecord,
}

/// Train only the deepest network of a width for `config.boundary_epochs`
/// epochs and probe it once.
pub fn boundary_point(width: usize, max_depth: usize, train_set: &Dataset, config: &TrainConfig) -> Result<BoundaryPoint> {
    if max_depth == 0 {
        return Err(Error::InvalidConfig("max_depth must be >= 1".into()));
    }
    let arch = CellSpec::new(width, max_depth).arch(train_set.input_dim(), train_set.num_classes())?;
    let probe = probe_subset(train_set, config.eval_subset_size, config.seed);
    let cfg = TrainConfig {
        epochs: config.boundary_epochs,
        ..config.clone()
    };
    let (params, _) = train_from(he_init(&arch, cfg.seed), &arch, train_set, None, &cfg, &mut NoHook)?;
    let record = probe_model(&params, &arch, &probe, &cfg, cfg.epochs)?;
    Ok(BoundaryPoint {
        width,
        max_depth,
        first_conflicting_layer: first_conflicting_layer(&record),
        record,
    })
}

/// Per width, the first conflicting layer of its deepest network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConflictBoundary {
    pub max_depth: usize,
    pub points: Vec<BoundaryPoint>,
}

/// Sequential boundary search: exactly one training run per width.
pub fn find_boundary(widths: &[usize], max_depth: usize, train_set: &Dataset, config: &TrainConfig) -> Result<ConflictBoundary> {
    let mut sorted = widths.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.is_empty() {
        return Err(Error::InvalidConfig("boundary needs at least one width".into()));
    }
    let points = sorted
        .into_iter()
        .map(|w| boundary_point(w, max_depth, train_set, config))
        .collect::<Result<Vec<_>>>()?;
    Ok(ConflictBoundary { max_depth, points })
}

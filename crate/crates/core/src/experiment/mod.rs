//! Experiment drivers built from the network and bundle primitives. Nothing
//! here touches the file system or spawns threads; the std crate schedules
//! cells and persists results.

mod autotune;
mod grid;
mod probed;
mod stats;
mod toy;

pub use autotune::{auto_tune, AutoTuneResult, PruneRound, PruneTrace, WidthSchedule};
pub use grid::{
    boundary_point, earliest_conflict, find_boundary, grid_cells, run_cell, BoundaryPoint, CellResult, CellSpec,
    ConflictBoundary, ACCURACY_TAIL_EPOCHS,
};
pub use probed::{train_probed, ProbedRun};
pub use stats::{correlate, correlate_pairs, pearson, ranks, spearman, Correlation};
pub use toy::{
    conflicting_init, non_conflicting_init, run_toy_experiment, toy_arch, ToyEpoch, ToyReport, ToyVariant, IMBALANCED_FRACTION,
    SWEEP_POINTS, TOY_SAMPLES,
};

//! Plot-ready CSV and JSON summaries.

use std::path::Path;

use bundlescope_core::bundle::EntropyRecord;
use bundlescope_core::experiment::{ConflictBoundary, PruneTrace};
use bundlescope_core::nn::ArchitectureSpec;
use bundlescope_core::TrainConfig;
use serde::{Deserialize, Serialize};

use crate::checkpoint::write_atomic;
use crate::error::{IoContext, Result};
use crate::runner::GridCell;

pub const ENTROPY_HEADER: [&str; 5] = ["epoch", "layer", "bundle_entropy", "num_bundles", "probe_size"];

/// Nine significant digits.
pub fn fmt_real(v: f64) -> String {
    format!("{v:.8e}")
}

/// One `(epoch, layer)` row of the entropy CSV; `layer` is 1-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyRow {
    pub epoch: usize,
    pub layer: usize,
    pub bundle_entropy: f64,
    pub num_bundles: usize,
    pub probe_size: usize,
}

pub fn entropy_rows(records: &[EntropyRecord]) -> Vec<EntropyRow> {
    let mut rows: Vec<EntropyRow> = records
        .iter()
        .flat_map(|r| {
            r.per_layer_entropy
                .iter()
                .zip(&r.per_layer_bundle_count)
                .enumerate()
                .map(move |(l, (&h, &k))| EntropyRow {
                    epoch: r.step,
                    layer: l + 1,
                    bundle_entropy: h,
                    num_bundles: k,
                    probe_size: r.probe_size,
                })
        })
        .collect();
    rows.sort_by_key(|r| (r.epoch, r.layer));
    rows
}

pub fn entropy_csv(records: &[EntropyRecord]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(ENTROPY_HEADER)?;
    for r in entropy_rows(records) {
        w.write_record([
            r.epoch.to_string(),
            r.layer.to_string(),
            fmt_real(r.bundle_entropy),
            r.num_bundles.to_string(),
            r.probe_size.to_string(),
        ])?;
    }
    w.into_inner().map_err(|e| crate::Error::Invalid(e.to_string()))
}

pub fn emit_entropy_csv(records: &[EntropyRecord], path: &Path) -> Result<()> {
    write_atomic(path, &entropy_csv(records)?)
}

pub fn read_entropy_csv(path: &Path) -> Result<Vec<EntropyRow>> {
    let file = std::fs::File::open(path).at(path)?;
    let mut r = csv::Reader::from_reader(file);
    r.deserialize().map(|row| row.map_err(Into::into)).collect()
}

/// Machine-readable outcome of one CLI run. Keys are emitted sorted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub command: String,
    pub config: TrainConfig,
    pub arch: Option<ArchitectureSpec>,
    /// Test accuracy averaged over the final epochs, or train accuracy when
    /// there is no test split.
    pub final_accuracy: Option<f64>,
    pub final_train_accuracy: Option<f64>,
    /// Training-averaged entropy of every hidden layer.
    pub layer_entropy: Vec<f64>,
    pub bundle_entropy_last_layer: Option<f64>,
    pub first_conflicting_layer: Option<usize>,
    pub prune_trace: Option<PruneTrace>,
    /// Mean softmax output per class at the end of training.
    pub output_means: Option<Vec<f64>>,
    pub wall_clock_seconds: f64,
}

impl RunSummary {
    pub fn new(command: &str, config: &TrainConfig) -> Self {
        Self {
            command: command.into(),
            config: config.clone(),
            arch: None,
            final_accuracy: None,
            final_train_accuracy: None,
            layer_entropy: Vec::new(),
            bundle_entropy_last_layer: None,
            first_conflicting_layer: None,
            prune_trace: None,
            output_means: None,
            wall_clock_seconds: 0.0,
        }
    }
}

/// Pretty JSON with every object's keys in sorted order.
pub fn to_sorted_json<T: Serialize>(value: &T) -> Result<String> {
    // serde_json's map is ordered by key unless `preserve_order` is enabled
    let v = serde_json::to_value(value)?;
    Ok(serde_json::to_string_pretty(&v)? + "\n")
}

pub fn emit_summary_json(summary: &RunSummary, path: &Path) -> Result<()> {
    write_atomic(path, to_sorted_json(summary)?.as_bytes())
}

pub fn emit_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    write_atomic(path, to_sorted_json(value)?.as_bytes())
}

fn opt(v: Option<usize>) -> String {
    v.map(|l| l.to_string()).unwrap_or_default()
}

pub fn boundary_csv(boundary: &ConflictBoundary) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["width", "max_depth", "first_conflicting_layer", "bundle_entropy_last_layer"])?;
    for p in &boundary.points {
        w.write_record([
            p.width.to_string(),
            p.max_depth.to_string(),
            opt(p.first_conflicting_layer),
            fmt_real(p.record.last_layer_entropy()),
        ])?;
    }
    w.into_inner().map_err(|e| crate::Error::Invalid(e.to_string()))
}

pub fn grid_csv(cells: &[GridCell]) -> Result<Vec<u8>> {
    let mut sorted: Vec<&GridCell> = cells.iter().collect();
    sorted.sort_by_key(|c| c.result.cell);
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "width",
        "depth",
        "test_accuracy",
        "bundle_entropy",
        "first_conflicting_layer",
        "seed",
    ])?;
    for c in sorted {
        let r = &c.result;
        w.write_record([
            r.cell.width.to_string(),
            r.cell.depth.to_string(),
            fmt_real(r.test_accuracy),
            fmt_real(r.bundle_entropy()),
            opt(r.first_conflicting_layer),
            r.seed.to_string(),
        ])?;
    }
    w.into_inner().map_err(|e| crate::Error::Invalid(e.to_string()))
}

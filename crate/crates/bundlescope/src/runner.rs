//! Threaded grid and boundary runners with incremental persistence.
//!
//! Workers pull jobs from a shared counter and send results over a channel;
//! the calling thread is the only writer.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::mpsc;
use std::thread;
use std::time::Instant;

use bundlescope_core::data::Dataset;
use bundlescope_core::experiment::{boundary_point, run_cell, BoundaryPoint, CellResult, CellSpec, ConflictBoundary};
use bundlescope_core::TrainConfig;
use serde::{Deserialize, Serialize};

use crate::checkpoint::write_atomic;
use crate::error::{Error, IoContext, Result};
use crate::report::to_sorted_json;

/// A finished cell with its wall-clock cost.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub result: CellResult,
    /// Settings the cell was trained with; resume only reuses exact matches.
    pub config: TrainConfig,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellFailure {
    pub cell: CellSpec,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridResult {
    /// Completed cells sorted by (width, depth).
    pub cells: Vec<GridCell>,
    pub failures: Vec<CellFailure>,
    /// Cells trained by this invocation.
    pub computed: usize,
    /// Cells loaded from an earlier invocation.
    pub resumed: usize,
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub workers: usize,
    /// Per-cell JSON files go to `<out_dir>/cells/`.
    pub out_dir: Option<PathBuf>,
    pub resume: bool,
}

pub enum Progress<'a> {
    Resumed(&'a CellSpec),
    Done(&'a GridCell),
    Failed(&'a CellFailure),
}

/// Run `job` over `items` on `workers` threads, handing each result to
/// `sink` on the calling thread as soon as it arrives.
pub fn parallel_for_each<T, R, F, S>(items: &[T], workers: usize, job: F, mut sink: S) -> Result<()>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync,
    S: FnMut(usize, R) -> Result<()>,
{
    let workers = workers.clamp(1, items.len().max(1));
    let next = AtomicUsize::new(0);
    thread::scope(|s| {
        let (tx, rx) = mpsc::channel::<(usize, R)>();
        for _ in 0..workers {
            let tx = tx.clone();
            let (next, job) = (&next, &job);
            s.spawn(move || loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= items.len() {
                    break;
                }
                if tx.send((i, job(&items[i]))).is_err() {
                    break;
                }
            });
        }
        drop(tx);
        for (i, r) in rx {
            if let Err(e) = sink(i, r) {
                // stop handing out work; running jobs finish and are dropped
                next.store(items.len(), Ordering::Relaxed);
                return Err(e);
            }
        }
        Ok(())
    })
}

pub fn cell_file_name(cell: &CellSpec) -> String {
    let suffix = if cell.residual { "_res" } else { "" };
    format!("w{}_d{}{suffix}.json", cell.width, cell.depth)
}

fn cells_dir(out: &Path) -> PathBuf {
    out.join("cells")
}

fn load_completed(dir: &Path, cell: &CellSpec, config: &TrainConfig) -> Option<GridCell> {
    let text = fs::read_to_string(dir.join(cell_file_name(cell))).ok()?;
    let done: GridCell = serde_json::from_str(&text).ok()?;
    (done.result.cell == *cell && done.config == *config).then_some(done)
}

/// Run every cell with `job`, persisting each one as it completes. With
/// `resume`, cells already on disk for the same settings are loaded, not
/// rerun.
pub fn run_grid_with<F>(
    cells: &[CellSpec],
    config: &TrainConfig,
    options: &RunOptions,
    job: F,
    mut progress: impl FnMut(Progress<'_>),
) -> Result<GridResult>
where
    F: Fn(CellSpec) -> bundlescope_core::Result<CellResult> + Sync,
{
    let dir = options.out_dir.as_deref().map(cells_dir);
    if let Some(d) = &dir {
        fs::create_dir_all(d).at(d)?;
    }
    let mut done = Vec::new();
    let mut pending = Vec::new();
    for cell in cells {
        match dir.as_deref().filter(|_| options.resume).and_then(|d| load_completed(d, cell, config)) {
            Some(c) => {
                progress(Progress::Resumed(cell));
                done.push(c);
            }
            None => pending.push(*cell),
        }
    }
    let resumed = done.len();
    let mut failures = Vec::new();

    let timed = |cell: &CellSpec| {
        let start = Instant::now();
        let r = job(*cell);
        (r, start.elapsed().as_secs_f64())
    };
    parallel_for_each(&pending, options.workers, timed, |i, (r, seconds)| {
        match r {
            Ok(result) => {
                let cell = GridCell {
                    result,
                    config: config.clone(),
                    seconds,
                };
                if let Some(d) = &dir {
                    write_atomic(&d.join(cell_file_name(&pending[i])), to_sorted_json(&cell)?.as_bytes())?;
                }
                progress(Progress::Done(&cell));
                done.push(cell);
            }
            Err(e) => {
                let f = CellFailure {
                    cell: pending[i],
                    error: e.to_string(),
                };
                progress(Progress::Failed(&f));
                failures.push(f);
            }
        }
        Ok(())
    })?;

    done.sort_by_key(|c| c.result.cell);
    failures.sort_by_key(|f| f.cell);
    Ok(GridResult {
        computed: done.len() - resumed,
        resumed,
        cells: done,
        failures,
    })
}

/// Train one network per (width, depth) with per-epoch probing.
pub fn grid_experiment(
    cells: &[CellSpec],
    train_set: &Dataset,
    test_set: Option<&Dataset>,
    config: &TrainConfig,
    options: &RunOptions,
    progress: impl FnMut(Progress<'_>),
) -> Result<GridResult> {
    config.validate()?;
    if cells.is_empty() {
        return Err(Error::Invalid("grid has no cells".into()));
    }
    run_grid_with(
        cells,
        config,
        options,
        |cell| run_cell(cell, train_set, test_set, config),
        progress,
    )
}

/// Boundary search with one training run per width, spread over workers.
pub fn find_boundary(
    widths: &[usize],
    max_depth: usize,
    train_set: &Dataset,
    config: &TrainConfig,
    workers: usize,
    mut progress: impl FnMut(&BoundaryPoint),
) -> Result<ConflictBoundary> {
    let mut sorted = widths.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.is_empty() {
        return Err(Error::Invalid("boundary needs at least one width".into()));
    }
    let mut points: Vec<Option<BoundaryPoint>> = vec![None; sorted.len()];
    parallel_for_each(
        &sorted,
        workers,
        |&w| boundary_point(w, max_depth, train_set, config),
        |i, r| {
            let p = r?;
            progress(&p);
            points[i] = Some(p);
            Ok(())
        },
    )?;
    Ok(ConflictBoundary {
        max_depth,
        points: points.into_iter().map(|p| p.expect("every width ran")).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parallel_for_each_visits_every_item_once() {
        let items: Vec<usize> = (0..50).collect();
        let mut seen = vec![0; 50];
        parallel_for_each(&items, 4, |&x| x * 2, |i, r| {
            assert_eq!(r, i * 2);
            seen[i] += 1;
            Ok(())
        })
        .unwrap();
        assert!(seen.iter().all(|&c| c == 1));
    }

    #[test]
    fn sink_error_stops_the_run() {
        let items: Vec<usize> = (0..20).collect();
        let r = parallel_for_each(&items, 2, |&x| x, |_, _| Err(Error::Invalid("stop".into())));
        assert!(r.is_err());
    }
}

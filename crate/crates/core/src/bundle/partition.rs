//! Bundling predicate and single-pass batch partitioning.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::{math, Error, Matrix, Result, TrainConfig};

/// Parameters of the scaled infinity-norm predicate
/// `(alpha / batch_size) * max_k |a_k - b_k| <= gamma`.
///
/// `batch_size` is the training mini-batch size: the factor mirrors how an
/// activation is scaled when it enters a weight update.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BundleThreshold {
    pub alpha: f64,
    pub batch_size: usize,
    pub gamma: f64,
}

impl BundleThreshold {
    pub fn from_config(config: &TrainConfig) -> Self {
        Self {
            alpha: config.learning_rate,
            batch_size: config.batch_size,
            gamma: config.gamma,
        }
    }

    #[inline]
    fn scale(&self) -> f64 {
        self.alpha / self.batch_size as f64
    }

    /// Largest raw infinity-norm distance that can still satisfy the
    /// predicate.
    fn radius(&self) -> f64 {
        self.gamma / self.scale()
    }

    #[inline]
    fn holds(&self, a: &[f64], b: &[f64]) -> bool {
        let scale = self.scale();
        let mut max = 0.0f64;
        for (x, y) in a.iter().zip(b) {
            let d = (x - y).abs();
            if d > max {
                max = d;
                // once over the threshold the answer cannot change
                if scale * max > self.gamma {
                    return false;
                }
            }
        }
        scale * max <= self.gamma
    }
}

impl Default for BundleThreshold {
    fn default() -> Self {
        Self::from_config(&TrainConfig::default())
    }
}

/// Whether two layer outputs are bundled.
pub fn bundled(a: &[f64], b: &[f64], threshold: &BundleThreshold) -> Result<bool> {
    if a.len() != b.len() {
        return Err(Error::Shape {
            context: "bundled() operands".into(),
            expected: a.len(),
            actual: b.len(),
        });
    }
    Ok(threshold.holds(a, b))
}

/// Disjoint bundles of one layer over a probe batch.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BundlePartition {
    /// Hidden layer index, 1-based.
    pub layer_index: usize,
    /// Row indices of each bundle, in bundle creation order; rows within a
    /// bundle are ascending.
    pub bundles: Vec<Vec<usize>>,
    /// Founding row of each bundle.
    pub representatives: Vec<usize>,
}

impl BundlePartition {
    pub fn len(&self) -> usize {
        self.bundles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bundles.is_empty()
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.bundles.iter().map(Vec::len).collect()
    }

    /// Bundle id of every row.
    pub fn assignment(&self) -> Vec<usize> {
        let n = self.bundles.iter().map(Vec::len).sum();
        let mut out = vec![0; n];
        for (b, rows) in self.bundles.iter().enumerate() {
            for &r in rows {
                out[r] = b;
            }
        }
        out
    }
}

type CellKey = (i64, i64);

/// Bucket rows by the two coordinates with the widest spread so that a
/// candidate representative can only live in the 3x3 neighbouring cells.
struct Grid {
    axes: [Option<usize>; 2],
    width: f64,
    cells: BTreeMap<CellKey, Vec<usize>>,
}

impl Grid {
    fn new(rows: &Matrix, radius: f64) -> Self {
        // slack so that a pair passing the predicate never lands two cells apart
        let width = radius * (1.0 + 1e-6) + f64::MIN_POSITIVE;
        let mut axes = [None, None];
        if width.is_finite() && width < 1e300 && rows.rows() > 1 {
            let mut lo = vec![f64::INFINITY; rows.cols()];
            let mut hi = vec![f64::NEG_INFINITY; rows.cols()];
            for r in rows.row_iter() {
                for (k, &v) in r.iter().enumerate() {
                    lo[k] = lo[k].min(v);
                    hi[k] = hi[k].max(v);
                }
            }
            let mut spread: Vec<(f64, usize)> = lo
                .iter()
                .zip(&hi)
                .enumerate()
                .map(|(k, (lo, hi))| (hi - lo, k))
                .filter(|(s, _)| *s > width)
                .collect();
            spread.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
            for (slot, (_, k)) in axes.iter_mut().zip(spread) {
                *slot = Some(k);
            }
        }
        Self {
            axes,
            width,
            cells: BTreeMap::new(),
        }
    }

    fn coord(&self, row: &[f64], axis: Option<usize>) -> i64 {
        match axis {
            // saturating float-to-int cast
            Some(k) => math::floor(row[k] / self.width) as i64,
            None => 0,
        }
    }

    fn key(&self, row: &[f64]) -> CellKey {
        (self.coord(row, self.axes[0]), self.coord(row, self.axes[1]))
    }

    fn neighbours(&self, key: CellKey) -> impl Iterator<Item = &Vec<usize>> {
        let dx: &[i64] = if self.axes[0].is_some() { &[-1, 0, 1] } else { &[0] };
        let dy: &[i64] = if self.axes[1].is_some() { &[-1, 0, 1] } else { &[0] };
        dx.iter()
            .flat_map(move |&a| dy.iter().map(move |&b| (key.0.saturating_add(a), key.1.saturating_add(b))))
            .filter_map(|k| self.cells.get(&k))
    }
}

/// Group the rows of `activations` into bundles in one pass over the rows.
///
/// Rows are visited in index order. A row joins the earliest-created bundle
/// whose representative it is bundled with; otherwise it founds a new bundle
/// and becomes its representative. The tolerance relation is not transitive,
/// so the result depends on row order, which is fixed here.
pub fn partition_layer(activations: &Matrix, threshold: &BundleThreshold, layer_index: usize) -> BundlePartition {
    let mut grid = Grid::new(activations, threshold.radius());
    let mut bundles: Vec<Vec<usize>> = Vec::new();
    let mut representatives: Vec<usize> = Vec::new();

    for (i, row) in activations.row_iter().enumerate() {
        let key = grid.key(row);
        let mut best: Option<usize> = None;
        for ids in grid.neighbours(key) {
            // ids are ascending, so the first hit is the earliest in this cell
            for &b in ids {
                if best.is_some_and(|m| b >= m) {
                    break;
                }
                if threshold.holds(row, activations.row(representatives[b])) {
                    best = Some(b);
                    break;
                }
            }
        }
        match best {
            Some(b) => bundles[b].push(i),
            None => {
                let id = bundles.len();
                bundles.push(vec![i]);
                representatives.push(i);
                grid.cells.entry(key).or_default().push(id);
            }
        }
    }

    BundlePartition {
        layer_index,
        bundles,
        representatives,
    }
}

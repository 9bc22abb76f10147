use alloc::vec::Vec;

use rand::Rng;

use super::{Dataset, Split};
use crate::nn::Batch;
use crate::rng::{self, Stream};
use crate::{math, Error, Matrix, Result};

/// One-dimensional two-class set: class 0 for `x < 0.5`, class 1 otherwise.
///
/// `round(n * class1_fraction)` samples are drawn uniformly from `[0, 0.5)`
/// and the rest from `[0.5, 1]`; rows are then shuffled.
pub fn toy_dataset(n: usize, class1_fraction: f64, seed: u64) -> Result<Dataset> {
    if n < 2 {
        return Err(Error::InvalidDataset("toy dataset needs n >= 2".into()));
    }
    if !(class1_fraction > 0.0 && class1_fraction < 1.0) {
        return Err(Error::InvalidDataset(alloc::format!(
            "class fraction must be in (0, 1), got {class1_fraction}"
        )));
    }
    let n_first = (math::round(n as f64 * class1_fraction) as usize).clamp(1, n - 1);
    let mut rng = rng::stream(seed, Stream::Toy);
    let mut rows: Vec<(f64, usize)> = Vec::with_capacity(n);
    for _ in 0..n_first {
        rows.push((rng.random_range(0.0..0.5), 0));
    }
    for _ in n_first..n {
        rows.push((rng.random_range(0.5..=1.0), 1));
    }
    let order = rng::permutation(n, &mut rng);
    let xs: Vec<f64> = order.iter().map(|&i| rows[i].0).collect();
    let classes: Vec<usize> = order.iter().map(|&i| rows[i].1).collect();
    let batch = Batch::from_classes(Matrix::from_vec(n, 1, xs)?, classes, 2)?;
    Ok(Dataset::new(batch, Split::Train))
}

use alloc::vec;
use alloc::vec::Vec;

use super::Dataset;
use crate::nn::Batch;
use crate::rng::{self, Stream};
use crate::{Error, Result};

/// Exactly `size / N_c` samples of every class, in shuffled order.
pub fn balanced_batch(dataset: &Dataset, size: usize, seed: u64) -> Result<Batch> {
    let nc = dataset.num_classes();
    if size == 0 || size % nc != 0 {
        return Err(Error::InvalidConfig(alloc::format!(
            "balanced batch size {size} is not a positive multiple of {nc} classes"
        )));
    }
    let per_class = size / nc;
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); nc];
    for (i, &c) in dataset.classes().iter().enumerate() {
        by_class[c].push(i);
    }
    let mut rng = rng::stream(seed, Stream::Sample);
    let mut picked = Vec::with_capacity(size);
    for (class, members) in by_class.iter().enumerate() {
        if members.len() < per_class {
            return Err(Error::InsufficientClass {
                class,
                needed: per_class,
                available: members.len(),
            });
        }
        let order = rng::permutation(members.len(), &mut rng);
        picked.extend(order[..per_class].iter().map(|&j| members[j]));
    }
    let order = rng::permutation(picked.len(), &mut rng);
    let indices: Vec<usize> = order.iter().map(|&j| picked[j]).collect();
    Ok(dataset.batch(&indices))
}

/// Indices of a uniform sample without replacement, clipped to the dataset
/// size, kept in ascending order.
pub fn probe_indices(len: usize, size: usize, seed: u64) -> Vec<usize> {
    if size >= len {
        return (0..len).collect();
    }
    let mut rng = rng::stream(seed, Stream::Probe);
    let mut idx = rng::permutation(len, &mut rng);
    idx.truncate(size);
    idx.sort_unstable();
    idx
}

/// The fixed subset of training data on which bundles are measured.
pub fn probe_subset(dataset: &Dataset, size: usize, seed: u64) -> Batch {
    dataset.batch(&probe_indices(dataset.len(), size, seed))
}

//! Label entropy of bundles.

use alloc::vec;
use alloc::vec::Vec;

use super::BundlePartition;
use crate::math;

/// Label counts of one bundle.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassHistogram {
    counts: Vec<usize>,
}

impl ClassHistogram {
    pub fn new(counts: Vec<usize>) -> Self {
        Self { counts }
    }

    pub fn from_members(members: &[usize], classes: &[usize], num_classes: usize) -> Self {
        let mut counts = vec![0; num_classes];
        for &i in members {
            counts[classes[i]] += 1;
        }
        Self { counts }
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }

    pub fn num_classes(&self) -> usize {
        self.counts.len()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        let total = self.total().max(1) as f64;
        self.counts.iter().map(|&c| c as f64 / total).collect()
    }
}

/// `-sum_n p(n) ln(p(n) + eps)` clamped to `[0, ln N_c]`.
///
/// The offset makes a single-class bundle come out at `-ln(1 + eps)`; the
/// clamp maps it back to exactly 0 so a positive value always means mixed
/// labels.
pub fn bundle_entropy_single(histogram: &ClassHistogram, eps: f64) -> f64 {
    let h: f64 = -histogram
        .probabilities()
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| p * math::ln(p + eps))
        .sum::<f64>();
    clamp_entropy(h, math::ln(histogram.num_classes().max(1) as f64))
}

// an empty float sum is -0.0; report it as +0.0
fn clamp_entropy(h: f64, max: f64) -> f64 {
    if h > 0.0 {
        h.min(max)
    } else {
        0.0
    }
}

/// Size-weighted mean of the bundle entropies over the whole probe batch.
pub fn layer_entropy(partition: &BundlePartition, classes: &[usize], num_classes: usize, eps: f64) -> f64 {
    let total: usize = partition.bundles.iter().map(Vec::len).sum();
    if total == 0 {
        return 0.0;
    }
    let weighted: f64 = partition
        .bundles
        .iter()
        .filter(|b| b.len() > 1)
        .map(|b| b.len() as f64 * bundle_entropy_single(&ClassHistogram::from_members(b, classes, num_classes), eps))
        .sum();
    clamp_entropy(weighted / total as f64, math::ln(num_classes as f64))
}

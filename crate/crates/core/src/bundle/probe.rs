use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{layer_entropy, partition_layer, BundlePartition, BundleThreshold};
use crate::nn::{forward, ArchitectureSpec, Batch, ModelParams};
use crate::{Error, Result, TrainConfig};

/// Bundle statistics of every hidden layer at one probe point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyRecord {
    /// Epoch index; 0 is before any training.
    pub step: usize,
    pub per_layer_entropy: Vec<f64>,
    pub per_layer_bundle_count: Vec<usize>,
    pub probe_size: usize,
}

impl EntropyRecord {
    /// Entropy of the last hidden layer.
    pub fn last_layer_entropy(&self) -> f64 {
        self.per_layer_entropy.last().copied().unwrap_or(0.0)
    }
}

/// Partition every hidden layer's output over the probe batch.
pub fn partition_all(
    params: &ModelParams,
    arch: &ArchitectureSpec,
    probe: &Batch,
    threshold: &BundleThreshold,
) -> Result<Vec<BundlePartition>> {
    let trace = forward(params, arch, probe.inputs())?;
    Ok(trace
        .activations
        .iter()
        .enumerate()
        .map(|(l, a)| partition_layer(a, threshold, l + 1))
        .collect())
}

/// One forward pass over the probe batch, then bundle count and entropy of
/// each hidden layer. The output layer is not probed.
pub fn probe_model(
    params: &ModelParams,
    arch: &ArchitectureSpec,
    probe: &Batch,
    config: &TrainConfig,
    step: usize,
) -> Result<EntropyRecord> {
    let threshold = BundleThreshold::from_config(config);
    let partitions = partition_all(params, arch, probe, &threshold)?;
    let nc = arch.num_classes();
    Ok(EntropyRecord {
        step,
        per_layer_entropy: partitions
            .iter()
            .map(|p| layer_entropy(p, probe.classes(), nc, config.entropy_eps))
            .collect(),
        per_layer_bundle_count: partitions.iter().map(BundlePartition::len).collect(),
        probe_size: probe.len(),
    })
}

/// Per-layer mean of `H^l(t)` over all records; the last element is the
/// bundle entropy of the network.
pub fn training_bundle_entropy(records: &[EntropyRecord]) -> Result<Vec<f64>> {
    let first = records.first().ok_or(Error::NoRecords)?;
    let depth = first.per_layer_entropy.len();
    let mut sums = alloc::vec![0.0; depth];
    for r in records {
        if r.per_layer_entropy.len() != depth {
            return Err(Error::Shape {
                context: alloc::format!("entropy record at step {}", r.step),
                expected: depth,
                actual: r.per_layer_entropy.len(),
            });
        }
        for (s, h) in sums.iter_mut().zip(&r.per_layer_entropy) {
            *s += h;
        }
    }
    let n = records.len() as f64;
    Ok(sums.into_iter().map(|s| s / n).collect())
}

/// Smallest 1-based layer index with strictly positive entropy.
pub fn first_conflicting_layer(record: &EntropyRecord) -> Option<usize> {
    record.per_layer_entropy.iter().position(|&h| h > 0.0).map(|l| l + 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::LN_10;

    fn record(h: &[f64]) -> EntropyRecord {
        EntropyRecord {
            step: 0,
            per_layer_entropy: h.to_vec(),
            per_layer_bundle_count: alloc::vec![1; h.len()],
            probe_size: 10,
        }
    }

    #[test]
    fn average_of_single_record_is_itself() {
        let r = record(&[0.0, 0.3, 1.2]);
        assert_eq!(training_bundle_entropy(&[r.clone()]).unwrap(), r.per_layer_entropy);
    }

    #[test]
    fn average_over_steps() {
        let rs: Vec<_> = [0.0, 0.0, LN_10, LN_10].iter().map(|&h| record(&[h])).collect();
        assert!((training_bundle_entropy(&rs).unwrap()[0] - LN_10 / 2.0).abs() < 1e-15);
    }

    #[test]
    fn empty_records_is_an_error() {
        assert_eq!(training_bundle_entropy(&[]), Err(Error::NoRecords));
    }

    #[test]
    fn first_conflicting_layer_is_first_positive() {
        assert_eq!(first_conflicting_layer(&record(&[0.0, 0.0, 0.0])), None);
        assert_eq!(first_conflicting_layer(&record(&[0.0, 0.0, 0.4, 2.3])), Some(3));
    }
}

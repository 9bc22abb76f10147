//! Conflicting-bundle detection: bundling predicate, batch partitions, label
//! entropy and probing of a network's hidden layers.

mod entropy;
mod gradient;
mod partition;
mod probe;

pub use entropy::{bundle_entropy_single, layer_entropy, ClassHistogram};
pub use gradient::{gradient_input_correlation, lag1_autocorrelation, GradientSeries};
pub use partition::{bundled, partition_layer, BundlePartition, BundleThreshold};
pub use probe::{
    first_conflicting_layer, partition_all, probe_model, training_bundle_entropy, EntropyRecord,
};

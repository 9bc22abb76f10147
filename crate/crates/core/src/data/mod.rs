//! Datasets: the two-class toy set, IDX decoding, augmentation and sampling.

mod augment;
mod dataset;
pub mod idx;
mod sampling;
mod toy;

pub use augment::{adjust_brightness, augment_mnist, augment_rows, shift_image, AugmentParams};
pub use dataset::{Dataset, Split, Standardization};
pub use sampling::{balanced_batch, probe_indices, probe_subset};
pub use toy::toy_dataset;

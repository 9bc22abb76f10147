//! Dense feed-forward training with conflicting-bundle diagnostics.
//!
//! Two samples are *bundled* by a hidden layer when the layer maps them to
//! outputs that cannot be told apart at the resolution used by a gradient
//! step. A bundle holding samples with different labels is *conflicting*:
//! the output layer receives one averaged target for all of them, and in the
//! worst case (one bundle for the whole batch) the labels drop out of the
//! gradient entirely.
//!
//! This crate contains the pure parts of the toolkit:
//!
//! - [`nn`]: a small dense ReLU network with traced forward pass, analytic
//!   backpropagation, optional identity-residual layers, and Adam with
//!   decoupled weight decay.
//! - [`bundle`]: the bundling predicate, batch partitioning, bundle entropy
//!   and first-conflicting-layer detection.
//! - [`data`]: in-memory datasets, the two-class toy set, MNIST-style
//!   augmentation, balanced/probe sampling and IDX byte parsing.
//! - [`experiment`]: the toy conflicting-bundle study, single grid cells,
//!   the depth auto-tuner and rank/linear correlation.
//!
//! The crate is `no_std` and only needs `alloc`. File IO, report formats,
//! the threaded grid runner and the CLI live in the `bundlescope` crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod bundle;
pub mod config;
pub mod data;
mod error;
pub mod experiment;
mod math;
pub mod nn;
pub mod rng;
pub mod tensor;

pub use config::TrainConfig;
pub use error::{Error, Result};
pub use tensor::Matrix;

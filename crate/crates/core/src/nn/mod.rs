//! Dense ReLU networks with traced forward pass and analytic gradients.

mod arch;
mod batch;
mod network;
mod optim;
mod params;
mod train;

pub use arch::ArchitectureSpec;
pub use batch::Batch;
pub use network::{
    accuracy, argmax, backward, cross_entropy, forward, input_gradients, mean_output, softmax,
    ActivationTrace, PROB_FLOOR,
};
pub use optim::{optimizer_step, AdamState};
pub use params::{he_init, Gradients, ModelParams};
pub use train::{train, train_from, EpochHook, EpochStats, NoHook, TrainingLog};

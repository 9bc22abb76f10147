//! File formats, the threaded experiment runners and the command-line
//! front end on top of [`bundlescope_core`].

pub use bundlescope_core as core;

pub mod checkpoint;
pub mod cli;
pub mod config_file;
mod error;
pub mod mnist;
pub mod report;
pub mod runner;

pub use error::{Error, Result};

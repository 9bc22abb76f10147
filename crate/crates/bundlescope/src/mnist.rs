//! MNIST IDX files on disk.

use std::fs;
use std::path::{Path, PathBuf};

use bundlescope_core::data::idx::mnist_from_idx;
use bundlescope_core::data::{Dataset, Split, Standardization};

use crate::error::{Error, IoContext, Result};

/// Environment variable consulted when no MNIST directory is given.
pub const MNIST_DIR_ENV: &str = "BUNDLESCOPE_MNIST_DIR";

const TRAIN_IMAGES: [&str; 2] = ["train-images-idx3-ubyte", "train-images.idx3-ubyte"];
const TRAIN_LABELS: [&str; 2] = ["train-labels-idx1-ubyte", "train-labels.idx1-ubyte"];
const TEST_IMAGES: [&str; 2] = ["t10k-images-idx3-ubyte", "t10k-images.idx3-ubyte"];
const TEST_LABELS: [&str; 2] = ["t10k-labels-idx1-ubyte", "t10k-labels.idx1-ubyte"];

/// Read one image/label file pair. `stats` standardizes the pixels; `None`
/// fits them on this split.
pub fn load_mnist_idx(
    image_path: &Path,
    label_path: &Path,
    split: Split,
    stats: Option<Standardization>,
) -> Result<Dataset> {
    let images = fs::read(image_path).at(image_path)?;
    let labels = fs::read(label_path).at(label_path)?;
    mnist_from_idx(&images, &labels, split, stats).map_err(|e| {
        Error::Invalid(format!("{} / {}: {e}", image_path.display(), label_path.display()))
    })
}

fn find(dir: &Path, names: &[&str]) -> Result<PathBuf> {
    names
        .iter()
        .map(|n| dir.join(n))
        .find(|p| p.is_file())
        .ok_or_else(|| Error::Invalid(format!("{} not found in {}", names[0], dir.display())))
}

/// Train and test splits from the four standard files in `dir`. The test
/// split is standardized with the train statistics.
pub fn load_mnist_dir(dir: &Path) -> Result<(Dataset, Dataset)> {
    let train = load_mnist_idx(&find(dir, &TRAIN_IMAGES)?, &find(dir, &TRAIN_LABELS)?, Split::Train, None)?;
    let test = load_mnist_idx(
        &find(dir, &TEST_IMAGES)?,
        &find(dir, &TEST_LABELS)?,
        Split::Test,
        train.standardization(),
    )?;
    Ok((train, test))
}

/// The explicit directory, else the environment variable.
pub fn resolve_mnist_dir(explicit: Option<&Path>) -> Result<PathBuf> {
    if let Some(p) = explicit {
        return Ok(p.to_path_buf());
    }
    std::env::var_os(MNIST_DIR_ENV)
        .map(PathBuf::from)
        .ok_or_else(|| Error::Invalid(format!("no MNIST directory: pass --mnist-dir or set {MNIST_DIR_ENV}")))
}

//! IDX container parsing (the MNIST distribution format).
//!
//! Layout: a big-endian u32 magic whose low byte is the number of
//! dimensions (`0x00000801` labels, `0x00000803` images), one big-endian u32
//! per dimension, then the raw unsigned bytes.

use alloc::format;
use alloc::vec::Vec;

use super::{Dataset, Split, Standardization};
use crate::nn::Batch;
use crate::{Error, Matrix, Result};

pub const LABELS_MAGIC: u32 = 0x0000_0801;
pub const IMAGES_MAGIC: u32 = 0x0000_0803;
pub const MNIST_CLASSES: usize = 10;

fn read_u32(bytes: &[u8], offset: usize, what: &str) -> Result<u32> {
    bytes
        .get(offset..offset + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or_else(|| Error::Idx(format!("truncated {what} header")))
}

fn check_magic(bytes: &[u8], expected: u32, what: &str) -> Result<()> {
    let magic = read_u32(bytes, 0, what)?;
    if magic != expected {
        return Err(Error::Idx(format!(
            "{what} file has magic {magic:#010x}, expected {expected:#010x}"
        )));
    }
    Ok(())
}

/// Raw images: `(rows, cols, pixels)` with `count * rows * cols` pixel bytes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdxImages<'a> {
    pub count: usize,
    pub rows: usize,
    pub cols: usize,
    pub pixels: &'a [u8],
}

pub fn parse_images(bytes: &[u8]) -> Result<IdxImages<'_>> {
    check_magic(bytes, IMAGES_MAGIC, "images")?;
    let count = read_u32(bytes, 4, "images")? as usize;
    let rows = read_u32(bytes, 8, "images")? as usize;
    let cols = read_u32(bytes, 12, "images")? as usize;
    let need = count * rows * cols;
    let body = &bytes[16..];
    if body.len() < need {
        return Err(Error::Idx(format!(
            "images file truncated: header promises {need} pixel bytes, found {}",
            body.len()
        )));
    }
    Ok(IdxImages {
        count,
        rows,
        cols,
        pixels: &body[..need],
    })
}

pub fn parse_labels(bytes: &[u8]) -> Result<&[u8]> {
    check_magic(bytes, LABELS_MAGIC, "labels")?;
    let count = read_u32(bytes, 4, "labels")? as usize;
    let body = &bytes[8..];
    if body.len() < count {
        return Err(Error::Idx(format!(
            "labels file truncated: header promises {count} labels, found {}",
            body.len()
        )));
    }
    Ok(&body[..count])
}

/// Decode an image/label pair into a dataset of flattened rows.
///
/// Pixels are scaled to `[0, 1]` and then standardized with `stats`, or with
/// statistics fitted on these pixels when `stats` is `None` (train split).
pub fn mnist_from_idx(
    image_bytes: &[u8],
    label_bytes: &[u8],
    split: Split,
    stats: Option<Standardization>,
) -> Result<Dataset> {
    let images = parse_images(image_bytes)?;
    let labels = parse_labels(label_bytes)?;
    if images.count != labels.len() {
        return Err(Error::Idx(format!(
            "{} images but {} labels",
            images.count,
            labels.len()
        )));
    }
    if images.count == 0 {
        return Err(Error::EmptyDataset);
    }
    let classes: Vec<usize> = labels.iter().map(|&l| l as usize).collect();
    if let Some(bad) = classes.iter().find(|&&c| c >= MNIST_CLASSES) {
        return Err(Error::Idx(format!("label {bad} out of range 0..10")));
    }
    let mut raw: Vec<f64> = images.pixels.iter().map(|&p| p as f64 / 255.0).collect();
    let stats = stats.unwrap_or_else(|| Standardization::fit(&raw));
    for v in &mut raw {
        *v = stats.apply(*v);
    }
    let dim = images.rows * images.cols;
    let inputs = Matrix::from_vec(images.count, dim, raw)?;
    let batch = Batch::from_classes(inputs, classes, MNIST_CLASSES)?;
    Ok(Dataset::new(batch, split)
        .with_standardization(stats)
        .with_image_shape(images.rows, images.cols))
}

//! Shift and brightness augmentation for flattened grayscale images.
//!
//! Pixel values are raw intensities in `[0, 1]`, before standardization.
//! Shifts move the image content and fill the uncovered border with zeros,
//! which is what a zero-padded random crop of the same size produces.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::nn::Batch;
use crate::rng::{self, Stream};
use crate::{Matrix, Result};

pub const MAX_SHIFT: i32 = 2;
pub const MAX_BRIGHTNESS: f64 = 0.1;

/// Per-sample augmentation draw.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AugmentParams {
    pub dx: i32,
    pub dy: i32,
    pub brightness: f64,
}

impl AugmentParams {
    pub const IDENTITY: Self = Self {
        dx: 0,
        dy: 0,
        brightness: 0.0,
    };

    pub fn sample(rng: &mut ChaCha8Rng) -> Self {
        Self {
            dx: rng.random_range(-MAX_SHIFT..=MAX_SHIFT),
            dy: rng.random_range(-MAX_SHIFT..=MAX_SHIFT),
            brightness: rng.random_range(-MAX_BRIGHTNESS..=MAX_BRIGHTNESS),
        }
    }
}

/// Move content by `(dx, dy)` pixels (positive = right/down), zero fill.
pub fn shift_image(pixels: &[f64], height: usize, width: usize, dx: i32, dy: i32, out: &mut [f64]) {
    debug_assert_eq!(pixels.len(), height * width);
    out.fill(0.0);
    for y in 0..height as i32 {
        let sy = y - dy;
        if sy < 0 || sy >= height as i32 {
            continue;
        }
        for x in 0..width as i32 {
            let sx = x - dx;
            if sx < 0 || sx >= width as i32 {
                continue;
            }
            out[y as usize * width + x as usize] = pixels[sy as usize * width + sx as usize];
        }
    }
}

/// Add `delta` to every pixel, clamped to `[0, 1]`.
pub fn adjust_brightness(pixels: &mut [f64], delta: f64) {
    if delta == 0.0 {
        return;
    }
    for p in pixels {
        *p = (*p + delta).clamp(0.0, 1.0);
    }
}

pub fn apply(pixels: &[f64], height: usize, width: usize, params: AugmentParams, out: &mut [f64]) {
    shift_image(pixels, height, width, params.dx, params.dy, out);
    adjust_brightness(out, params.brightness);
}

/// Augment every row of `inputs` with its own draw from `rng`.
pub fn augment_rows(inputs: &Matrix, height: usize, width: usize, rng: &mut ChaCha8Rng) -> Matrix {
    let mut out = Matrix::zeros(inputs.rows(), inputs.cols());
    for i in 0..inputs.rows() {
        let params = AugmentParams::sample(rng);
        apply(inputs.row(i), height, width, params, out.row_mut(i));
    }
    out
}

/// Random shift (up to two pixels each way) and brightness offset (up to
/// 0.1) for a batch of raw 28x28 images. No flips.
pub fn augment_mnist(batch: &Batch, seed: u64) -> Result<Batch> {
    let mut rng = rng::stream(seed, Stream::Augment { epoch: 0 });
    let out = augment_rows(batch.inputs(), 28, 28, &mut rng);
    batch.with_inputs(out)
}

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::nn::Batch;
use crate::{Matrix, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

/// Affine input standardization `(x - mean) / std`, with statistics taken
/// from the training split.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    pub mean: f64,
    pub std: f64,
}

impl Standardization {
    pub fn fit(values: &[f64]) -> Self {
        let n = values.len().max(1) as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        let std = crate::math::sqrt(var);
        Self {
            mean,
            std: if std > 0.0 { std } else { 1.0 },
        }
    }

    #[inline]
    pub fn apply(&self, v: f64) -> f64 {
        (v - self.mean) / self.std
    }

    #[inline]
    pub fn invert(&self, v: f64) -> f64 {
        v * self.std + self.mean
    }
}

/// A labeled split held in memory.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    samples: Batch,
    split: Split,
    standardization: Option<Standardization>,
    /// `(height, width)` when rows are flattened images.
    image_shape: Option<(usize, usize)>,
}

impl Dataset {
    pub fn new(samples: Batch, split: Split) -> Self {
        Self {
            samples,
            split,
            standardization: None,
            image_shape: None,
        }
    }

    pub fn with_standardization(mut self, s: Standardization) -> Self {
        self.standardization = Some(s);
        self
    }

    pub fn with_image_shape(mut self, height: usize, width: usize) -> Self {
        self.image_shape = Some((height, width));
        self
    }

    #[inline]
    pub fn samples(&self) -> &Batch {
        &self.samples
    }

    #[inline]
    pub fn inputs(&self) -> &Matrix {
        self.samples.inputs()
    }

    #[inline]
    pub fn labels(&self) -> &Matrix {
        self.samples.labels()
    }

    #[inline]
    pub fn classes(&self) -> &[usize] {
        self.samples.classes()
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    #[inline]
    pub fn input_dim(&self) -> usize {
        self.samples.inputs().cols()
    }

    #[inline]
    pub fn num_classes(&self) -> usize {
        self.samples.num_classes()
    }

    #[inline]
    pub fn split(&self) -> Split {
        self.split
    }

    #[inline]
    pub fn standardization(&self) -> Option<Standardization> {
        self.standardization
    }

    #[inline]
    pub fn image_shape(&self) -> Option<(usize, usize)> {
        self.image_shape
    }

    pub fn class_counts(&self) -> Vec<usize> {
        self.samples.class_counts()
    }

    /// Rows `indices` as a batch.
    pub fn batch(&self, indices: &[usize]) -> Batch {
        self.samples.select(indices)
    }

    /// First `n` rows as a dataset with the same metadata.
    pub fn head(&self, n: usize) -> Result<Self> {
        let idx: Vec<usize> = (0..n.min(self.len())).collect();
        Ok(Self {
            samples: self.samples.select(&idx),
            ..self.clone()
        })
    }
}

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Shape of a dense ReLU network: `L` hidden layers followed by a linear
/// output layer with softmax.
///
/// A residual hidden layer computes `relu(W a + b) + a` and therefore needs
/// equal input and output width.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawArchitecture")]
pub struct ArchitectureSpec {
    input_dim: usize,
    hidden_widths: Vec<usize>,
    num_classes: usize,
    residual: Vec<bool>,
}

#[derive(Deserialize)]
struct RawArchitecture {
    input_dim: usize,
    hidden_widths: Vec<usize>,
    num_classes: usize,
    residual: Vec<bool>,
}

impl TryFrom<RawArchitecture> for ArchitectureSpec {
    type Error = Error;

    fn try_from(raw: RawArchitecture) -> Result<Self> {
        Self::new(raw.input_dim, raw.hidden_widths, raw.num_classes, raw.residual)
    }
}

impl ArchitectureSpec {
    pub fn new(
        input_dim: usize,
        hidden_widths: Vec<usize>,
        num_classes: usize,
        residual: Vec<bool>,
    ) -> Result<Self> {
        if input_dim == 0 {
            return Err(Error::InvalidArchitecture("input_dim must be >= 1".into()));
        }
        if hidden_widths.is_empty() {
            return Err(Error::InvalidArchitecture(
                "at least one hidden layer is required".into(),
            ));
        }
        if num_classes < 2 {
            return Err(Error::InvalidArchitecture(format!(
                "num_classes must be >= 2, got {num_classes}"
            )));
        }
        if residual.len() != hidden_widths.len() {
            return Err(Error::InvalidArchitecture(format!(
                "{} residual flags for {} hidden layers",
                residual.len(),
                hidden_widths.len()
            )));
        }
        let mut prev = input_dim;
        for (l, (&w, &res)) in hidden_widths.iter().zip(&residual).enumerate() {
            if w == 0 {
                return Err(Error::InvalidArchitecture(format!(
                    "hidden layer {} has width 0",
                    l + 1
                )));
            }
            if res && w != prev {
                return Err(Error::InvalidArchitecture(format!(
                    "residual layer {} maps width {prev} to {w}",
                    l + 1
                )));
            }
            prev = w;
        }
        Ok(Self {
            input_dim,
            hidden_widths,
            num_classes,
            residual,
        })
    }

    /// `depth` hidden layers of equal `width`, no residuals.
    pub fn uniform(input_dim: usize, width: usize, depth: usize, num_classes: usize) -> Result<Self> {
        Self::new(input_dim, vec![width; depth], num_classes, vec![false; depth])
    }

    /// `depth` equal-width hidden layers where every layer whose input width
    /// already matches carries an identity skip.
    pub fn uniform_residual(
        input_dim: usize,
        width: usize,
        depth: usize,
        num_classes: usize,
    ) -> Result<Self> {
        let residual = (0..depth)
            .map(|l| if l == 0 { input_dim == width } else { true })
            .collect();
        Self::new(input_dim, vec![width; depth], num_classes, residual)
    }

    #[inline]
    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    #[inline]
    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    /// Number of hidden layers `L`.
    #[inline]
    pub fn depth(&self) -> usize {
        self.hidden_widths.len()
    }

    #[inline]
    pub fn hidden_widths(&self) -> &[usize] {
        &self.hidden_widths
    }

    #[inline]
    pub fn residual(&self) -> &[bool] {
        &self.residual
    }

    /// `(fan_in, fan_out)` of parameter layer `k` in `0..=L`; `k == L` is the
    /// output layer.
    pub fn layer_dims(&self, k: usize) -> (usize, usize) {
        let fan_in = if k == 0 {
            self.input_dim
        } else {
            self.hidden_widths[k - 1]
        };
        let fan_out = if k == self.depth() {
            self.num_classes
        } else {
            self.hidden_widths[k]
        };
        (fan_in, fan_out)
    }

    /// Keep only the first `depth` hidden layers; the output layer is
    /// re-attached to the new last hidden layer.
    pub fn truncated(&self, depth: usize) -> Result<Self> {
        if depth == 0 {
            return Err(Error::NoConflictFreeDepth);
        }
        let depth = depth.min(self.depth());
        Self::new(
            self.input_dim,
            self.hidden_widths[..depth].to_vec(),
            self.num_classes,
            self.residual[..depth].to_vec(),
        )
    }
}

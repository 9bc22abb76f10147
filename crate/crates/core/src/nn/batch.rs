use alloc::format;
use alloc::vec::Vec;

use crate::{Error, Matrix, Result};

/// Inputs with one-hot labels. Every label row has exactly one entry equal
/// to 1 and the rest 0.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    inputs: Matrix,
    labels: Matrix,
    classes: Vec<usize>,
}

impl Batch {
    pub fn new(inputs: Matrix, labels: Matrix) -> Result<Self> {
        if inputs.rows() != labels.rows() {
            return Err(Error::Shape {
                context: "label rows".into(),
                expected: inputs.rows(),
                actual: labels.rows(),
            });
        }
        if inputs.rows() == 0 {
            return Err(Error::EmptyDataset);
        }
        let mut classes = Vec::with_capacity(labels.rows());
        for (i, row) in labels.row_iter().enumerate() {
            let ones = row.iter().filter(|&&v| v == 1.0).count();
            let zeros = row.iter().filter(|&&v| v == 0.0).count();
            if ones != 1 || ones + zeros != row.len() {
                return Err(Error::InvalidDataset(format!("label row {i} is not one-hot")));
            }
            classes.push(row.iter().position(|&v| v == 1.0).unwrap_or_default());
        }
        Ok(Self {
            inputs,
            labels,
            classes,
        })
    }

    /// Build from class indices; each must be `< num_classes`.
    pub fn from_classes(inputs: Matrix, classes: Vec<usize>, num_classes: usize) -> Result<Self> {
        if inputs.rows() != classes.len() {
            return Err(Error::Shape {
                context: "label count".into(),
                expected: inputs.rows(),
                actual: classes.len(),
            });
        }
        if inputs.rows() == 0 {
            return Err(Error::EmptyDataset);
        }
        let mut labels = Matrix::zeros(classes.len(), num_classes);
        for (i, &c) in classes.iter().enumerate() {
            if c >= num_classes {
                return Err(Error::InvalidDataset(format!(
                    "class {c} out of range for {num_classes} classes"
                )));
            }
            labels[(i, c)] = 1.0;
        }
        Ok(Self {
            inputs,
            labels,
            classes,
        })
    }

    #[inline]
    pub fn inputs(&self) -> &Matrix {
        &self.inputs
    }

    #[inline]
    pub fn labels(&self) -> &Matrix {
        &self.labels
    }

    /// Class index of every row.
    #[inline]
    pub fn classes(&self) -> &[usize] {
        &self.classes
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.inputs.rows()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn num_classes(&self) -> usize {
        self.labels.cols()
    }

    pub fn into_parts(self) -> (Matrix, Matrix) {
        (self.inputs, self.labels)
    }

    /// Rows `indices` in order.
    pub fn select(&self, indices: &[usize]) -> Self {
        Self {
            inputs: self.inputs.select_rows(indices),
            labels: self.labels.select_rows(indices),
            classes: indices.iter().map(|&i| self.classes[i]).collect(),
        }
    }

    /// Same labels, new inputs of the same row count.
    pub fn with_inputs(&self, inputs: Matrix) -> Result<Self> {
        if inputs.rows() != self.len() {
            return Err(Error::Shape {
                context: "replacement inputs".into(),
                expected: self.len(),
                actual: inputs.rows(),
            });
        }
        Ok(Self {
            inputs,
            labels: self.labels.clone(),
            classes: self.classes.clone(),
        })
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = alloc::vec![0; self.num_classes()];
        for &c in &self.classes {
            counts[c] += 1;
        }
        counts
    }
}

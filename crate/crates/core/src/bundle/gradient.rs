//! Input-gradient series of a scalar-input network.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::nn::{input_gradients, ArchitectureSpec, Batch, ModelParams};
use crate::{Error, Matrix, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradientSeries {
    pub inputs: Vec<f64>,
    /// d loss / d input at every sweep point, against the fixed label.
    pub derivatives: Vec<f64>,
    pub lag1_autocorrelation: f64,
}

/// Lag-1 autocorrelation coefficient; 0 when the series has no variance or
/// fewer than two points.
pub fn lag1_autocorrelation(series: &[f64]) -> f64 {
    if series.len() < 2 {
        return 0.0;
    }
    let mean = series.iter().sum::<f64>() / series.len() as f64;
    let var: f64 = series.iter().map(|x| (x - mean) * (x - mean)).sum();
    if var <= 0.0 || !var.is_finite() {
        return 0.0;
    }
    let cov: f64 = series.windows(2).map(|w| (w[0] - mean) * (w[1] - mean)).sum();
    cov / var
}

/// Backpropagate the loss of `label` to the scalar input at every sweep point.
pub fn gradient_input_correlation(
    params: &ModelParams,
    arch: &ArchitectureSpec,
    sweep: &[f64],
    label: usize,
) -> Result<GradientSeries> {
    if arch.input_dim() != 1 {
        return Err(Error::InvalidArchitecture(alloc::format!(
            "gradient sweep needs a scalar input, got input_dim {}",
            arch.input_dim()
        )));
    }
    if label >= arch.num_classes() {
        return Err(Error::InvalidConfig(alloc::format!(
            "label {label} out of range for {} classes",
            arch.num_classes()
        )));
    }
    if sweep.is_empty() {
        return Ok(GradientSeries {
            inputs: Vec::new(),
            derivatives: Vec::new(),
            lag1_autocorrelation: 0.0,
        });
    }
    let inputs = Matrix::from_vec(sweep.len(), 1, sweep.to_vec())?;
    let batch = Batch::from_classes(inputs, alloc::vec![label; sweep.len()], arch.num_classes())?;
    let derivatives = input_gradients(params, arch, &batch)?.into_vec();
    Ok(GradientSeries {
        inputs: sweep.to_vec(),
        lag1_autocorrelation: lag1_autocorrelation(&derivatives),
        derivatives,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn sweep(n: usize) -> Vec<f64> {
        (0..n).map(|i| i as f64 / (n - 1) as f64).collect()
    }

    #[test]
    fn constant_network_reports_zero() {
        let arch = ArchitectureSpec::uniform(1, 2, 2, 2).unwrap();
        let s = gradient_input_correlation(&ModelParams::zeros(&arch), &arch, &sweep(50), 0).unwrap();
        assert!(s.derivatives.iter().all(|&d| d == 0.0));
        assert_eq!(s.lag1_autocorrelation, 0.0);
    }

    #[test]
    fn single_hidden_layer_gives_smooth_series() {
        let arch = ArchitectureSpec::uniform(1, 1, 1, 2).unwrap();
        let mut p = ModelParams::zeros(&arch);
        p.weights[0] = Matrix::from_vec(1, 1, vec![1.0]).unwrap();
        p.weights[1] = Matrix::from_vec(2, 1, vec![2.0, -2.0]).unwrap();
        let s = gradient_input_correlation(&p, &arch, &sweep(100), 0).unwrap();
        assert!(s.lag1_autocorrelation >= 0.9, "{}", s.lag1_autocorrelation);
    }

    #[test]
    fn alternating_series_is_anticorrelated() {
        let r = lag1_autocorrelation(&[1.0, -1.0, 1.0, -1.0, 1.0, -1.0]);
        assert!(r < -0.5);
    }

    #[test]
    fn rejects_vector_inputs() {
        let arch = ArchitectureSpec::uniform(3, 2, 1, 2).unwrap();
        assert!(gradient_input_correlation(&ModelParams::zeros(&arch), &arch, &[0.0], 0).is_err());
    }
}

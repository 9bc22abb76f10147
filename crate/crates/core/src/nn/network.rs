//! Forward propagation with full tracing, cross-entropy, and backpropagation.

use alloc::vec;
use alloc::vec::Vec;

use super::{ArchitectureSpec, Batch, Gradients, ModelParams};
use crate::math;
use crate::tensor::{matmul, matmul_a_bt, matmul_at_b};
use crate::{Error, Matrix, Result};

/// Probabilities are clamped to this floor before taking the log.
pub const PROB_FLOOR: f64 = 1e-15;

/// Every intermediate of one forward pass over a batch.
///
/// `activations[l]` holds the output of hidden layer `l + 1` (post-ReLU, and
/// post-skip-add for residual layers), one row per sample.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivationTrace {
    pub pre_activations: Vec<Matrix>,
    pub activations: Vec<Matrix>,
    pub logits: Matrix,
    pub softmax_out: Matrix,
}

impl ActivationTrace {
    /// Output of the last hidden layer.
    pub fn last_hidden(&self) -> &Matrix {
        self.activations.last().expect("at least one hidden layer")
    }
}

fn affine(input: &Matrix, weights: &Matrix, bias: &[f64]) -> Matrix {
    let mut z = matmul_a_bt(input, weights);
    for i in 0..z.rows() {
        for (v, b) in z.row_mut(i).iter_mut().zip(bias) {
            *v += b;
        }
    }
    z
}

/// Row-wise numerically stable softmax.
pub fn softmax(logits: &Matrix) -> Matrix {
    let mut out = logits.clone();
    for i in 0..out.rows() {
        let row = out.row_mut(i);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for v in row.iter_mut() {
            *v = math::exp(*v - max);
            sum += *v;
        }
        for v in row.iter_mut() {
            *v /= sum;
        }
    }
    out
}

pub fn forward(params: &ModelParams, arch: &ArchitectureSpec, inputs: &Matrix) -> Result<ActivationTrace> {
    if inputs.cols() != arch.input_dim() {
        return Err(Error::Shape {
            context: "input to hidden layer 1".into(),
            expected: arch.input_dim(),
            actual: inputs.cols(),
        });
    }
    params.check_shapes(arch)?;

    let depth = arch.depth();
    let mut pre_activations = Vec::with_capacity(depth);
    let mut activations: Vec<Matrix> = Vec::with_capacity(depth);
    for l in 0..depth {
        let input = if l == 0 { inputs } else { &activations[l - 1] };
        let z = affine(input, &params.weights[l], &params.biases[l]);
        let mut a = z.clone();
        a.map_inplace(|v| if v > 0.0 { v } else { 0.0 });
        if arch.residual()[l] {
            for (o, x) in a.as_mut_slice().iter_mut().zip(input.as_slice()) {
                *o += x;
            }
        }
        pre_activations.push(z);
        activations.push(a);
    }
    let logits = affine(
        activations.last().expect("depth >= 1"),
        &params.weights[depth],
        &params.biases[depth],
    );
    let softmax_out = softmax(&logits);
    Ok(ActivationTrace {
        pre_activations,
        activations,
        logits,
        softmax_out,
    })
}

/// Mean over rows of `-ln(h[class])`, with `h` clamped below at
/// [`PROB_FLOOR`].
pub fn cross_entropy(softmax_out: &Matrix, labels: &Matrix) -> f64 {
    debug_assert_eq!(softmax_out.rows(), labels.rows());
    let n = softmax_out.rows();
    if n == 0 {
        return 0.0;
    }
    let total: f64 = softmax_out
        .row_iter()
        .zip(labels.row_iter())
        .map(|(h, y)| {
            let p: f64 = h.iter().zip(y).map(|(h, y)| h * y).sum();
            -math::ln(p.max(PROB_FLOOR))
        })
        .sum();
    total / n as f64
}

fn column_sums(m: &Matrix) -> Vec<f64> {
    let mut sums = vec![0.0; m.cols()];
    for row in m.row_iter() {
        for (s, v) in sums.iter_mut().zip(row) {
            *s += v;
        }
    }
    sums
}

/// Gradients of the mean cross-entropy, and optionally the gradient with
/// respect to the inputs.
fn backprop(
    trace: &ActivationTrace,
    params: &ModelParams,
    arch: &ArchitectureSpec,
    batch: &Batch,
    want_input_grad: bool,
) -> Result<(Gradients, Option<Matrix>)> {
    let n = batch.len();
    let depth = arch.depth();
    if trace.softmax_out.rows() != n || trace.activations.len() != depth {
        return Err(Error::Shape {
            context: "trace does not match batch".into(),
            expected: n,
            actual: trace.softmax_out.rows(),
        });
    }

    let mut weights = vec![Matrix::zeros(0, 0); depth + 1];
    let mut biases = vec![Vec::new(); depth + 1];

    // d(mean CE)/d(logits) = (h - y) / |B|
    let scale = 1.0 / n as f64;
    let mut delta = trace.softmax_out.clone();
    for (d, y) in delta.as_mut_slice().iter_mut().zip(batch.labels().as_slice()) {
        *d = (*d - y) * scale;
    }

    weights[depth] = matmul_at_b(&delta, &trace.activations[depth - 1]);
    biases[depth] = column_sums(&delta);
    let mut upstream = matmul(&delta, &params.weights[depth]);

    for l in (0..depth).rev() {
        let input = if l == 0 {
            batch.inputs()
        } else {
            &trace.activations[l - 1]
        };
        let mut dz = upstream.clone();
        for (d, z) in dz
            .as_mut_slice()
            .iter_mut()
            .zip(trace.pre_activations[l].as_slice())
        {
            if *z <= 0.0 {
                *d = 0.0;
            }
        }
        weights[l] = matmul_at_b(&dz, input);
        biases[l] = column_sums(&dz);
        if l > 0 || want_input_grad {
            let mut next = matmul(&dz, &params.weights[l]);
            if arch.residual()[l] {
                for (o, u) in next.as_mut_slice().iter_mut().zip(upstream.as_slice()) {
                    *o += u;
                }
            }
            upstream = next;
        }
    }

    let input_grad = want_input_grad.then_some(upstream);
    Ok((Gradients { weights, biases }, input_grad))
}

/// Analytic gradients of the batch-mean cross-entropy with respect to every
/// weight and bias.
pub fn backward(
    trace: &ActivationTrace,
    params: &ModelParams,
    arch: &ArchitectureSpec,
    batch: &Batch,
) -> Result<Gradients> {
    backprop(trace, params, arch, batch, false).map(|(g, _)| g)
}

/// Per-sample derivative of each sample's own loss with respect to its
/// inputs (`|B| x input_dim`).
pub fn input_gradients(
    params: &ModelParams,
    arch: &ArchitectureSpec,
    batch: &Batch,
) -> Result<Matrix> {
    let trace = forward(params, arch, batch.inputs())?;
    let (_, grad) = backprop(&trace, params, arch, batch, true)?;
    let mut grad = grad.expect("requested");
    // undo the 1/|B| of the batch mean
    let n = batch.len() as f64;
    grad.map_inplace(|v| v * n);
    Ok(grad)
}

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = i;
        }
    }
    best
}

const EVAL_CHUNK: usize = 4096;

/// Fraction of rows whose softmax argmax equals the label.
pub fn accuracy(params: &ModelParams, arch: &ArchitectureSpec, data: &Batch) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut correct = 0usize;
    let indices: Vec<usize> = (0..data.len()).collect();
    for chunk in indices.chunks(EVAL_CHUNK) {
        let inputs = data.inputs().select_rows(chunk);
        let trace = forward(params, arch, &inputs)?;
        correct += trace
            .softmax_out
            .row_iter()
            .zip(chunk)
            .filter(|(h, &i)| argmax(h) == data.classes()[i])
            .count();
    }
    Ok(correct as f64 / data.len() as f64)
}

/// Mean softmax output over all rows.
pub fn mean_output(params: &ModelParams, arch: &ArchitectureSpec, inputs: &Matrix) -> Result<Vec<f64>> {
    let trace = forward(params, arch, inputs)?;
    let mut sums = column_sums(&trace.softmax_out);
    let n = inputs.rows().max(1) as f64;
    for s in &mut sums {
        *s /= n;
    }
    Ok(sums)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::he_init;

    fn arch(input: usize, widths: &[usize], classes: usize) -> ArchitectureSpec {
        ArchitectureSpec::new(input, widths.to_vec(), classes, vec![false; widths.len()]).unwrap()
    }

    #[test]
    fn zero_params_give_zero_activations_and_uniform_softmax() {
        let a = arch(3, &[4, 5], 4);
        let p = ModelParams::zeros(&a);
        let x = Matrix::from_rows(&[&[1.0, -2.0, 3.0], &[0.5, 0.5, 0.5]]).unwrap();
        let t = forward(&p, &a, &x).unwrap();
        for act in &t.activations {
            assert!(act.as_slice().iter().all(|&v| v == 0.0));
        }
        for row in t.softmax_out.row_iter() {
            assert!(row.iter().all(|&v| v == 0.25));
        }
    }

    #[test]
    fn identity_layer_passes_non_negative_input() {
        let a = arch(3, &[3], 2);
        let mut p = ModelParams::zeros(&a);
        p.weights[0] = Matrix::identity(3);
        let x = Matrix::from_rows(&[&[0.0, 1.5, 2.25]]).unwrap();
        let t = forward(&p, &a, &x).unwrap();
        assert_eq!(t.activations[0].row(0), x.row(0));
    }

    #[test]
    fn hand_computed_two_layer_forward() {
        // input 0.3; layer 1: W=[[1],[-2]], b=[0.1, 0.2]
        //   z1 = [0.4, -0.4] -> a2 = [0.4, 0]
        // layer 2: W=[[0.5, 1],[-1, 2]], b=[0, 0.5]
        //   z2 = [0.2, 0.1] -> a3 = [0.2, 0.1]
        // output: W=[[1, 0],[0, 1]], b=[0, 0] -> logits [0.2, 0.1]
        let a = arch(1, &[2, 2], 2);
        let mut p = ModelParams::zeros(&a);
        p.weights[0] = Matrix::from_rows(&[&[1.0], &[-2.0]]).unwrap();
        p.biases[0] = vec![0.1, 0.2];
        p.weights[1] = Matrix::from_rows(&[&[0.5, 1.0], &[-1.0, 2.0]]).unwrap();
        p.biases[1] = vec![0.0, 0.5];
        p.weights[2] = Matrix::identity(2);
        let x = Matrix::from_rows(&[&[0.3]]).unwrap();
        let t = forward(&p, &a, &x).unwrap();
        let close = |a: f64, b: f64| (a - b).abs() < 1e-12;
        assert!(close(t.activations[0][(0, 0)], 0.4));
        assert_eq!(t.activations[0][(0, 1)], 0.0);
        assert!(close(t.activations[1][(0, 0)], 0.2));
        assert!(close(t.activations[1][(0, 1)], 0.1));
        let e0 = libm::exp(0.2);
        let e1 = libm::exp(0.1);
        assert!(close(t.softmax_out[(0, 0)], e0 / (e0 + e1)));
    }

    #[test]
    fn forward_rejects_wrong_input_width() {
        let a = arch(3, &[2], 2);
        let p = ModelParams::zeros(&a);
        let err = forward(&p, &a, &Matrix::zeros(1, 4)).unwrap_err();
        assert!(matches!(err, Error::Shape { expected: 3, actual: 4, .. }));
    }

    #[test]
    fn cross_entropy_values() {
        let y = Matrix::from_rows(&[&[0.0, 1.0]]).unwrap();
        let h = Matrix::from_rows(&[&[0.7, 0.3]]).unwrap();
        assert!((cross_entropy(&h, &y) - 1.203972804325936).abs() < 1e-12);
        let exact = Matrix::from_rows(&[&[0.0, 1.0]]).unwrap();
        assert!(cross_entropy(&exact, &y) <= 1e-14);
        let mut yu = Matrix::zeros(1, 10);
        yu[(0, 3)] = 1.0;
        let hu = Matrix::from_vec(1, 10, vec![0.1; 10]).unwrap();
        assert!((cross_entropy(&hu, &yu) - core::f64::consts::LN_10).abs() < 1e-12);
        // clamp keeps a zero probability finite
        let zero = Matrix::from_rows(&[&[1.0, 0.0]]).unwrap();
        assert!((cross_entropy(&zero, &y) - (-libm::log(PROB_FLOOR))).abs() < 1e-9);
    }

    #[test]
    fn perfect_prediction_gives_zero_output_gradient() {
        let a = arch(2, &[3], 2);
        let p = he_init(&a, 0);
        let x = Matrix::from_rows(&[&[1.0, 2.0], &[-1.0, 0.5]]).unwrap();
        let batch = Batch::from_classes(x.clone(), vec![0, 1], 2).unwrap();
        let mut t = forward(&p, &a, &x).unwrap();
        t.softmax_out = batch.labels().clone();
        let g = backward(&t, &p, &a, &batch).unwrap();
        assert!(g.weights[1].as_slice().iter().all(|&v| v == 0.0));
        assert!(g.biases[1].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn argmax_breaks_ties_low() {
        assert_eq!(argmax(&[0.5, 0.5]), 0);
        assert_eq!(argmax(&[0.1, 0.7, 0.7]), 1);
    }

    #[test]
    fn zero_params_accuracy_on_balanced_set_is_half() {
        let a = arch(1, &[2], 2);
        let p = ModelParams::zeros(&a);
        let x = Matrix::from_vec(4, 1, vec![0.1, 0.2, 0.7, 0.8]).unwrap();
        let b = Batch::from_classes(x, vec![0, 0, 1, 1], 2).unwrap();
        assert_eq!(accuracy(&p, &a, &b).unwrap(), 0.5);
    }
}

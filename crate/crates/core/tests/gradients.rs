use bundlescope_core::nn::{
    backward, cross_entropy, forward, he_init, input_gradients, ArchitectureSpec, Batch, ModelParams,
};
use bundlescope_core::Matrix;
use proptest::prelude::*;

const STEP: f64 = 1e-6;

fn loss(params: &ModelParams, arch: &ArchitectureSpec, batch: &Batch) -> f64 {
    let t = forward(params, arch, batch.inputs()).unwrap();
    cross_entropy(&t.softmax_out, batch.labels())
}

// Round-off in a central difference is ~1e-10 absolute, so tiny gradients
// are compared against a floor instead of their own magnitude.
fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-4)
}

/// Whether every pre-activation is far enough from the ReLU kink that a
/// finite-difference step cannot cross it.
fn away_from_kinks(params: &ModelParams, arch: &ArchitectureSpec, inputs: &Matrix) -> bool {
    forward(params, arch, inputs)
        .unwrap()
        .pre_activations
        .iter()
        .all(|z| z.as_slice().iter().all(|v| v.abs() > 1e-4))
}

fn arch_strategy() -> impl Strategy<Value = ArchitectureSpec> {
    (1usize..=6, 1usize..=4, 2usize..=5, any::<bool>()).prop_flat_map(|(input, depth, classes, residual)| {
        proptest::collection::vec(1usize..=8, depth).prop_map(move |mut widths| {
            let mut flags = vec![false; widths.len()];
            if residual {
                // make every other layer width-preserving and residual
                let mut prev = input;
                for (l, w) in widths.iter_mut().enumerate() {
                    if l % 2 == 1 || l == 0 {
                        *w = prev;
                        flags[l] = true;
                    }
                    prev = *w;
                }
            }
            ArchitectureSpec::new(input, widths, classes, flags).unwrap()
        })
    })
}

fn batch_for(arch: &ArchitectureSpec, n: usize, values: &[f64], classes: &[usize]) -> Batch {
    let d = arch.input_dim();
    let inputs = Matrix::from_vec(n, d, values.iter().cycle().take(n * d).copied().collect()).unwrap();
    let cls = classes.iter().cycle().take(n).map(|c| c % arch.num_classes()).collect();
    Batch::from_classes(inputs, cls, arch.num_classes()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 40, ..ProptestConfig::default() })]

    #[test]
    fn analytic_gradients_match_central_differences(
        arch in arch_strategy(),
        seed in any::<u64>(),
        n in 1usize..=16,
        values in proptest::collection::vec(-2.0f64..2.0, 16 * 6),
        classes in proptest::collection::vec(0usize..5, 16),
    ) {
        let params = he_init(&arch, seed);
        let batch = batch_for(&arch, n, &values, &classes);
        prop_assume!(away_from_kinks(&params, &arch, batch.inputs()));

        let trace = forward(&params, &arch, batch.inputs()).unwrap();
        let grads = backward(&trace, &params, &arch, &batch).unwrap();
        for k in 0..params.num_layers() {
            for i in 0..params.weights[k].as_slice().len() {
                let mut plus = params.clone();
                plus.weights[k].as_mut_slice()[i] += STEP;
                let mut minus = params.clone();
                minus.weights[k].as_mut_slice()[i] -= STEP;
                let fd = (loss(&plus, &arch, &batch) - loss(&minus, &arch, &batch)) / (2.0 * STEP);
                let an = grads.weights[k].as_slice()[i];
                prop_assert!(rel_err(an, fd) < 1e-5, "weights[{k}][{i}]: {an} vs {fd}");
            }
            for i in 0..params.biases[k].len() {
                let mut plus = params.clone();
                plus.biases[k][i] += STEP;
                let mut minus = params.clone();
                minus.biases[k][i] -= STEP;
                let fd = (loss(&plus, &arch, &batch) - loss(&minus, &arch, &batch)) / (2.0 * STEP);
                let an = grads.biases[k][i];
                prop_assert!(rel_err(an, fd) < 1e-5, "biases[{k}][{i}]: {an} vs {fd}");
            }
        }
    }

    #[test]
    fn input_gradients_match_central_differences(
        arch in arch_strategy(),
        seed in any::<u64>(),
        values in proptest::collection::vec(-2.0f64..2.0, 6),
        class in 0usize..5,
    ) {
        let params = he_init(&arch, seed);
        let batch = batch_for(&arch, 1, &values, &[class]);
        prop_assume!(away_from_kinks(&params, &arch, batch.inputs()));
        let g = input_gradients(&params, &arch, &batch).unwrap();
        for j in 0..arch.input_dim() {
            let mut plus = batch.inputs().clone();
            plus.as_mut_slice()[j] += STEP;
            let mut minus = batch.inputs().clone();
            minus.as_mut_slice()[j] -= STEP;
            let fd = (loss(&params, &arch, &batch.with_inputs(plus).unwrap())
                - loss(&params, &arch, &batch.with_inputs(minus).unwrap()))
                / (2.0 * STEP);
            prop_assert!(rel_err(g.as_slice()[j], fd) < 1e-5);
        }
    }

    #[test]
    fn output_gradient_is_mean_of_per_sample_outer_products(
        arch in arch_strategy(),
        seed in any::<u64>(),
        n in 1usize..=16,
        values in proptest::collection::vec(-2.0f64..2.0, 16 * 6),
        classes in proptest::collection::vec(0usize..5, 16),
    ) {
        let params = he_init(&arch, seed);
        let batch = batch_for(&arch, n, &values, &classes);
        let trace = forward(&params, &arch, batch.inputs()).unwrap();
        let grads = backward(&trace, &params, &arch, &batch).unwrap();
        let a = trace.last_hidden();
        let nc = arch.num_classes();
        let mut expected = vec![0.0; nc * a.cols()];
        for i in 0..n {
            for r in 0..nc {
                let e = trace.softmax_out[(i, r)] - batch.labels()[(i, r)];
                for c in 0..a.cols() {
                    expected[r * a.cols() + c] += e * a[(i, c)] / n as f64;
                }
            }
        }
        let got = grads.weights[arch.depth()].as_slice();
        for (g, e) in got.iter().zip(&expected) {
            prop_assert!((g - e).abs() <= 1e-12 * (1.0 + e.abs()));
        }
    }

    #[test]
    fn softmax_rows_are_distributions_and_relu_is_non_negative(
        arch in arch_strategy(),
        seed in any::<u64>(),
        values in proptest::collection::vec(-50.0f64..50.0, 16 * 6),
    ) {
        let params = he_init(&arch, seed);
        let batch = batch_for(&arch, 16, &values, &[0]);
        let t = forward(&params, &arch, batch.inputs()).unwrap();
        for row in t.softmax_out.row_iter() {
            prop_assert!((row.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
            prop_assert!(row.iter().all(|&p| (0.0..=1.0).contains(&p)));
        }
        for (a, &res) in t.activations.iter().zip(arch.residual()) {
            // a skip-add can carry negative inputs through
            if !res {
                prop_assert!(a.as_slice().iter().all(|&v| v >= 0.0));
            }
        }
    }
}

/// All hidden layers after the first see identical rows when the first
/// layer's weights are zero.
fn collapsed_net(nc: usize) -> (ArchitectureSpec, ModelParams) {
    let arch = ArchitectureSpec::uniform(3, 5, 2, nc).unwrap();
    let mut p = he_init(&arch, 17);
    p.weights[0] = Matrix::zeros(5, 3);
    p.biases[0] = vec![0.25, 0.5, 0.0, 1.0, 0.75];
    p.biases[1] = vec![0.1, 0.2, 0.3, 0.4, 0.5];
    (arch, p)
}

#[test]
fn collapsed_batch_gradient_is_mean_label_gradient() {
    let nc = 4;
    let (arch, params) = collapsed_net(nc);
    let n = 12;
    let inputs = Matrix::from_vec(n, 3, (0..n * 3).map(|i| (i as f64 * 0.37).sin()).collect()).unwrap();
    let classes: Vec<usize> = (0..n).map(|i| i % nc).collect();
    let batch = Batch::from_classes(inputs, classes, nc).unwrap();
    let trace = forward(&params, &arch, batch.inputs()).unwrap();
    let grads = backward(&trace, &params, &arch, &batch).unwrap();

    let a = trace.last_hidden().row(0).to_vec();
    assert!(trace.last_hidden().row_iter().all(|r| r == a.as_slice()));
    let h = trace.softmax_out.row(0).to_vec();
    let g = &grads.weights[arch.depth()];
    for r in 0..nc {
        for c in 0..a.len() {
            let expected = (h[r] - 1.0 / nc as f64) * a[c];
            assert!((g[(r, c)] - expected).abs() <= 1e-12, "({r},{c})");
        }
    }
}

/// Collapsed net on which every intermediate is a short dyadic rational:
/// equal output rows give a uniform softmax of exactly 1/4.
fn dyadic_collapsed_net() -> (ArchitectureSpec, ModelParams) {
    let arch = ArchitectureSpec::uniform(3, 4, 2, 4).unwrap();
    let mut p = ModelParams::zeros(&arch);
    p.biases[0] = vec![0.25, 0.5, 0.0, 1.0];
    p.weights[1] = Matrix::from_vec(4, 4, (0..16).map(|i| (i % 5) as f64 * 0.125 - 0.25).collect()).unwrap();
    p.biases[1] = vec![0.5, 0.25, 0.125, 0.0];
    let row = [0.5, -0.25, 0.75, 1.0];
    p.weights[2] = Matrix::from_vec(4, 4, row.repeat(4)).unwrap();
    (arch, p)
}

fn gradient_with_labels(arch: &ArchitectureSpec, params: &ModelParams, inputs: &Matrix, classes: Vec<usize>) -> ModelParams {
    let b = Batch::from_classes(inputs.clone(), classes, arch.num_classes()).unwrap();
    let t = forward(params, arch, b.inputs()).unwrap();
    backward(&t, params, arch, &b).unwrap()
}

#[test]
fn collapsed_batch_gradient_ignores_label_order() {
    let (arch, params) = dyadic_collapsed_net();
    let n = 8;
    let inputs = Matrix::from_vec(n, 3, (0..n * 3).map(|i| i as f64 * 0.5).collect()).unwrap();
    let classes: Vec<usize> = (0..n).map(|i| i % 4).collect();
    let reference = gradient_with_labels(&arch, &params, &inputs, classes.clone());
    let t = forward(&params, &arch, &inputs).unwrap();
    assert!(t.softmax_out.as_slice().iter().all(|&h| h == 0.25));
    let mut permuted = classes;
    for shift in 1..n {
        permuted.rotate_left(1);
        let mut swapped = permuted.clone();
        swapped.swap(0, shift);
        assert_eq!(gradient_with_labels(&arch, &params, &inputs, permuted.clone()), reference);
        assert_eq!(gradient_with_labels(&arch, &params, &inputs, swapped), reference);
    }
}

#[test]
fn collapsed_batch_gradient_is_label_order_insensitive_up_to_rounding() {
    let nc = 4;
    let (arch, params) = collapsed_net(nc);
    let n = 8;
    let inputs = Matrix::from_vec(n, 3, vec![0.5; n * 3]).unwrap();
    let classes: Vec<usize> = (0..n).map(|i| i % nc).collect();
    let reference = gradient_with_labels(&arch, &params, &inputs, classes.clone());
    let mut permuted = classes;
    for _ in 1..n {
        permuted.rotate_left(3);
        permuted.swap(1, 6);
        let g = gradient_with_labels(&arch, &params, &inputs, permuted.clone());
        for (x, y) in g.weights.iter().flat_map(|w| w.as_slice()).zip(reference.weights.iter().flat_map(|w| w.as_slice())) {
            assert!((x - y).abs() <= 1e-15);
        }
    }
}

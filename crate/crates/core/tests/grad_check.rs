//! Finite-difference oracle for the autodiff engine: every op's gradient is
//! checked against central differences on randomized graphs.

use codesign_core::gradcore::{MlpModel, Tape, Tensor};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const H: f64 = 1e-5;
const TOL: f64 = 1e-4;

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-3)
}

/// Evaluate `build` as a scalar function of flat inputs, and compare tape
/// gradients with central finite differences.
fn check_grads<F>(inputs: &[Tensor], build: F) -> f64
where
    F: Fn(&mut Tape, &[codesign_core::gradcore::NodeId]) -> codesign_core::gradcore::NodeId,
{
    let eval = |xs: &[Tensor]| -> f64 {
        let mut tape = Tape::new();
        let ids: Vec<_> = xs.iter().map(|t| tape.input(t.clone())).collect();
        let loss = build(&mut tape, &ids);
        tape.value(loss).data[0]
    };

    let mut tape = Tape::new();
    let ids: Vec<_> = inputs.iter().map(|t| tape.input(t.clone())).collect();
    let loss = build(&mut tape, &ids);
    tape.backward(loss).unwrap();

    let mut worst = 0.0f64;
    for (i, t) in inputs.iter().enumerate() {
        let analytic = tape.grad(ids[i]);
        for j in 0..t.numel() {
            let mut plus = inputs.to_vec();
            plus[i].data[j] += H;
            let mut minus = inputs.to_vec();
            minus[i].data[j] -= H;
            let fd = (eval(&plus) - eval(&minus)) / (2.0 * H);
            worst = worst.max(rel_err(analytic[j], fd));
        }
    }
    worst
}

fn rand_tensor<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> Tensor {
    let data = (0..rows * cols).map(|_| rng.random_range(-1.0..1.0)).collect();
    Tensor::new(rows, cols, data)
}

#[test]
fn two_layer_net_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let x = rand_tensor(&mut rng, 3, 4);
    let w1 = rand_tensor(&mut rng, 4, 5);
    let b1 = rand_tensor(&mut rng, 1, 5);
    let w2 = rand_tensor(&mut rng, 5, 2);
    let target = rand_tensor(&mut rng, 3, 2);
    let worst = check_grads(&[x, w1, b1, w2], |tape, ids| {
        let h = tape.matmul(ids[0], ids[1]).unwrap();
        let h = tape.add_bias(h, ids[2]).unwrap();
        let h = tape.relu(h);
        let out = tape.matmul(h, ids[3]).unwrap();
        tape.l1_loss(out, target.clone()).unwrap()
    });
    assert!(worst < TOL, "max relative error {worst}");
}

#[test]
fn cross_entropy_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let logits = rand_tensor(&mut rng, 4, 3);
    let weights = [0.05, 0.95, 0.4];
    let labels = [1usize, 0, 2, 1];
    let worst = check_grads(&[logits], |tape, ids| {
        tape.weighted_cross_entropy(ids[0], &labels, &weights).unwrap()
    });
    assert!(worst < TOL, "max relative error {worst}");
}

#[test]
fn softmax_and_concat_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let a = rand_tensor(&mut rng, 2, 3);
    let b = rand_tensor(&mut rng, 2, 2);
    let target = rand_tensor(&mut rng, 2, 5);
    let worst = check_grads(&[a, b], |tape, ids| {
        let sa = tape.softmax(ids[0]);
        let c = tape.concat(sa, ids[1]).unwrap();
        tape.l1_loss(c, target.clone()).unwrap()
    });
    assert!(worst < TOL, "max relative error {worst}");
}

/// Acceptance-grade sweep: 100 randomized graphs exercising every op.
#[test]
fn hundred_random_graphs_match_finite_differences() {
    let mut failures = Vec::new();
    for seed in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = rng.random_range(1..4usize);
        let k = rng.random_range(1..5usize);
        let hdim = rng.random_range(2..6usize);
        let n = rng.random_range(2..4usize);
        let use_softmax = rng.random_bool(0.5);
        let use_concat = rng.random_bool(0.5);
        let use_ce = rng.random_bool(0.5);

        let x = rand_tensor(&mut rng, m, k);
        let w1 = rand_tensor(&mut rng, k, hdim);
        let b1 = rand_tensor(&mut rng, 1, hdim);
        let w2 = rand_tensor(&mut rng, hdim, n);
        let b2 = rand_tensor(&mut rng, 1, n);
        let side = rand_tensor(&mut rng, m, 2);
        let target_cols = n + if use_concat { 2 } else { 0 };
        let target = rand_tensor(&mut rng, m, target_cols);
        let labels: Vec<usize> = (0..m).map(|_| rng.random_range(0..n)).collect();
        let weights: Vec<f64> = (0..n).map(|_| rng.random_range(0.1..1.0)).collect();

        let worst = check_grads(&[x, w1, b1, w2, b2, side], |tape, ids| {
            let h = tape.matmul(ids[0], ids[1]).unwrap();
            let h = tape.add_bias(h, ids[2]).unwrap();
            let h = tape.relu(h);
            let mut out = tape.matmul(h, ids[3]).unwrap();
            out = tape.add_bias(out, ids[4]).unwrap();
            if use_ce {
                return tape.weighted_cross_entropy(out, &labels, &weights).unwrap();
            }
            if use_softmax {
                out = tape.softmax(out);
            }
            if use_concat {
                out = tape.concat(out, ids[5]).unwrap();
            }
            tape.l1_loss(out, target.clone()).unwrap()
        });
        if worst >= TOL {
            failures.push((seed, worst));
        }
    }
    assert!(failures.is_empty(), "failed seeds: {failures:?}");
}

#[test]
fn mlp_model_gradients_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let model = MlpModel::new(&[4, 6, 1], &mut rng);
    let input = rand_tensor(&mut rng, 2, 4);
    let target = rand_tensor(&mut rng, 2, 1);

    let mut tape = Tape::new();
    let x = tape.input(input.clone());
    let fwd = model.forward_on(&mut tape, x).unwrap();
    let loss = tape.l1_loss(fwd.output, target.clone()).unwrap();
    tape.backward(loss).unwrap();
    let grads = model.grads_from(&tape, &fwd);

    // finite differences through the model parameters
    let eval = |m: &MlpModel| -> f64 {
        let mut t = Tape::new();
        let x = t.input(input.clone());
        let f = m.forward_on(&mut t, x).unwrap();
        let l = t.l1_loss(f.output, target.clone()).unwrap();
        t.value(l).data[0]
    };
    let mut worst = 0.0f64;
    for layer in 0..model.weights.len() {
        for j in 0..model.weights[layer].numel() {
            let mut plus = model.clone();
            plus.weights[layer].data[j] += H;
            let mut minus = model.clone();
            minus.weights[layer].data[j] -= H;
            let fd = (eval(&plus) - eval(&minus)) / (2.0 * H);
            worst = worst.max(rel_err(grads[layer * 2][j], fd));
        }
    }
    assert!(worst < TOL, "max relative error {worst}");
}

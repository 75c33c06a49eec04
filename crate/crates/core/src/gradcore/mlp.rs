use rand::Rng;
use serde::{Deserialize, Serialize};

use super::tape::{NodeId, Tape, Tensor};
use super::GradError;

/// Fully connected ReLU network. Hidden layers use ReLU; the output layer
/// is linear (callers add softmax where needed).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    /// `[input, hidden..., output]`
    pub widths: Vec<usize>,
    /// Per layer, `[in, out]` row-major.
    pub weights: Vec<Tensor>,
    pub biases: Vec<Tensor>,
}

/// Tape handles for one forward build: parameter leaves plus the output.
pub struct MlpForward {
    pub output: NodeId,
    /// (weight leaf, bias leaf) per layer.
    pub params: Vec<(NodeId, NodeId)>,
}

impl MlpModel {
    /// He-uniform init for the ReLU layers, seeded by the caller's rng.
    pub fn new<R: Rng>(widths: &[usize], rng: &mut R) -> Self {
        assert!(widths.len() >= 2, "need at least input and output widths");
        let mut weights = Vec::new();
        let mut biases = Vec::new();
        for win in widths.windows(2) {
            let (fan_in, fan_out) = (win[0], win[1]);
            let limit = (6.0 / fan_in as f64).sqrt();
            let data = (0..fan_in * fan_out)
                .map(|_| rng.random_range(-limit..limit))
                .collect();
            weights.push(Tensor::new(fan_in, fan_out, data));
            biases.push(Tensor::zeros(1, fan_out));
        }
        MlpModel { widths: widths.to_vec(), weights, biases }
    }

    pub fn input_width(&self) -> usize {
        self.widths[0]
    }

    pub fn output_width(&self) -> usize {
        *self.widths.last().unwrap()
    }

    pub fn param_count(&self) -> usize {
        self.widths.windows(2).map(|w| (w[0] + 1) * w[1]).sum()
    }

    /// Record the network on a tape starting from `input`.
    pub fn forward_on(&self, tape: &mut Tape, input: NodeId) -> Result<MlpForward, GradError> {
        let mut params = Vec::new();
        let mut x = input;
        let layers = self.weights.len();
        for (i, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            let w_id = tape.input(w.clone());
            let b_id = tape.input(b.clone());
            x = tape.matmul(x, w_id)?;
            x = tape.add_bias(x, b_id)?;
            if i + 1 < layers {
                x = tape.relu(x);
            }
            params.push((w_id, b_id));
        }
        Ok(MlpForward { output: x, params })
    }

    /// Tape-free inference for a single row.
    pub fn forward(&self, input: &[f64]) -> Vec<f64> {
        assert_eq!(input.len(), self.input_width(), "input width mismatch");
        let layers = self.weights.len();
        let mut x = input.to_vec();
        for (i, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            let mut y = b.data.clone();
            for (j, &xv) in x.iter().enumerate() {
                if xv == 0.0 {
                    continue;
                }
                let row = &w.data[j * w.cols..(j + 1) * w.cols];
                for (o, &wv) in y.iter_mut().zip(row) {
                    *o += xv * wv;
                }
            }
            if i + 1 < layers {
                for v in &mut y {
                    if *v < 0.0 {
                        *v = 0.0;
                    }
                }
            }
            x = y;
        }
        x
    }

    /// Parameters in a fixed order (w0, b0, w1, b1, ...), for optimizers.
    pub fn params_mut(&mut self) -> Vec<&mut Tensor> {
        let mut out = Vec::with_capacity(self.weights.len() * 2);
        for (w, b) in self.weights.iter_mut().zip(self.biases.iter_mut()) {
            out.push(w);
            out.push(b);
        }
        out
    }

    /// Gradients read off a tape in the same order as [`Self::params_mut`].
    pub fn grads_from(&self, tape: &Tape, fwd: &MlpForward) -> Vec<Vec<f64>> {
        let mut out = Vec::with_capacity(fwd.params.len() * 2);
        for &(w_id, b_id) in &fwd.params {
            out.push(tape.grad(w_id).to_vec());
            out.push(tape.grad(b_id).to_vec());
        }
        out
    }
}

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::dataset::ValidityDataset;
use super::SurrogateError;
use crate::gradcore::{AdamState, MlpModel, Tape, Tensor};

/// Validity classifier config. Class 0 is "valid", class 1 is "invalid";
/// the loss weights follow that order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidNetConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub hidden: usize,
    pub class_weights: [f64; 2],
    pub test_fraction: f64,
    pub seed: u64,
}

impl Default for ValidNetConfig {
    fn default() -> Self {
        ValidNetConfig {
            epochs: 150,
            learning_rate: 1e-3,
            batch_size: 64,
            hidden: 128,
            class_weights: [0.05, 0.95],
            test_fraction: 0.2,
            seed: 0,
        }
    }
}

/// Two-hidden-layer ReLU MLP with a softmax head over {valid, invalid}.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidNet {
    pub version: u32,
    pub model: MlpModel,
    /// Held-out accuracy measured after training.
    pub heldout_accuracy: f64,
}

impl ValidNet {
    /// Softmax probability that `hw` (one-hot or relaxed) is valid.
    pub fn valid_probability(&self, hw: &[f64]) -> f64 {
        let logits = self.model.forward(hw);
        let m = logits[0].max(logits[1]);
        let e0 = (logits[0] - m).exp();
        let e1 = (logits[1] - m).exp();
        e0 / (e0 + e1)
    }

    /// Record the softmax output on a tape; returns the [1,2] probability
    /// node so callers can differentiate through it.
    pub fn prob_node(
        &self,
        tape: &mut Tape,
        input: crate::gradcore::NodeId,
    ) -> Result<crate::gradcore::NodeId, SurrogateError> {
        let fwd = self.model.forward_on(tape, input)?;
        Ok(tape.softmax(fwd.output))
    }
}

/// Weighted cross-entropy training of the validity classifier.
pub fn train_validnet(
    dataset: &ValidityDataset,
    cfg: &ValidNetConfig,
) -> Result<ValidNet, SurrogateError> {
    if dataset.is_empty() {
        return Err(SurrogateError::EmptyDataset);
    }
    let n_valid = dataset.samples.iter().filter(|s| s.valid).count();
    if n_valid == 0 || n_valid == dataset.len() {
        return Err(SurrogateError::SingleClass);
    }
    let (train_idx, test_idx) = dataset.split(cfg.test_fraction, cfg.seed);

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut model = MlpModel::new(&[36, cfg.hidden, cfg.hidden, 2], &mut rng);
    let mut adam = AdamState::for_model(cfg.learning_rate, &model);

    let mut order = train_idx;
    for _epoch in 0..cfg.epochs {
        for i in (1..order.len()).rev() {
            let j = rng.random_range(0..=i);
            order.swap(i, j);
        }
        for chunk in order.chunks(cfg.batch_size) {
            let mut data = Vec::with_capacity(chunk.len() * 36);
            let mut labels = Vec::with_capacity(chunk.len());
            for &i in chunk {
                data.extend_from_slice(&dataset.samples[i].hw_onehot);
                labels.push(if dataset.samples[i].valid { 0 } else { 1 });
            }
            let mut tape = Tape::new();
            let x = tape.input(Tensor::new(chunk.len(), 36, data));
            let fwd = model.forward_on(&mut tape, x)?;
            let loss = tape.weighted_cross_entropy(fwd.output, &labels, &cfg.class_weights)?;
            tape.backward(loss)?;
            let grads = model.grads_from(&tape, &fwd);
            adam.apply(&mut model.params_mut(), &grads);
        }
    }

    let mut net = ValidNet { version: super::predictor::CHECKPOINT_VERSION, model, heldout_accuracy: 0.0 };
    if !test_idx.is_empty() {
        let correct = test_idx
            .iter()
            .filter(|&&i| {
                let s = &dataset.samples[i];
                (net.valid_probability(&s.hw_onehot) > 0.5) == s.valid
            })
            .count();
        net.heldout_accuracy = correct as f64 / test_idx.len() as f64;
    }
    Ok(net)
}

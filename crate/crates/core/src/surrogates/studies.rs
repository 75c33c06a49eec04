use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::predictor::PerfPredictor;
use super::validnet::ValidNet;
use super::SurrogateError;
use crate::accel::HwConfig;
use crate::gradcore::{Tape, Tensor};
use crate::nnspace::ArchDistribution;

/// Ratio of the predictor on the continuous distribution to the Monte-Carlo
/// mean of the predictor over architectures sampled from it, both in
/// physical scale. Exactly 1.0 for a one-hot distribution.
pub fn predictor_interpolation_ratio(
    predictor: &PerfPredictor,
    dist: &ArchDistribution,
    h0: &HwConfig,
    sample_count: usize,
    seed: u64,
) -> f64 {
    assert!(sample_count >= 100, "need at least 100 Monte-Carlo samples");
    let hw = h0.encode_onehot();
    let numerator = predictor.predict(&dist.probs_flat(), &hw);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows: Vec<Vec<f64>> = (0..sample_count)
        .map(|_| {
            let mut r = dist.sample(&mut rng).encode_onehot();
            r.extend_from_slice(&hw);
            r
        })
        .collect();
    let preds = predictor.predict_scaled_batch(&rows);
    let mean: f64 =
        preds.iter().map(|&p| predictor.to_physical(p)).sum::<f64>() / sample_count as f64;
    numerator / mean
}

/// Gradient magnitudes of `L1(ValidNet(g), valid)` while interpolating the
/// classifier input from a valid design `v` through a random point `r` to
/// an invalid design `i`:
///
/// `g(phi) = (1-phi) v + phi r` for `phi in [0,1)` and
/// `g(phi) = (2-phi) r + (phi-1) i` for `phi in [1,2)`.
///
/// Returns a `steps x 36` matrix of |d loss / d g_j| at evenly spaced phi.
pub fn gradient_interpolation_study(
    validnet: &ValidNet,
    v: &HwConfig,
    r: &[f64],
    i: &HwConfig,
    steps: usize,
) -> Result<Vec<Vec<f64>>, SurrogateError> {
    if !v.is_valid().map_err(|_| SurrogateError::BadEndpoints)?
        || i.is_valid().map_err(|_| SurrogateError::BadEndpoints)?
    {
        return Err(SurrogateError::BadEndpoints);
    }
    assert_eq!(r.len(), 36, "random point must be a 36-vector");
    let v = v.encode_onehot();
    let i = i.encode_onehot();
    let mut rows = Vec::with_capacity(steps);
    for step in 0..steps {
        let phi = 2.0 * step as f64 / steps as f64;
        let point: Vec<f64> = if phi < 1.0 {
            v.iter().zip(r).map(|(a, b)| (1.0 - phi) * a + phi * b).collect()
        } else {
            r.iter().zip(&i).map(|(a, b)| (2.0 - phi) * a + (phi - 1.0) * b).collect()
        };
        rows.push(input_gradient_magnitudes(validnet, &point)?);
    }
    Ok(rows)
}

/// |d L1(softmax(net(x)), [1,0]) / d x_j|; the L1 target [1,0] makes the
/// loss equal |p_valid - 1| since the two softmax outputs sum to one.
fn input_gradient_magnitudes(net: &ValidNet, x: &[f64]) -> Result<Vec<f64>, SurrogateError> {
    let mut tape = Tape::new();
    let input = tape.input(Tensor::row_vec(x.to_vec()));
    let probs = net.prob_node(&mut tape, input)?;
    let loss = tape.l1_loss(probs, Tensor::row_vec(vec![1.0, 0.0]))?;
    tape.backward(loss)?;
    Ok(tape.grad(input).iter().map(|g| g.abs()).collect())
}

/// Random (valid, random, invalid) endpoint triple for the study.
pub fn random_study_triple(
    valid_configs: &[HwConfig],
    invalid_configs: &[HwConfig],
    seed: u64,
) -> (HwConfig, Vec<f64>, HwConfig) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let v = valid_configs[rng.random_range(0..valid_configs.len())];
    let i = invalid_configs[rng.random_range(0..invalid_configs.len())];
    let r: Vec<f64> = (0..36).map(|_| rng.random::<f64>()).collect();
    (v, r, i)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::accel::HwSpace;
    use crate::nnspace::{ArchDistribution, CHOICE_COUNT};
    use crate::surrogates::{gen_validity_dataset, train_validnet, ValidNetConfig};

    fn quick_validnet() -> ValidNet {
        let d = gen_validity_dataset(512, 5, &HwSpace::full());
        let cfg = ValidNetConfig { epochs: 20, hidden: 32, seed: 5, ..ValidNetConfig::default() };
        train_validnet(&d, &cfg).unwrap()
    }

    #[test]
    fn study_shape_and_nonnegativity() {
        let net = quick_validnet();
        let space = HwSpace::full();
        let valid = space.valid_configs();
        let invalid: Vec<_> = space
            .enumerate()
            .filter(|c| !c.is_valid().unwrap())
            .collect();
        let (v, r, i) = random_study_triple(&valid, &invalid, 1);
        let m = gradient_interpolation_study(&net, &v, &r, &i, 16).unwrap();
        assert_eq!(m.len(), 16);
        for row in &m {
            assert_eq!(row.len(), 36);
            assert!(row.iter().all(|&g| g >= 0.0));
        }
    }

    #[test]
    fn study_rejects_swapped_endpoints() {
        let net = quick_validnet();
        let space = HwSpace::full();
        let valid = space.valid_configs();
        let invalid: Vec<_> = space
            .enumerate()
            .filter(|c| !c.is_valid().unwrap())
            .collect();
        let r = vec![0.5; 36];
        assert!(matches!(
            gradient_interpolation_study(&net, &invalid[0], &r, &valid[0], 8),
            Err(SurrogateError::BadEndpoints)
        ));
    }

    #[test]
    fn one_hot_distribution_ratio_is_exactly_one() {
        use crate::accel::Metric;
        use crate::gradcore::{MlpModel, RobustScaler};
        use rand::SeedableRng;
        // hand-built predictor; the ratio collapses regardless of weights
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let model = MlpModel::new(&[9 * CHOICE_COUNT + 36, 8, 8, 1], &mut rng);
        let predictor = PerfPredictor {
            version: 1,
            metric: Metric::Cycles,
            arch_len: 9,
            log_targets: false,
            model,
            scaler: RobustScaler::identity(),
        };
        let mut d = ArchDistribution::uniform(9);
        for row in &mut d.logits {
            row[2] = 60.0; // softmax saturates to one-hot
        }
        let ratio = predictor_interpolation_ratio(
            &predictor,
            &d,
            &HwSpace::default_template(),
            128,
            3,
        );
        assert!((ratio - 1.0).abs() < 1e-9, "ratio {ratio}");
    }
}

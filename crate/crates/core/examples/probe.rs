use codesign_core::accel::*;
use codesign_core::nnspace::*;
use codesign_core::surrogates::*;
use std::time::Instant;

fn main() {
    let space = HwSpace::full();
    let spec = supernet(DatasetId::Cifar10);
    let valid = space.valid_configs();
    let table = CostTable::build(&spec.all_workloads(), &valid).unwrap();
    let ds = gen_perf_dataset(20_000, 7, &spec, &table);
    for metric in [Metric::Edp, Metric::Cycles] {
        let t0 = Instant::now();
        let cfg = TrainConfig { seed: 7, ..TrainConfig::default() };
        let (p, log) = train_predictor(&ds, metric, &cfg).unwrap();
        println!("{metric} log-target predictor: tau {:.4} in {:?}", log.heldout_tau, t0.elapsed());
        // interpolation ratio over 20 random distributions (quick look)
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        let h0 = HwSpace::default_template();
        let mut ratios = Vec::new();
        for _ in 0..20 {
            let mut d = ArchDistribution::uniform(9);
            for row in &mut d.logits { for v in row.iter_mut() { *v = rng.random_range(-1.0..1.0); } }
            ratios.push(predictor_interpolation_ratio(&p, &d, &h0, 200, 5));
        }
        let mean: f64 = ratios.iter().sum::<f64>() / ratios.len() as f64;
        let var: f64 = ratios.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / ratios.len() as f64;
        println!("  interp ratio: mean {:.4} var {:.5} min {:.4} max {:.4}", mean, var,
            ratios.iter().cloned().fold(f64::INFINITY, f64::min), ratios.iter().cloned().fold(f64::NEG_INFINITY, f64::max));
    }
}

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::accel::{CostTable, HwConfig, HwSpace, StreamBytes};
use crate::nnspace::{random_architecture, SupernetSpec};

/// One labeled NN-HW pair.
#[derive(Debug, Clone, PartialEq)]
pub struct PerfSample {
    pub nn_onehot: Vec<f64>,
    pub hw_onehot: Vec<f64>,
    pub cycles: u64,
    pub edp: f64,
    pub bytes: StreamBytes,
    /// Config-independent MAC count of the architecture.
    pub macs: u64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PerfDataset {
    pub arch_len: usize,
    pub samples: Vec<PerfSample>,
}

/// One labeled config for the validity classifier.
#[derive(Debug, Clone, PartialEq)]
pub struct ValiditySample {
    pub hw_onehot: Vec<f64>,
    pub valid: bool,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidityDataset {
    pub samples: Vec<ValiditySample>,
}

/// Uniform random architectures paired with uniform random valid configs,
/// labeled by the simulator. The cost table must hold exactly the valid
/// configs of the space being sampled. Deterministic per seed; records are
/// generated on independent rng streams so parallelism cannot reorder
/// randomness.
pub fn gen_perf_dataset(
    n: usize,
    seed: u64,
    spec: &SupernetSpec,
    table: &CostTable,
) -> PerfDataset {
    let arch_len = spec.num_blocks();
    let samples: Vec<PerfSample> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64 + 1);
            let arch = random_architecture(&mut rng, arch_len);
            let cfg_idx = rng.random_range(0..table.configs().len());
            let ws = arch.workloads(spec);
            let report = table.report(&ws, cfg_idx);
            PerfSample {
                nn_onehot: arch.encode_onehot(),
                hw_onehot: table.configs()[cfg_idx].encode_onehot(),
                cycles: report.total_cycles,
                edp: report.edp_js,
                bytes: report.bytes,
                macs: ws.iter().map(|w| w.macs()).sum(),
            }
        })
        .collect();
    PerfDataset { arch_len, samples }
}

/// Uniform random configs over the whole space, labeled valid/invalid.
pub fn gen_validity_dataset(n: usize, seed: u64, space: &HwSpace) -> ValidityDataset {
    let all: Vec<HwConfig> = space.enumerate().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples = (0..n)
        .map(|_| {
            let c = all[rng.random_range(0..all.len())];
            ValiditySample {
                hw_onehot: c.encode_onehot(),
                valid: c.is_valid().expect("enumerated configs are in range"),
            }
        })
        .collect();
    ValidityDataset { samples }
}

impl PerfDataset {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Seeded shuffle, then split off the last `test_fraction` as held-out.
    pub fn split(&self, test_fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
        split_indices(self.len(), test_fraction, seed)
    }

    pub fn csv_header(&self) -> String {
        let mut cols = Vec::new();
        for i in 0..self.arch_len * 4 {
            cols.push(format!("nn_{i}"));
        }
        for i in 0..36 {
            cols.push(format!("hw_{i}"));
        }
        cols.extend(
            ["cycles", "edp", "bytes_inp", "bytes_wgt", "bytes_acc", "bytes_uop", "macs"]
                .map(String::from),
        );
        cols.join(",")
    }

    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{}", self.csv_header())?;
        for s in &self.samples {
            let mut row: Vec<String> = Vec::new();
            row.extend(s.nn_onehot.iter().map(|v| format!("{}", *v as u8)));
            row.extend(s.hw_onehot.iter().map(|v| format!("{}", *v as u8)));
            row.push(s.cycles.to_string());
            row.push(format!("{}", s.edp));
            row.push(s.bytes.inp.to_string());
            row.push(s.bytes.wgt.to_string());
            row.push(s.bytes.acc.to_string());
            row.push(s.bytes.uop.to_string());
            row.push(s.macs.to_string());
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }
}

impl ValidityDataset {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn valid_fraction(&self) -> f64 {
        self.samples.iter().filter(|s| s.valid).count() as f64 / self.samples.len() as f64
    }

    pub fn split(&self, test_fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
        split_indices(self.len(), test_fraction, seed)
    }

    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        let cols: Vec<String> = (0..36).map(|i| format!("hw_{i}")).collect();
        writeln!(w, "{},valid", cols.join(","))?;
        for s in &self.samples {
            let row: Vec<String> = s.hw_onehot.iter().map(|v| format!("{}", *v as u8)).collect();
            writeln!(w, "{},{}", row.join(","), s.valid as u8)?;
        }
        Ok(())
    }
}

fn split_indices(n: usize, test_fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Fisher-Yates
    for i in (1..idx.len()).rev() {
        let j = rng.random_range(0..=i);
        idx.swap(i, j);
    }
    let test = ((n as f64) * test_fraction).round() as usize;
    let train = n - test;
    (idx[..train].to_vec(), idx[train..].to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nnspace::{supernet, DatasetId};

    fn small_table(spec: &SupernetSpec) -> CostTable {
        // a handful of valid configs keeps the test quick
        let valid: Vec<HwConfig> = HwSpace::full()
            .valid_configs()
            .into_iter()
            .step_by(977)
            .collect();
        CostTable::build(&spec.all_workloads(), &valid).unwrap()
    }

    #[test]
    fn perf_dataset_is_deterministic_and_valid_only() {
        let spec = supernet(DatasetId::Cifar10);
        let table = small_table(&spec);
        let a = gen_perf_dataset(50, 7, &spec, &table);
        let b = gen_perf_dataset(50, 7, &spec, &table);
        assert_eq!(a, b);
        assert_eq!(a.len(), 50);
        for s in &a.samples {
            let c = HwConfig::decode_onehot(&s.hw_onehot);
            assert!(c.is_valid().unwrap());
            assert!(s.cycles > 0);
            assert!(s.edp > 0.0);
        }
    }

    #[test]
    fn different_seeds_differ() {
        let spec = supernet(DatasetId::Cifar10);
        let table = small_table(&spec);
        let a = gen_perf_dataset(20, 1, &spec, &table);
        let b = gen_perf_dataset(20, 2, &spec, &table);
        assert_ne!(a, b);
    }

    #[test]
    fn validity_dataset_matches_space_fraction() {
        let space = HwSpace::full();
        let d = gen_validity_dataset(10_240, 3, &space);
        let expect = space.valid_fraction();
        assert!((d.valid_fraction() - expect).abs() < 0.03);
    }

    #[test]
    fn split_is_disjoint_and_seeded() {
        let (tr, te) = split_indices(100, 0.2, 5);
        assert_eq!(tr.len(), 80);
        assert_eq!(te.len(), 20);
        let mut all: Vec<usize> = tr.iter().chain(te.iter()).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..100).collect::<Vec<_>>());
        assert_eq!(split_indices(100, 0.2, 5), (tr, te));
    }
}

use std::collections::HashMap;

use rayon::prelude::*;

use super::config::HwConfig;
use super::simulate::{PerfReport, StreamBytes};
use super::tiling::layer_cost;
use super::workload::LayerWorkload;
use super::AccelError;

/// Slim per-layer cost record used inside the table.
#[derive(Debug, Clone, Copy)]
struct Cost {
    compute_cycles: u64,
    total_cycles: u64,
    bytes: StreamBytes,
}

/// Precomputed per-(layer, config) costs.
///
/// Grid searches, dataset generation, and optimality evaluation all score
/// the same few hundred distinct layer shapes against the same config list;
/// computing the table once turns a whole-network simulation into a handful
/// of lookups. Rows are built in parallel but the table itself is immutable
/// and bit-deterministic.
pub struct CostTable {
    configs: Vec<HwConfig>,
    config_index: HashMap<HwConfig, usize>,
    layers: HashMap<LayerWorkload, Vec<Cost>>,
}

impl CostTable {
    /// Build the table for every (workload, config) pair. All configs must
    /// be valid; infeasible pairs propagate as errors.
    pub fn build(workloads: &[LayerWorkload], configs: &[HwConfig]) -> Result<Self, AccelError> {
        let mut distinct: Vec<LayerWorkload> = Vec::new();
        for w in workloads {
            if !distinct.contains(w) {
                distinct.push(*w);
            }
        }
        let rows: Result<Vec<_>, AccelError> = distinct
            .par_iter()
            .map(|w| {
                let costs: Result<Vec<Cost>, AccelError> = configs
                    .iter()
                    .map(|h| {
                        let c = layer_cost(w, h)?;
                        Ok(Cost {
                            compute_cycles: c.compute_cycles,
                            total_cycles: c.total_cycles,
                            bytes: c.bytes,
                        })
                    })
                    .collect();
                Ok((*w, costs?))
            })
            .collect();
        let layers: HashMap<_, _> = rows?.into_iter().collect();
        Ok(CostTable {
            configs: configs.to_vec(),
            config_index: configs.iter().enumerate().map(|(i, c)| (*c, i)).collect(),
            layers,
        })
    }

    pub fn configs(&self) -> &[HwConfig] {
        &self.configs
    }

    pub fn config_index(&self, h: &HwConfig) -> Option<usize> {
        self.config_index.get(h).copied()
    }

    /// Whole-network report via table lookups; equals `simulate` exactly.
    pub fn report(&self, workloads: &[LayerWorkload], config_idx: usize) -> PerfReport {
        let mut compute = 0u64;
        let mut total = 0u64;
        let mut bytes = StreamBytes::default();
        for w in workloads {
            let c = &self.layers[w][config_idx];
            compute += c.compute_cycles;
            total += c.total_cycles;
            bytes.inp += c.bytes.inp;
            bytes.wgt += c.bytes.wgt;
            bytes.acc += c.bytes.acc;
            bytes.uop += c.bytes.uop;
        }
        PerfReport::derive(compute, total, bytes)
    }

    /// Report for a config that may or may not be in the table; falls back
    /// to a direct simulation when absent.
    pub fn report_for(
        &self,
        workloads: &[LayerWorkload],
        h: &HwConfig,
    ) -> Result<PerfReport, AccelError> {
        match self.config_index(h) {
            Some(i) => Ok(self.report(workloads, i)),
            None => super::simulate(workloads, h),
        }
    }

    /// Index of the config minimizing `score` over the table's config list.
    pub fn argmin<F: Fn(&PerfReport) -> f64>(
        &self,
        workloads: &[LayerWorkload],
        score: F,
    ) -> usize {
        let mut best = 0;
        let mut best_score = f64::INFINITY;
        for i in 0..self.configs.len() {
            let s = score(&self.report(workloads, i));
            if s < best_score {
                best_score = s;
                best = i;
            }
        }
        best
    }
}

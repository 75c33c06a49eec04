use serde::{Deserialize, Serialize};

use super::config::HwConfig;
use super::tiling::{layer_cost, TilingChoice};
use super::workload::LayerWorkload;
use super::AccelError;

/// DRAM bandwidth at the accelerator boundary.
pub const DRAM_BYTES_PER_CYCLE: u64 = 16;
/// Off-chip transfer energy.
pub const PJ_PER_BYTE: f64 = 320.0;
/// 1 GHz core clock.
pub const SECONDS_PER_CYCLE: f64 = 1e-9;

/// Per-stream DRAM traffic in bytes.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StreamBytes {
    pub inp: u64,
    pub wgt: u64,
    /// Accumulator/output write-back stream.
    pub acc: u64,
    /// Micro-op fetch stream.
    pub uop: u64,
}

impl StreamBytes {
    pub fn total(&self) -> u64 {
        self.inp + self.wgt + self.acc + self.uop
    }

    /// Data streams only (no micro-op fetch); the tiling objective.
    pub fn data_total(&self) -> u64 {
        self.inp + self.wgt + self.acc
    }

    fn add(&mut self, other: &StreamBytes) {
        self.inp += other.inp;
        self.wgt += other.wgt;
        self.acc += other.acc;
        self.uop += other.uop;
    }
}

/// Cost of a single layer under its optimal tiling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LayerCost {
    pub tiling: TilingChoice,
    pub compute_cycles: u64,
    pub total_cycles: u64,
    pub bytes: StreamBytes,
}

/// Whole-network performance on one config.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerfReport {
    pub compute_cycles: u64,
    pub total_cycles: u64,
    pub bytes: StreamBytes,
    /// Seconds at 1 GHz.
    pub latency_s: f64,
    /// Joules at 320 pJ per DRAM byte.
    pub energy_j: f64,
    /// Joule-seconds.
    pub edp_js: f64,
}

impl PerfReport {
    /// Derive latency/energy/EDP from cycle and byte totals.
    pub fn derive(compute_cycles: u64, total_cycles: u64, bytes: StreamBytes) -> Self {
        let latency_s = total_cycles as f64 * SECONDS_PER_CYCLE;
        let energy_j = bytes.total() as f64 * PJ_PER_BYTE * 1e-12;
        PerfReport {
            compute_cycles,
            total_cycles,
            bytes,
            latency_s,
            energy_j,
            edp_js: energy_j * latency_s,
        }
    }

    /// CSV row: cycles, per-stream bytes, latency, energy, EDP.
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.total_cycles,
            self.bytes.inp,
            self.bytes.wgt,
            self.bytes.acc,
            self.bytes.uop,
            self.latency_s,
            self.energy_j,
            self.edp_js
        )
    }

    pub const CSV_HEADER: &'static str =
        "cycles,bytes_inp,bytes_wgt,bytes_acc,bytes_uop,latency_s,energy_j,edp_js";

    pub fn metric(&self, metric: Metric) -> f64 {
        match metric {
            Metric::Cycles => self.total_cycles as f64,
            Metric::Edp => self.edp_js,
        }
    }
}

/// Which scalar a search optimizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Cycles,
    Edp,
}

impl std::str::FromStr for Metric {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "cycles" => Ok(Metric::Cycles),
            "edp" => Ok(Metric::Edp),
            other => Err(format!("unknown metric {other:?} (expected cycles|edp)")),
        }
    }
}

impl std::fmt::Display for Metric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Metric::Cycles => write!(f, "cycles"),
            Metric::Edp => write!(f, "edp"),
        }
    }
}

/// Run a network (list of layers) on one config.
///
/// Pure function: identical inputs give bit-identical reports.
pub fn simulate(workloads: &[LayerWorkload], h: &HwConfig) -> Result<PerfReport, AccelError> {
    if workloads.is_empty() {
        return Err(AccelError::EmptyWorkloads);
    }
    let mut compute = 0u64;
    let mut total = 0u64;
    let mut bytes = StreamBytes::default();
    for w in workloads {
        let c = layer_cost(w, h)?;
        compute += c.compute_cycles;
        total += c.total_cycles;
        bytes.add(&c.bytes);
    }
    Ok(PerfReport::derive(compute, total, bytes))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::accel::HwSpace;
    use approx::assert_relative_eq;

    #[test]
    fn latency_energy_edp_arithmetic() {
        let bytes = StreamBytes { inp: 1_000_000, wgt: 0, acc: 0, uop: 0 };
        let r = PerfReport::derive(0, 1_000_000, bytes);
        assert_relative_eq!(r.latency_s, 1e-3);
        assert_relative_eq!(r.energy_j, 0.32e-3);
        assert_relative_eq!(r.edp_js, 3.2e-7);
    }

    #[test]
    fn single_tile_conv_compute_cycles() {
        let w = LayerWorkload::conv(8, 8, 8, 8, 1, 1);
        let h = HwConfig::new([3, 3, 6, 6, 18, 18, 18]);
        let r = simulate(&[w], &h).unwrap();
        assert_eq!(r.compute_cycles, 64);
    }

    #[test]
    fn simulate_is_deterministic() {
        let ws = [
            LayerWorkload::conv(14, 14, 64, 96, 3, 1),
            LayerWorkload::depthwise(14, 14, 96, 5, 2),
        ];
        let h = HwSpace::default_template();
        let a = simulate(&ws, &h).unwrap();
        let b = simulate(&ws, &h).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn empty_workload_list_is_an_error() {
        assert!(matches!(
            simulate(&[], &HwSpace::default_template()),
            Err(AccelError::EmptyWorkloads)
        ));
    }
}

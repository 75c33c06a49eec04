//! Configurable-accelerator design space and analytical cost model.
//!
//! The accelerator is a blocked GEMM core (`block_in x block_out` MACs per
//! cycle) fed by three on-chip SRAM buffers (input, weight, accumulator) and
//! a micro-op cache. Designs are points in a 7-parameter log2 space; many
//! points are invalid because buffer address bits exceed the micro-op width
//! or the summed SRAM exceeds the die budget. Costs come from an analytical
//! tiling model rather than RTL simulation: per layer we pick the tiling
//! that minimizes DRAM traffic, then charge `max(compute, memory)` cycles
//! per tile at 16 bytes/cycle DRAM bandwidth, 1 GHz, 320 pJ/byte.

mod config;
mod cost_table;
mod simulate;
mod space;
mod tiling;
mod workload;

pub use config::{
    HwConfig, Invalidity, Validity, HW_ONEHOT_LEN, PARAM_COUNT, PARAM_RANGES, PARAM_WIDTHS,
};
pub use cost_table::CostTable;
pub use simulate::{
    simulate, LayerCost, Metric, PerfReport, StreamBytes, DRAM_BYTES_PER_CYCLE, PJ_PER_BYTE,
};
pub use space::HwSpace;
pub use tiling::{layer_cost, optimal_tiling, LoopOrder, TilingChoice};
pub use workload::LayerWorkload;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AccelError {
    #[error("parameter {name} = {value} outside range [{lo}, {hi}]")]
    ParamOutOfRange {
        name: &'static str,
        value: u8,
        lo: u8,
        hi: u8,
    },
    #[error("config is invalid ({0:?}); cost model requires a valid config")]
    InvalidConfig(Invalidity),
    #[error("no feasible tiling: minimal tile exceeds a buffer (inp {inp_fp} B, wgt {wgt_fp} B, acc {acc_fp} B)")]
    InfeasibleWorkload {
        inp_fp: u64,
        wgt_fp: u64,
        acc_fp: u64,
    },
    #[error("bad workload: {0}")]
    BadWorkload(String),
    #[error("workload list is empty")]
    EmptyWorkloads,
}

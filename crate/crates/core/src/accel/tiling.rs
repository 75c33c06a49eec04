//! Tiled-execution cost model.
//!
//! A layer runs as a grid of output tiles (output-channel blocks x output
//! rows x output cols), each accumulated on chip over input-channel tiles
//! (output-stationary: the input-channel loop is always innermost, so an
//! accumulator tile never spills). The loop-order template picks which of
//! the two outer loops runs outermost:
//!
//! * [`LoopOrder::WeightStationary`]: output-channel tiles outermost,
//!   spatial tiles inside. With a single input-channel tile the weight tile
//!   is loaded once per output-channel tile and reused across the spatial
//!   sweep.
//! * [`LoopOrder::InputStationary`]: spatial tiles outermost. With a single
//!   input-channel tile the input window is loaded once per spatial tile
//!   and reused across output-channel tiles.
//!
//! Traffic accounting:
//! * Loads that stay resident across a whole inner sweep are charged once,
//!   as a non-overlapped DMA prologue.
//! * Everything else is charged per output-tile visit; per tile the cycle
//!   cost is `max(compute, ceil(bytes / 16))` (16 bytes/cycle DRAM).
//! * Outputs are written back exactly once, requantized to 8 bits.
//! * Micro-ops: one uop per MAC-block issue. If the largest tile's uop
//!   sequence fits the uop cache it is fetched once per layer; otherwise
//!   every tile streams its uops from DRAM.
//! * Weight tiles whose full k_h x k_w tap set exceeds the weight buffer
//!   fall back to holding one tap block at a time (streamed taps); such
//!   tiles never qualify for resident reuse.
//!
//! Channel transfers are padded to whole hardware blocks.

use serde::{Deserialize, Serialize};

use super::config::HwConfig;
use super::simulate::{LayerCost, StreamBytes, DRAM_BYTES_PER_CYCLE};
use super::workload::{LayerWorkload, ACC_BYTES};
use super::AccelError;

/// Loop-order template for the two outer tile loops.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum LoopOrder {
    WeightStationary,
    InputStationary,
}

/// One point in the tiling search space. All tile dims are powers of two.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TilingChoice {
    /// Output-channel blocks per tile.
    pub out_ch_blocks: u64,
    /// Input-channel blocks per tile (always 1 for depthwise).
    pub in_ch_blocks: u64,
    /// Output rows per tile.
    pub out_rows: u64,
    /// Output cols per tile.
    pub out_cols: u64,
    pub order: LoopOrder,
}

impl TilingChoice {
    /// Tie-break key: fewer total tiles, then lexicographic dims, then
    /// weight-stationary before input-stationary.
    fn key(&self, tiles: u64) -> (u64, u64, u64, u64, u64, u8) {
        let order = match self.order {
            LoopOrder::WeightStationary => 0,
            LoopOrder::InputStationary => 1,
        };
        (
            tiles,
            self.out_ch_blocks,
            self.in_ch_blocks,
            self.out_rows,
            self.out_cols,
            order,
        )
    }
}

/// Workload quantities that do not depend on the tiling.
struct LayerDims {
    in_h: u64,
    in_w: u64,
    out_h: u64,
    out_w: u64,
    /// Output-channel blocks.
    cbo: u64,
    /// Input-channel blocks (1 for depthwise).
    cbi: u64,
    b_in: u64,
    b_out: u64,
    k_h: u64,
    k_w: u64,
    stride: u64,
    depthwise: bool,
}

impl LayerDims {
    fn new(w: &LayerWorkload, h: &HwConfig) -> Self {
        let b_in = h.block_in();
        let b_out = h.block_out();
        LayerDims {
            in_h: w.in_h as u64,
            in_w: w.in_w as u64,
            out_h: w.out_h(),
            out_w: w.out_w(),
            cbo: (w.c_out as u64).div_ceil(b_out),
            cbi: if w.depthwise {
                1
            } else {
                (w.c_in as u64).div_ceil(b_in)
            },
            b_in,
            b_out,
            k_h: w.k_h as u64,
            k_w: w.k_w as u64,
            stride: w.stride as u64,
            depthwise: w.depthwise,
        }
    }

    /// Input rows feeding `span` output rows, clipped to the input extent.
    fn win_h(&self, span: u64) -> u64 {
        ((span.min(self.out_h) - 1) * self.stride + self.k_h).min(self.in_h)
    }

    fn win_w(&self, span: u64) -> u64 {
        ((span.min(self.out_w) - 1) * self.stride + self.k_w).min(self.in_w)
    }

    /// Input channels moved per step of one tile: padded to hardware blocks.
    /// Depthwise inputs follow the output tile's channels.
    fn inp_tile_channels(&self, o_blocks: u64, i_blocks: u64) -> u64 {
        if self.depthwise {
            o_blocks * self.b_out
        } else {
            i_blocks * self.b_in
        }
    }

    fn wgt_tile_bytes(&self, o_blocks: u64, i_blocks: u64) -> u64 {
        let taps = self.k_h * self.k_w;
        if self.depthwise {
            o_blocks * self.b_out * taps
        } else {
            o_blocks * self.b_out * i_blocks * self.b_in * taps
        }
    }
}

fn pow2_up_to(extent: u64) -> Vec<u64> {
    let mut v = Vec::new();
    let mut t = 1;
    loop {
        v.push(t);
        if t >= extent {
            break;
        }
        t *= 2;
    }
    v
}

/// Split an extent into tiles of size `t`: (count, full size, edge size).
fn grid(extent: u64, t: u64) -> (u64, u64, u64) {
    let t = t.min(extent);
    let n = extent.div_ceil(t);
    let edge = extent - (n - 1) * t;
    (n, t, edge)
}

/// Distinct (size, multiplicity) pairs along one tiled dimension.
fn shape_groups(n: u64, full: u64, edge: u64) -> Vec<(u64, u64)> {
    if n == 1 {
        vec![(edge, 1)]
    } else if full == edge {
        vec![(full, n)]
    } else {
        vec![(full, n - 1), (edge, 1)]
    }
}

struct TilingCost {
    bytes: StreamBytes,
    compute_cycles: u64,
    total_cycles: u64,
    tiles: u64,
}

/// Cost of one tiling candidate, or `None` if a tile footprint exceeds a
/// buffer.
fn tiling_cost(d: &LayerDims, h: &HwConfig, t: &TilingChoice) -> Option<TilingCost> {
    let (n_o, full_o, edge_o) = grid(d.cbo, t.out_ch_blocks);
    let (n_i, full_i, _edge_i) = grid(d.cbi, t.in_ch_blocks);
    let (n_h, full_h, edge_h) = grid(d.out_h, t.out_rows);
    let (n_w, full_w, edge_w) = grid(d.out_w, t.out_cols);
    let n_sp = n_h * n_w;
    let kk = d.k_h * d.k_w;

    // Footprints of the largest tile instance.
    let inp_fp = d.win_h(full_h) * d.win_w(full_w) * d.inp_tile_channels(full_o, full_i);
    let acc_fp = full_h * full_w * full_o * d.b_out * ACC_BYTES;
    let wgt_full_taps = d.wgt_tile_bytes(full_o, full_i);
    // Weight tiles may stream one tap block at a time when the full tap set
    // does not fit; the held set is then a single tap.
    let taps_resident = wgt_full_taps <= h.wgt_buf_bytes();
    let wgt_fp = if taps_resident {
        wgt_full_taps
    } else {
        wgt_full_taps / kk
    };
    if inp_fp > h.inp_buf_bytes() || acc_fp > h.acc_buf_bytes() || wgt_fp > h.wgt_buf_bytes() {
        return None;
    }

    // Resident streams are loaded once and reused across a whole sweep.
    let wgt_resident = taps_resident
        && n_i == 1
        && match t.order {
            LoopOrder::WeightStationary => true, // once per output-channel tile
            LoopOrder::InputStationary => n_o == 1,
        };
    let inp_resident = !d.depthwise
        && n_i == 1
        && match t.order {
            LoopOrder::WeightStationary => n_sp == 1,
            LoopOrder::InputStationary => true, // once per spatial tile
        };

    // Stream totals. One full weight/input pass:
    let wgt_once = d.wgt_tile_bytes(d.cbo, d.cbi);
    let sum_win_h = (n_h - 1) * d.win_h(full_h) + d.win_h(edge_h);
    let sum_win_w = (n_w - 1) * d.win_w(full_w) + d.win_w(edge_w);
    let inp_once = sum_win_h * sum_win_w * d.inp_tile_channels(d.cbo, d.cbi);

    let wgt_total = if wgt_resident { wgt_once } else { n_sp * wgt_once };
    let inp_total = if inp_resident || d.depthwise {
        inp_once
    } else {
        n_o * inp_once
    };
    let out_total = d.out_h * d.out_w * d.cbo * d.b_out;

    // Micro-ops: one per MAC-block issue of the largest output tile
    // (including its full input-channel sweep).
    let uop_word = h.uop_width_bits() / 8;
    let ci_factor = if d.depthwise { 1 } else { d.cbi };
    let tile_ops_full = full_h * full_w * full_o * ci_factor * kk;
    let total_ops = d.out_h * d.out_w * d.cbo * ci_factor * kk;
    let uops_fit = tile_ops_full * uop_word <= h.uop_buf_bytes();
    let uop_total = if uops_fit {
        tile_ops_full * uop_word
    } else {
        total_ops * uop_word
    };

    // Non-overlapped DMA prologue: resident loads plus a resident uop kernel.
    let mut prologue = 0u64;
    if wgt_resident {
        prologue += wgt_total;
    }
    if inp_resident {
        prologue += inp_total;
    }
    if uops_fit {
        prologue += uop_total;
    }

    // Per-output-tile cycles, grouped by the <= 8 distinct tile shapes.
    let mut total_cycles = prologue.div_ceil(DRAM_BYTES_PER_CYCLE);
    for (o_blocks, o_mult) in shape_groups(n_o, full_o, edge_o) {
        for (rows, r_mult) in shape_groups(n_h, full_h, edge_h) {
            for (cols, c_mult) in shape_groups(n_w, full_w, edge_w) {
                let mult = o_mult * r_mult * c_mult;
                let compute = rows * cols * o_blocks * ci_factor * kk;
                let mut bytes = rows * cols * o_blocks * d.b_out; // write-back
                if !wgt_resident {
                    // full input-channel sweep of this tile's weights
                    bytes += d.wgt_tile_bytes(o_blocks, d.cbi);
                }
                if !inp_resident {
                    bytes += d.win_h(rows) * d.win_w(cols) * d.inp_tile_channels(o_blocks, d.cbi);
                }
                if !uops_fit {
                    bytes += compute * uop_word;
                }
                let mem_cycles = bytes.div_ceil(DRAM_BYTES_PER_CYCLE);
                total_cycles += mult * compute.max(mem_cycles);
            }
        }
    }

    Some(TilingCost {
        bytes: StreamBytes {
            inp: inp_total,
            wgt: wgt_total,
            acc: out_total,
            uop: uop_total,
        },
        compute_cycles: total_ops,
        total_cycles,
        tiles: n_o * n_i * n_h * n_w,
    })
}

fn candidates(d: &LayerDims) -> Vec<TilingChoice> {
    let mut out = Vec::new();
    let t_i_values = if d.depthwise { vec![1] } else { pow2_up_to(d.cbi) };
    for &t_o in &pow2_up_to(d.cbo) {
        for &t_i in &t_i_values {
            for &t_h in &pow2_up_to(d.out_h) {
                for &t_w in &pow2_up_to(d.out_w) {
                    for order in [LoopOrder::WeightStationary, LoopOrder::InputStationary] {
                        out.push(TilingChoice {
                            out_ch_blocks: t_o,
                            in_ch_blocks: t_i,
                            out_rows: t_h,
                            out_cols: t_w,
                            order,
                        });
                    }
                }
            }
        }
    }
    out
}

/// Minimum-DRAM-traffic tiling for `w` on `h`.
///
/// The objective is the summed input/weight/output stream bytes; micro-op
/// fetch traffic is reported and charged in cycles and energy but does not
/// steer the tiling choice. Ties break toward fewer total tiles, then
/// lexicographically smaller tile dims, then weight-stationary order.
pub fn optimal_tiling(w: &LayerWorkload, h: &HwConfig) -> Result<TilingChoice, AccelError> {
    Ok(layer_cost(w, h)?.tiling)
}

/// Full cost of `w` on `h` under its optimal tiling.
pub fn layer_cost(w: &LayerWorkload, h: &HwConfig) -> Result<LayerCost, AccelError> {
    w.validate().map_err(AccelError::BadWorkload)?;
    match h.validity()? {
        super::config::Validity::Valid => {}
        super::config::Validity::Invalid(inv) => return Err(AccelError::InvalidConfig(inv)),
    }
    let d = LayerDims::new(w, h);
    let mut best: Option<(TilingChoice, TilingCost)> = None;
    for t in candidates(&d) {
        let Some(cost) = tiling_cost(&d, h, &t) else {
            continue;
        };
        let better = match &best {
            None => true,
            Some((bt, bc)) => {
                (cost.bytes.data_total(), t.key(cost.tiles))
                    < (bc.bytes.data_total(), bt.key(bc.tiles))
            }
        };
        if better {
            best = Some((t, cost));
        }
    }
    let (tiling, cost) = best.ok_or_else(|| {
        let win = d.win_h(1) * d.win_w(1);
        AccelError::InfeasibleWorkload {
            inp_fp: win * d.inp_tile_channels(1, 1),
            wgt_fp: d.wgt_tile_bytes(1, 1) / (d.k_h * d.k_w),
            acc_fp: d.b_out * ACC_BYTES,
        }
    })?;
    Ok(LayerCost {
        tiling,
        compute_cycles: cost.compute_cycles,
        total_cycles: cost.total_cycles,
        bytes: cost.bytes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::accel::HwSpace;

    fn roomy_config() -> HwConfig {
        // 8x8 GEMM core, 64-bit uops, large buffers
        HwConfig::new([3, 3, 6, 6, 18, 18, 18])
    }

    #[test]
    fn whole_layer_in_one_tile_moves_each_byte_once() {
        let w = LayerWorkload::conv(8, 8, 8, 8, 1, 1);
        let cost = layer_cost(&w, &roomy_config()).unwrap();
        assert_eq!(cost.tiling.out_ch_blocks, 1);
        assert_eq!(cost.tiling.in_ch_blocks, 1);
        assert_eq!(cost.tiling.out_rows, 8);
        assert_eq!(cost.tiling.out_cols, 8);
        assert_eq!(cost.bytes.inp, 512);
        assert_eq!(cost.bytes.wgt, 64);
        assert_eq!(cost.bytes.acc, 512);
        assert_eq!(cost.compute_cycles, 64);
    }

    #[test]
    fn doubling_a_buffer_never_increases_traffic() {
        let w = LayerWorkload::conv(14, 14, 64, 64, 3, 1);
        let h = HwSpace::default_template();
        let base = layer_cost(&w, &h).unwrap().bytes.data_total();
        let mut bigger = h;
        bigger.inp_buf_log2 += 1;
        if bigger.is_valid().unwrap() {
            let b = layer_cost(&w, &bigger).unwrap().bytes.data_total();
            assert!(b <= base, "{b} > {base}");
        }
    }

    #[test]
    fn pathological_workload_is_infeasible() {
        // depthwise 33x33 kernel: the one-output-pixel window alone
        // (33*33*8 = 8712 B) exceeds the smallest 8 KiB input buffer
        let w = LayerWorkload::depthwise(64, 64, 8, 33, 1);
        let h = HwConfig::new([3, 3, 5, 5, 13, 13, 13]);
        assert!(matches!(
            layer_cost(&w, &h),
            Err(AccelError::InfeasibleWorkload { .. })
        ));
    }

    #[test]
    fn invalid_config_is_rejected() {
        let w = LayerWorkload::conv(8, 8, 8, 8, 1, 1);
        let h = HwConfig::new([6, 6, 6, 6, 20, 20, 20]);
        assert!(matches!(layer_cost(&w, &h), Err(AccelError::InvalidConfig(_))));
    }

    #[test]
    fn conservation_each_stream_at_least_unique_bytes() {
        let w = LayerWorkload::conv(14, 14, 64, 96, 3, 1);
        let h = HwSpace::default_template();
        let cost = layer_cost(&w, &h).unwrap();
        // padded unique footprints
        assert!(cost.bytes.wgt >= 64 * 96 * 9);
        assert!(cost.bytes.acc >= 14 * 14 * 96);
        assert!(cost.bytes.inp >= 14 * 14 * 64);
    }

    #[test]
    fn depthwise_single_input_pass() {
        let w = LayerWorkload::depthwise(16, 16, 64, 3, 1);
        let cost = layer_cost(&w, &HwSpace::default_template()).unwrap();
        assert_eq!(cost.tiling.in_ch_blocks, 1);
        assert_eq!(cost.compute_cycles, 16 * 16 * 4 * 9);
    }
}

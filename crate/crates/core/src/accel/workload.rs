use serde::{Deserialize, Serialize};

/// Activation and weight word size.
pub const DATA_BYTES: u64 = 1;
/// Accumulator word size (32-bit partial sums).
pub const ACC_BYTES: u64 = 4;

/// One convolution operator instance as seen by the accelerator.
///
/// Outputs are requantized to 8 bits before write-back; accumulation is
/// 32-bit on chip. Spatial output dims follow "same" padding:
/// `out = ceil(in / stride)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LayerWorkload {
    pub in_h: u32,
    pub in_w: u32,
    pub c_in: u32,
    pub c_out: u32,
    pub k_h: u32,
    pub k_w: u32,
    pub stride: u32,
    pub depthwise: bool,
}

impl LayerWorkload {
    pub fn conv(in_h: u32, in_w: u32, c_in: u32, c_out: u32, k: u32, stride: u32) -> Self {
        LayerWorkload {
            in_h,
            in_w,
            c_in,
            c_out,
            k_h: k,
            k_w: k,
            stride,
            depthwise: false,
        }
    }

    pub fn depthwise(in_h: u32, in_w: u32, c: u32, k: u32, stride: u32) -> Self {
        LayerWorkload {
            in_h,
            in_w,
            c_in: c,
            c_out: c,
            k_h: k,
            k_w: k,
            stride,
            depthwise: true,
        }
    }

    pub fn out_h(&self) -> u64 {
        (self.in_h as u64).div_ceil(self.stride as u64)
    }

    pub fn out_w(&self) -> u64 {
        (self.in_w as u64).div_ceil(self.stride as u64)
    }

    /// Multiply-accumulate count; independent of any hardware config.
    pub fn macs(&self) -> u64 {
        let ci = if self.depthwise { 1 } else { self.c_in as u64 };
        self.out_h() * self.out_w() * self.c_out as u64 * ci * self.k_h as u64 * self.k_w as u64
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.in_h == 0
            || self.in_w == 0
            || self.c_in == 0
            || self.c_out == 0
            || self.k_h == 0
            || self.k_w == 0
            || self.stride == 0
        {
            return Err(format!("workload dims must all be >= 1: {self:?}"));
        }
        if self.depthwise && self.c_in != self.c_out {
            return Err(format!(
                "depthwise workload requires c_in == c_out, got {} != {}",
                self.c_in, self.c_out
            ));
        }
        Ok(())
    }
}

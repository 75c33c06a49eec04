use serde::{Deserialize, Serialize};

use super::AccelError;

/// Number of architectural parameters.
pub const PARAM_COUNT: usize = 7;

/// One-hot field widths per parameter, in the order of [`HwConfig::params`].
pub const PARAM_WIDTHS: [usize; PARAM_COUNT] = [4, 4, 2, 2, 8, 8, 8];

/// Length of the flattened one-hot encoding (sum of `PARAM_WIDTHS`).
pub const HW_ONEHOT_LEN: usize = 36;

/// Inclusive log2 ranges per parameter.
pub const PARAM_RANGES: [(u8, u8); PARAM_COUNT] = [
    (3, 6),   // block_in
    (3, 6),   // block_out
    (5, 6),   // uop width (bits)
    (5, 6),   // uop buffer (KiB)
    (13, 20), // inp buffer (bytes)
    (13, 20), // wgt buffer (bytes)
    (13, 20), // acc buffer (bytes)
];

pub const PARAM_NAMES: [&str; PARAM_COUNT] = [
    "block_in_log2",
    "block_out_log2",
    "uop_width_log2",
    "uop_buf_log2",
    "inp_buf_log2",
    "wgt_buf_log2",
    "acc_buf_log2",
];

/// Total on-chip SRAM budget: 2 MiB.
pub const SRAM_BUDGET_BYTES: u64 = 1 << 21;

/// One accelerator design point. All parameters are log2 values.
///
/// Serializes as a 7-integer array in field order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "[u8; PARAM_COUNT]", try_from = "[u8; PARAM_COUNT]")]
pub struct HwConfig {
    pub block_in_log2: u8,
    pub block_out_log2: u8,
    pub uop_width_log2: u8,
    pub uop_buf_log2: u8,
    pub inp_buf_log2: u8,
    pub wgt_buf_log2: u8,
    pub acc_buf_log2: u8,
}

/// Why a design point is not synthesizable.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Invalidity {
    /// Summed buffer address bits exceed the micro-op width.
    IsaWidth,
    /// Summed SRAM exceeds the 2 MiB budget.
    SramBudget,
}

/// Outcome of the analytical validity check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Validity {
    Valid,
    Invalid(Invalidity),
}

impl Validity {
    pub fn is_valid(self) -> bool {
        matches!(self, Validity::Valid)
    }
}

impl HwConfig {
    pub fn new(params: [u8; PARAM_COUNT]) -> Self {
        HwConfig {
            block_in_log2: params[0],
            block_out_log2: params[1],
            uop_width_log2: params[2],
            uop_buf_log2: params[3],
            inp_buf_log2: params[4],
            wgt_buf_log2: params[5],
            acc_buf_log2: params[6],
        }
    }

    pub fn params(&self) -> [u8; PARAM_COUNT] {
        [
            self.block_in_log2,
            self.block_out_log2,
            self.uop_width_log2,
            self.uop_buf_log2,
            self.inp_buf_log2,
            self.wgt_buf_log2,
            self.acc_buf_log2,
        ]
    }

    /// GEMM input-channel block size.
    pub fn block_in(&self) -> u64 {
        1 << self.block_in_log2
    }

    /// GEMM output-channel block size.
    pub fn block_out(&self) -> u64 {
        1 << self.block_out_log2
    }

    /// Micro-op width in bits (32 or 64).
    pub fn uop_width_bits(&self) -> u64 {
        1 << self.uop_width_log2
    }

    /// Micro-op buffer size in bytes (parameter is log2 KiB).
    pub fn uop_buf_bytes(&self) -> u64 {
        1 << (self.uop_buf_log2 + 10)
    }

    pub fn inp_buf_bytes(&self) -> u64 {
        1 << self.inp_buf_log2
    }

    pub fn wgt_buf_bytes(&self) -> u64 {
        1 << self.wgt_buf_log2
    }

    pub fn acc_buf_bytes(&self) -> u64 {
        1 << self.acc_buf_log2
    }

    fn check_ranges(&self) -> Result<(), AccelError> {
        for (i, v) in self.params().into_iter().enumerate() {
            let (lo, hi) = PARAM_RANGES[i];
            if v < lo || v > hi {
                return Err(AccelError::ParamOutOfRange {
                    name: PARAM_NAMES[i],
                    value: v,
                    lo,
                    hi,
                });
            }
        }
        Ok(())
    }

    /// Analytical validity check.
    ///
    /// A design is valid iff
    /// (a) the buffer address bits needed by a micro-op fit its width:
    ///     `(inp_buf - block_in) + (wgt_buf - block_in - block_out)
    ///      + (acc_buf - block_out - 2) <= uop width in bits`, and
    /// (b) on-chip SRAM stays within the 2 MiB budget. The three data
    ///     buffers are ping-pong pairs (double buffered so DMA can overlap
    ///     compute), so they count twice; the uop cache counts once.
    /// ISA-width failure is reported in preference to SRAM-budget failure
    /// when both trip.
    pub fn validity(&self) -> Result<Validity, AccelError> {
        self.check_ranges()?;
        let inp_addr = self.inp_buf_log2 as i64 - self.block_in_log2 as i64;
        let wgt_addr =
            self.wgt_buf_log2 as i64 - self.block_in_log2 as i64 - self.block_out_log2 as i64;
        let acc_addr = self.acc_buf_log2 as i64 - self.block_out_log2 as i64 - 2;
        if inp_addr + wgt_addr + acc_addr > self.uop_width_bits() as i64 {
            return Ok(Validity::Invalid(Invalidity::IsaWidth));
        }
        let sram = 2 * (self.inp_buf_bytes() + self.wgt_buf_bytes() + self.acc_buf_bytes())
            + self.uop_buf_bytes();
        if sram > SRAM_BUDGET_BYTES {
            return Ok(Validity::Invalid(Invalidity::SramBudget));
        }
        Ok(Validity::Valid)
    }

    pub fn is_valid(&self) -> Result<bool, AccelError> {
        Ok(self.validity()?.is_valid())
    }

    /// Flattened one-hot encoding: 36 entries, exactly 7 ones, parameter-major.
    pub fn encode_onehot(&self) -> Vec<f64> {
        let mut v = vec![0.0; HW_ONEHOT_LEN];
        let mut base = 0;
        for (i, p) in self.params().into_iter().enumerate() {
            let (lo, _) = PARAM_RANGES[i];
            v[base + (p - lo) as usize] = 1.0;
            base += PARAM_WIDTHS[i];
        }
        v
    }

    /// Inverse of [`encode_onehot`] by per-field argmax; accepts any real
    /// vector of length 36 (softmax-relaxed encodings included).
    pub fn decode_onehot(v: &[f64]) -> Self {
        assert_eq!(v.len(), HW_ONEHOT_LEN, "hw one-hot must have length 36");
        let mut params = [0u8; PARAM_COUNT];
        let mut base = 0;
        for i in 0..PARAM_COUNT {
            let field = &v[base..base + PARAM_WIDTHS[i]];
            let best = field
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                .map(|(j, _)| j)
                .unwrap();
            params[i] = PARAM_RANGES[i].0 + best as u8;
            base += PARAM_WIDTHS[i];
        }
        HwConfig::new(params)
    }
}

impl From<HwConfig> for [u8; PARAM_COUNT] {
    fn from(c: HwConfig) -> Self {
        c.params()
    }
}

impl TryFrom<[u8; PARAM_COUNT]> for HwConfig {
    type Error = String;

    fn try_from(p: [u8; PARAM_COUNT]) -> Result<Self, String> {
        let c = HwConfig::new(p);
        c.check_ranges().map_err(|e| e.to_string())?;
        Ok(c)
    }
}

impl std::fmt::Display for HwConfig {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let p = self.params();
        write!(
            f,
            "({},{},{},{},{},{},{})",
            p[0], p[1], p[2], p[3], p[4], p[5], p[6]
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lexicographic_minimum_is_valid() {
        // addr bits 10 + 7 + 8 = 25 <= 32, SRAM 2*24 KiB + 32 KiB <= 2 MiB
        let c = HwConfig::new([3, 3, 5, 5, 13, 13, 13]);
        assert_eq!(c.validity().unwrap(), Validity::Valid);
    }

    #[test]
    fn all_max_fails_sram_budget() {
        // addr bits 14 + 8 + 12 = 34 <= 64, but the buffers alone
        // (3 MiB + 64 KiB) already exceed the 2 MiB budget
        let c = HwConfig::new([6, 6, 6, 6, 20, 20, 20]);
        assert_eq!(c.validity().unwrap(), Validity::Invalid(Invalidity::SramBudget));
    }

    #[test]
    fn narrow_uop_wide_buffers_fails_isa_width() {
        // addr bits 17 + 14 + 15 = 46 > 32; ISA failure takes precedence
        // even though SRAM is also over budget.
        let c = HwConfig::new([3, 3, 5, 5, 20, 20, 20]);
        assert_eq!(c.validity().unwrap(), Validity::Invalid(Invalidity::IsaWidth));
    }

    #[test]
    fn out_of_range_parameter_is_an_error() {
        let c = HwConfig::new([2, 3, 5, 5, 13, 13, 13]);
        assert!(matches!(
            c.validity(),
            Err(AccelError::ParamOutOfRange { name: "block_in_log2", .. })
        ));
    }

    #[test]
    fn onehot_roundtrip_and_shape() {
        let c = HwConfig::new([4, 6, 5, 6, 15, 18, 17]);
        let v = c.encode_onehot();
        assert_eq!(v.len(), HW_ONEHOT_LEN);
        assert_eq!(v.iter().filter(|&&x| x == 1.0).count(), PARAM_COUNT);
        assert_eq!(HwConfig::decode_onehot(&v), c);
    }

    #[test]
    fn json_roundtrip_is_a_seven_int_array() {
        let c = HwConfig::new([4, 4, 5, 5, 15, 18, 17]);
        let s = serde_json::to_string(&c).unwrap();
        assert_eq!(s, "[4,4,5,5,15,18,17]");
        let back: HwConfig = serde_json::from_str(&s).unwrap();
        assert_eq!(back, c);
    }
}

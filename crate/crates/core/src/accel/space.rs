use super::config::{HwConfig, PARAM_COUNT, PARAM_RANGES};

/// A (possibly restricted) rectangular slice of the design space.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HwSpace {
    /// Inclusive per-parameter log2 ranges, in [`HwConfig::params`] order.
    pub ranges: [(u8, u8); PARAM_COUNT],
}

impl HwSpace {
    /// The full 32768-point design space.
    pub fn full() -> Self {
        HwSpace { ranges: PARAM_RANGES }
    }

    /// Restrict one parameter to a single value; for carving out test slices.
    pub fn pinned(mut self, param: usize, value: u8) -> Self {
        self.ranges[param] = (value, value);
        self
    }

    /// Default template H0: a 16x16 GEMM core with 32 KiB / 256 KiB / 128 KiB
    /// data buffers and a 32 KiB uop cache. Its address-bit sum is exactly 32.
    pub fn default_template() -> HwConfig {
        HwConfig::new([4, 4, 5, 5, 15, 18, 17])
    }

    pub fn cardinality(&self) -> u64 {
        self.ranges
            .iter()
            .map(|&(lo, hi)| (hi - lo + 1) as u64)
            .product()
    }

    /// All configs in lexicographic parameter order (last parameter fastest).
    pub fn enumerate(&self) -> impl Iterator<Item = HwConfig> + '_ {
        let sizes: Vec<u64> = self
            .ranges
            .iter()
            .map(|&(lo, hi)| (hi - lo + 1) as u64)
            .collect();
        let total = self.cardinality();
        (0..total).map(move |mut idx| {
            let mut params = [0u8; PARAM_COUNT];
            for i in (0..PARAM_COUNT).rev() {
                let s = sizes[i];
                params[i] = self.ranges[i].0 + (idx % s) as u8;
                idx /= s;
            }
            HwConfig::new(params)
        })
    }

    /// All valid configs, in enumeration order.
    pub fn valid_configs(&self) -> Vec<HwConfig> {
        self.enumerate()
            .filter(|c| c.is_valid().expect("ranges are within Table bounds"))
            .collect()
    }

    /// Exact fraction of valid configs over the full enumeration.
    pub fn valid_fraction(&self) -> f64 {
        let total = self.cardinality();
        let valid = self
            .enumerate()
            .filter(|c| c.is_valid().expect("ranges are within Table bounds"))
            .count() as u64;
        valid as f64 / total as f64
    }
}

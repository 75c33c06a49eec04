use serde::{Deserialize, Serialize};

use super::GradError;

/// Median/IQR scaler for regression targets.
///
/// `transform(x) = (x - median) / (q3 - q1)` with linear-interpolation
/// quantiles. A degenerate IQR (constant targets) is replaced by 1 and
/// flagged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustScaler {
    pub median: f64,
    pub iqr: f64,
    pub degenerate: bool,
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        let frac = pos - lo as f64;
        sorted[lo] * (1.0 - frac) + sorted[hi] * frac
    }
}

impl RobustScaler {
    pub fn fit(targets: &[f64]) -> Result<Self, GradError> {
        if targets.len() < 2 {
            return Err(GradError::TooFewSamples(targets.len()));
        }
        let mut sorted = targets.to_vec();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let median = quantile(&sorted, 0.5);
        let iqr = quantile(&sorted, 0.75) - quantile(&sorted, 0.25);
        if iqr > 0.0 {
            Ok(RobustScaler { median, iqr, degenerate: false })
        } else {
            Ok(RobustScaler { median, iqr: 1.0, degenerate: true })
        }
    }

    /// Identity scaler; lets callers bypass normalization uniformly.
    pub fn identity() -> Self {
        RobustScaler { median: 0.0, iqr: 1.0, degenerate: false }
    }

    pub fn transform(&self, x: f64) -> f64 {
        (x - self.median) / self.iqr
    }

    pub fn inverse_transform(&self, y: f64) -> f64 {
        y * self.iqr + self.median
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_maps_to_zero() {
        let s = RobustScaler::fit(&[1.0, 2.0, 3.0, 100.0]).unwrap();
        assert_eq!(s.transform(2.5), 0.0);
    }

    #[test]
    fn inverse_roundtrip() {
        let data = [3.0, -1.5, 8.25, 0.0, 99.0, 2.0];
        let s = RobustScaler::fit(&data).unwrap();
        for x in data {
            assert!((s.inverse_transform(s.transform(x)) - x).abs() < 1e-9);
        }
    }

    #[test]
    fn constant_targets_are_flagged() {
        let s = RobustScaler::fit(&[4.0, 4.0, 4.0]).unwrap();
        assert!(s.degenerate);
        assert_eq!(s.iqr, 1.0);
        assert_eq!(s.transform(4.0), 0.0);
    }

    #[test]
    fn empty_fit_is_an_error() {
        assert!(matches!(
            RobustScaler::fit(&[]),
            Err(GradError::TooFewSamples(0))
        ));
    }
}

use super::SurrogateError;

/// Kendall rank correlation (tau-a): `(concordant - discordant) / (n(n-1)/2)`.
/// Tied pairs count as neither concordant nor discordant.
pub fn kendall_tau(pred: &[f64], truth: &[f64]) -> Result<f64, SurrogateError> {
    if pred.len() != truth.len() {
        return Err(SurrogateError::LengthMismatch(pred.len(), truth.len()));
    }
    let n = pred.len();
    if n < 2 {
        return Err(SurrogateError::TooFewPoints(n));
    }
    let mut concordant = 0i64;
    let mut discordant = 0i64;
    for i in 0..n {
        for j in (i + 1)..n {
            let dp = pred[i] - pred[j];
            let dt = truth[i] - truth[j];
            let s = dp * dt;
            if s > 0.0 {
                concordant += 1;
            } else if s < 0.0 {
                discordant += 1;
            }
        }
    }
    let pairs = (n * (n - 1) / 2) as f64;
    Ok((concordant - discordant) as f64 / pairs)
}

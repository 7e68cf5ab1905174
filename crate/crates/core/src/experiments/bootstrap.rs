//! Percentile-bootstrap confidence intervals for mean accuracy.

use rand::Rng;

use super::ExperimentError;
use crate::analysis::percentile;
use crate::rng::seeded_rng;

/// Percentile bootstrap CI for the mean of `outcomes` (typically 0/1
/// correctness values): resample with replacement, take the empirical
/// alpha/2 and 1 - alpha/2 quantiles of the resampled means.
pub fn bootstrap_ci(
    outcomes: &[f64],
    level: f64,
    resamples: usize,
    seed: u64,
) -> Result<(f64, f64), ExperimentError> {
    if outcomes.is_empty() {
        return Err(ExperimentError::EmptyOutcomes);
    }
    if let Some(index) = outcomes.iter().position(|v| !v.is_finite()) {
        return Err(ExperimentError::NonFiniteOutcome { index });
    }
    if !(0.0 < level && level < 1.0) {
        return Err(ExperimentError::BadLevel { level });
    }
    if resamples == 0 {
        return Err(ExperimentError::BadResamples);
    }
    let n = outcomes.len();
    let mut rng = seeded_rng(seed);
    let mut means = Vec::with_capacity(resamples);
    for _ in 0..resamples {
        let mut sum = 0.0;
        for _ in 0..n {
            sum += outcomes[rng.gen_range(0..n)];
        }
        means.push(sum / n as f64);
    }
    let alpha = (1.0 - level) / 2.0;
    let lo = percentile(&means, 100.0 * alpha).expect("means are finite and non-empty");
    let hi = percentile(&means, 100.0 * (1.0 - alpha)).expect("means are finite and non-empty");
    Ok((lo, hi))
}

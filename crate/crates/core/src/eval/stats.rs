use super::EvalError;

/// z-value of a two-sided 95% normal interval.
pub const Z95: f64 = 1.96;

pub fn mean(samples: &[f64]) -> f64 {
    samples.iter().sum::<f64>() / samples.len() as f64
}

/// Population standard deviation (n denominator).
pub fn population_sd(samples: &[f64]) -> f64 {
    let m = mean(samples);
    let ss: f64 = samples.iter().map(|x| (x - m) * (x - m)).sum();
    (ss / samples.len() as f64).sqrt()
}

/// Normal-approximation 95% interval for the mean: `mean ± 1.96·sd/√n`.
pub fn ci_95(samples: &[f64]) -> Result<(f64, f64), EvalError> {
    if samples.len() < 2 {
        return Err(EvalError::TooFewSamples(samples.len()));
    }
    let m = mean(samples);
    let half = Z95 * population_sd(samples) / (samples.len() as f64).sqrt();
    Ok((m - half, m + half))
}

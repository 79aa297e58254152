//! Block statistics and the summary figures reported alongside them.

use statrs::distribution::{Beta, Binomial, ContinuousCDF, DiscreteCDF};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StatsError {
    #[error("need at least one value")]
    Empty,
    #[error("block size must be positive")]
    ZeroBlockSize,
    #[error("block has {errors} errors but only {block_size} trials")]
    CountExceedsBlock { errors: u64, block_size: u64 },
}

/// Error counts over equal-sized consecutive blocks of trials.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockStats {
    pub block_errors: Vec<u64>,
    pub block_size: u64,
    pub total_trials: u64,
    /// `100 · Σ errors / total_trials`.
    pub error_pct: f64,
    /// Sample variance (n − 1 denominator) of the per-block counts; zero for
    /// a single block.
    pub variance: f64,
}

impl BlockStats {
    pub fn from_blocks(block_errors: Vec<u64>, block_size: u64) -> Result<Self, StatsError> {
        if block_errors.is_empty() {
            return Err(StatsError::Empty);
        }
        if block_size == 0 {
            return Err(StatsError::ZeroBlockSize);
        }
        if let Some(&errors) = block_errors.iter().find(|&&e| e > block_size) {
            return Err(StatsError::CountExceedsBlock { errors, block_size });
        }
        let n = block_errors.len() as u64;
        let total_trials = block_size * n;
        let total_errors: u64 = block_errors.iter().sum();
        let error_pct = 100.0 * total_errors as f64 / total_trials as f64;
        let variance = sample_variance(&block_errors.iter().map(|&e| e as f64).collect::<Vec<_>>());
        Ok(Self {
            block_errors,
            block_size,
            total_trials,
            error_pct,
            variance,
        })
    }

    /// Splits a trial-by-trial error sequence into blocks. Trailing trials
    /// that do not fill a block are dropped.
    pub fn from_trials(
        errors: impl IntoIterator<Item = bool>,
        block_size: u64,
    ) -> Result<Self, StatsError> {
        if block_size == 0 {
            return Err(StatsError::ZeroBlockSize);
        }
        let mut blocks = Vec::new();
        let (mut in_block, mut count) = (0u64, 0u64);
        for e in errors {
            count += u64::from(e);
            in_block += 1;
            if in_block == block_size {
                blocks.push(count);
                in_block = 0;
                count = 0;
            }
        }
        Self::from_blocks(blocks, block_size)
    }

    pub fn total_errors(&self) -> u64 {
        self.block_errors.iter().sum()
    }

    pub fn error_rate(&self) -> f64 {
        self.total_errors() as f64 / self.total_trials as f64
    }
}

pub fn mean(values: &[f64]) -> Result<f64, StatsError> {
    if values.is_empty() {
        return Err(StatsError::Empty);
    }
    Ok(values.iter().sum::<f64>() / values.len() as f64)
}

/// Unbiased sample variance; zero for fewer than two values.
pub fn sample_variance(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let m = values.iter().sum::<f64>() / values.len() as f64;
    values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (values.len() - 1) as f64
}

/// Unweighted mean of per-item correct percentages.
pub fn mean_accuracy(correct_pct: &[f64]) -> Result<f64, StatsError> {
    mean(correct_pct)
}

/// Unweighted mean of the per-operation error percentages.
pub fn fused_error_summary(stats: &[BlockStats]) -> Result<f64, StatsError> {
    mean(&stats.iter().map(|s| s.error_pct).collect::<Vec<_>>())
}

/// Standard error of a proportion `p` estimated from `n` trials.
pub fn standard_error(p: f64, n: u64) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}

/// `P(X ≤ k)` for `X ~ Binomial(n, p)`.
pub fn binomial_cdf(k: u64, n: u64, p: f64) -> f64 {
    Binomial::new(p.clamp(0.0, 1.0), n)
        .expect("valid binomial")
        .cdf(k)
}

/// Exact (Clopper–Pearson) two-sided interval for a binomial proportion.
pub fn clopper_pearson(successes: u64, n: u64, confidence: f64) -> (f64, f64) {
    assert!(n > 0 && successes <= n, "need 0 <= successes <= n, n > 0");
    let alpha = 1.0 - confidence;
    let (k, n) = (successes as f64, n as f64);
    let lower = if successes == 0 {
        0.0
    } else {
        Beta::new(k, n - k + 1.0)
            .expect("positive shapes")
            .inverse_cdf(alpha / 2.0)
    };
    let upper = if k == n {
        1.0
    } else {
        Beta::new(k + 1.0, n - k)
            .expect("positive shapes")
            .inverse_cdf(1.0 - alpha / 2.0)
    };
    (lower, upper)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn block_arithmetic() {
        let s = BlockStats::from_blocks(vec![7, 2, 2, 4], 50).unwrap();
        assert_eq!(s.total_trials, 200);
        assert_eq!(s.error_pct, 7.5);
        // mean 3.75; squared deviations 10.5625 + 3.0625 + 3.0625 + 0.0625 = 16.75; / 3
        assert!((s.variance - 16.75 / 3.0).abs() < 1e-12);
        let flat = BlockStats::from_blocks(vec![2, 2, 2, 2], 50).unwrap();
        assert_eq!(flat.variance, 0.0);
    }

    #[test]
    fn block_validation() {
        assert_eq!(BlockStats::from_blocks(vec![], 50), Err(StatsError::Empty));
        assert_eq!(
            BlockStats::from_blocks(vec![1], 0),
            Err(StatsError::ZeroBlockSize)
        );
        assert!(matches!(
            BlockStats::from_blocks(vec![51], 50),
            Err(StatsError::CountExceedsBlock { .. })
        ));
    }

    #[test]
    fn blocks_from_trials() {
        let trials = (0..10).map(|i| i % 3 == 0); // errors at 0, 3, 6, 9
        let s = BlockStats::from_trials(trials, 5).unwrap();
        assert_eq!(s.block_errors, vec![2, 2]);
    }

    #[test]
    fn means() {
        assert_eq!(mean_accuracy(&[100.0]), Ok(100.0));
        assert_eq!(mean_accuracy(&[]), Err(StatsError::Empty));
        let zero = BlockStats::from_blocks(vec![0, 0, 0, 0], 50).unwrap();
        assert_eq!(fused_error_summary(&[zero.clone(), zero]), Ok(0.0));
        let one = BlockStats::from_blocks(vec![3, 1, 2, 2], 50).unwrap();
        assert_eq!(fused_error_summary(&[one]), Ok(4.0));
    }

    #[test]
    fn binomial_cdf_small_case() {
        // n = 2, p = 0.5: P(X <= 0) = 0.25, P(X <= 1) = 0.75
        assert!((binomial_cdf(0, 2, 0.5) - 0.25).abs() < 1e-12);
        assert!((binomial_cdf(1, 2, 0.5) - 0.75).abs() < 1e-12);
        assert_eq!(binomial_cdf(2, 2, 0.5), 1.0);
    }

    #[test]
    fn clopper_pearson_closed_forms() {
        // k = 0: upper = 1 - (alpha/2)^(1/n); k = n: lower = (alpha/2)^(1/n)
        let (lo, hi) = clopper_pearson(0, 20, 0.95);
        assert_eq!(lo, 0.0);
        assert!((hi - (1.0 - 0.025f64.powf(1.0 / 20.0))).abs() < 1e-9);
        let (lo, hi) = clopper_pearson(20, 20, 0.95);
        assert!((lo - 0.025f64.powf(1.0 / 20.0)).abs() < 1e-9);
        assert_eq!(hi, 1.0);
        let (lo, hi) = clopper_pearson(15, 200, 0.95);
        assert!(lo < 0.075 && 0.075 < hi);
    }
}

//! Summaries for checking samplers: batch-means standard errors, the Geweke
//! joint-distribution test and the Kolmogorov-Smirnov distance.

use alloc::vec::Vec;

#[allow(unused_imports)] // std links in via dependency features and shadows it
use num_traits::Float;

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance.
pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

/// Standard error of the mean of independent draws.
pub fn iid_standard_error(xs: &[f64]) -> f64 {
    (variance(xs) / xs.len() as f64).sqrt()
}

/// Standard error of the mean of a correlated series from `batches`
/// non-overlapping batch means. Trailing draws that do not fill a batch are
/// ignored.
pub fn batch_means_standard_error(xs: &[f64], batches: usize) -> f64 {
    let size = xs.len() / batches;
    let means: Vec<f64> = xs.chunks_exact(size).take(batches).map(mean).collect();
    (variance(&means) / means.len() as f64).sqrt()
}

/// Comparison of one statistic between independent forward draws and a
/// successive-conditional chain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GewekeComparison {
    pub forward_mean: f64,
    pub forward_se: f64,
    pub chain_mean: f64,
    pub chain_se: f64,
    /// Difference of the means in units of its standard error.
    pub z: f64,
}

pub fn geweke_compare(forward: &[f64], chain: &[f64], batches: usize) -> GewekeComparison {
    let (fm, fs) = (mean(forward), iid_standard_error(forward));
    let (cm, cs) = (mean(chain), batch_means_standard_error(chain, batches));
    GewekeComparison {
        forward_mean: fm,
        forward_se: fs,
        chain_mean: cm,
        chain_se: cs,
        z: (fm - cm) / (fs * fs + cs * cs).sqrt(),
    }
}

/// `sup_x |F_n(x) - F(x)|` for the empirical distribution of `xs`.
pub fn ks_statistic(xs: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut sorted = xs.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// Asymptotic one-sample KS critical value at level 0.01.
pub fn ks_critical_001(n: usize) -> f64 {
    1.628 / (n as f64).sqrt()
}

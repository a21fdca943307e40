//! Batch-mean errors and bootstrap over batches.

use rand::Rng;

use crate::rng::stream_rng;
use crate::stats::histogram::Estimate;

/// Mean of `xs` with the standard error of the mean.
pub fn mean_stderr(xs: &[f64]) -> Estimate {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return Estimate { value: f64::NAN, stderr: f64::NAN };
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return Estimate { value: mean, stderr: 0.0 };
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Estimate { value: mean, stderr: (var / n).sqrt() }
}

/// Splits `values` (one per sample, in sample order) into `batches`
/// interleaved batches and returns the pooled mean with the batch-means error.
pub fn batch_means(values: &[f64], batches: usize) -> Estimate {
    let b = batches.max(1).min(values.len().max(1));
    let mut sums = vec![0.0; b];
    let mut counts = vec![0usize; b];
    for (i, v) in values.iter().enumerate() {
        sums[i % b] += v;
        counts[i % b] += 1;
    }
    let means: Vec<f64> = sums.iter().zip(&counts).filter(|(_, &c)| c > 0).map(|(s, &c)| s / c as f64).collect();
    let pooled = values.iter().sum::<f64>() / values.len() as f64;
    Estimate { value: pooled, stderr: mean_stderr(&means).stderr }
}

/// Draws `replicates` bootstrap resamples of `0..n` (indices with
/// replacement) and evaluates `stat` on each.
pub fn bootstrap<F: FnMut(&[usize]) -> f64>(n: usize, replicates: usize, seed: u64, mut stat: F) -> Vec<f64> {
    let mut rng = stream_rng(seed, 0x626f_6f74);
    let mut idx = vec![0usize; n];
    (0..replicates)
        .map(|_| {
            idx.iter_mut().for_each(|i| *i = rng.random_range(0..n));
            stat(&idx)
        })
        .collect()
}

/// Linear-interpolated empirical quantile; `xs` need not be sorted.
pub fn quantile(xs: &[f64], q: f64) -> f64 {
    let mut v: Vec<f64> = xs.iter().copied().filter(|x| x.is_finite()).collect();
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(|a, b| a.total_cmp(b));
    let pos = q.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let i = pos.floor() as usize;
    let frac = pos - i as f64;
    if i + 1 < v.len() { v[i] * (1.0 - frac) + v[i + 1] * frac } else { v[i] }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_and_error() {
        let e = mean_stderr(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(e.value, 2.5);
        assert!((e.stderr - (5.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn batch_means_of_constant() {
        let e = batch_means(&[2.0; 100], 32);
        assert_eq!(e.value, 2.0);
        assert_eq!(e.stderr, 0.0);
    }

    #[test]
    fn bootstrap_of_mean_matches_stderr() {
        let xs: Vec<f64> = (0..200).map(|i| ((i * 37) % 101) as f64).collect();
        let reps = bootstrap(xs.len(), 4000, 1, |idx| idx.iter().map(|&i| xs[i]).sum::<f64>() / idx.len() as f64);
        let spread = mean_stderr(&reps).stderr * (reps.len() as f64).sqrt();
        let se = mean_stderr(&xs).stderr;
        assert!((spread / se - 1.0).abs() < 0.1, "{spread} vs {se}");
    }

    #[test]
    fn quantiles() {
        let xs = [3.0, 1.0, 2.0, 5.0, 4.0];
        assert_eq!(quantile(&xs, 0.0), 1.0);
        assert_eq!(quantile(&xs, 0.5), 3.0);
        assert_eq!(quantile(&xs, 1.0), 5.0);
        assert_eq!(quantile(&xs, 0.125), 1.5);
    }
}

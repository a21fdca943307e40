//! Cluster-size histograms and the estimators built on them.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::percolation::{Grower, GrowthOptions};
use crate::rng::derive_seed;

/// Counts of `|C(0)|` over independent samples. Samples that reached the
/// cap are counted in `truncated` only.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SizeHistogram {
    pub counts: BTreeMap<usize, u64>,
    pub total: u64,
    pub cap: usize,
    pub truncated: u64,
}

impl SizeHistogram {
    pub fn new(cap: usize) -> Self {
        Self { counts: BTreeMap::new(), total: 0, cap, truncated: 0 }
    }

    pub fn record(&mut self, size: usize, truncated: bool) {
        self.total += 1;
        if truncated {
            self.truncated += 1;
        } else {
            debug_assert!(size <= self.cap);
            *self.counts.entry(size).or_insert(0) += 1;
        }
    }

    /// Associative, commutative merge.
    pub fn merge(&mut self, other: &SizeHistogram) {
        assert_eq!(self.cap, other.cap, "merging histograms with different caps");
        for (&n, &c) in &other.counts {
            *self.counts.entry(n).or_insert(0) += c;
        }
        self.total += other.total;
        self.truncated += other.truncated;
    }

    pub fn count(&self, n: usize) -> u64 {
        self.counts.get(&n).copied().unwrap_or(0)
    }

    /// Empirical `P(|C(0)| = n)`.
    pub fn pmf(&self, n: usize) -> f64 {
        if self.total == 0 {
            return 0.0;
        }
        self.count(n) as f64 / self.total as f64
    }

    /// Binomial standard error of [`SizeHistogram::pmf`].
    pub fn pmf_stderr(&self, n: usize) -> f64 {
        if self.total == 0 {
            return 0.0;
        }
        let p = self.pmf(n);
        (p * (1.0 - p) / self.total as f64).sqrt()
    }

    /// Empirical `P(|C(0)| >= n)`, truncated samples included.
    pub fn tail(&self, n: usize) -> f64 {
        let below: u64 = self.counts.range(..n).map(|(_, c)| c).sum();
        1.0 - below as f64 / self.total as f64
    }

    fn check(&self, z: f64) -> Result<()> {
        if !(0.0..=1.0).contains(&z) {
            return Err(invalid(format!("z = {z} outside [0,1]")));
        }
        if self.total == 0 {
            return Err(crate::error::Error::InsufficientData("empty histogram".into()));
        }
        Ok(())
    }

    /// Estimate of `chi_z = E[|C| z^|C|]`. Truncated samples are left out, so
    /// with truncation at `z = 1` this is a lower bound.
    pub fn susceptibility(&self, z: f64) -> Result<Estimate> {
        self.check(z)?;
        Ok(self.sample_mean(|n| n as f64 * z.powf(n as f64), 0.0))
    }

    /// Estimate of `M_z = 1 - E[z^|C|]`. A truncated sample counts as touching
    /// a green site; the bias from that is at most `z^cap` per sample.
    pub fn magnetization(&self, z: f64) -> Result<Estimate> {
        self.check(z)?;
        Ok(self.sample_mean(|n| 1.0 - z.powf(n as f64), 1.0))
    }

    /// Mean and iid standard error of `g(|C|)`, with `g_trunc` used for
    /// truncated samples.
    fn sample_mean(&self, g: impl Fn(usize) -> f64, g_trunc: f64) -> Estimate {
        let n = self.total as f64;
        let mut s = self.truncated as f64 * g_trunc;
        let mut s2 = self.truncated as f64 * g_trunc * g_trunc;
        for (&size, &c) in &self.counts {
            let v = g(size);
            s += c as f64 * v;
            s2 += c as f64 * v * v;
        }
        let mean = s / n;
        let var = if self.total > 1 { ((s2 / n - mean * mean) * n / (n - 1.0)).max(0.0) } else { 0.0 };
        Estimate { value: mean, stderr: (var / n).sqrt() }
    }
}

/// A Monte Carlo value with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
}

/// Histogram of `|C(0)|` over `samples` clusters with seeds derived from
/// `seed`. The result does not depend on the number of worker threads.
pub fn estimate_size_pmf(p: f64, d: usize, samples: u64, cap: usize, seed: u64) -> Result<SizeHistogram> {
    if samples < 1 {
        return Err(invalid("samples must be at least 1"));
    }
    Grower::new(p, d)?;
    if cap < 1 {
        return Err(invalid("cap must be at least 1"));
    }
    let opts = GrowthOptions::sites_only(cap);
    let hist = (0..samples)
        .into_par_iter()
        .fold(
            || (Grower::new(p, d).expect("validated"), SizeHistogram::new(cap)),
            |(mut g, mut h), i| {
                let s = g.grow(derive_seed(seed, i), opts).expect("validated");
                h.record(s.size, s.truncated);
                (g, h)
            },
        )
        .map(|(_, h)| h)
        .reduce(
            || SizeHistogram::new(cap),
            |mut a, b| {
                a.merge(&b);
                a
            },
        );
    Ok(hist)
}

/// Exact one-dimensional law `P(|C| = n) = n p^{n-1} (1-p)^2`.
pub fn line_pmf(p: f64, n: usize) -> f64 {
    n as f64 * p.powi(n as i32 - 1) * (1.0 - p) * (1.0 - p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn p_zero_histogram() {
        let h = estimate_size_pmf(0.0, 5, 1000, 10, 1).unwrap();
        assert_eq!(h.count(1), 1000);
        assert_eq!(h.counts.len(), 1);
        for z in [0.0, 0.3, 1.0] {
            assert_abs_diff_eq!(h.susceptibility(z).unwrap().value, z, epsilon = 1e-15);
            assert_abs_diff_eq!(h.magnetization(z).unwrap().value, 1.0 - z, epsilon = 1e-15);
        }
    }

    #[test]
    fn trivial_values() {
        let h = estimate_size_pmf(0.3, 1, 5000, 1000, 2).unwrap();
        assert_eq!(h.susceptibility(0.0).unwrap().value, 0.0);
        assert_eq!(h.magnetization(0.0).unwrap().value, 1.0);
        assert_eq!(h.truncated, 0);
        assert_abs_diff_eq!(h.magnetization(1.0).unwrap().value, 0.0, epsilon = 1e-15);
        assert!(h.susceptibility(1.5).is_err());
    }

    #[test]
    fn counts_add_up_and_merge() {
        let a = estimate_size_pmf(0.4, 2, 3000, 50, 3).unwrap();
        assert_eq!(a.counts.values().sum::<u64>() + a.truncated, a.total);
        assert!(a.truncated > 0);
        let mut m = a.clone();
        m.merge(&SizeHistogram::new(50));
        assert_eq!(m, a);
    }

    #[test]
    fn line_susceptibility_matches_closed_form() {
        // sum_n n^2 p^{n-1} (1-p)^2 z^n = (1-p)^2 z (1 + pz) / (1 - pz)^3
        let (p, z) = (0.3, 0.9);
        let h = estimate_size_pmf(p, 1, 200_000, 10_000, 4).unwrap();
        let exact = (1.0 - p) * (1.0 - p) * z * (1.0 + p * z) / (1.0 - p * z).powi(3);
        let est = h.susceptibility(z).unwrap();
        assert!((est.value - exact).abs() < 3.5 * est.stderr, "{est:?} vs {exact}");
    }

    #[test]
    fn monotone_in_z_and_derivative_consistency() {
        let h = estimate_size_pmf(0.12, 4, 20_000, 100_000, 5).unwrap();
        let zs: Vec<f64> = (0..=20).map(|i| i as f64 / 20.0).collect();
        let chi: Vec<f64> = zs.iter().map(|&z| h.susceptibility(z).unwrap().value).collect();
        let mag: Vec<f64> = zs.iter().map(|&z| h.magnetization(z).unwrap().value).collect();
        assert!(chi.windows(2).all(|w| w[0] <= w[1]));
        assert!(mag.windows(2).all(|w| w[0] >= w[1]));
        // chi_z = -z dM/dz, central difference
        let hstep = 1e-5;
        for z in [0.2, 0.5, 0.8] {
            let dm = (h.magnetization(z + hstep).unwrap().value - h.magnetization(z - hstep).unwrap().value)
                / (2.0 * hstep);
            let chi = h.susceptibility(z).unwrap().value;
            assert!((chi + z * dm).abs() < 1e-6 * chi.max(1.0), "z={z}");
        }
    }

    #[test]
    fn thread_count_does_not_matter() {
        let a = estimate_size_pmf(0.2, 3, 2000, 1000, 6).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
        let b = pool.install(|| estimate_size_pmf(0.2, 3, 2000, 1000, 6).unwrap());
        assert_eq!(a, b);
    }
}

//! Power-law fits of cluster-size laws over dyadic bins.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};
use crate::stats::histogram::SizeHistogram;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentFit {
    /// Fitted slope of `log P(n)` against `log n`.
    pub exponent: f64,
    pub stderr: f64,
    /// Amplitude `A` in `P(n) ~ A n^exponent`.
    pub amplitude: f64,
    pub n_range: (usize, usize),
    pub bins: usize,
    /// Weighted residual sum of squares per degree of freedom.
    pub chi2_dof: f64,
}

/// One dyadic bin `[lo, hi]` carrying total probability `mass`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bin {
    pub lo: usize,
    pub hi: usize,
    pub mass: f64,
    /// Inverse variance of `log(mass)`; equal weights for exact data.
    pub weight: f64,
}

/// Dyadic bins `[2^j, 2^{j+1} - 1]` lying entirely inside `[n_min, n_max]`.
pub fn dyadic_bins(n_min: usize, n_max: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut lo = n_min.max(1).next_power_of_two();
    while lo.saturating_mul(2) - 1 <= n_max {
        out.push((lo, 2 * lo - 1));
        lo *= 2;
    }
    out
}

/// Average of `n^-tau` over the integers of a bin.
fn bin_mean_power(lo: usize, hi: usize, tau: f64) -> f64 {
    let s: f64 = (lo..=hi).map(|n| (n as f64).powf(-tau)).sum();
    s / (hi - lo + 1) as f64
}

/// Fits `P(n) = A n^-tau` to binned masses.
///
/// Each bin's average `P` is placed at the effective centre `n*` where the
/// model equals its own bin average, iterating `tau <-> n*` to a fixed point,
/// so binning introduces no slope bias for an exact power law.
pub fn fit_bins(bins: &[Bin]) -> Result<ExponentFit> {
    let used: Vec<&Bin> = bins.iter().filter(|b| b.mass > 0.0 && b.weight > 0.0).collect();
    if used.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "{} occupied bins in range, need at least 3",
            used.len()
        )));
    }
    let y: Vec<f64> = used.iter().map(|b| (b.mass / (b.hi - b.lo + 1) as f64).ln()).collect();
    let w: Vec<f64> = used.iter().map(|b| b.weight).collect();
    let mut tau = 1.5;
    let mut result = None;
    for _ in 0..100 {
        let x: Vec<f64> = used
            .iter()
            .map(|b| -bin_mean_power(b.lo, b.hi, tau).ln() / tau)
            .collect();
        let line = weighted_line(&x, &y, &w);
        let new_tau = -line.slope;
        let done = (new_tau - tau).abs() < 1e-13;
        tau = if new_tau.is_finite() && new_tau.abs() > 1e-6 { new_tau } else { tau };
        result = Some(line);
        if done {
            break;
        }
    }
    let line = result.expect("at least one iteration");
    let dof = used.len() - 2;
    let chi2_dof = if dof > 0 { line.chi2 / dof as f64 } else { 0.0 };
    Ok(ExponentFit {
        exponent: line.slope,
        stderr: line.slope_stderr * chi2_dof.max(1.0).sqrt(),
        amplitude: line.intercept.exp(),
        n_range: (used[0].lo, used[used.len() - 1].hi),
        bins: used.len(),
        chi2_dof,
    })
}

/// Slope of the histogram pmf over dyadic bins in `[n_min, n_max]`, with
/// Poisson weights.
pub fn fit_power_law(h: &SizeHistogram, n_min: usize, n_max: usize) -> Result<ExponentFit> {
    let bins: Vec<Bin> = dyadic_bins(n_min, n_max)
        .into_iter()
        .map(|(lo, hi)| {
            let c: u64 = h.counts.range(lo..=hi).map(|(_, c)| c).sum();
            Bin { lo, hi, mass: c as f64 / h.total.max(1) as f64, weight: c as f64 }
        })
        .collect();
    fit_bins(&bins)
}

/// Slope of an exactly known pmf over dyadic bins in `[n_min, n_max]`.
pub fn fit_exact_pmf(pmf: impl Fn(usize) -> f64, n_min: usize, n_max: usize) -> Result<ExponentFit> {
    let bins: Vec<Bin> = dyadic_bins(n_min, n_max)
        .into_iter()
        .map(|(lo, hi)| Bin { lo, hi, mass: (lo..=hi).map(&pmf).sum(), weight: 1.0 })
        .collect();
    fit_bins(&bins)
}

/// Pearson goodness-of-fit of a histogram against a pmf on `1, 2, ..`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GoodnessOfFit {
    pub chi2: f64,
    pub dof: usize,
    pub p_value: f64,
}

/// Consecutive sizes are pooled until each cell expects at least
/// `min_expected` counts; the last cell takes the remaining tail, truncated
/// samples included.
pub fn chi_square_gof(h: &SizeHistogram, pmf: impl Fn(usize) -> f64, min_expected: f64) -> Result<GoodnessOfFit> {
    if h.total == 0 {
        return Err(Error::InsufficientData("empty histogram".into()));
    }
    if !(min_expected > 0.0) {
        return Err(crate::error::invalid("min_expected must be positive"));
    }
    let total = h.total as f64;
    let mut cells: Vec<(f64, f64)> = Vec::new();
    let (mut obs, mut exp, mut used) = (0.0, 0.0, 0.0);
    let mut n = 1;
    while n <= h.cap && total * (1.0 - used) >= 2.0 * min_expected {
        let p = pmf(n);
        obs += h.count(n) as f64;
        exp += total * p;
        used += p;
        if exp >= min_expected {
            cells.push((obs, exp));
            (obs, exp) = (0.0, 0.0);
        }
        n += 1;
    }
    let seen: f64 = cells.iter().map(|c| c.0).sum();
    cells.push((total - seen, (total * (1.0 - used)).max(0.0)));
    if cells.len() < 2 {
        return Err(Error::InsufficientData("too few cells for a chi-square test".into()));
    }
    let chi2: f64 = cells.iter().filter(|c| c.1 > 0.0).map(|(o, e)| (o - e).powi(2) / e).sum();
    let dof = cells.len() - 1;
    let dist = ChiSquared::new(dof as f64).map_err(|e| Error::NumericInconsistency(e.to_string()))?;
    Ok(GoodnessOfFit { chi2, dof, p_value: dist.sf(chi2) })
}

pub(crate) struct Line {
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
    pub chi2: f64,
}

/// Weighted least-squares line through `(x, y)`.
pub(crate) fn weighted_line(x: &[f64], y: &[f64], w: &[f64]) -> Line {
    let sw: f64 = w.iter().sum();
    let mx = x.iter().zip(w).map(|(x, w)| x * w).sum::<f64>() / sw;
    let my = y.iter().zip(w).map(|(y, w)| y * w).sum::<f64>() / sw;
    let sxx: f64 = x.iter().zip(w).map(|(x, w)| w * (x - mx) * (x - mx)).sum();
    let sxy: f64 = x.iter().zip(y).zip(w).map(|((x, y), w)| w * (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let chi2 = x
        .iter()
        .zip(y)
        .zip(w)
        .map(|((x, y), w)| w * (y - intercept - slope * x).powi(2))
        .sum();
    Line { slope, intercept, slope_stderr: (1.0 / sxx).sqrt(), chi2 }
}

//! Exact total-progeny laws of Galton–Watson trees: the mean-field oracle
//! for cluster-size exponents.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::Rng;
use rand_distr::{Binomial, Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{invalid, Result};
use crate::rng::stream_rng;
use crate::stats::{fit_exact_pmf, ExponentFit, SizeHistogram};

/// Largest `n` evaluated in exact rational arithmetic.
pub const EXACT_LIMIT: usize = 1 << 14;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum OffspringLaw {
    /// `Bin(m, q)` children with `q = q_num / q_den`.
    Binomial { m: u32, q_num: u64, q_den: u64 },
    Poisson { lambda: f64 },
}

impl OffspringLaw {
    pub fn binomial(m: u32, q_num: u64, q_den: u64) -> Result<Self> {
        if m == 0 || q_den == 0 || q_num > q_den {
            return Err(invalid("binomial law needs m >= 1 and q in [0, 1]"));
        }
        let law = Self::Binomial { m, q_num, q_den };
        if law.mean() > 1.0 + 1e-12 {
            return Err(invalid(format!("offspring mean {} exceeds 1", law.mean())));
        }
        Ok(law)
    }

    pub fn poisson(lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda <= 1.0) {
            return Err(invalid(format!("Poisson mean {lambda} must lie in (0, 1]")));
        }
        Ok(Self::Poisson { lambda })
    }

    /// The two critical oracles: `Bin(2, 1/2)` and `Poisson(1)`.
    pub fn critical_binary() -> Self {
        Self::Binomial { m: 2, q_num: 1, q_den: 2 }
    }

    pub fn critical_poisson() -> Self {
        Self::Poisson { lambda: 1.0 }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            Self::Binomial { m, q_num, q_den } => m as f64 * q_num as f64 / q_den as f64,
            Self::Poisson { lambda } => lambda,
        }
    }

    pub fn is_critical(&self) -> bool {
        match *self {
            Self::Binomial { m, q_num, q_den } => m as u64 * q_num == q_den,
            Self::Poisson { lambda } => lambda == 1.0,
        }
    }

    /// `P(k children)`.
    pub fn offspring_pmf(&self, k: usize) -> f64 {
        match *self {
            Self::Binomial { m, q_num, q_den } => {
                if k > m as usize {
                    return 0.0;
                }
                let q = q_num as f64 / q_den as f64;
                (ln_choose(m as f64, k as f64) + xlogy(k as f64, q) + xlogy((m as usize - k) as f64, 1.0 - q)).exp()
            }
            Self::Poisson { lambda } => (xlogy(k as f64, lambda) - lambda - ln_gamma(k as f64 + 1.0)).exp(),
        }
    }
}

fn xlogy(x: f64, y: f64) -> f64 {
    if x == 0.0 { 0.0 } else { x * y.ln() }
}

fn ln_choose(n: f64, k: f64) -> f64 {
    ln_gamma(n + 1.0) - ln_gamma(k + 1.0) - ln_gamma(n - k + 1.0)
}

/// Value of `P(|T| = n)`, exact when possible.
#[derive(Debug, Clone, PartialEq)]
pub enum Progeny {
    Exact(BigRational),
    /// Log-space evaluation with an estimated relative error.
    Float { value: f64, rel_error: f64 },
}

impl Progeny {
    pub fn to_f64(&self) -> f64 {
        match self {
            Self::Exact(r) => r.to_f64().unwrap_or(0.0),
            Self::Float { value, .. } => *value,
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Self::Exact(_))
    }
}

/// `P(|T| = n) = P(S_n = n - 1) / n` with `S_n` a sum of `n` offspring draws.
///
/// Binomial laws with `n <= EXACT_LIMIT` are evaluated in exact rational
/// arithmetic; everything else in log space.
pub fn total_progeny_pmf(law: &OffspringLaw, n: usize) -> Result<Progeny> {
    if n == 0 {
        return Err(invalid("total progeny is at least 1"));
    }
    match *law {
        OffspringLaw::Binomial { m, q_num, q_den } if n <= EXACT_LIMIT => {
            let trials = n as u64 * m as u64;
            let k = n as u64 - 1;
            if k > trials {
                return Ok(Progeny::Exact(BigRational::zero()));
            }
            let choose = big_choose(trials, k);
            let num = BigInt::from(choose)
                * BigInt::from(q_num).pow(k as u32)
                * BigInt::from(q_den - q_num).pow((trials - k) as u32);
            let den = BigInt::from(q_den).pow(trials as u32) * BigInt::from(n);
            Ok(Progeny::Exact(BigRational::new(num, den)))
        }
        _ => {
            let ln = log_pmf(law, n);
            // ln_gamma is accurate to a few ulps of its (large) value
            let scale = (n as f64 * law_scale(law)).max(1.0).ln().abs() * n as f64;
            Ok(Progeny::Float { value: ln.exp(), rel_error: 8.0 * f64::EPSILON * scale.max(1.0) })
        }
    }
}

/// Product of the integers in `[lo, hi)` by balanced splitting, so the big
/// multiplications stay between operands of similar size.
fn range_product(lo: u64, hi: u64) -> BigUint {
    match hi.saturating_sub(lo) {
        0 => BigUint::one(),
        1 => BigUint::from(lo),
        len if len <= 16 => (lo..hi).fold(BigUint::one(), |acc, v| acc * v),
        len => {
            let mid = lo + len / 2;
            range_product(lo, mid) * range_product(mid, hi)
        }
    }
}

fn big_choose(n: u64, k: u64) -> BigUint {
    let k = k.min(n - k);
    range_product(n - k + 1, n + 1) / range_product(1, k + 1)
}

fn law_scale(law: &OffspringLaw) -> f64 {
    match *law {
        OffspringLaw::Binomial { m, .. } => m as f64,
        OffspringLaw::Poisson { .. } => 1.0,
    }
}

fn log_pmf(law: &OffspringLaw, n: usize) -> f64 {
    let nf = n as f64;
    match *law {
        OffspringLaw::Binomial { m, q_num, q_den } => {
            let trials = nf * m as f64;
            if nf - 1.0 > trials {
                return f64::NEG_INFINITY;
            }
            let q = q_num as f64 / q_den as f64;
            ln_choose(trials, nf - 1.0) + xlogy(nf - 1.0, q) + xlogy(trials - nf + 1.0, 1.0 - q) - nf.ln()
        }
        OffspringLaw::Poisson { lambda } => {
            let mu = nf * lambda;
            -mu + (nf - 1.0) * mu.ln() - ln_gamma(nf) - nf.ln()
        }
    }
}

/// `P(|T| = n)` as a double, via the exact route when available.
pub fn progeny_pmf_f64(law: &OffspringLaw, n: usize) -> Result<f64> {
    Ok(total_progeny_pmf(law, n)?.to_f64())
}

/// `P(|T| = n)` for `n = 1..=n_max` from the recursive decomposition over
/// the root's children, independent of the hitting-time identity. Exact for
/// binomial laws.
pub fn recursive_progeny_pmf(law: &OffspringLaw, n_max: usize) -> Vec<f64> {
    match *law {
        OffspringLaw::Binomial { m, q_num, q_den } => {
            let q = BigRational::new(BigInt::from(q_num), BigInt::from(q_den));
            let one = BigRational::one();
            let p: Vec<BigRational> = (0..=m as usize)
                .map(|k| {
                    let c = BigRational::from_integer(num_integer::binomial(BigInt::from(m), BigInt::from(k)));
                    c * pow_ratio(&q, k) * pow_ratio(&(one.clone() - q.clone()), m as usize - k)
                })
                .collect();
            recursive(&p, n_max, BigRational::zero).iter().map(|r| r.to_f64().unwrap_or(0.0)).collect()
        }
        OffspringLaw::Poisson { .. } => {
            let p: Vec<f64> = (0..n_max).map(|k| law.offspring_pmf(k)).collect();
            recursive(&p, n_max, || 0.0)
        }
    }
}

fn pow_ratio(x: &BigRational, k: usize) -> BigRational {
    (0..k).fold(BigRational::one(), |acc, _| acc * x.clone())
}

/// `t[n] = p_0 [n = 1] + Σ_{k>=1} p_k P(k independent trees total n - 1)`.
fn recursive<X>(p: &[X], n_max: usize, zero: impl Fn() -> X) -> Vec<X>
where
    X: Clone + std::ops::Add<Output = X> + std::ops::Mul<Output = X>,
{
    let kmax = (p.len() - 1).min(n_max.saturating_sub(1));
    let mut t = vec![zero(); n_max + 1];
    // forest[k][s]: k independent trees with total size s
    let mut forest: Vec<Vec<X>> = vec![vec![zero(); n_max + 1]; kmax + 1];
    for n in 1..=n_max {
        let s = n - 1;
        for k in 1..=kmax.min(s) {
            forest[k][s] = if k == 1 {
                t[s].clone()
            } else {
                (1..=s + 1 - k).fold(zero(), |acc, first| acc + t[first].clone() * forest[k - 1][s - first].clone())
            };
        }
        let mut v = if n == 1 { p[0].clone() } else { zero() };
        for k in 1..=kmax.min(s) {
            v = v + p[k].clone() * forest[k][s].clone();
        }
        t[n] = v;
    }
    t.remove(0);
    t
}

/// Slope of the exact pmf over `[n_min, n_max]` and the limit of
/// `n^{3/2} P(|T| = n)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeltaTwoReport {
    pub fit: ExponentFit,
    /// Richardson estimate of `lim n^{3/2} P(|T| = n)`.
    pub limit_constant: f64,
    /// Difference between the last two Richardson levels.
    pub limit_error: f64,
}

pub fn verify_delta_two(law: &OffspringLaw, n_min: usize, n_max: usize) -> Result<DeltaTwoReport> {
    if !law.is_critical() {
        return Err(invalid("the n^{-3/2} law needs a critical offspring law"));
    }
    let pmf = |n: usize| log_pmf(law, n).exp();
    let fit = fit_exact_pmf(pmf, n_min, n_max)?;
    // n^{3/2} P(n) = K (1 + a/n + b/n^2 + ...): eliminate a and b
    let c = |n: usize| (n as f64).powf(1.5) * pmf(n);
    let top = n_max.max(16);
    let r1 = |n: usize| 2.0 * c(2 * n) - c(n);
    let r2 = |n: usize| (4.0 * r1(2 * n) - r1(n)) / 3.0;
    let limit_constant = r2(top / 4);
    let limit_error = (limit_constant - r2(top / 8)).abs();
    Ok(DeltaTwoReport { fit, limit_constant, limit_error })
}

/// Total progeny of `trees` independent trees, each stopped at `cap`.
pub fn simulate_progeny(law: &OffspringLaw, trees: u64, cap: usize, seed: u64) -> Result<SizeHistogram> {
    const CHUNK: u64 = 4096;
    let chunks = trees.div_ceil(CHUNK);
    let sampler = OffspringSampler::new(law)?;
    let hist = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = stream_rng(seed, c);
            let mut h = SizeHistogram::new(cap);
            let count = CHUNK.min(trees - c * CHUNK);
            for _ in 0..count {
                let (size, truncated) = grow_tree(&sampler, &mut rng, cap);
                h.record(size, truncated);
            }
            h
        })
        .reduce(
            || SizeHistogram::new(cap),
            |mut a, b| {
                a.merge(&b);
                a
            },
        );
    Ok(hist)
}

enum OffspringSampler {
    Binomial(Binomial),
    Poisson(Poisson<f64>),
}

impl OffspringSampler {
    fn new(law: &OffspringLaw) -> Result<Self> {
        match *law {
            OffspringLaw::Binomial { m, q_num, q_den } => Binomial::new(m as u64, q_num as f64 / q_den as f64)
                .map(Self::Binomial)
                .map_err(|e| invalid(e.to_string())),
            OffspringLaw::Poisson { lambda } => {
                Poisson::new(lambda).map(Self::Poisson).map_err(|e| invalid(e.to_string()))
            }
        }
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> usize {
        match self {
            Self::Binomial(b) => b.sample(rng) as usize,
            Self::Poisson(p) => p.sample(rng) as usize,
        }
    }
}

fn grow_tree<R: Rng>(sampler: &OffspringSampler, rng: &mut R, cap: usize) -> (usize, bool) {
    let mut pending = 1usize;
    let mut size = 0usize;
    while pending > 0 {
        if size == cap {
            return (size, true);
        }
        pending -= 1;
        size += 1;
        pending += sampler.sample(rng);
    }
    (size, false)
}

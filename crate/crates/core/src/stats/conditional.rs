//! Two- and three-point measures conditioned on the cluster size.
//!
//! Exact conditioning on `|C(0)| = n` is replaced by acceptance of clusters
//! with size in `[ceil(n(1-w)), floor(n(1+w))]`. Rejection is done on a fast
//! size-only pass, then accepted seeds are regrown with their sites.

use rand::Rng;
use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::percolation::{Cluster, Grower, GrowthOptions};
use crate::rng::{derive_seed, stream_rng};
use crate::stats::measure::{EmpiricalMeasure, MeasureBuilder, Symmetry};

const PAIR_STREAM: u64 = 0x7061_6972;
const CHUNK: u64 = 4096;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionalOptions {
    /// Number of seed batches used for error bars.
    pub batches: usize,
    /// Give up after this many grown clusters.
    pub max_attempts: u64,
    /// Pairs kept per cluster for the three-point measure.
    pub pair_budget: usize,
    /// Store orbit representatives under lattice symmetries.
    pub symmetrize: bool,
}

impl Default for ConditionalOptions {
    fn default() -> Self {
        Self { batches: 32, max_attempts: 1 << 34, pair_budget: 10_000, symmetrize: true }
    }
}

/// Accepted size range for nominal size `n` and relative window `w`.
pub fn window_bounds(n: usize, window: f64) -> Result<(usize, usize)> {
    if n < 1 {
        return Err(invalid("n must be at least 1"));
    }
    if !(0.0..1.0).contains(&window) {
        return Err(invalid(format!("window {window} outside [0,1)")));
    }
    let lo = ((n as f64) * (1.0 - window) - 1e-9).ceil().max(1.0) as usize;
    let hi = ((n as f64) * (1.0 + window) + 1e-9).floor() as usize;
    Ok((lo, hi))
}

/// Seeds of the first `target` clusters (in seed order) whose size falls in
/// `[lo, hi]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Acceptance {
    pub seeds: Vec<u64>,
    pub attempted: u64,
    /// Rejected because growth passed `hi`.
    pub too_large: u64,
}

pub fn find_accepted(
    p: f64,
    d: usize,
    (lo, hi): (usize, usize),
    target: u64,
    seed: u64,
    max_attempts: u64,
) -> Result<Acceptance> {
    if target < 1 {
        return Err(invalid("samples must be at least 1"));
    }
    Grower::new(p, d)?;
    let opts = GrowthOptions::sites_only(hi);
    let mut seeds = Vec::new();
    let mut attempted = 0u64;
    let mut too_large = 0u64;
    while (seeds.len() as u64) < target {
        if attempted >= max_attempts {
            return Err(Error::InsufficientData(format!(
                "{} of {target} clusters accepted after {attempted} attempts",
                seeds.len()
            )));
        }
        let start = attempted;
        let end = (start + CHUNK).min(max_attempts);
        let chunk: Vec<(u64, bool)> = (start..end)
            .into_par_iter()
            .map_init(
                || Grower::new(p, d).expect("validated"),
                |g, i| {
                    let s = derive_seed(seed, i);
                    let r = g.grow(s, opts).expect("validated");
                    let ok = !r.truncated && r.size >= lo;
                    (if ok { s } else { u64::MAX }, r.truncated)
                },
            )
            .collect();
        for (i, (s, trunc)) in chunk.into_iter().enumerate() {
            if (seeds.len() as u64) == target {
                attempted = start + i as u64;
                break;
            }
            attempted = start + i as u64 + 1;
            too_large += trunc as u64;
            if s != u64::MAX {
                seeds.push(s);
            }
        }
    }
    Ok(Acceptance { seeds, attempted, too_large })
}

/// A conditional measure with its per-batch pieces.
#[derive(Debug, Clone)]
pub struct ConditionalMeasure {
    pub n: usize,
    pub window: f64,
    pub bounds: (usize, usize),
    pub accepted: u64,
    pub attempted: u64,
    /// Pooled measure over all accepted clusters.
    pub measure: EmpiricalMeasure,
    /// Normalized measure of each batch and its number of clusters.
    pub batches: Vec<(u64, EmpiricalMeasure)>,
}

fn regrow(hi: usize, seed: u64, g: &mut Grower) -> &Cluster {
    g.grow(seed, GrowthOptions::sites_only(hi)).expect("validated");
    g.cluster()
}

#[allow(clippy::too_many_arguments)]
fn build_batched<F>(
    p: f64,
    d: usize,
    n: usize,
    window: f64,
    acc: &Acceptance,
    bounds: (usize, usize),
    blocks: usize,
    opts: &ConditionalOptions,
    visit: F,
) -> Result<ConditionalMeasure>
where
    F: Fn(&Cluster, u64, &mut MeasureBuilder) + Sync,
{
    let symmetry = if opts.symmetrize { Symmetry::Hyperoctahedral } else { Symmetry::None };
    let nb = opts.batches.max(1).min(acc.seeds.len());
    let scale = (n as f64).powf(-0.25);
    let built: Vec<(u64, MeasureBuilder)> = (0..nb)
        .into_par_iter()
        .map(|b| {
            let mut g = Grower::new(p, d).expect("validated");
            let mut builder = MeasureBuilder::new(d, blocks, symmetry);
            let mut count = 0;
            for &s in acc.seeds.iter().skip(b).step_by(nb) {
                let c = regrow(bounds.1, s, &mut g);
                visit(c, s, &mut builder);
                count += 1;
            }
            (count, builder)
        })
        .collect();
    let mut batches = Vec::with_capacity(nb);
    let mut pooled = MeasureBuilder::new(d, blocks, symmetry);
    for (count, b) in built {
        batches.push((count, b.finish(scale)?));
        pooled.merge(b);
    }
    Ok(ConditionalMeasure {
        n,
        window,
        bounds,
        accepted: acc.seeds.len() as u64,
        attempted: acc.attempted,
        measure: pooled.finish(scale)?,
        batches,
    })
}

/// Estimate of `q_n` on points rescaled by `n^{-1/4}`: every accepted
/// cluster puts mass `1/|C|` on each of its sites.
pub fn conditional_two_point(
    p: f64,
    d: usize,
    n: usize,
    window: f64,
    samples: u64,
    seed: u64,
    opts: &ConditionalOptions,
) -> Result<ConditionalMeasure> {
    let bounds = window_bounds(n, window)?;
    let acc = find_accepted(p, d, bounds, samples, seed, opts.max_attempts)?;
    build_batched(p, d, n, window, &acc, bounds, 1, opts, |c, _, b| {
        let w = 1.0 / c.size() as f64;
        for x in c.sites() {
            b.add(x, w);
        }
    })
}

/// Estimate of `q_n^(3)` on rescaled pairs. Clusters with more than
/// `pair_budget` ordered pairs contribute a uniform sample of that many pairs
/// (with replacement), each weighted `1/pair_budget`, so every cluster still
/// carries unit mass in expectation over the subsample.
pub fn conditional_three_point(
    p: f64,
    d: usize,
    n: usize,
    window: f64,
    samples: u64,
    seed: u64,
    opts: &ConditionalOptions,
) -> Result<ConditionalMeasure> {
    if opts.pair_budget < 1 {
        return Err(invalid("pair budget must be at least 1"));
    }
    let bounds = window_bounds(n, window)?;
    let acc = find_accepted(p, d, bounds, samples, seed, opts.max_attempts)?;
    let budget = opts.pair_budget;
    build_batched(p, d, n, window, &acc, bounds, 2, opts, |c, s, b| {
        let size = c.size();
        let mut pair = vec![0i32; 2 * d];
        if size.saturating_mul(size) <= budget {
            let w = 1.0 / (size * size) as f64;
            for x in c.sites() {
                for y in c.sites() {
                    pair[..d].copy_from_slice(x);
                    pair[d..].copy_from_slice(y);
                    b.add(&pair, w);
                }
            }
        } else {
            let mut rng = stream_rng(s ^ PAIR_STREAM, 0);
            let w = 1.0 / budget as f64;
            for _ in 0..budget {
                let i = rng.random_range(0..size);
                let j = rng.random_range(0..size);
                pair[..d].copy_from_slice(c.coords(i));
                pair[d..].copy_from_slice(c.coords(j));
                b.add(&pair, w);
            }
        }
    })
}

/// Per-axis coordinate counts of one cluster, `axes[i]` listing
/// `(value, count)` for coordinate `i` in increasing value order.
#[derive(Debug, Clone, PartialEq)]
pub struct AxisProfile {
    pub size: usize,
    pub axes: Vec<Vec<(i32, u32)>>,
}

impl AxisProfile {
    pub fn of(c: &Cluster) -> Self {
        let d = c.dim();
        let mut axes = Vec::with_capacity(d);
        let mut vals = Vec::with_capacity(c.size());
        for i in 0..d {
            vals.clear();
            vals.extend(c.sites().map(|x| x[i]));
            vals.sort_unstable();
            let mut counts: Vec<(i32, u32)> = Vec::new();
            for &v in &vals {
                match counts.last_mut() {
                    Some((u, k)) if *u == v => *k += 1,
                    _ => counts.push((v, 1)),
                }
            }
            axes.push(counts);
        }
        Self { size: c.size(), axes }
    }

    /// `(1/|C|) sum_x cos(a x_i)`, the real part of the cluster's own
    /// transform along axis `i`.
    pub fn cos_transform(&self, axis: usize, a: f64) -> f64 {
        self.axes[axis].iter().map(|&(v, k)| k as f64 * (a * v as f64).cos()).sum::<f64>() / self.size as f64
    }

    /// `(1/|C|) sum_x e^{i a x_i}`.
    pub fn transform(&self, axis: usize, a: f64) -> (f64, f64) {
        let (mut re, mut im) = (0.0, 0.0);
        for &(v, k) in &self.axes[axis] {
            let (s, c) = (a * v as f64).sin_cos();
            re += k as f64 * c;
            im += k as f64 * s;
        }
        (re / self.size as f64, im / self.size as f64)
    }

    /// `(1/|C|) sum_x |x|^2`.
    pub fn mean_sq(&self) -> f64 {
        self.axes
            .iter()
            .flat_map(|a| a.iter())
            .map(|&(v, k)| k as f64 * (v as f64) * (v as f64))
            .sum::<f64>()
            / self.size as f64
    }
}

/// Axis profiles of accepted clusters, in acceptance order.
#[derive(Debug, Clone)]
pub struct ConditionalProfiles {
    pub n: usize,
    pub window: f64,
    pub bounds: (usize, usize),
    pub attempted: u64,
    pub profiles: Vec<AxisProfile>,
}

pub fn conditional_profiles(
    p: f64,
    d: usize,
    n: usize,
    window: f64,
    samples: u64,
    seed: u64,
    max_attempts: u64,
) -> Result<ConditionalProfiles> {
    let bounds = window_bounds(n, window)?;
    let acc = find_accepted(p, d, bounds, samples, seed, max_attempts)?;
    let profiles = acc
        .seeds
        .par_iter()
        .map_init(
            || Grower::new(p, d).expect("validated"),
            |g, &s| AxisProfile::of(regrow(bounds.1, s, g)),
        )
        .collect();
    Ok(ConditionalProfiles { n, window, bounds, attempted: acc.attempted, profiles })
}

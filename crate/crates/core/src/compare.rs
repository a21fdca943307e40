//! Rescaled conditional profiles against the ISE transforms.
//!
//! The only free parameter is the spatial scale `D`. It is fixed by matching
//! the second moment of the empirical two-point measure to the curvature of
//! `Â^(2)` at the origin, `Â^(2)(k) = 1 - sqrt(π/2) k²/2 + O(k⁴)`.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{invalid, Error, Result};
use crate::ise::IseParams;
use crate::stats::conditional::{AxisProfile, ConditionalMeasure, ConditionalProfiles};
use crate::stats::resample::{bootstrap, quantile};

const ISE_TOL: f64 = 1e-12;

/// Scale `D` from the mean squared rescaled distance `m2 = E|x|²` in `d`
/// dimensions.
pub fn scale_from_second_moment(m2: f64, d: usize) -> Result<f64> {
    if !(m2 > 0.0 && m2.is_finite()) {
        return Err(Error::InsufficientData("the measure has no spread to fit a scale to".into()));
    }
    Ok((m2 / (d as f64 * (PI / 2.0).sqrt())).sqrt())
}

/// Scale fitted from axis profiles, the same estimate a two-point measure
/// built from these clusters would give.
pub fn scale_from_profiles(p: &ConditionalProfiles) -> Result<f64> {
    let d = p.profiles.first().map(|a| a.axes.len()).ok_or_else(no_clusters)?;
    let m2 = p.profiles.iter().map(AxisProfile::mean_sq).sum::<f64>() / p.profiles.len() as f64;
    scale_from_second_moment(m2 / (p.n as f64).sqrt(), d)
}

fn no_clusters() -> Error {
    Error::InsufficientData("no accepted clusters".into())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupDistance {
    pub value: f64,
    /// Standard deviation of the bootstrap replicates.
    pub stderr: f64,
    /// Central 95% bootstrap interval.
    pub interval: (f64, f64),
    pub replicates: usize,
}

impl SupDistance {
    fn from_replicates(value: f64, reps: &[f64]) -> Self {
        let m = reps.iter().sum::<f64>() / reps.len().max(1) as f64;
        let var = reps.iter().map(|r| (r - m).powi(2)).sum::<f64>() / (reps.len().max(2) - 1) as f64;
        Self {
            value,
            stderr: var.sqrt(),
            interval: (quantile(reps, 0.025), quantile(reps, 0.975)),
            replicates: reps.len(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QnPoint {
    pub k2: f64,
    pub empirical: f64,
    pub stderr: f64,
    pub ise: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QnReport {
    pub n: usize,
    pub scale: f64,
    /// Spread of the per-batch scale fits, as a standard error.
    pub scale_stderr: f64,
    pub points: Vec<QnPoint>,
    pub sup: SupDistance,
}

/// `q̂_n(k / D)` against `Â^(2)(k)` on `k2_grid` (values of `k²`), with `k`
/// along a lattice axis. The bootstrap resamples seed batches at the pooled
/// `D`.
pub fn compare_qn_to_ise(q: &ConditionalMeasure, k2_grid: &[f64], replicates: usize, seed: u64) -> Result<QnReport> {
    let m = &q.measure;
    if m.blocks() != 1 {
        return Err(invalid("compare_qn_to_ise needs a two-point measure"));
    }
    if k2_grid.is_empty() || k2_grid.iter().any(|k| !(*k >= 0.0 && k.is_finite())) {
        return Err(invalid("k² grid must be nonempty, finite and nonnegative"));
    }
    let d = m.d();
    let scale = scale_from_second_moment(m.second_moment(0), d)?;
    let ise = IseParams::new(d, ISE_TOL)?;
    let wave = |k2: f64| {
        let mut k = vec![0.0; d];
        k[0] = k2.sqrt() / scale;
        k
    };
    let target: Vec<f64> = k2_grid.iter().map(|&k2| ise.a2_fourier(k2)).collect::<Result<_>>()?;
    let pooled: Vec<f64> = k2_grid.iter().map(|&k2| Ok(m.fourier(&wave(k2))?.re)).collect::<Result<_>>()?;
    // per batch: weight, transform on the grid, and own scale fit
    let mut per_batch = Vec::with_capacity(q.batches.len());
    for (count, b) in &q.batches {
        let f: Vec<f64> = k2_grid.iter().map(|&k2| Ok(b.fourier(&wave(k2))?.re)).collect::<Result<_>>()?;
        per_batch.push((*count as f64, f, b.second_moment(0)));
    }
    let nb = per_batch.len();
    let combine = |idx: &[usize], j: usize| {
        let w: f64 = idx.iter().map(|&i| per_batch[i].0).sum();
        idx.iter().map(|&i| per_batch[i].0 * per_batch[i].1[j]).sum::<f64>() / w
    };
    let sup_of = |idx: &[usize]| (0..k2_grid.len()).map(|j| (combine(idx, j) - target[j]).abs()).fold(0.0, f64::max);
    let reps = if nb >= 2 { bootstrap(nb, replicates, seed, sup_of) } else { Vec::new() };
    // pointwise errors from the batch spread
    let points = k2_grid
        .iter()
        .enumerate()
        .map(|(j, &k2)| {
            let vals: Vec<f64> = per_batch.iter().map(|b| b.1[j]).collect();
            QnPoint { k2, empirical: pooled[j], stderr: weighted_sem(&per_batch, &vals), ise: target[j] }
        })
        .collect();
    let scales: Vec<f64> =
        per_batch.iter().map(|b| scale_from_second_moment(b.2, d).unwrap_or(f64::NAN)).collect();
    let value = pooled.iter().zip(&target).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    Ok(QnReport {
        n: q.n,
        scale,
        scale_stderr: weighted_sem(&per_batch, &scales),
        points,
        sup: SupDistance::from_replicates(value, &reps),
    })
}

/// Standard error of a count-weighted mean of per-batch values.
fn weighted_sem<T>(batches: &[(f64, T, f64)], vals: &[f64]) -> f64 {
    let n = batches.len();
    if n < 2 {
        return f64::NAN;
    }
    let w: f64 = batches.iter().map(|b| b.0).sum();
    let mean = batches.iter().zip(vals).map(|(b, v)| b.0 * v).sum::<f64>() / w;
    let var = batches.iter().zip(vals).map(|(b, v)| b.0 * (v - mean).powi(2)).sum::<f64>() / w;
    (var / (n - 1) as f64).sqrt()
}

/// Relative orientation of the two wavevectors in a three-point grid point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Orientation {
    /// `k` and `l` along the same axis; `b < 0` gives the antiparallel case.
    Parallel,
    /// `k` and `l` along different axes.
    Orthogonal,
}

/// `k = a e_i`, `l = b e_j` in ISE units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Q3Point {
    pub a: f64,
    pub b: f64,
    pub orientation: Orientation,
}

impl Q3Point {
    /// `((k+l)², k², l²)`.
    pub fn squares(&self) -> (f64, f64, f64) {
        let s1 = match self.orientation {
            Orientation::Parallel => (self.a + self.b).powi(2),
            Orientation::Orthogonal => self.a * self.a + self.b * self.b,
        };
        (s1, self.a * self.a, self.b * self.b)
    }
}

/// Standard grid: `a, b` in `{0, 0.5, .., 2.5}` for both orientations plus
/// the antiparallel diagonal.
pub fn default_q3_grid() -> Vec<Q3Point> {
    let vals: Vec<f64> = (0..=5).map(|i| 0.5 * i as f64).collect();
    let mut grid = Vec::new();
    for orientation in [Orientation::Parallel, Orientation::Orthogonal] {
        for &a in &vals {
            for &b in vals.iter().filter(|&&b| b >= a || orientation == Orientation::Parallel) {
                grid.push(Q3Point { a, b, orientation });
            }
        }
    }
    grid.extend(vals.iter().skip(1).map(|&a| Q3Point { a, b: -a, orientation: Orientation::Parallel }));
    grid
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Q3Value {
    pub point: Q3Point,
    pub empirical: f64,
    pub stderr: f64,
    pub ise: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Q3Report {
    pub n: usize,
    pub scale: f64,
    pub clusters: usize,
    pub values: Vec<Q3Value>,
    pub sup: SupDistance,
    /// Largest `|q(a e_1, b e_2) - q(b e_1, a e_2)|` over the orthogonal grid
    /// points, from a single axis pair so the symmetry is not built in.
    pub asymmetry: f64,
    /// Bootstrap standard error of the difference at that point.
    pub asymmetry_stderr: f64,
}

/// Per-cluster `Re[T_i(a) T_j(b)]` averaged over axes, where `T_i` is the
/// cluster's own transform along axis `i`. Because `e^{i(k.x + l.y)}` factors
/// over `x` and `y` for axis-aligned `k, l`, this covers every ordered pair
/// of sites without subsampling.
fn cluster_q3(p: &AxisProfile, a: f64, b: f64, orientation: Orientation) -> f64 {
    let d = p.axes.len();
    let ta: Vec<(f64, f64)> = (0..d).map(|i| p.transform(i, a)).collect();
    let tb: Vec<(f64, f64)> = (0..d).map(|i| p.transform(i, b)).collect();
    let re = |x: (f64, f64), y: (f64, f64)| x.0 * y.0 - x.1 * y.1;
    let diag: f64 = ta.iter().zip(&tb).map(|(&x, &y)| re(x, y)).sum();
    match orientation {
        Orientation::Parallel => diag / d as f64,
        Orientation::Orthogonal => {
            let sa = ta.iter().fold((0.0, 0.0), |s, t| (s.0 + t.0, s.1 + t.1));
            let sb = tb.iter().fold((0.0, 0.0), |s, t| (s.0 + t.0, s.1 + t.1));
            (re(sa, sb) - diag) / (d * (d - 1)) as f64
        }
    }
}

/// `q̂_n^(3)(k/D, l/D)` against `Â^(3)(k, l)` on `grid`. `scale` defaults to
/// the second-moment fit from the same clusters.
pub fn compare_q3_to_ise(
    profiles: &ConditionalProfiles,
    grid: &[Q3Point],
    scale: Option<f64>,
    replicates: usize,
    seed: u64,
) -> Result<Q3Report> {
    let clusters = &profiles.profiles;
    let d = clusters.first().map(|a| a.axes.len()).ok_or_else(no_clusters)?;
    if grid.is_empty() {
        return Err(invalid("empty (k, l) grid"));
    }
    if d < 2 && grid.iter().any(|g| g.orientation == Orientation::Orthogonal) {
        return Err(invalid("orthogonal wavevectors need d >= 2"));
    }
    let scale = match scale {
        Some(s) if s > 0.0 && s.is_finite() => s,
        Some(s) => return Err(invalid(format!("scale {s} must be positive"))),
        None => scale_from_profiles(profiles)?,
    };
    let ise = IseParams::new(d, ISE_TOL)?;
    // lattice wavenumber for ISE wavenumber a
    let lat = |a: f64| a / (scale * (profiles.n as f64).powf(0.25));
    let n = clusters.len();
    let g = grid.len();
    let mut table = vec![0.0; n * g];
    for (c, prof) in clusters.iter().enumerate() {
        for (j, pt) in grid.iter().enumerate() {
            table[c * g + j] = cluster_q3(prof, lat(pt.a), lat(pt.b), pt.orientation);
        }
    }
    let target: Vec<f64> = grid
        .iter()
        .map(|pt| {
            let (s1, s2, s3) = pt.squares();
            ise.a3_fourier(s1, s2, s3)
        })
        .collect::<Result<_>>()?;
    let mean_at = |idx: &[usize], j: usize| idx.iter().map(|&c| table[c * g + j]).sum::<f64>() / idx.len() as f64;
    let all: Vec<usize> = (0..n).collect();
    let pooled: Vec<f64> = (0..g).map(|j| mean_at(&all, j)).collect();
    let reps = if n >= 2 {
        bootstrap(n, replicates, seed, |idx| (0..g).map(|j| (mean_at(idx, j) - target[j]).abs()).fold(0.0, f64::max))
    } else {
        Vec::new()
    };
    let values = grid
        .iter()
        .enumerate()
        .map(|(j, &point)| {
            let col: Vec<f64> = (0..n).map(|c| table[c * g + j]).collect();
            let sem = crate::stats::resample::mean_stderr(&col).stderr;
            Q3Value { point, empirical: pooled[j], stderr: sem, ise: target[j] }
        })
        .collect();
    let value = pooled.iter().zip(&target).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let (asymmetry, asymmetry_stderr) = if d >= 2 { axis_asymmetry(clusters, grid, &lat, replicates, seed) } else { (0.0, 0.0) };
    Ok(Q3Report {
        n: profiles.n,
        scale,
        clusters: n,
        values,
        sup: SupDistance::from_replicates(value, &reps),
        asymmetry,
        asymmetry_stderr,
    })
}

fn axis_asymmetry(
    clusters: &[AxisProfile],
    grid: &[Q3Point],
    lat: &dyn Fn(f64) -> f64,
    replicates: usize,
    seed: u64,
) -> (f64, f64) {
    let re = |x: (f64, f64), y: (f64, f64)| x.0 * y.0 - x.1 * y.1;
    let mut worst = (0.0, 0.0);
    for pt in grid.iter().filter(|p| p.orientation == Orientation::Orthogonal && p.a != p.b) {
        let (a, b) = (lat(pt.a), lat(pt.b));
        let diff: Vec<f64> = clusters
            .iter()
            .map(|c| re(c.transform(0, a), c.transform(1, b)) - re(c.transform(0, b), c.transform(1, a)))
            .collect();
        let mean = diff.iter().sum::<f64>() / diff.len() as f64;
        let reps = bootstrap(diff.len(), replicates.max(2), seed ^ 0x6173_796d, |idx| {
            idx.iter().map(|&i| diff[i]).sum::<f64>() / idx.len() as f64
        });
        let m = reps.iter().sum::<f64>() / reps.len() as f64;
        let sd = (reps.iter().map(|r| (r - m).powi(2)).sum::<f64>() / (reps.len() - 1) as f64).sqrt();
        if mean.abs() >= worst.0 {
            worst = (mean.abs(), sd);
        }
    }
    worst
}

//! Triangle and square diagram integrals.
//!
//! The triangle is estimated from triples of independent clusters of the
//! origin. The momentum-space integrals are done by importance sampling with
//! radial power-law proposals that match the `|k|^{-6}` singularity, so every
//! weight `f/q` stays bounded.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;
use std::f64::consts::PI;

use crate::error::{invalid, Error, Result};
use crate::percolation::{Grower, GrowthOptions};
use crate::rng::{derive_seed, stream_rng};
use crate::stats::fit::weighted_line;
use crate::stats::resample::mean_stderr;
use crate::stats::SizeHistogram;

/// Above this many `(x, u)` pairs a triple is subsampled uniformly.
pub const PAIR_CAP: u64 = 100_000_000;
const CHUNK: u64 = 256;

/// Monte Carlo value with its iid standard error. `samples` counts accepted
/// samples; `discarded` counts those rejected because a cluster hit the cap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagramEstimate {
    pub value: f64,
    pub stderr: f64,
    pub samples: u64,
    pub discarded: u64,
}

impl DiagramEstimate {
    fn from_values(xs: &[f64], discarded: u64) -> Result<Self> {
        if xs.is_empty() {
            return Err(Error::InsufficientData("every sample was discarded".into()));
        }
        let e = mean_stderr(xs);
        Ok(Self { value: e.value, stderr: e.stderr, samples: xs.len() as u64, discarded })
    }
}

/// Per-sample values over `samples` indices in fixed chunks, so the result is
/// the same for any thread count. `None` marks a discarded sample.
fn collect_samples<F>(samples: u64, f: F) -> (Vec<f64>, u64)
where
    F: Fn(u64, &mut Vec<Option<f64>>) + Sync,
{
    let chunks: Vec<Vec<Option<f64>>> = (0..samples.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut out = Vec::with_capacity(CHUNK as usize);
            f(c, &mut out);
            out
        })
        .collect();
    let mut values = Vec::with_capacity(samples as usize);
    let mut discarded = 0;
    for v in chunks.into_iter().flatten() {
        match v {
            Some(x) => values.push(x),
            None => discarded += 1,
        }
    }
    (values, discarded)
}

/// `∇(p) = Σ_{x,y} τ(0,x)τ(x,y)τ(y,0)` from independent clusters `C_a, C_b,
/// C_c` of the origin: each triple contributes the number of `(x, u)` with
/// `x ∈ C_a`, `u ∈ C_b` and `x + u ∈ C_c`.
///
/// Triples where any cluster reaches `cap` are discarded, which biases the
/// estimate low when `p` is close to `p_c`.
pub fn triangle_mc(p: f64, d: usize, samples: u64, cap: usize, seed: u64) -> Result<DiagramEstimate> {
    Grower::new(p, d)?;
    if samples == 0 {
        return Err(invalid("samples must be at least 1"));
    }
    if cap == 0 {
        return Err(invalid("cap must be at least 1"));
    }
    let opts = GrowthOptions::sites_only(cap);
    let (values, discarded) = collect_samples(samples, |c, out| {
        let mut g = [(); 3].map(|_| Grower::new(p, d).expect("validated"));
        let mut y = vec![0i32; d];
        for i in c * CHUNK..((c + 1) * CHUNK).min(samples) {
            let mut truncated = false;
            for (j, g) in g.iter_mut().enumerate() {
                truncated |= g.grow(derive_seed(seed, 3 * i + j as u64), opts).expect("validated").truncated;
            }
            if truncated {
                out.push(None);
                continue;
            }
            let [a, b, cc] = [g[0].cluster(), g[1].cluster(), g[2].cluster()];
            let mut hit = |ia: usize, ib: usize| {
                for ((y, &xa), &xb) in y.iter_mut().zip(a.coords(ia)).zip(b.coords(ib)) {
                    *y = xa + xb;
                }
                cc.index_of(&y).is_some()
            };
            let pairs = a.size() as u64 * b.size() as u64;
            let count = if pairs <= PAIR_CAP {
                let mut n = 0u64;
                for ia in 0..a.size() {
                    for ib in 0..b.size() {
                        n += hit(ia, ib) as u64;
                    }
                }
                n as f64
            } else {
                let mut rng = stream_rng(seed ^ 0x7472_6961, i);
                let mut n = 0u64;
                for _ in 0..PAIR_CAP {
                    n += hit(rng.random_range(0..a.size()), rng.random_range(0..b.size())) as u64;
                }
                n as f64 * pairs as f64 / PAIR_CAP as f64
            };
            out.push(Some(count));
        }
    });
    DiagramEstimate::from_values(&values, discarded)
}

/// Exact one-dimensional triangle with `τ(0,x) = p^{|x|}`. The exponent is
/// twice the range of `{0, x, y}`, and `6R` pairs have range `R ≥ 1`.
pub fn triangle_line(p: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&p) {
        return Err(invalid(format!("p = {p} must lie in [0, 1)")));
    }
    let q = p * p;
    Ok(1.0 + 6.0 * q / ((1.0 - q) * (1.0 - q)))
}

/// Surface area of the unit sphere in `R^d`.
fn sphere_area(d: usize) -> f64 {
    2.0 * PI.powf(d as f64 / 2.0) / gamma(d as f64 / 2.0)
}

/// Radial density `∝ r^a1` on `[0, s)` continued by `∝ r^a2` on `[s, rmax)`.
#[derive(Debug, Clone, Copy)]
struct BrokenPower {
    s: f64,
    rmax: f64,
    a1: f64,
    a2: f64,
    c2: f64,
    w1: f64,
    w2: f64,
}

impl BrokenPower {
    fn new(s: f64, rmax: f64, a1: f64, a2: f64) -> Self {
        let c2 = s.powf(a1 - a2);
        let w1 = s.powf(a1 + 1.0) / (a1 + 1.0);
        let w2 = if s >= rmax {
            0.0
        } else if a2 == -1.0 {
            c2 * (rmax / s).ln()
        } else {
            c2 * (rmax.powf(a2 + 1.0) - s.powf(a2 + 1.0)) / (a2 + 1.0)
        };
        Self { s, rmax, a1, a2, c2, w1, w2 }
    }

    fn total(&self) -> f64 {
        self.w1 + self.w2
    }

    fn sample(&self, u: f64) -> f64 {
        let t = u * self.total();
        if t < self.w1 {
            return (t * (self.a1 + 1.0)).powf(1.0 / (self.a1 + 1.0));
        }
        let v = (t - self.w1) / self.c2;
        let r = if self.a2 == -1.0 {
            self.s * v.exp()
        } else {
            (self.s.powf(self.a2 + 1.0) + (self.a2 + 1.0) * v).powf(1.0 / (self.a2 + 1.0))
        };
        r.min(self.rmax)
    }

    /// Density in `R^d` of a point at radius `r` with isotropic direction.
    fn density(&self, r: f64, area: f64, d: usize) -> f64 {
        if r >= self.rmax {
            return 0.0;
        }
        let h = if r < self.s { r.powf(self.a1) } else { self.c2 * r.powf(self.a2) };
        h / (self.total() * area * r.powi(d as i32 - 1))
    }
}

/// Mixture of the uniform cube `[-π, π]^d` with weight `cube` and the
/// radial components in equal shares.
struct Proposal {
    d: usize,
    cube: f64,
    radial: Vec<BrokenPower>,
    area: f64,
}

impl Proposal {
    fn draw<R: Rng>(&self, rng: &mut R, k: &mut [f64]) -> f64 {
        let u: f64 = rng.random();
        if u < self.cube || self.radial.is_empty() {
            k.iter_mut().for_each(|x| *x = rng.random_range(-PI..PI));
        } else {
            let j = (((u - self.cube) / (1.0 - self.cube)) * self.radial.len() as f64) as usize;
            let r = self.radial[j.min(self.radial.len() - 1)].sample(rng.random());
            let mut n2 = 0.0;
            while n2 == 0.0 {
                for x in k.iter_mut() {
                    *x = rng.sample(StandardNormal);
                }
                n2 = k.iter().map(|x| x * x).sum::<f64>();
            }
            let scale = r / n2.sqrt();
            k.iter_mut().for_each(|x| *x *= scale);
        }
        k.iter().map(|x| x * x).sum()
    }

    fn density(&self, k2: f64) -> f64 {
        let r = k2.sqrt();
        let share = (1.0 - self.cube) / self.radial.len().max(1) as f64;
        let radial: f64 = self.radial.iter().map(|b| b.density(r, self.area, self.d)).sum();
        self.cube / (2.0 * PI).powi(self.d as i32) + share * radial
    }
}

/// `∫_{[-π,π]^d} (c/k²)^3 d^dk / (2π)^d`, the triangle bound implied by an
/// infrared bound `τ̂(k) ≤ c/k²`.
pub fn triangle_irbound(d: usize, c: f64, samples: u64, seed: u64) -> Result<DiagramEstimate> {
    if d <= 6 {
        return Err(Error::DivergentIntegral(format!("(c/k^2)^3 is not integrable in d = {d}")));
    }
    if !(c > 0.0 && c.is_finite()) {
        return Err(invalid("c must be positive"));
    }
    if samples < 2 {
        return Err(invalid("samples must be at least 2"));
    }
    let prop = Proposal {
        d,
        cube: 0.5,
        radial: vec![BrokenPower::new(PI, PI, d as f64 - 7.0, 0.0)],
        area: sphere_area(d),
    };
    let norm = (2.0 * PI).powi(d as i32);
    let c3 = c * c * c;
    let (values, _) = collect_samples(samples, |ch, out| {
        let mut rng = stream_rng(seed, ch);
        let mut k = vec![0.0; d];
        for _ in ch * CHUNK..((ch + 1) * CHUNK).min(samples) {
            let k2 = prop.draw(&mut rng, &mut k);
            out.push(Some(c3 / (k2 * k2 * k2) / norm / prop.density(k2)));
        }
    });
    DiagramEstimate::from_values(&values, 0)
}

fn check_square_dim(d: usize) -> Result<()> {
    if !(7..=10).contains(&d) {
        return Err(invalid(format!("square scaling needs 6 < d <= 10, got d = {d}")));
    }
    Ok(())
}

/// `∫ (1/k²)^3 / (k² + (1-z)^{1/2}) d^dk/(2π)^d` for every `z` in `z_list`,
/// all from the same momentum samples, so the values are monotone in `z`.
///
/// Each `z` contributes a radial proposal component with a break at
/// `|k| = (1-z)^{1/4}`, the scale where `k²` meets the mass term.
pub fn square_scaling(d: usize, z_list: &[f64], samples: u64, seed: u64) -> Result<Vec<(f64, DiagramEstimate)>> {
    check_square_dim(d)?;
    if z_list.is_empty() {
        return Err(invalid("z_list is empty"));
    }
    if let Some(z) = z_list.iter().find(|z| !(0.0..1.0).contains(*z)) {
        return Err(invalid(format!("z = {z} must lie in [0, 1)")));
    }
    if samples < 2 {
        return Err(invalid("samples must be at least 2"));
    }
    let df = d as f64;
    let masses: Vec<f64> = z_list.iter().map(|z| (1.0 - z).sqrt()).collect();
    let prop = Proposal {
        d,
        // the cube corners carry more of the integral as d grows
        cube: if d <= 8 { 0.2 } else { 0.5 },
        radial: masses.iter().map(|m| BrokenPower::new(m.sqrt().min(PI), PI, df - 7.0, df - 9.0)).collect(),
        area: sphere_area(d),
    };
    let norm = (2.0 * PI).powi(d as i32);
    let nz = z_list.len();
    let (flat, _) = collect_samples(samples, |ch, out| {
        let mut rng = stream_rng(seed, ch);
        let mut k = vec![0.0; d];
        for _ in ch * CHUNK..((ch + 1) * CHUNK).min(samples) {
            let k2 = prop.draw(&mut rng, &mut k);
            let base = 1.0 / (k2 * k2 * k2) / norm / prop.density(k2);
            out.extend(masses.iter().map(|m| Some(base / (k2 + m))));
        }
    });
    let mut result = Vec::with_capacity(nz);
    for (j, &z) in z_list.iter().enumerate() {
        let column: Vec<f64> = flat.iter().skip(j).step_by(nz).copied().collect();
        result.push((z, DiagramEstimate::from_values(&column, 0)?));
    }
    Ok(result)
}

/// `M̂_z` from `histogram` times the square integral at `z`, with errors
/// combined in quadrature.
///
/// When `M̂_z` is exactly zero (`z = 1` without truncated samples) the product
/// is zero and the integral is not evaluated.
pub fn magnetization_square(
    d: usize,
    z: f64,
    histogram: &SizeHistogram,
    samples: u64,
    seed: u64,
) -> Result<DiagramEstimate> {
    check_square_dim(d)?;
    let m = histogram.magnetization(z)?;
    if m.value == 0.0 {
        return Ok(DiagramEstimate { value: 0.0, stderr: m.stderr, samples, discarded: 0 });
    }
    let (_, sq) = square_scaling(d, &[z], samples, seed)?[0];
    let value = m.value * sq.value;
    let stderr = value.abs() * ((m.stderr / m.value).powi(2) + (sq.stderr / sq.value).powi(2)).sqrt();
    Ok(DiagramEstimate { value, stderr, samples: sq.samples, discarded: 0 })
}

/// Weighted log-log slope.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub stderr: f64,
    pub chi2: f64,
}

/// Slope of `ln value` against `ln(1 - z)`. The error treats the points as
/// independent, which overstates precision for values sharing samples.
pub fn loglog_slope(points: &[(f64, DiagramEstimate)]) -> Result<SlopeFit> {
    if points.len() < 3 {
        return Err(Error::InsufficientData("a slope fit needs at least three points".into()));
    }
    if points.iter().any(|(z, e)| !(*z < 1.0) || !(e.value > 0.0)) {
        return Err(invalid("slope fit needs z < 1 and positive values"));
    }
    let x: Vec<f64> = points.iter().map(|(z, _)| (1.0 - z).ln()).collect();
    let y: Vec<f64> = points.iter().map(|(_, e)| e.value.ln()).collect();
    let w: Vec<f64> = points
        .iter()
        .map(|(_, e)| {
            let rel = (e.stderr / e.value).max(1e-12);
            1.0 / (rel * rel)
        })
        .collect();
    let line = weighted_line(&x, &y, &w);
    Ok(SlopeFit { slope: line.slope, stderr: line.slope_stderr, chi2: line.chi2 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{integrate, Tolerance};
    use crate::stats::estimate_size_pmf;
    use statrs::function::erf::erf;

    fn brute_line(p: f64) -> f64 {
        let l = 200i64;
        let mut s = 0.0;
        for x in -l..=l {
            for y in -l..=l {
                s += p.powi((x.abs() + (y - x).abs() + y.abs()) as i32);
            }
        }
        s
    }

    #[test]
    fn line_closed_form_matches_double_sum() {
        for p in [0.0, 0.1, 0.3, 0.6] {
            assert!((triangle_line(p).unwrap() - brute_line(p)).abs() < 1e-12 * brute_line(p));
        }
        assert!(triangle_line(1.0).is_err());
    }

    #[test]
    fn triangle_at_zero_is_one() {
        let e = triangle_mc(0.0, 7, 500, 100, 1).unwrap();
        assert_eq!((e.value, e.stderr, e.samples), (1.0, 0.0, 500));
    }

    #[test]
    fn triangle_line_within_three_sigma() {
        let e = triangle_mc(0.3, 1, 100_000, 10_000, 5).unwrap();
        let want = triangle_line(0.3).unwrap();
        assert!((e.value - want).abs() < 3.0 * e.stderr, "{e:?} vs {want}");
        assert_eq!(e.discarded, 0);
    }

    #[test]
    fn triangle_grows_with_p() {
        let a = triangle_mc(0.01, 7, 20_000, 10_000, 2).unwrap();
        let b = triangle_mc(0.05, 7, 20_000, 10_000, 2).unwrap();
        assert!(b.value - a.value > 3.0 * (a.stderr.hypot(b.stderr)));
    }

    #[test]
    fn truncated_triples_are_counted() {
        let e = triangle_mc(0.3, 3, 200, 20, 9).unwrap();
        assert!(e.discarded > 0 && e.samples + e.discarded == 200);
    }

    #[test]
    fn broken_power_density_integrates_to_one() {
        let b = BrokenPower::new(0.3, PI, 0.0, -2.0);
        let area = sphere_area(7);
        // radial marginal of the density, integrated by the midpoint rule
        let n = 200_000;
        let h = PI / n as f64;
        let total: f64 = (0..n)
            .map(|i| {
                let r = (i as f64 + 0.5) * h;
                b.density(r, area, 7) * area * r.powi(6) * h
            })
            .sum();
        assert!((total - 1.0).abs() < 1e-4, "{total}");
        let b8 = BrokenPower::new(0.3, PI, 1.0, -1.0);
        assert!(b8.sample(0.999_999) < PI && b8.sample(0.0) == 0.0);
    }

    #[test]
    fn irbound_homogeneous_and_decreasing() {
        let one = triangle_irbound(7, 1.0, 20_000, 4).unwrap();
        let two = triangle_irbound(7, 2.0, 20_000, 4).unwrap();
        assert!((two.value / one.value - 8.0).abs() < 1e-10);
        let nine = triangle_irbound(9, 1.0, 20_000, 4).unwrap();
        assert!(one.value - nine.value > 3.0 * one.stderr.hypot(nine.stderr));
        assert!(matches!(triangle_irbound(6, 1.0, 10, 1), Err(Error::DivergentIntegral(_))));
    }

    /// `∫_{[-π,π]} e^{-u x²} dx`.
    fn gauss_side(u: f64) -> f64 {
        if u == 0.0 {
            2.0 * PI
        } else {
            (PI / u).sqrt() * erf(PI * u.sqrt())
        }
    }

    // Schwinger form: k^{-6} = ∫ t²/2 e^{-t k²} dt factorizes over axes
    fn irbound_oracle(d: usize) -> f64 {
        let tol = Tolerance::absolute(1e-14).with_rel(1e-11);
        let cut = 50.0;
        let body = integrate(|t: f64| 0.5 * t * t * gauss_side(t).powi(d as i32), 0.0, cut, tol).value;
        let h = d as f64 / 2.0;
        let tail = 0.5 * PI.powf(h) * cut.powf(3.0 - h) / (h - 3.0);
        (body + tail) / (2.0 * PI).powi(d as i32)
    }

    fn square_oracle(d: usize, z: f64) -> f64 {
        let m = (1.0 - z).sqrt();
        let tol = Tolerance::absolute(1e-14).with_rel(1e-10);
        // with u = t + s the inner integral over t is elementary
        let inner = |u: f64| {
            let e = (-u * m).exp();
            0.5 * ((u * u * m * m - 2.0 * u * m + 2.0) - 2.0 * e) / (m * m * m)
        };
        let cut = 400.0;
        let body = integrate(|u: f64| inner(u) * gauss_side(u).powi(d as i32), 0.0, cut, tol).value;
        let h = d as f64 / 2.0;
        let pw = |a: f64| cut.powf(a + 1.0 - h) / (h - a - 1.0);
        let tail = 0.5 * PI.powf(h) * (pw(2.0) / m - 2.0 * pw(1.0) / (m * m) + 2.0 * pw(0.0) / (m * m * m));
        (body + tail) / (2.0 * PI).powi(d as i32)
    }

    #[test]
    fn irbound_matches_schwinger_quadrature() {
        for d in [7, 8, 10] {
            let e = triangle_irbound(d, 1.0, 100_000, 3).unwrap();
            let want = irbound_oracle(d);
            assert!((e.value - want).abs() < 4.0 * e.stderr, "d={d} {e:?} {want}");
            assert!(e.stderr < 0.01 * want);
        }
    }

    #[test]
    fn square_matches_schwinger_quadrature() {
        for (d, z) in [(7, 0.0), (7, 0.99), (9, 0.5), (10, 0.999)] {
            let e = square_scaling(d, &[z], 100_000, 8).unwrap()[0].1;
            let want = square_oracle(d, z);
            assert!((e.value - want).abs() < 4.0 * e.stderr, "d={d} z={z} {e:?} {want}");
            assert!(e.stderr < 0.01 * want);
        }
    }

    #[test]
    fn square_monotone_and_sloped() {
        let zs: Vec<f64> = (4..=12).map(|j| 1.0 - 0.5f64.powi(j)).collect();
        let pts = square_scaling(7, &zs, 40_000, 11).unwrap();
        assert!(pts.windows(2).all(|w| w[1].1.value >= w[0].1.value));
        let fit = loglog_slope(&pts).unwrap();
        assert!((fit.slope + 0.25).abs() < 0.05, "{fit:?}");
        assert!(square_scaling(7, &[0.5, 1.0], 10, 1).is_err());
        assert!(square_scaling(6, &[0.5], 10, 1).is_err());
    }

    #[test]
    fn square_decreases_with_d_and_is_bounded_above_eight() {
        let z = [0.5, 1.0 - 1e-6];
        let s7 = square_scaling(7, &z, 20_000, 2).unwrap();
        let s9 = square_scaling(9, &z, 20_000, 2).unwrap();
        assert!(s7[0].1.value > s9[0].1.value + 3.0 * s7[0].1.stderr);
        assert!(s9[1].1.value < 2.0 * s9[0].1.value);
    }

    #[test]
    fn magnetization_square_limits() {
        let h = estimate_size_pmf(0.05, 7, 2000, 100_000, 1).unwrap();
        let at_one = magnetization_square(7, 1.0, &h, 100, 1).unwrap();
        assert_eq!(at_one.value, 0.0);
        let at_zero = magnetization_square(7, 0.0, &h, 5000, 1).unwrap();
        let sq = square_scaling(7, &[0.0], 5000, 1).unwrap()[0].1;
        assert_eq!(at_zero.value, sq.value);
    }
}

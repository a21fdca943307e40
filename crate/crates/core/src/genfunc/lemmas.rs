//! Numerical harnesses for the coefficient-transfer lemmas. A violation of a
//! proven bound means an implementation bug, so those cases are errors.

use num_complex::Complex;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::main_term::sqrt_one_minus;
use super::PowerSeries;
use crate::error::{invalid, Error, Result};
use crate::rng::stream_rng;
use crate::scalar::Real;

/// Polar mesh of the closed disk: radii `R i / radial` for `i = 0..=radial`
/// and `angular` equally spaced angles starting at the positive axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DiskMesh {
    pub radial: usize,
    pub angular: usize,
}

impl Default for DiskMesh {
    fn default() -> Self {
        Self { radial: 16, angular: 64 }
    }
}

impl DiskMesh {
    pub fn points<T: Real>(&self, r: T) -> Vec<Complex<T>> {
        let mut out = vec![Complex::new(T::zero(), T::zero())];
        let two_pi = T::lit(2.0) * T::PI();
        for i in 1..=self.radial.max(1) {
            let rho = r * T::from_usize_lossy(i) / T::from_usize_lossy(self.radial.max(1));
            for j in 0..self.angular.max(1) {
                let theta = two_pi * T::from_usize_lossy(j) / T::from_usize_lossy(self.angular.max(1));
                out.push(Complex::from_polar(rho, theta));
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransferReport<T> {
    /// Smallest `c` with `|f(z)| <= c |1 - z/R|^{-b}` on the mesh.
    pub c: T,
    /// Smallest `c'` with `|a_n| <= c' R^{-n} g(n)` over stored coefficients
    /// with `n >= 1`, `g(n) = n^{b-1}` or `max(log n, 1)` when `b = 1`.
    pub c_prime: T,
    /// Whether `b >= 1`, the range the transfer statement covers.
    pub in_lemma_scope: bool,
}

/// Reports the constants in the disk-bound to coefficient-bound transfer.
/// The disk is sampled strictly inside `|z| < R`.
pub fn verify_transfer<T: Real>(f: &PowerSeries<T>, r: T, b: T) -> Result<TransferReport<T>> {
    if !(r > T::zero()) || !(b > T::zero()) {
        return Err(invalid("R and b must be positive"));
    }
    let inner = r * (T::one() - T::lit(1e-3));
    let mesh = DiskMesh { radial: 32, angular: 128 };
    let mut c = T::zero();
    for z in mesh.points(inner) {
        let gap = (Complex::new(T::one(), T::zero()) - z / r).norm();
        c = c.max(f.eval(z).norm() * gap.powf(b));
    }
    let one = T::one();
    let mut c_prime = T::zero();
    for (n, a) in f.coeffs().iter().enumerate().skip(1) {
        let nf = T::from_usize_lossy(n);
        let g = if b == one { nf.ln().max(one) } else { nf.powf(b - one) };
        c_prime = c_prime.max(a.norm() * r.powi(n as i32) / g);
    }
    Ok(TransferReport { c, c_prime, in_lemma_scope: b >= one })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaylorReport<T> {
    /// Largest `|f(z) - f(R)| / bound` seen; at most 1 when the bound holds.
    pub max_ratio: T,
    pub points: usize,
}

fn slack_tolerance<T: Real>() -> T {
    T::lit(1e3) * T::epsilon()
}

/// Checks `|f(z) - f(R)| <= 2^{1-eps} ||δ^eps f(R)|| |1 - z/R|^eps` on the mesh.
pub fn verify_taylor_eps<T: Real>(f: &PowerSeries<T>, r: T, eps: T, mesh: &DiskMesh) -> Result<TaylorReport<T>> {
    if !(eps > T::zero() && eps < T::one()) {
        return Err(invalid(format!("eps = {eps} must lie in (0, 1)")));
    }
    if !(r > T::zero()) {
        return Err(invalid("R must be positive"));
    }
    let norm = f.fractional_derivative(eps)?.norm(r);
    if !norm.is_finite() {
        return Err(invalid("fractional derivative norm is not finite"));
    }
    let k = T::lit(2.0).powf(T::one() - eps) * norm;
    let fr = f.eval(Complex::new(r, T::zero()));
    let points = mesh.points(r);
    let mut max_ratio = T::zero();
    for &z in &points {
        let lhs = (f.eval(z) - fr).norm();
        let rhs = k * (Complex::new(T::one(), T::zero()) - z / r).norm().powf(eps);
        // rounding in lhs scales with the size of the terms
        let noise = slack_tolerance::<T>() * f.norm(r);
        if lhs <= noise {
            continue;
        }
        let ratio = lhs / rhs;
        if !(lhs <= rhs + noise) {
            return Err(Error::LemmaViolation(format!(
                "Taylor bound fails at z = {z}: {lhs} > {rhs} (eps = {eps}, R = {r})"
            )));
        }
        max_ratio = max_ratio.max(ratio.min(T::one()));
    }
    Ok(TaylorReport { max_ratio, points: points.len() })
}

/// Runs [`verify_taylor_eps`] on `instances` random polynomials of degree up
/// to 50 with random radius, order and mesh.
pub fn random_taylor_suite(instances: usize, seed: u64) -> Result<TaylorReport<f64>> {
    let mut rng = stream_rng(seed, 0x7461_796c);
    let mut worst = TaylorReport { max_ratio: 0.0f64, points: 0 };
    for _ in 0..instances {
        let deg = rng.random_range(0..=50);
        let coeffs = (0..=deg)
            .map(|_| Complex::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        let f = PowerSeries::new(coeffs)?;
        let r = rng.random_range(0.2..1.5);
        let eps = rng.random_range(0.1..0.9);
        let mesh = DiskMesh { radial: rng.random_range(1..4), angular: rng.random_range(3..12) };
        let rep = verify_taylor_eps(&f, r, eps, &mesh)?;
        worst.max_ratio = worst.max_ratio.max(rep.max_ratio);
        worst.points += rep.points;
    }
    Ok(worst)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Fd2StepReport<T> {
    /// Empirical `M₁` from the positive axis.
    pub m1: T,
    /// Empirical `M₂ = max |f(z) - f(R)| / (R |1 - z/R|^alpha)` on the disk.
    pub m2: T,
}

/// Checks the two-step disk bound. The hypothesis on `||f'||` is tested on
/// the positive axis at `z = R(1 - 2^{-j})` down to `1/N` for degree `N`; a
/// power-law blow-up well above that scale is reported as unmet.
pub fn verify_fd2step<T: Real>(f: &PowerSeries<T>, r: T, eps: T, alpha: T, mesh: &DiskMesh) -> Result<Fd2StepReport<T>> {
    if !(eps > T::zero() && eps < T::one()) || !(alpha > T::zero() && alpha < eps) {
        return Err(invalid("need 0 < alpha < eps < 1"));
    }
    if !(r > T::zero()) {
        return Err(invalid("R must be positive"));
    }
    let df = f.derivative();
    let degree = T::from_usize_lossy(f.degree().max(1));
    let mut h = Vec::new();
    let mut j = 1;
    loop {
        let gap = T::lit(2.0).powi(-j);
        if gap * degree < T::one() {
            break;
        }
        h.push((gap, df.norm(r * (T::one() - gap)) * gap.powf(T::one() - eps)));
        j += 1;
    }
    let m1 = h.iter().fold(T::zero(), |m, &(_, v)| m.max(v));
    if !m1.is_finite() {
        return Err(Error::HypothesisNotMet("derivative norm is not finite on the positive axis".into()));
    }
    // the truncation only represents the full series for gaps well above 1/N
    let resolved: Vec<(T, T)> = h.iter().copied().filter(|&(g, _)| g * degree >= T::lit(16.0)).collect();
    if resolved.len() >= 3 {
        let tail = &resolved[resolved.len() - 3..];
        let slope = (tail[2].1 / tail[0].1).ln() / (tail[2].0 / tail[0].0).ln();
        if slope < T::lit(-0.25) {
            return Err(Error::HypothesisNotMet(format!(
                "derivative norm grows like (1 - z/R)^{slope} times the allowed rate"
            )));
        }
    }
    let fr = f.eval(Complex::new(r, T::zero()));
    let mut m2 = T::zero();
    for z in mesh.points(r) {
        let gap = (Complex::new(T::one(), T::zero()) - z / r).norm();
        if gap == T::zero() {
            continue;
        }
        m2 = m2.max((f.eval(z) - fr).norm() / (r * gap.powf(alpha)));
    }
    Ok(Fd2StepReport { m1, m2 })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BranchReport {
    /// Smallest relative slack `(lhs - rhs) / lhs`.
    pub min_slack: f64,
    pub samples: usize,
}

/// `|a + B₂(1-z)^{1/2}| - (a + B₂|1-z|^{1/2}/√2)` with `a = B₁ k²/(2d)`,
/// relative to the left side.
pub fn branch_slack(b1: f64, b2: f64, k2: f64, d: usize, z: Complex<f64>) -> f64 {
    let a = b1 * k2 / (2.0 * d as f64);
    let lhs = (sqrt_one_minus(z) * b2 + a).norm();
    let rhs = a + b2 * (Complex::new(1.0, 0.0) - z).norm().sqrt() / std::f64::consts::SQRT_2;
    if lhs == 0.0 {
        return if rhs == 0.0 { 0.0 } else { f64::NEG_INFINITY };
    }
    (lhs - rhs) / lhs
}

/// Checks the branch lower bound on random `(B₁, B₂, k², d, z)` with
/// `Re(1 - z) >= 0`.
pub fn branch_lower_bound_check(samples: usize, seed: u64) -> Result<BranchReport> {
    let mut rng = stream_rng(seed, 0x6272_616e);
    let mut min_slack = f64::INFINITY;
    for i in 0..samples {
        let b1 = 10f64.powf(rng.random_range(-3.0..3.0));
        let b2 = 10f64.powf(rng.random_range(-3.0..3.0));
        let k2 = if i % 7 == 0 { 0.0 } else { rng.random_range(0.0..(std::f64::consts::PI.powi(2) * 10.0)) };
        let d = rng.random_range(1..=20);
        // 1 - z in the closed right half plane, including the axis and z = 1
        let z = match i % 11 {
            0 => Complex::new(1.0, 0.0),
            1 => Complex::new(1.0 - 10f64.powf(rng.random_range(-8.0..3.0)), 0.0),
            2 => Complex::new(1.0, rng.random_range(-5.0..5.0)),
            _ => {
                let rho = 10f64.powf(rng.random_range(-8.0..3.0));
                let theta = rng.random_range(-std::f64::consts::FRAC_PI_2..=std::f64::consts::FRAC_PI_2);
                Complex::new(1.0, 0.0) - Complex::from_polar(rho, theta)
            }
        };
        let s = branch_slack(b1, b2, k2, d, z);
        if s < -1e-12 {
            return Err(Error::LemmaViolation(format!(
                "branch bound fails at B1={b1}, B2={b2}, k2={k2}, d={d}, z={z}: slack {s}"
            )));
        }
        min_slack = min_slack.min(s);
    }
    Ok(BranchReport { min_slack, samples })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn real(c: &[f64]) -> PowerSeries<f64> {
        PowerSeries::from_real(c).unwrap()
    }

    #[test]
    fn transfer_examples() {
        let geo = PowerSeries::<f64>::one_minus_z_pow(-1.0, 400);
        let rep = verify_transfer(&geo, 1.0, 1.0).unwrap();
        assert!(rep.in_lemma_scope && rep.c_prime <= 1.0 + 1e-12);
        let sq = PowerSeries::<f64>::one_minus_z_pow(-2.0, 400);
        let rep = verify_transfer(&sq, 1.0, 2.0).unwrap();
        assert!((rep.c_prime - 2.0).abs() < 1e-12, "{}", rep.c_prime);
        assert!(rep.c.is_finite());
        let half = PowerSeries::<f64>::one_minus_z_pow(-0.5, 4000);
        let rep = verify_transfer(&half, 1.0, 0.5).unwrap();
        assert!(!rep.in_lemma_scope);
        // a_n sqrt(n) increases to 1/sqrt(pi)
        assert!(rep.c_prime < 1.0 / std::f64::consts::PI.sqrt() && rep.c_prime > 0.56);
    }

    #[test]
    fn taylor_examples() {
        let mesh = DiskMesh::default();
        let rep = verify_taylor_eps(&real(&[2.5]), 1.0, 0.5, &mesh).unwrap();
        assert_eq!(rep.max_ratio, 0.0);
        let rep = verify_taylor_eps(&real(&[0.0, 1.0]), 1.0, 0.5, &mesh).unwrap();
        // z = -1 is on the mesh and the bound is tight there
        assert!((rep.max_ratio - 1.0).abs() < 1e-12);
        assert!(verify_taylor_eps(&real(&[1.0]), 1.0, 1.0, &mesh).is_err());
    }

    #[test]
    fn random_taylor_instances_hold() {
        let rep = random_taylor_suite(1000, 5).unwrap();
        assert!(rep.max_ratio <= 1.0);
    }

    #[test]
    fn fd2step_examples() {
        let mesh = DiskMesh::default();
        let sqrt = PowerSeries::<f64>::one_minus_z_pow(0.5, 2000);
        let rep = verify_fd2step(&sqrt, 1.0, 0.5, 0.3, &mesh).unwrap();
        assert!(rep.m1 <= 0.5 + 1e-12 && rep.m2.is_finite());
        let rep = verify_fd2step(&real(&[3.0]), 1.0, 0.5, 0.3, &mesh).unwrap();
        assert_eq!(rep.m2, 0.0);
        for k in 1..8 {
            let mut c = vec![0.0; k + 1];
            c[k] = 1.0;
            let alpha = 0.3;
            let rep = verify_fd2step(&real(&c), 1.0, 0.5, alpha, &mesh).unwrap();
            assert!(rep.m2 <= k as f64 * 2f64.powf(1.0 - alpha) + 1e-12);
        }
        let pole = PowerSeries::<f64>::one_minus_z_pow(-1.0, 2000);
        assert!(matches!(
            verify_fd2step(&pole, 1.0, 0.5, 0.3, &mesh),
            Err(Error::HypothesisNotMet(_))
        ));
    }

    #[test]
    fn branch_bound_examples() {
        for x in [0.0, 0.3, 0.9, 0.999] {
            assert!(branch_slack(1.0, 1.0, 2.0, 3, Complex::new(x, 0.0)) >= 0.0);
        }
        let at_one = branch_slack(1.0, 1.0, 2.0, 3, Complex::new(1.0, 0.0));
        assert!(at_one.abs() < 1e-15);
        let rep = branch_lower_bound_check(20_000, 1).unwrap();
        assert!(rep.min_slack >= -1e-12);
    }
}

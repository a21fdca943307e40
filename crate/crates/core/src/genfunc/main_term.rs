use num_complex::Complex;

use super::contour::{coeff_by_contour, contour_radius};
use crate::error::{invalid, Error, Result};
use crate::scalar::Real;

/// Relative agreement required between the contour and recurrence routes.
const AGREEMENT: f64 = 1e-8;

/// Principal branch of `(1 - z)^{1/2}`, positive on `(-inf, 1)`.
pub fn sqrt_one_minus<T: Real>(z: Complex<T>) -> Complex<T> {
    (Complex::new(T::one(), T::zero()) - z).sqrt()
}

/// `C / (D² k² + 2^{3/2} (1 - z)^{1/2})`, stored through `k2 = k²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchMainTerm<T> {
    pub c: T,
    pub d: T,
    pub k2: T,
}

fn branch_weight<T: Real>() -> T {
    T::lit(2.0).powf(T::lit(1.5))
}

impl<T: Real> BranchMainTerm<T> {
    pub fn new(c: T, d: T, k2: T) -> Result<Self> {
        if !(c > T::zero() && c.is_finite()) || !(d > T::zero() && d.is_finite()) {
            return Err(invalid("C and D must be positive and finite"));
        }
        if !(k2 >= T::zero() && k2.is_finite()) {
            return Err(invalid(format!("k² = {k2} must be finite and nonnegative")));
        }
        Ok(Self { c, d, k2 })
    }

    fn mass(&self) -> T {
        self.d * self.d * self.k2
    }

    pub fn eval(&self, z: Complex<T>) -> Complex<T> {
        let denom = sqrt_one_minus(z) * branch_weight::<T>() + self.mass();
        Complex::new(self.c, T::zero()) / denom
    }

    /// Coefficient of `z^n` by the contour rule at radius `1 - 1/n`.
    pub fn coeff_contour(&self, n: usize) -> Result<T> {
        let q = coeff_by_contour(|z| self.eval(z), n, contour_radius::<T>(n))?;
        Ok(q.value.re)
    }

    /// Coefficients `0..=n` from the exact series of the reciprocal.
    pub fn coeffs_recurrence(&self, n: usize) -> Vec<T> {
        reciprocal_series(self.mass(), n).into_iter().map(|g| g * self.c).collect()
    }
}

/// Coefficients of `1 / (a + 2^{3/2} (1 - z)^{1/2})` up to `z^n`.
///
/// Writing `(1 - z)^{1/2} = 1 - Σ_{j>=1} |w_j| z^j` turns the division into
/// a recurrence with nonnegative terms only.
fn reciprocal_series<T: Real>(a: T, n: usize) -> Vec<T> {
    let b = branch_weight::<T>();
    let mut w = Vec::with_capacity(n + 1);
    w.push(T::zero());
    let mut wj = T::lit(0.5);
    for j in 1..=n {
        if j > 1 {
            let jf = T::from_usize_lossy(j);
            wj = wj * (jf - T::lit(1.5)) / jf;
        }
        w.push(wj);
    }
    let lead = (a + b).recip();
    let ratio = b * lead;
    let mut g = Vec::with_capacity(n + 1);
    g.push(lead);
    for m in 1..=n {
        let s = w[1..=m].iter().zip(g.iter().rev()).fold(T::zero(), |s, (&wj, &gj)| s + wj * gj);
        g.push(ratio * s);
    }
    g
}

fn agree<T: Real>(contour: T, series: T, what: &str, n: usize) -> Result<T> {
    let rel = ((contour - series) / series).abs();
    if rel.as_f64() <= AGREEMENT && rel.is_finite() {
        Ok(series)
    } else {
        Err(Error::NumericInconsistency(format!(
            "{what} at n = {n}: contour {contour} vs series {series} (relative {rel})"
        )))
    }
}

/// Coefficient of `z^n` of the branch main term, computed by contour
/// integration and by the series recurrence. The two must agree to `1e-8`
/// relative.
pub fn main_term_coeff<T: Real>(b: &BranchMainTerm<T>, n: usize) -> Result<T> {
    if n == 0 {
        return Err(invalid("main-term coefficients are defined for n >= 1"));
    }
    let contour = b.coeff_contour(n)?;
    let series = b.coeffs_recurrence(n)[n];
    agree(contour, series, "main term", n)
}

/// Coefficient of `z^n` of the three-point main term
/// `4C Π_i 1 / (D² k_i² + 2^{3/2} (1 - z)^{1/2})`, again by both routes.
pub fn three_point_coeff<T: Real>(c: T, d: T, k2: [T; 3], n: usize) -> Result<T> {
    if n == 0 {
        return Err(invalid("main-term coefficients are defined for n >= 1"));
    }
    let legs = [
        BranchMainTerm::new(T::one(), d, k2[0])?,
        BranchMainTerm::new(T::one(), d, k2[1])?,
        BranchMainTerm::new(T::one(), d, k2[2])?,
    ];
    if !(c > T::zero() && c.is_finite()) {
        return Err(invalid("C must be positive and finite"));
    }
    let four_c = T::lit(4.0) * c;
    let f = |z: Complex<T>| legs.iter().fold(Complex::new(four_c, T::zero()), |acc, l| acc * l.eval(z));
    let contour = coeff_by_contour(f, n, contour_radius::<T>(n))?.value.re;
    let series = legs
        .iter()
        .map(|l| l.coeffs_recurrence(n))
        .reduce(|x, y| convolve(&x, &y))
        .expect("three legs");
    agree(contour, four_c * series[n], "three-point main term", n)
}

fn convolve<T: Real>(x: &[T], y: &[T]) -> Vec<T> {
    let n = x.len().min(y.len());
    (0..n)
        .map(|m| x[..=m].iter().zip(y[..=m].iter().rev()).fold(T::zero(), |s, (&a, &b)| s + a * b))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ise::IseParams;

    fn central_binomial_ratio(n: usize) -> f64 {
        (1..=n).fold(1.0, |acc, j| acc * (j as f64 - 0.5) / j as f64)
    }

    #[test]
    fn principal_branch_is_positive_on_the_real_axis() {
        for x in [-1e6, -3.0, -0.5, 0.0, 0.3, 0.999_999] {
            let s = sqrt_one_minus(Complex::new(x, 0.0f64));
            assert!(s.re > 0.0 && s.im == 0.0, "{x}");
        }
        // just above and below the cut the imaginary parts have opposite signs
        let up = sqrt_one_minus(Complex::new(2.0f64, 1e-12));
        let down = sqrt_one_minus(Complex::new(2.0f64, -1e-12));
        assert!(up.im < 0.0 && down.im > 0.0);
    }

    #[test]
    fn first_coefficient_of_pure_branch() {
        let b = BranchMainTerm::new(2f64.powf(1.5), 1.0, 0.0).unwrap();
        assert!((main_term_coeff(&b, 1).unwrap() - 0.5).abs() < 1e-14);
    }

    #[test]
    fn zero_momentum_is_central_binomial() {
        let c = 1.7;
        let b = BranchMainTerm::new(c, 1.0, 0.0).unwrap();
        for n in [1, 7, 100, 1000] {
            let want = c * 2f64.powf(-1.5) * central_binomial_ratio(n);
            let got = main_term_coeff(&b, n).unwrap();
            assert!((got / want - 1.0).abs() < 1e-12, "n={n}");
        }
    }

    #[test]
    fn routes_agree() {
        for k2 in [0.0, 0.01, 0.5, 3.0] {
            let b = BranchMainTerm::new(1.0, 1.3, k2).unwrap();
            for n in [10, 100, 1000, 10_000] {
                main_term_coeff(&b, n).unwrap();
            }
        }
    }

    #[test]
    fn zero_momentum_asymptotics() {
        let b = BranchMainTerm::new(1.0, 1.0, 0.0).unwrap();
        let mut prev = f64::INFINITY;
        for n in [100usize, 1000, 10_000] {
            let ratio = main_term_coeff(&b, n).unwrap() * (8.0 * std::f64::consts::PI * n as f64).sqrt();
            let dev = (ratio - 1.0).abs();
            assert!(dev < 0.5 / n as f64 && dev < prev);
            prev = dev;
        }
    }

    #[test]
    fn scaled_coefficients_approach_the_ise_transform() {
        let n = 10_000usize;
        let ise = IseParams::<f64>::new(1, 1e-10).unwrap();
        for k2 in [0.0, 1.0, 4.0] {
            let b = BranchMainTerm::new(1.0, 1.0, k2 / (n as f64).sqrt()).unwrap();
            let scaled = main_term_coeff(&b, n).unwrap() * (8.0 * std::f64::consts::PI * n as f64).sqrt();
            let want = ise.a2_fourier(k2).unwrap();
            assert!((scaled / want - 1.0).abs() < 0.01, "k2={k2}: {scaled} vs {want}");
        }
    }

    #[test]
    fn three_point_term_approaches_the_ise_transform() {
        let n = 4000usize;
        let ise = IseParams::<f64>::new(1, 1e-10).unwrap();
        let root = (n as f64).sqrt();
        for (s1, s2, s3) in [(0.0, 0.0, 0.0), (2.0, 1.0, 1.0), (5.0, 4.0, 1.0)] {
            let v = three_point_coeff(1.0, 1.0, [s1 / root, s2 / root, s3 / root], n).unwrap();
            let scaled = v * (8.0 * std::f64::consts::PI).sqrt() / root;
            let want = ise.a3_fourier(s1, s2, s3).unwrap();
            assert!((scaled / want - 1.0).abs() < 0.03, "{scaled} vs {want}");
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(BranchMainTerm::new(0.0, 1.0, 0.0).is_err());
        assert!(BranchMainTerm::new(1.0, 1.0, -1.0).is_err());
        let b = BranchMainTerm::new(1.0, 1.0, 0.0).unwrap();
        assert!(main_term_coeff(&b, 0).is_err());
    }
}

//! Power series, Cauchy coefficient extraction, branch-cut main terms and
//! numerical checks of the transfer lemmas used to invert generating
//! functions.

mod contour;
mod lemmas;
mod main_term;

pub use contour::{coeff_by_contour, coeff_by_contour_nodes, contour_radius, Contour};
pub use lemmas::{
    branch_lower_bound_check, branch_slack, random_taylor_suite, verify_fd2step, verify_taylor_eps,
    verify_transfer, BranchReport, DiskMesh, Fd2StepReport, TaylorReport, TransferReport,
};
pub use main_term::{main_term_coeff, sqrt_one_minus, three_point_coeff, BranchMainTerm};

use num_complex::Complex;

use crate::error::{invalid, Result};
use crate::scalar::Real;

fn zero<T: Real>() -> Complex<T> {
    Complex::new(T::zero(), T::zero())
}

/// Truncated power series `Σ a_n z^n` with complex coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerSeries<T> {
    coeffs: Vec<Complex<T>>,
    radius_hint: Option<T>,
}

impl<T: Real> PowerSeries<T> {
    pub fn new(coeffs: Vec<Complex<T>>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(invalid("a power series needs at least one coefficient"));
        }
        if coeffs.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(invalid("power series coefficients must be finite"));
        }
        Ok(Self { coeffs, radius_hint: None })
    }

    pub fn from_real(coeffs: &[T]) -> Result<Self> {
        Self::new(coeffs.iter().map(|&a| Complex::new(a, T::zero())).collect())
    }

    /// Coefficients of `(1 - z)^alpha` up to `z^degree`.
    pub fn one_minus_z_pow(alpha: T, degree: usize) -> Self {
        let mut coeffs = Vec::with_capacity(degree + 1);
        let mut a = T::one();
        coeffs.push(Complex::new(a, T::zero()));
        for n in 1..=degree {
            let nf = T::from_usize_lossy(n);
            a = a * (nf - T::one() - alpha) / nf;
            coeffs.push(Complex::new(a, T::zero()));
        }
        Self { coeffs, radius_hint: Some(T::one()) }
    }

    pub fn with_radius_hint(mut self, r: T) -> Self {
        self.radius_hint = Some(r);
        self
    }

    pub fn radius_hint(&self) -> Option<T> {
        self.radius_hint
    }

    pub fn coeffs(&self) -> &[Complex<T>] {
        &self.coeffs
    }

    pub fn coeff(&self, n: usize) -> Complex<T> {
        self.coeffs.get(n).copied().unwrap_or_else(zero)
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn eval(&self, z: Complex<T>) -> Complex<T> {
        self.coeffs.iter().rev().fold(Complex::new(T::zero(), T::zero()), |acc, &a| acc * z + a)
    }

    /// `Σ |a_n| r^n` over the stored coefficients.
    pub fn norm(&self, r: T) -> T {
        self.coeffs.iter().rev().fold(T::zero(), |acc, a| acc * r + a.norm())
    }

    /// `Σ_{n>=1} n^eps a_n z^n`.
    pub fn fractional_derivative(&self, eps: T) -> Result<Self> {
        if !(eps > T::zero()) || !eps.is_finite() {
            return Err(invalid(format!("fractional order {eps} must be positive")));
        }
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(n, &a)| if n == 0 { zero() } else { a * T::from_usize_lossy(n).powf(eps) })
            .collect();
        Ok(Self { coeffs, radius_hint: self.radius_hint })
    }

    /// Ordinary derivative `f'(z)`.
    pub fn derivative(&self) -> Self {
        let coeffs = if self.coeffs.len() == 1 {
            vec![zero()]
        } else {
            self.coeffs.iter().enumerate().skip(1).map(|(n, &a)| a * T::from_usize_lossy(n)).collect()
        };
        Self { coeffs, radius_hint: self.radius_hint }
    }

    /// Full Cauchy product.
    pub fn mul(&self, other: &Self) -> Self {
        let mut coeffs = vec![zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in other.coeffs.iter().enumerate() {
                coeffs[i + j] = coeffs[i + j] + a * b;
            }
        }
        Self { coeffs, radius_hint: None }
    }
}

pub fn series_norm<T: Real>(f: &PowerSeries<T>, r: T) -> T {
    f.norm(r)
}

pub fn fractional_derivative<T: Real>(f: &PowerSeries<T>, eps: T) -> Result<PowerSeries<T>> {
    f.fractional_derivative(eps)
}

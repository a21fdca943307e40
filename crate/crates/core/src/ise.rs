//! Two- and three-point densities of integrated super-Brownian excursion and
//! their Fourier transforms.
//!
//! All integrals are one-dimensional adaptive Gauss–Kronrod, nested where
//! needed. The Gaussian factor `e^{-t^2/2}` is cut at `t_max`, chosen so the
//! neglected tail is far below the requested absolute tolerance.

use crate::error::{invalid, Error, Result};
use crate::quadrature::{integrate, Quadrature, Tolerance};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IseParams<T> {
    /// Spatial dimension for the densities.
    pub d: usize,
    pub abs_tol: T,
    /// Upper cut for the excursion-time variable.
    pub t_max: T,
}

impl<T: Real> IseParams<T> {
    /// Parameters with `t_max = sqrt(2 ln(1/abs_tol)) + 5`.
    pub fn new(d: usize, abs_tol: T) -> Result<Self> {
        if d == 0 {
            return Err(invalid("dimension must be at least 1"));
        }
        if !(abs_tol > T::zero() && abs_tol < T::one()) {
            return Err(invalid("abs_tol must lie in (0, 1)"));
        }
        let t_max = (T::lit(2.0) * abs_tol.recip().ln()).sqrt() + T::lit(5.0);
        Ok(Self { d, abs_tol, t_max })
    }

    fn tol(&self, abs: T) -> Tolerance<T> {
        Tolerance::absolute(abs).with_max_intervals(4000)
    }

    fn checked(&self, q: Quadrature<T>, what: &str) -> Result<Quadrature<T>> {
        if !q.value.is_finite() {
            return Err(Error::NumericInconsistency(format!("{what}: non-finite quadrature value")));
        }
        Ok(q)
    }

    /// `Â^(2)(k) = ∫_0^∞ t e^{-t²/2} e^{-k² t/2} dt` as a function of `k2 = k²`.
    pub fn a2_fourier(&self, k2: T) -> Result<T> {
        self.a2_fourier_quad(k2).map(|q| q.value)
    }

    pub fn a2_fourier_quad(&self, k2: T) -> Result<Quadrature<T>> {
        if !(k2 >= T::zero()) || !k2.is_finite() {
            return Err(invalid(format!("k² = {k2} must be finite and nonnegative")));
        }
        let half = T::lit(0.5);
        let q = integrate(|t: T| t * (-half * t * (t + k2)).exp(), T::zero(), self.t_max, self.tol(self.abs_tol));
        self.checked(q, "a2_fourier")
    }

    /// `A^(2)(x) = ∫_0^∞ t e^{-t²/2} (2πt)^{-d/2} e^{-x²/2t} dt` at a point
    /// `x` in `R^d`. Diverges at `x = 0` for `d >= 4`.
    pub fn a2_density(&self, x: &[T]) -> Result<T> {
        if x.len() != self.d {
            return Err(invalid(format!("point of dimension {} for d = {}", x.len(), self.d)));
        }
        let x2 = x.iter().fold(T::zero(), |s, &v| s + v * v);
        if x2 == T::zero() && self.d >= 4 {
            return Err(Error::OutOfDomain(format!("A2 density at x = 0 diverges for d = {}", self.d)));
        }
        // t = s^2 removes the t^{-d/2} endpoint behaviour
        let two = T::lit(2.0);
        let half = T::lit(0.5);
        let p = T::from_usize_lossy(3) - T::from_usize_lossy(self.d);
        let norm = two * (two * T::PI()).powf(-T::from_usize_lossy(self.d) * half);
        let f = |s: T| {
            if s == T::zero() {
                return if p == T::zero() && x2 == T::zero() { T::one() } else { T::zero() };
            }
            let s2 = s * s;
            s.powf(p) * (-half * s2 * s2 - half * x2 / s2).exp()
        };
        let peak = (x2 * half).powf(T::lit(1.0 / 6.0));
        let s_max = self.t_max.sqrt() + peak;
        let q = integrate(f, T::zero(), s_max, self.tol(self.abs_tol / norm));
        Ok(self.checked(q, "a2_density")?.value * norm)
    }

    /// `Â^(3)(k, l)` from the squared lengths `s1 = (k+l)²`, `s2 = k²`, `s3 = l²`.
    pub fn a3_fourier(&self, s1: T, s2: T, s3: T) -> Result<T> {
        self.a3_fourier_quad(s1, s2, s3).map(|q| q.value)
    }

    pub fn a3_fourier_quad(&self, s1: T, s2: T, s3: T) -> Result<Quadrature<T>> {
        for s in [s1, s2, s3] {
            if !(s >= T::zero()) || !s.is_finite() {
                return Err(invalid(format!("squared wavevector {s} must be finite and nonnegative")));
            }
        }
        // the simplex integral is symmetric in (s1, s2, s3); put the smallest
        // last so every exponent below is nonpositive
        let mut s = [s1, s2, s3];
        s.sort_by(|a, b| b.partial_cmp(a).expect("finite"));
        let [a, b, c] = s;
        let half = T::lit(0.5);
        let inner_tol = self.tol(self.abs_tol * T::lit(0.05));
        let mut inner_err = T::zero();
        // t = S u with u on the unit simplex; the u2 integral is done in closed form
        let outer = |big_s: T| {
            if big_s == T::zero() {
                return T::zero();
            }
            let h = half * big_s;
            let j = integrate(
                |u1: T| {
                    let w = T::one() - u1;
                    (-h * (c + (a - c) * u1)).exp() * w * phi(h * (b - c) * w)
                },
                T::zero(),
                T::one(),
                inner_tol,
            );
            inner_err = inner_err.max(j.error);
            big_s * big_s * big_s * (-half * big_s * big_s).exp() * j.value
        };
        let mut q = integrate(outer, T::zero(), self.t_max, self.tol(self.abs_tol * T::lit(0.5)));
        q.error = q.error + T::lit(2.0) * inner_err;
        self.checked(q, "a3_fourier")
    }

    /// `A^(3)(x, y)` with the branch point integrated out analytically.
    /// Diverges for `d >= 4` when `x`, `y` or `x - y` vanishes.
    pub fn a3_density(&self, x: &[T], y: &[T]) -> Result<T> {
        if x.len() != self.d || y.len() != self.d {
            return Err(invalid("points must have dimension d"));
        }
        let sq = |v: &mut dyn Iterator<Item = T>| v.fold(T::zero(), |s, t| s + t * t);
        let x2 = sq(&mut x.iter().copied());
        let y2 = sq(&mut y.iter().copied());
        let z2 = sq(&mut x.iter().zip(y).map(|(a, b)| *a - *b));
        if self.d >= 4 && (x2 == T::zero() || y2 == T::zero() || z2 == T::zero()) {
            return Err(Error::OutOfDomain(format!(
                "A3 density with a coincident point diverges for d = {}",
                self.d
            )));
        }
        let half = T::lit(0.5);
        let dd = T::from_usize_lossy(self.d);
        let pw = T::lit(3.0) - dd;
        let norm = (T::lit(2.0) * T::PI()).powf(-dd);
        let t_max = self.t_max;
        let tol_s = self.tol(self.abs_tol / norm * T::lit(0.01));
        // after the Gaussian branch-point integral the t-integrand is
        // (2π)^{-d} σ^{-d/2} e^{-Q/2}; with t = S u this splits into a
        // simplex weight and a one-dimensional integral in S
        let g = move |qq: T| -> T {
            let peak = (qq * half).powf(T::lit(1.0 / 3.0));
            integrate(
                |s: T| {
                    if s == T::zero() {
                        return if pw == T::zero() && qq == T::zero() { T::one() } else { T::zero() };
                    }
                    s.powf(pw) * (-half * s * s - half * qq / s).exp()
                },
                T::zero(),
                t_max + peak,
                tol_s,
            )
            .value
        };
        let middle = |u1: T| {
            let rest = T::one() - u1;
            integrate(
                |u2: T| {
                    let u3 = (rest - u2).max(T::zero());
                    let sigma = u1 * u2 + u1 * u3 + u2 * u3;
                    if sigma <= T::zero() {
                        return T::zero();
                    }
                    let qq = (x2 * u3 + y2 * u2 + z2 * u1) / sigma;
                    sigma.powf(-half * dd) * g(qq)
                },
                T::zero(),
                rest,
                self.tol(self.abs_tol / norm * T::lit(0.1)),
            )
            .value
        };
        let q = integrate(middle, T::zero(), T::one(), self.tol(self.abs_tol / norm * T::lit(0.5)));
        Ok(self.checked(q, "a3_density")?.value * norm)
    }
}

/// `(1 - e^{-y}) / y`, continuous at 0.
fn phi<T: Real>(y: T) -> T {
    if y.abs() < T::lit(1e-8) {
        T::one() - y * T::lit(0.5)
    } else {
        -(-y).exp_m1() / y
    }
}

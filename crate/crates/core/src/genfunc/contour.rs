use num_complex::Complex;

use crate::error::{invalid, Result};
use crate::scalar::Real;

const MIN_NODES: usize = 4096;
const NODE_CAP: usize = 1 << 20;

/// Result of a trapezoid-rule Cauchy integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Contour<T> {
    pub value: Complex<T>,
    /// Change between the last two node counts.
    pub error: T,
    pub nodes: usize,
}

/// Radius `1 - 1/n` for coefficients of a function singular at `z = 1`,
/// kept at least `1/2` for tiny `n`.
pub fn contour_radius<T: Real>(n: usize) -> T {
    let r = T::one() - T::from_usize_lossy(n.max(1)).recip();
    r.max(T::lit(0.5))
}

struct Compensated<T> {
    sum: T,
    carry: T,
}

impl<T: Real> Compensated<T> {
    fn new() -> Self {
        Self { sum: T::zero(), carry: T::zero() }
    }

    fn add(&mut self, x: T) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry = self.carry + (self.sum - t) + x;
        } else {
            self.carry = self.carry + (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> T {
        self.sum + self.carry
    }
}

/// Sum of `f(r ω^j) ω^{-jn}` over `j = start, start + step, ...` below `m`,
/// with `ω = e^{2πi/m}`, plus the sum of magnitudes.
fn node_sum<T: Real, F: Fn(Complex<T>) -> Complex<T>>(
    f: &F,
    n: usize,
    r: T,
    m: usize,
    start: usize,
    step: usize,
) -> (Complex<T>, T) {
    let (mut re, mut im, mut mag) = (Compensated::new(), Compensated::new(), Compensated::new());
    let two_pi = T::lit(2.0) * T::PI();
    let mf = T::from_usize_lossy(m);
    let mut j = start;
    while j < m {
        let theta = two_pi * T::from_usize_lossy(j) / mf;
        let (s, c) = theta.sin_cos();
        let fz = f(Complex::new(r * c, r * s));
        // reduce j n mod m exactly before forming the angle
        let k = ((j as u128 * n as u128) % m as u128) as usize;
        let phase = two_pi * T::from_usize_lossy(k) / mf;
        let (ps, pc) = phase.sin_cos();
        let term = fz * Complex::new(pc, -ps);
        re.add(term.re);
        im.add(term.im);
        mag.add(fz.norm());
        j += step;
    }
    (Complex::new(re.value(), im.value()), mag.value())
}

/// Trapezoid rule with exactly `m` nodes on `|z| = r`.
pub fn coeff_by_contour_nodes<T: Real, F: Fn(Complex<T>) -> Complex<T>>(f: F, n: usize, r: T, m: usize) -> Complex<T> {
    let (s, _) = node_sum(&f, n, r, m.max(1), 0, 1);
    s * (r.powi(-(n as i32)) / T::from_usize_lossy(m.max(1)))
}

/// Coefficient of `z^n` of `f` from `(1/2πi)∮ f(z) z^{-n-1} dz` on `|z| = r`.
///
/// Starts from `max(4096, 16n)` nodes and doubles (reusing earlier nodes)
/// until two successive rules agree to rounding level. `f` must be analytic
/// on the closed disk of radius `r`; that is the caller's responsibility.
pub fn coeff_by_contour<T: Real, F: Fn(Complex<T>) -> Complex<T>>(f: F, n: usize, r: T) -> Result<Contour<T>> {
    if !(r > T::zero()) || !r.is_finite() {
        return Err(invalid(format!("contour radius {r} must be positive")));
    }
    let cap = NODE_CAP.max(64 * n).next_power_of_two();
    let mut m = MIN_NODES.max(16 * n).next_power_of_two().min(cap);
    let (mut sum, mut mag) = node_sum(&f, n, r, m, 0, 1);
    let scale = r.powi(-(n as i32));
    let mut value = sum * (scale / T::from_usize_lossy(m));
    let tol = T::lit(64.0) * T::epsilon();
    loop {
        if m >= cap {
            return Ok(Contour { value, error: T::nan(), nodes: m });
        }
        let m2 = 2 * m;
        // the odd nodes of the doubled rule are new
        let (odd, odd_mag) = node_sum(&f, n, r, m2, 1, 2);
        sum = sum + odd;
        mag = mag + odd_mag;
        m = m2;
        let next = sum * (scale / T::from_usize_lossy(m));
        let error = (next - value).norm();
        value = next;
        let floor = tol * (mag * scale / T::from_usize_lossy(m)).max(value.norm());
        if error <= floor.max(tol * value.norm()) {
            return Ok(Contour { value, error, nodes: m });
        }
    }
}

//! Globally adaptive Gauss–Kronrod (10/21 point) quadrature.

// Tabulated nodes and weights, kept at full published precision.
#![allow(clippy::excessive_precision)]

use crate::scalar::Real;

const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689,
    0.973_906_528_517_171_720_077_964_012_084,
    0.930_157_491_355_708_226_001_207_180_060,
    0.865_063_366_688_984_510_732_096_688_423,
    0.780_817_726_586_416_897_063_717_578_345,
    0.679_409_568_299_024_406_234_327_365_115,
    0.562_757_134_668_604_683_339_000_099_273,
    0.433_395_394_129_247_190_799_265_943_166,
    0.294_392_862_701_460_198_131_126_603_104,
    0.148_874_338_981_631_210_884_826_001_130,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062,
    0.032_558_162_307_964_727_478_818_972_459,
    0.054_755_896_574_351_996_031_381_300_245,
    0.075_039_674_810_919_952_767_043_140_916,
    0.093_125_454_583_697_605_535_065_465_083,
    0.109_387_158_802_297_641_899_210_590_326,
    0.123_491_976_262_065_851_077_600_525_479,
    0.134_709_217_311_473_325_928_054_001_772,
    0.142_775_938_577_060_080_797_094_273_139,
    0.147_739_104_901_338_491_374_841_515_972,
    0.149_445_554_002_916_905_664_936_468_390,
];

// Gauss weights for the odd Kronrod nodes XGK[1], XGK[3], ..., XGK[9]
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893,
    0.149_451_349_150_580_593_145_776_339_658,
    0.219_086_362_515_982_043_995_534_934_228,
    0.269_266_719_309_996_355_091_226_921_569,
    0.295_524_224_714_752_870_173_892_994_651,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature<T> {
    pub value: T,
    /// Estimated absolute error.
    pub error: T,
    pub evaluations: usize,
    /// Whether the requested tolerance was met within the subdivision limit.
    pub converged: bool,
}

/// Tolerances and limits for [`integrate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance<T> {
    pub abs: T,
    pub rel: T,
    pub max_intervals: usize,
}

impl<T: Real> Tolerance<T> {
    pub fn absolute(abs: T) -> Self {
        Self { abs, rel: T::zero(), max_intervals: 2000 }
    }

    pub fn with_rel(mut self, rel: T) -> Self {
        self.rel = rel;
        self
    }

    pub fn with_max_intervals(mut self, n: usize) -> Self {
        self.max_intervals = n;
        self
    }
}

struct Panel<T> {
    a: T,
    b: T,
    value: T,
    error: T,
}

fn gk21<T: Real, F: FnMut(T) -> T>(f: &mut F, a: T, b: T) -> (T, T) {
    let half = T::lit(0.5);
    let centre = half * (a + b);
    let h = half * (b - a);
    let fc = f(centre);
    let mut res_k = fc * T::lit(WGK[10]);
    let mut res_g = T::zero();
    let mut fv1 = [T::zero(); 10];
    let mut fv2 = [T::zero(); 10];
    for j in 0..10 {
        let dx = h * T::lit(XGK[j]);
        let f1 = f(centre - dx);
        let f2 = f(centre + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        res_k = res_k + T::lit(WGK[j]) * (f1 + f2);
        if j % 2 == 1 {
            res_g = res_g + T::lit(WG[j / 2]) * (f1 + f2);
        }
    }
    let mean = res_k * half;
    let mut res_asc = T::lit(WGK[10]) * (fc - mean).abs();
    for j in 0..10 {
        res_asc = res_asc + T::lit(WGK[j]) * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let hab = h.abs();
    let value = res_k * h;
    res_asc = res_asc * hab;
    let mut err = ((res_k - res_g) * h).abs();
    if res_asc != T::zero() && err != T::zero() {
        let scale = (T::lit(200.0) * err / res_asc).powf(T::lit(1.5));
        err = res_asc * scale.min(T::one());
    }
    // floor from rounding in the sum itself
    let floor = T::lit(50.0) * T::epsilon() * value.abs();
    (value, err.max(floor))
}

/// Integrates `f` over `[a, b]` by repeatedly bisecting the panel with the
/// largest error estimate until `error <= max(abs, rel * |value|)`.
pub fn integrate<T: Real, F: FnMut(T) -> T>(mut f: F, a: T, b: T, tol: Tolerance<T>) -> Quadrature<T> {
    if a == b {
        return Quadrature { value: T::zero(), error: T::zero(), evaluations: 0, converged: true };
    }
    let (v, e) = gk21(&mut f, a, b);
    let mut panels = vec![Panel { a, b, value: v, error: e }];
    let mut evaluations = 21;
    let mut value = v;
    let mut error = e;
    let mut magnitude = v.abs();
    // below the rounding floor further bisection cannot help
    let target = |value: T, magnitude: T| {
        tol.abs.max(tol.rel * value.abs()).max(T::lit(100.0) * T::epsilon() * magnitude)
    };
    while error > target(value, magnitude) && panels.len() < tol.max_intervals {
        let (worst, _) = panels
            .iter()
            .enumerate()
            .fold((0, T::neg_infinity()), |acc, (i, p)| if p.error > acc.1 { (i, p.error) } else { acc });
        let p = panels.swap_remove(worst);
        let mid = T::lit(0.5) * (p.a + p.b);
        if mid <= p.a.min(p.b) || mid >= p.a.max(p.b) {
            // panel is at machine resolution
            panels.push(p);
            break;
        }
        let (v1, e1) = gk21(&mut f, p.a, mid);
        let (v2, e2) = gk21(&mut f, mid, p.b);
        evaluations += 42;
        panels.push(Panel { a: p.a, b: mid, value: v1, error: e1 });
        panels.push(Panel { a: mid, b: p.b, value: v2, error: e2 });
        // resum to avoid drift from repeated add/subtract
        value = panels.iter().fold(T::zero(), |s, p| s + p.value);
        error = panels.iter().fold(T::zero(), |s, p| s + p.error);
        magnitude = panels.iter().fold(T::zero(), |s, p| s + p.value.abs());
    }
    Quadrature { value, error, evaluations, converged: error <= target(value, magnitude) }
}

/// Integrates over `[a, b]` after splitting at the given interior points.
pub fn integrate_split<T: Real, F: FnMut(T) -> T>(
    mut f: F,
    points: &[T],
    tol: Tolerance<T>,
) -> Quadrature<T> {
    let pieces = points.len().saturating_sub(1).max(1);
    let per = Tolerance { abs: tol.abs / T::from_usize_lossy(pieces), ..tol };
    let mut out = Quadrature { value: T::zero(), error: T::zero(), evaluations: 0, converged: true };
    for w in points.windows(2) {
        let q = integrate(&mut f, w[0], w[1], per);
        out.value = out.value + q.value;
        out.error = out.error + q.error;
        out.evaluations += q.evaluations;
        out.converged &= q.converged;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomials_are_exact() {
        // both rules are exact below degree 20, so one panel suffices
        let q = integrate(|x: f64| x.powi(18), -1.0, 1.0, Tolerance::absolute(1e-14));
        assert!((q.value - 2.0 / 19.0).abs() < 1e-15);
        assert_eq!(q.evaluations, 21);
        let q = integrate(|x: f64| x.powi(30), -1.0, 1.0, Tolerance::absolute(1e-14));
        assert!((q.value - 2.0 / 31.0).abs() < 1e-15);
    }

    #[test]
    fn gaussian_and_sqrt_endpoint() {
        let q = integrate(|x: f64| (-x * x / 2.0).exp(), 0.0, 40.0, Tolerance::absolute(1e-13));
        assert!((q.value - (std::f64::consts::PI / 2.0).sqrt()).abs() < 1e-12);
        assert!(q.converged);
        let q = integrate(|x: f64| x.sqrt(), 0.0, 1.0, Tolerance::absolute(1e-12));
        assert!((q.value - 2.0 / 3.0).abs() < 1e-11);
        let q = integrate(|x: f64| 1.0 / x.sqrt(), 0.0, 1.0, Tolerance::absolute(1e-9));
        assert!((q.value - 2.0).abs() < 1e-8, "{}", q.value);
    }

    #[test]
    fn reversed_limits_flip_sign() {
        let a = integrate(|x: f64| x.sin(), 0.0, 2.0, Tolerance::absolute(1e-13));
        let b = integrate(|x: f64| x.sin(), 2.0, 0.0, Tolerance::absolute(1e-13));
        assert!((a.value + b.value).abs() < 1e-14);
        assert!((a.value - (1.0 - 2f64.cos())).abs() < 1e-13);
    }

    #[test]
    fn works_in_single_precision() {
        let q = integrate(|x: f32| x.exp(), 0.0, 1.0, Tolerance::absolute(1e-5));
        assert!((q.value - (1f32.exp() - 1.0)).abs() < 1e-5);
    }

    #[test]
    fn split_points() {
        let q = integrate_split(|x: f64| x.abs(), &[-1.0, 0.0, 2.0], Tolerance::absolute(1e-13));
        assert!((q.value - 2.5).abs() < 1e-13);
    }
}

//! Acceptance suite. Every test prints one `acceptance N ... PASS|FAIL` line
//! and then asserts the same condition. Run with `--nocapture` to see the
//! lines; the heavy Monte Carlo inputs are shared through `OnceLock`s.

use std::f64::consts::PI;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use perclab::compare::{compare_q3_to_ise, compare_qn_to_ise, default_q3_grid};
use perclab::diagrams::{loglog_slope, magnetization_square, square_scaling, triangle_line, triangle_mc, DiagramEstimate};
use perclab::genfunc::{branch_lower_bound_check, random_taylor_suite};
use perclab::{BranchMainTerm, IseParams};
use perclab::pc::{estimate_pc, pc_series, PcEstimate};
use perclab::stats::{
    chi_square_gof, conditional_profiles, conditional_two_point, estimate_size_pmf, fit_power_law, line_pmf,
    ConditionalOptions, SizeHistogram,
};
use perclab::tree_oracle::{verify_delta_two, OffspringLaw};
use statrs::function::erf::erfc;

fn report(id: u32, name: &str, pass: bool, budget: Duration, took: Duration, detail: String) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    let clock = if took <= budget { "within" } else { "over" };
    println!("acceptance {id:>2} {name}: {verdict} | {detail} | {:.1?} ({clock} budget {:?})", took, budget);
    assert!(pass, "acceptance {id} {name} failed: {detail}");
}

fn pc7() -> &'static PcEstimate {
    static PC: OnceLock<PcEstimate> = OnceLock::new();
    PC.get_or_init(|| estimate_pc(7, 32, 50_000, 1e-3, 0x7063).expect("p_c search"))
}

/// 10^6 clusters at the estimated `p_c` in d = 7, capped at 10^5.
fn critical_histogram() -> &'static SizeHistogram {
    static H: OnceLock<SizeHistogram> = OnceLock::new();
    H.get_or_init(|| estimate_size_pmf(pc7().p_c, 7, 1_000_000, 100_000, 0x6869_7374).expect("histogram"))
}

#[test]
fn ise_normalization() {
    let t = Instant::now();
    let ise = IseParams::new(7, 1e-12).unwrap();
    let a2 = ise.a2_fourier(0.0).unwrap();
    let a3 = ise.a3_fourier(0.0, 0.0, 0.0).unwrap();
    let dev = (a2 - 1.0).abs().max((a3 - 1.0).abs());
    report(1, "ISE normalization", dev <= 1e-8, Duration::from_secs(1), t.elapsed(), format!("max |A-1| = {dev:.2e}"));
}

/// `1 - a R(a)` with Mills ratio `R(a) = e^{a²/2} ∫_a^∞ e^{-t²/2} dt`,
/// `a = k²/2`. Continued fraction for large `a`, where `e^{a²/2}` overflows.
fn a2_closed_form(k2: f64) -> f64 {
    let a = 0.5 * k2;
    let mills = if a < 5.0 {
        (PI / 2.0).sqrt() * (a * a / 2.0).exp() * erfc(a / 2f64.sqrt())
    } else {
        let mut tail = 0.0;
        for n in (1..200).rev() {
            tail = n as f64 / (a + tail);
        }
        1.0 / (a + tail)
    };
    1.0 - a * mills
}

#[test]
fn ise_closed_form() {
    let t = Instant::now();
    let ise = IseParams::new(3, 1e-13).unwrap();
    let dev = [0.01, 0.1, 1.0, 10.0, 100.0]
        .iter()
        .map(|&k2| (ise.a2_fourier(k2).unwrap() - a2_closed_form(k2)).abs())
        .fold(0.0, f64::max);
    report(2, "ISE erfc closed form", dev <= 1e-9, Duration::from_secs(1), t.elapsed(), format!("max deviation {dev:.2e}"));
}

#[test]
fn coefficient_machinery() {
    let t = Instant::now();
    let mut worst_route = 0.0f64;
    for n in [10, 100, 1000, 10_000] {
        for k2 in [0.0, 0.5] {
            let b = BranchMainTerm::new(1.0, 1.0, k2).unwrap();
            let c = b.coeff_contour(n).unwrap();
            let r = b.coeffs_recurrence(n)[n];
            worst_route = worst_route.max((c / r - 1.0).abs());
        }
    }
    let n = 10_000usize;
    let ise = IseParams::new(1, 1e-12).unwrap();
    let mut worst_ise = 0.0f64;
    for k2 in [0.0, 1.0, 4.0] {
        let b = BranchMainTerm::new(1.0, 1.0, k2 / (n as f64).sqrt()).unwrap();
        let scaled = perclab::genfunc::main_term_coeff(&b, n).unwrap() * (8.0 * PI * n as f64).sqrt();
        worst_ise = worst_ise.max((scaled / ise.a2_fourier(k2).unwrap() - 1.0).abs());
    }
    report(
        3,
        "coefficient machinery",
        worst_route <= 1e-8 && worst_ise <= 0.02,
        Duration::from_secs(60),
        t.elapsed(),
        format!("contour/recurrence {worst_route:.2e}, scaled vs ISE {worst_ise:.4}"),
    );
}

#[test]
fn lemma_harnesses() {
    let t = Instant::now();
    let instances = 100_000;
    let taylor = random_taylor_suite(instances, 0x7461);
    let branch = branch_lower_bound_check(instances, 0x6272).unwrap();
    let pass = taylor.as_ref().is_ok_and(|r| r.max_ratio <= 1.0) && branch.min_slack >= -1e-12;
    let detail = match &taylor {
        Ok(r) => format!("taylor max ratio {:.4} over {} points, branch min slack {:.2e}", r.max_ratio, r.points, branch.min_slack),
        Err(e) => format!("taylor violation: {e}"),
    };
    report(4, "lemma harnesses (1e5 instances each)", pass, Duration::from_secs(60), t.elapsed(), detail);
}

#[test]
fn tree_oracle_delta_two() {
    let t = Instant::now();
    let bin = verify_delta_two(&OffspringLaw::critical_binary(), 64, 4096).unwrap();
    let poi = verify_delta_two(&OffspringLaw::critical_poisson(), 64, 4096).unwrap();
    let exp_ok = (bin.fit.exponent + 1.5).abs() <= 0.02 && (poi.fit.exponent + 1.5).abs() <= 0.02;
    let kb = bin.limit_constant * PI.sqrt();
    let kp = poi.limit_constant * (2.0 * PI).sqrt();
    let const_ok = (kb - 1.0).abs() <= 0.01 && (kp - 1.0).abs() <= 0.01;
    report(
        5,
        "tree oracle exponent and constants",
        exp_ok && const_ok,
        Duration::from_secs(10),
        t.elapsed(),
        format!(
            "slopes {:.4} / {:.4}, constants/target {kb:.5} / {kp:.5}",
            bin.fit.exponent, poi.fit.exponent
        ),
    );
}

#[test]
fn percolation_line_law() {
    let t = Instant::now();
    let h = estimate_size_pmf(0.3, 1, 1_000_000, 10_000, 0x6c69).unwrap();
    let gof = chi_square_gof(&h, |n| line_pmf(0.3, n), 5.0).unwrap();
    report(
        6,
        "d=1 exact size law",
        gof.p_value > 0.01,
        Duration::from_secs(60),
        t.elapsed(),
        format!("chi2 {:.1} on {} dof, p = {:.3}", gof.chi2, gof.dof, gof.p_value),
    );
}

#[test]
fn percolation_delta_two() {
    let t = Instant::now();
    let h = critical_histogram();
    let fit = fit_power_law(h, 32, 2048).unwrap();
    report(
        7,
        "d=7 cluster-size exponent at estimated p_c",
        (fit.exponent + 1.5).abs() <= 0.15,
        Duration::from_secs(600),
        t.elapsed(),
        format!(
            "p_c {:.6}, exponent {:.4} +- {:.4}, {} truncated",
            pc7().p_c,
            fit.exponent,
            fit.stderr,
            h.truncated
        ),
    );
}

#[test]
fn two_point_profile() {
    let t = Instant::now();
    let q = conditional_two_point(pc7().p_c, 7, 1024, 0.1, 20_000, 0x7132, &ConditionalOptions::default()).unwrap();
    let grid: Vec<f64> = (0..=36).map(|i| 0.25 * i as f64).collect();
    let r = compare_qn_to_ise(&q, &grid, 400, 0x626f).unwrap();
    report(
        8,
        "two-point profile vs ISE",
        q.accepted >= 20_000 && r.sup.value <= 0.05,
        Duration::from_secs(3600),
        t.elapsed(),
        format!(
            "{} accepted, D {:.4} +- {:.4}, sup {:.4} (bootstrap sd {:.4}, 95% [{:.4}, {:.4}])",
            q.accepted, r.scale, r.scale_stderr, r.sup.value, r.sup.stderr, r.sup.interval.0, r.sup.interval.1
        ),
    );
}

#[test]
fn three_point_profile() {
    let t = Instant::now();
    let prof = conditional_profiles(pc7().p_c, 7, 512, 0.1, 20_000, 0x7133, 1 << 36).unwrap();
    let r = compare_q3_to_ise(&prof, &default_q3_grid(), None, 400, 0x626f).unwrap();
    let origin = r.values.iter().find(|v| v.point.a == 0.0 && v.point.b == 0.0).unwrap();
    let norm_dev = (origin.empirical - 1.0).abs();
    let sym_ok = r.asymmetry <= 3.0 * r.asymmetry_stderr;
    report(
        9,
        "three-point normalization, symmetry, profile",
        norm_dev <= 1e-10 && sym_ok && r.sup.value <= 0.08,
        Duration::from_secs(3600),
        t.elapsed(),
        format!(
            "|q(0,0)-1| {norm_dev:.1e}, asymmetry {:.4} (bootstrap sd {:.4}), sup {:.4} (sd {:.4})",
            r.asymmetry, r.asymmetry_stderr, r.sup.value, r.sup.stderr
        ),
    );
}

#[test]
fn diagram_scaling() {
    let t = Instant::now();
    let zs = |j0: i32, j1: i32| -> Vec<f64> { (j0..=j1).map(|j| 1.0 - 0.5f64.powi(j)).collect() };
    let sq = square_scaling(7, &zs(4, 12), 200_000, 0x7371).unwrap();
    let sq_fit = loglog_slope(&sq).unwrap();
    // the product is fitted where the magnetization is in its scaling regime
    let h = critical_histogram();
    let prod: Vec<(f64, DiagramEstimate)> =
        zs(6, 12).iter().map(|&z| (z, magnetization_square(7, z, h, 200_000, 0x7371).unwrap())).collect();
    let prod_fit = loglog_slope(&prod).unwrap();
    let far = square_scaling(9, &zs(10, 40).into_iter().step_by(10).collect::<Vec<_>>(), 200_000, 0x7372).unwrap();
    let v: Vec<f64> = far.iter().map(|p| p.1.value).collect();
    let bounded = v.windows(2).all(|w| w[1] >= w[0])
        && v[3] < 1.05 * v[1]
        && (v[3] - v[2]) < 0.5 * (v[2] - v[1]);
    report(
        10,
        "square and magnetization scaling",
        (sq_fit.slope + 0.25).abs() <= 0.05 && (prod_fit.slope - 0.25).abs() <= 0.07 && bounded,
        Duration::from_secs(600),
        t.elapsed(),
        format!(
            "square slope {:.4}, product slope {:.4}, d=9 at 1-z = 2^-10..2^-40: {:?}",
            sq_fit.slope,
            prod_fit.slope,
            v.iter().map(|x| format!("{x:.4e}")).collect::<Vec<_>>()
        ),
    );
}

#[test]
fn triangle_diagram() {
    let t = Instant::now();
    let zero = triangle_mc(0.0, 7, 1000, 10, 1).unwrap();
    let line = triangle_mc(0.3, 1, 1_000_000, 100_000, 0x7472).unwrap();
    let exact = triangle_line(0.3).unwrap();
    let near = triangle_mc(0.8 * pc7().p_c, 7, 100_000, 1_000_000, 0x7473).unwrap();
    let rel = near.stderr / near.value;
    let pass = zero.value == 1.0 && (line.value - exact).abs() <= 3.0 * line.stderr && near.value.is_finite() && rel <= 0.02;
    report(
        11,
        "triangle diagram",
        pass,
        Duration::from_secs(600),
        t.elapsed(),
        format!(
            "p=0 -> {}, d=1 {:.5} +- {:.5} vs {exact:.5}, d=7 at 0.8 p_c {:.4} (rel err {rel:.4}, {} discarded)",
            zero.value, line.value, line.stderr, near.value, near.discarded
        ),
    );
}

#[test]
fn critical_point_sanity() {
    let t = Instant::now();
    let mut ok = true;
    let mut parts = Vec::new();
    for d in [7usize, 10, 14] {
        let est = if d == 7 { *pc7() } else { estimate_pc(d, 16, 30_000, 1e-3, 0x7063).unwrap() };
        let x = 2.0 * d as f64 * est.p_c;
        let rel = est.p_c / pc_series(d) - 1.0;
        ok &= (1.0..=1.5).contains(&x) && rel.abs() <= 0.1;
        parts.push(format!("d={d}: p_c {:.6} (2dp {x:.4}, vs series {rel:+.4})", est.p_c));
    }
    report(12, "p_c sanity", ok, Duration::from_secs(1800), t.elapsed(), parts.join("; "));
}

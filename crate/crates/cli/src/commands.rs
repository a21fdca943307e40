//! One runner per subcommand. Each validates its options before sampling,
//! writes its artifacts and returns a JSON summary for the manifest.

use serde::Serialize;
use serde_json::{json, Value};

use perclab::compare::{compare_q3_to_ise, compare_qn_to_ise, Orientation, Q3Point};
use perclab::diagrams::{self, loglog_slope, DiagramEstimate};
use perclab::genfunc::{branch_lower_bound_check, main_term_coeff, random_taylor_suite};
use perclab::pc::estimate_pc;
use perclab::rng::derive_seed;
use perclab::stats::{
    conditional_profiles, conditional_two_point, estimate_size_pmf, fit_power_law, window_bounds, ConditionalOptions,
};
use perclab::tree_oracle::{progeny_pmf_f64, total_progeny_pmf, verify_delta_two, OffspringLaw};
use perclab::{BranchMainTerm, IseParams};

use crate::config::*;
use crate::error::CliError;
use crate::output::Outputs;

fn bad(flag: &str, msg: &str) -> CliError {
    CliError::Config(format!("--{flag}: {msg}"))
}

fn check_d(d: usize, lo: usize, hi: usize) -> Result<usize, CliError> {
    if d < lo || d > hi {
        return Err(bad("d", &format!("must lie in [{lo}, {hi}]")));
    }
    Ok(d)
}

fn check_window(w: f64) -> Result<f64, CliError> {
    if !(0.0..1.0).contains(&w) {
        return Err(bad("window", "must lie in [0, 1)"));
    }
    Ok(w)
}

fn positive(c: Count, flag: &str) -> Result<u64, CliError> {
    if c.0 == 0 {
        return Err(bad(flag, "must be at least 1"));
    }
    Ok(c.0)
}

fn check_p(p: PSpec) -> Result<PSpec, CliError> {
    match p {
        PSpec::Value(v) if !(0.0..=1.0).contains(&v) => Err(bad("p", "must lie in [0, 1] or be 'auto'")),
        _ => Ok(p),
    }
}

/// Concrete `p`, estimating `p_c` when asked to.
fn resolve_p(p: PSpec, d: usize, seed: u64, notes: &mut Value) -> Result<f64, CliError> {
    match p {
        PSpec::Value(v) => Ok(v),
        PSpec::Auto => {
            if d < 2 {
                return Err(bad("p", "'auto' needs d >= 2"));
            }
            let est = estimate_pc(d, 24, 30_000, 1e-3, derive_seed(seed, 0x7063))?;
            notes["p_c_estimate"] = serde_json::to_value(est)?;
            Ok(est.p_c)
        }
    }
}

pub fn sizes(o: &SizesOpts, seed: u64, out: &mut Outputs) -> Result<Value, CliError> {
    let d = check_d(need(&o.d, "d")?, 1, 64)?;
    let p = check_p(need(&o.p, "p")?)?;
    let samples = positive(need(&o.samples, "samples")?, "samples")?;
    let cap = positive(need(&o.cap, "cap")?, "cap")? as usize;
    let (n_min, n_max) = (need(&o.n_min, "n-min")?, need(&o.n_max, "n-max")?);
    if n_min < 1 || n_max <= n_min {
        return Err(bad("n-max", "need 1 <= n-min < n-max"));
    }
    let mut summary = json!({});
    let p = resolve_p(p, d, seed, &mut summary)?;
    let h = estimate_size_pmf(p, d, samples, cap, derive_seed(seed, 1))?;
    #[derive(Serialize)]
    struct Row {
        n: usize,
        count: u64,
        pmf: f64,
        stderr: f64,
    }
    let rows: Vec<Row> =
        h.counts.iter().map(|(&n, &count)| Row { n, count, pmf: h.pmf(n), stderr: h.pmf_stderr(n) }).collect();
    out.csv("sizes.csv", &rows)?;
    summary["p"] = json!(p);
    summary["samples"] = json!(h.total);
    summary["truncated"] = json!(h.truncated);
    let fit = fit_power_law(&h, n_min, n_max.min(cap));
    match &fit {
        Ok(f) => summary["fit"] = serde_json::to_value(f)?,
        Err(e) => summary["fit_error"] = json!(e.to_string()),
    }
    out.json("fit.json", &summary)?;
    Ok(summary)
}

fn check_conditional(d: Option<usize>, n: Option<usize>, window: Option<f64>) -> Result<(usize, usize, f64), CliError> {
    let d = check_d(need(&d, "d")?, 1, 64)?;
    let n = need(&n, "n")?;
    let w = check_window(need(&window, "window")?)?;
    window_bounds(n, w).map_err(|e| bad("n", &e.to_string()))?;
    Ok((d, n, w))
}

pub fn qn(o: &QnOpts, seed: u64, out: &mut Outputs) -> Result<Value, CliError> {
    let (d, n, w) = check_conditional(o.d, o.n, o.window)?;
    let p = check_p(need(&o.p, "p")?)?;
    let samples = positive(need(&o.samples, "samples")?, "samples")?;
    let grid = need(&o.k_grid, "k-grid")?;
    let batches = need(&o.batches, "batches")?.max(1);
    let mut summary = json!({});
    let p = resolve_p(p, d, seed, &mut summary)?;
    let opts = ConditionalOptions { batches, max_attempts: need(&o.max_attempts, "max-attempts")?.0, ..Default::default() };
    let q = conditional_two_point(p, d, n, w, samples, derive_seed(seed, 2), &opts)?;
    #[derive(Serialize)]
    struct Row {
        k: f64,
        qhat: f64,
        batch_stderr: f64,
    }
    let mut rows = Vec::new();
    for &k in grid.values() {
        let mut kv = vec![0.0; d];
        kv[0] = k;
        let pooled = q.measure.fourier(&kv)?.re;
        let per: Vec<f64> = q.batches.iter().map(|(_, b)| b.fourier(&kv).map(|c| c.re)).collect::<Result<_, _>>()?;
        let mean = per.iter().sum::<f64>() / per.len() as f64;
        let sd = if per.len() > 1 {
            (per.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (per.len() - 1) as f64 / per.len() as f64).sqrt()
        } else {
            f64::NAN
        };
        rows.push(Row { k, qhat: pooled, batch_stderr: sd });
    }
    out.csv("qn.csv", &rows)?;
    summary["p"] = json!(p);
    summary["accepted"] = json!(q.accepted);
    summary["attempted"] = json!(q.attempted);
    summary["bounds"] = json!(q.bounds);
    summary["second_moment"] = json!(q.measure.second_moment(0));
    Ok(summary)
}

fn q3_grid(values: &[f64]) -> Vec<Q3Point> {
    let mut g = Vec::new();
    for orientation in [Orientation::Parallel, Orientation::Orthogonal] {
        for &a in values {
            for &b in values {
                g.push(Q3Point { a, b, orientation });
            }
        }
    }
    g
}

pub fn q3(o: &Q3Opts, seed: u64, out: &mut Outputs) -> Result<Value, CliError> {
    let (d, n, w) = check_conditional(o.d, o.n, o.window)?;
    check_d(d, 2, 64)?;
    let p = check_p(need(&o.p, "p")?)?;
    let samples = positive(need(&o.samples, "samples")?, "samples")?;
    let grid = q3_grid(need(&o.k_grid, "k-grid")?.values());
    let mut summary = json!({});
    let p = resolve_p(p, d, seed, &mut summary)?;
    let prof = conditional_profiles(p, d, n, w, samples, derive_seed(seed, 3), need(&o.max_attempts, "max-attempts")?.0)?;
    // unit scale: the grid is in rescaled lattice units
    let r = compare_q3_to_ise(&prof, &grid, Some(1.0), 2, derive_seed(seed, 4))?;
    #[derive(Serialize)]
    struct Row {
        a: f64,
        b: f64,
        orientation: &'static str,
        qhat: f64,
        stderr: f64,
    }
    let rows: Vec<Row> = r
        .values
        .iter()
        .map(|v| Row {
            a: v.point.a,
            b: v.point.b,
            orientation: orientation_name(v.point.orientation),
            qhat: v.empirical,
            stderr: v.stderr,
        })
        .collect();
    out.csv("q3.csv", &rows)?;
    summary["p"] = json!(p);
    summary["accepted"] = json!(prof.profiles.len());
    summary["attempted"] = json!(prof.attempted);
    Ok(summary)
}

fn orientation_name(o: Orientation) -> &'static str {
    match o {
        Orientation::Parallel => "parallel",
        Orientation::Orthogonal => "orthogonal",
    }
}

pub fn ise(o: &IseOpts, _seed: u64, out: &mut Outputs) -> Result<Value, CliError> {
    let d = check_d(need(&o.d, "d")?, 1, 64)?;
    let tol = need(&o.tol, "tol")?;
    let params = IseParams::new(d, tol).map_err(|e| bad("tol", &e.to_string()))?;
    let grid = need(&o.k2_grid, "k2-grid")?;
    let kind = need(&o.kind, "kind")?;
    if grid.values().iter().any(|v| *v < 0.0) {
        return Err(bad("k2-grid", "values must be nonnegative"));
    }
    #[derive(Serialize)]
    struct Row {
        x: f64,
        y: f64,
        value: f64,
        error: f64,
    }
    let mut rows = Vec::new();
    match kind.as_str() {
        "a2" => {
            for &k2 in grid.values() {
                let q = params.a2_fourier_quad(k2)?;
                rows.push(Row { x: k2, y: 0.0, value: q.value, error: q.error });
            }
        }
        "a3" => {
            // orthogonal k and l: (k+l)² = k² + l²
            for &k2 in grid.values() {
                for &l2 in grid.values() {
                    let q = params.a3_fourier_quad(k2 + l2, k2, l2)?;
                    rows.push(Row { x: k2, y: l2, value: q.value, error: q.error });
                }
            }
        }
        "a2-density" => {
            for &r in grid.values() {
                let mut x = vec![0.0; d];
                x[0] = r;
                rows.push(Row { x: r, y: 0.0, value: params.a2_density(&x)?, error: f64::NAN });
            }
        }
        _ => return Err(bad("kind", "expected a2, a3 or a2-density")),
    }
    let name = format!("ise_{kind}.csv");
    out.csv(&name, &rows)?;
    Ok(json!({ "kind": kind, "points": rows.len() }))
}

pub fn coeff(o: &CoeffOpts, _seed: u64, out: &mut Outputs) -> Result<Value, CliError> {
    let c = need(&o.c, "c")?;
    let scale = need(&o.scale, "scale")?;
    let k2 = need(&o.k2, "k2")?;
    let scaled = need(&o.scaled, "scaled")?;
    let ns: Vec<usize> = need(&o.n_list, "n-list")?
        .values()
        .iter()
        .map(|&v| if v >= 1.0 && v.fract() == 0.0 { Ok(v as usize) } else { Err(bad("n-list", "entries must be integers >= 1")) })
        .collect::<Result<_, _>>()?;
    #[derive(Serialize)]
    struct Row {
        n: usize,
        k2: f64,
        contour: f64,
        recurrence: f64,
        rel_diff: f64,
        normalized: f64,
    }
    let mut rows = Vec::new();
    for &n in &ns {
        let k2n = if scaled { k2 / (n as f64).sqrt() } else { k2 };
        let b = BranchMainTerm::new(c, scale, k2n).map_err(|e| bad("c", &e.to_string()))?;
        let contour = b.coeff_contour(n)?;
        let recurrence = b.coeffs_recurrence(n)[n];
        let rel_diff = (contour / recurrence - 1.0).abs();
        // fails with a numeric inconsistency when the routes disagree
        main_term_coeff(&b, n)?;
        let normalized = recurrence * (8.0 * std::f64::consts::PI * n as f64).sqrt() / c;
        rows.push(Row { n, k2: k2n, contour, recurrence, rel_diff, normalized });
    }
    out.csv("coeff.csv", &rows)?;
    let worst = rows.iter().map(|r| r.rel_diff).fold(0.0, f64::max);
    Ok(json!({ "max_rel_diff": worst }))
}

pub fn lemmas(o: &LemmasOpts, seed: u64, out: &mut Outputs) -> Result<Value, CliError> {
    let instances = positive(need(&o.instances, "instances")?, "instances")? as usize;
    let taylor = random_taylor_suite(instances, derive_seed(seed, 5))?;
    let branch = branch_lower_bound_check(instances, derive_seed(seed, 6))?;
    let summary = json!({ "instances": instances, "taylor": taylor, "branch": branch });
    out.json("lemmas.json", &summary)?;
    Ok(summary)
}

#[derive(Serialize)]
struct DiagramRow {
    kind: String,
    d: usize,
    parameter: f64,
    value: f64,
    stderr: f64,
    samples: u64,
    discarded: u64,
}

fn diagram_row(kind: &str, d: usize, parameter: f64, e: &DiagramEstimate) -> DiagramRow {
    DiagramRow {
        kind: kind.into(),
        d,
        parameter,
        value: e.value,
        stderr: e.stderr,
        samples: e.samples,
        discarded: e.discarded,
    }
}

pub fn diagrams(o: &DiagramsOpts, seed: u64, out: &mut Outputs) -> Result<Value, CliError> {
    let kind = need(&o.kind, "kind")?;
    let d = check_d(need(&o.d, "d")?, 1, 64)?;
    let samples = positive(need(&o.samples, "samples")?, "samples")?;
    let s = derive_seed(seed, 7);
    let mut summary = json!({ "kind": kind });
    let rows = match kind.as_str() {
        "triangle" => {
            let p = check_p(need(&o.p, "p")?)?;
            let factor = need(&o.factor, "factor")?;
            let cap = positive(need(&o.cap, "cap")?, "cap")? as usize;
            let p = resolve_p(p, d, seed, &mut summary)? * factor;
            let e = diagrams::triangle_mc(p, d, samples, cap, s)?;
            vec![diagram_row("triangle", d, p, &e)]
        }
        "irbound" => {
            let c = need(&o.c, "c")?;
            vec![diagram_row("irbound", d, c, &diagrams::triangle_irbound(d, c, samples, s)?)]
        }
        "square" | "magnetization" => {
            let zs = need(&o.z_grid, "z-grid")?;
            check_d(d, 7, 10)?;
            if zs.values().iter().any(|z| !(0.0..1.0).contains(z)) {
                return Err(bad("z-grid", "values must lie in [0, 1)"));
            }
            let pts = if kind == "square" {
                diagrams::square_scaling(d, zs.values(), samples, s)?
            } else {
                let p = check_p(need(&o.p, "p")?)?;
                let clusters = positive(need(&o.clusters, "clusters")?, "clusters")?;
                let cap = positive(need(&o.cap, "cap")?, "cap")? as usize;
                let p = resolve_p(p, d, seed, &mut summary)?;
                let h = estimate_size_pmf(p, d, clusters, cap, derive_seed(seed, 8))?;
                summary["p"] = json!(p);
                zs.values()
                    .iter()
                    .map(|&z| Ok((z, diagrams::magnetization_square(d, z, &h, samples, s)?)))
                    .collect::<Result<Vec<_>, CliError>>()?
            };
            if pts.len() >= 3 {
                match loglog_slope(&pts) {
                    Ok(f) => summary["slope"] = serde_json::to_value(f)?,
                    Err(e) => summary["slope_error"] = json!(e.to_string()),
                }
            }
            pts.iter().map(|(z, e)| diagram_row(&kind, d, *z, e)).collect()
        }
        _ => return Err(bad("kind", "expected triangle, irbound, square or magnetization")),
    };
    out.csv("diagrams.csv", &rows)?;
    out.json("diagrams.json", &summary)?;
    Ok(summary)
}

pub fn pc(o: &PcOpts, seed: u64, out: &mut Outputs) -> Result<Value, CliError> {
    let d = check_d(need(&o.d, "d")?, 2, 64)?;
    let radius = need(&o.radius, "radius")?;
    if radius < 8 {
        return Err(bad("radius", "must be at least 8"));
    }
    let samples = positive(need(&o.samples, "samples")?, "samples")?;
    let tol = need(&o.tol, "tol")?;
    let est = estimate_pc(d, radius, samples, tol, derive_seed(seed, 0x7063))?;
    let summary = json!({
        "estimate": est,
        "two_d_p": 2.0 * d as f64 * est.p_c,
        "relative_to_series": est.p_c / est.series - 1.0,
    });
    out.json("pc.json", &summary)?;
    Ok(summary)
}

pub fn tree(o: &TreeOpts, _seed: u64, out: &mut Outputs) -> Result<Value, CliError> {
    let law = match need(&o.law, "law")?.as_str() {
        "binomial" => OffspringLaw::critical_binary(),
        "poisson" => OffspringLaw::critical_poisson(),
        _ => return Err(bad("law", "expected binomial or poisson")),
    };
    let (n_min, n_max) = (need(&o.n_min, "n-min")?, need(&o.n_max, "n-max")?);
    if n_min < 1 || n_max < 4 * n_min {
        return Err(bad("n-max", "need n-min >= 1 and n-max >= 4 n-min"));
    }
    #[derive(Serialize)]
    struct Row {
        n: usize,
        pmf: f64,
        scaled: f64,
        exact: bool,
    }
    let mut rows = Vec::new();
    let mut n = 1;
    while n <= n_max {
        let exact = n <= perclab::tree_oracle::EXACT_LIMIT && total_progeny_pmf(&law, n)?.is_exact();
        let pmf = progeny_pmf_f64(&law, n)?;
        rows.push(Row { n, pmf, scaled: pmf * (n as f64).powf(1.5), exact });
        n = if n < 64 { n + 1 } else { n * 2 };
    }
    out.csv("tree.csv", &rows)?;
    let report = verify_delta_two(&law, n_min, n_max)?;
    let summary = serde_json::to_value(report)?;
    out.json("tree.json", &summary)?;
    Ok(summary)
}

pub fn compare_qn(o: &CompareQnOpts, seed: u64, out: &mut Outputs) -> Result<Value, CliError> {
    let (d, n, w) = check_conditional(o.d, o.n, o.window)?;
    let p = check_p(need(&o.p, "p")?)?;
    let samples = positive(need(&o.samples, "samples")?, "samples")?;
    let grid = need(&o.k2_grid, "k2-grid")?;
    if grid.values().iter().any(|v| *v < 0.0) {
        return Err(bad("k2-grid", "values must be nonnegative"));
    }
    let batches = need(&o.batches, "batches")?.max(2);
    let replicates = need(&o.replicates, "replicates")?.max(2);
    let mut summary = json!({});
    let p = resolve_p(p, d, seed, &mut summary)?;
    let opts = ConditionalOptions { batches, max_attempts: need(&o.max_attempts, "max-attempts")?.0, ..Default::default() };
    let q = conditional_two_point(p, d, n, w, samples, derive_seed(seed, 2), &opts)?;
    let r = compare_qn_to_ise(&q, grid.values(), replicates, derive_seed(seed, 9))?;
    out.csv("compare_qn.csv", &r.points)?;
    summary["p"] = json!(p);
    summary["accepted"] = json!(q.accepted);
    summary["attempted"] = json!(q.attempted);
    summary["scale"] = json!(r.scale);
    summary["scale_stderr"] = json!(r.scale_stderr);
    summary["sup"] = serde_json::to_value(r.sup)?;
    out.json("compare_qn.json", &summary)?;
    Ok(summary)
}

pub fn compare_q3(o: &CompareQ3Opts, seed: u64, out: &mut Outputs) -> Result<Value, CliError> {
    let (d, n, w) = check_conditional(o.d, o.n, o.window)?;
    check_d(d, 2, 64)?;
    let p = check_p(need(&o.p, "p")?)?;
    let samples = positive(need(&o.samples, "samples")?, "samples")?;
    let replicates = need(&o.replicates, "replicates")?.max(2);
    if let Some(s) = o.scale {
        if !(s > 0.0) {
            return Err(bad("scale", "must be positive"));
        }
    }
    let mut summary = json!({});
    let p = resolve_p(p, d, seed, &mut summary)?;
    let prof = conditional_profiles(p, d, n, w, samples, derive_seed(seed, 3), need(&o.max_attempts, "max-attempts")?.0)?;
    let grid = perclab::compare::default_q3_grid();
    let r = compare_q3_to_ise(&prof, &grid, o.scale, replicates, derive_seed(seed, 10))?;
    #[derive(Serialize)]
    struct Row {
        a: f64,
        b: f64,
        orientation: &'static str,
        empirical: f64,
        stderr: f64,
        ise: f64,
    }
    let rows: Vec<Row> = r
        .values
        .iter()
        .map(|v| Row {
            a: v.point.a,
            b: v.point.b,
            orientation: orientation_name(v.point.orientation),
            empirical: v.empirical,
            stderr: v.stderr,
            ise: v.ise,
        })
        .collect();
    out.csv("compare_q3.csv", &rows)?;
    summary["p"] = json!(p);
    summary["accepted"] = json!(r.clusters);
    summary["scale"] = json!(r.scale);
    summary["sup"] = serde_json::to_value(r.sup)?;
    summary["asymmetry"] = json!(r.asymmetry);
    summary["asymmetry_stderr"] = json!(r.asymmetry_stderr);
    out.json("compare_q3.json", &summary)?;
    Ok(summary)
}

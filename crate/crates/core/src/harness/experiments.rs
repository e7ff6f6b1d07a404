//! The named experiments. Each fills an [`ExperimentReport`] with per-sweep
//! statistics, fits, p-values and threshold checks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustc_hash::FxHashSet;

use super::{sample_environment, walk_ensemble, Check, Clock, ExperimentReport, ExperimentSpec, StatRow, Table};
use crate::cluster::{bfs_cluster_sizes, decompose, second_cluster_scaling};
use crate::coupling::regen::Buckets;
use crate::coupling::{
    detect_bad_events, local_characteristics, run_localized, settle_check, verify_crossing_claim, CouplingParams,
    Endpoint, ErrorKind, LocalizedGraph,
};
use crate::env::hash::child_seed;
use crate::env::oracle::oracle_compare_backends;
use crate::env::{BackendKind, Environment};
use crate::error::{LabError, Result};
use crate::lattice::LatticePoint;
use crate::path::{PathSummary, StepPath};
use crate::stable::{
    estimate_alpha_ecf, estimate_alpha_hill, fit_scale, sample_stable_path, surrogate_sum, two_sample_path_test,
    EndpointPool, StableParams, SurrogateConfig,
};
use crate::stats::{anderson_darling_normal, mean, ols, quantile, variance, weighted_mean};
use crate::walk::{lag_return_profile, run_walk, WalkPath};

fn f(v: impl ToString) -> String {
    v.to_string()
}

fn walk_seed(spec: &ExperimentSpec, tag: u64, i: u64) -> u64 {
    child_seed(child_seed(spec.seed, (1 << 40) + tag), i)
}

/// Log-log fit with its slope check; rows with a non-positive value are skipped.
fn log2_fit(report: &mut ExperimentReport, name: &str, x: &[f64], y: &[f64]) -> Option<crate::stats::LinearFit> {
    let (lx, ly): (Vec<f64>, Vec<f64>) = x
        .iter()
        .zip(y)
        .filter(|(_, &v)| v > 0.0 && v.is_finite())
        .map(|(&a, &b)| (a, b.log2()))
        .unzip();
    if lx.len() < x.len() {
        report
            .notes
            .push(format!("{name}: {} sweep points with zero estimate left out of the fit", x.len() - lx.len()));
    }
    let fit = ols(&lx, &ly).ok()?;
    report.fits.insert(name.into(), fit);
    Some(fit)
}

pub fn exp_backend_oracle(spec: &ExperimentSpec, report: &mut ExperimentReport) -> Result<()> {
    let n = *spec
        .sizes
        .first()
        .ok_or_else(|| LabError::InvalidConfig("backend oracle needs a box half-width in sizes".into()))?;
    let level = spec.threshold("level")?;
    let r = oracle_compare_backends(&spec.env, n, spec.trials, spec.seed)?;
    report.rows.push(StatRow::new(
        format!("N={n}"),
        &[
            ("mean_degree_exact", r.mean_degree_exact),
            ("mean_degree_lazy", r.mean_degree_lazy),
            ("mean_degree_box", r.mean_degree_box),
            ("long_edges_exact", r.long_edges_exact as f64),
            ("long_edges_lazy", r.long_edges_lazy as f64),
        ],
    ));
    let mut t = Table::new(&["test", "statistic", "df", "p_value", "design_effect"]);
    for (name, c) in [
        ("degree", &r.degree),
        ("long_length", &r.long_length),
        ("shell_occupancy", &r.shell_occupancy),
    ] {
        report.p_values.insert(name.into(), c.p_value);
        t.push(vec![name.into(), f(c.statistic), f(c.df), f(c.p_value), f(c.design_effect)]);
    }
    report.raw.insert("chi_square".into(), t);
    report.check(Check::new("degree_p", r.degree.p_value, ">", level));
    report.check(Check::new("long_length_p", r.long_length.p_value, ">", level));
    Ok(())
}

/// Replays the localized walk from long edges found by ordinary walks and
/// compares the predicted and observed settling sides on good runs.
pub fn settle_replays(spec: &ExperimentSpec, edges_wanted: usize, replays: usize) -> Result<(u64, u64, u64)> {
    let k = *spec.ks.first().ok_or_else(|| LabError::InvalidConfig("empty k sweep".into()))?;
    let params = CouplingParams::new(k, spec.epsilon, spec.gamma, spec.delta, spec.env.alpha())?;
    let (t_special, h) = (params.special_length(), params.return_horizon());
    let (mut runs, mut good, mut matched) = (0, 0, 0);
    let mut edges = 0;
    let mut i = 0u64;
    while edges < edges_wanted && i < 10 * edges_wanted as u64 {
        let mut env = Environment::new(spec.env.with_seed(child_seed(spec.seed, i)))?;
        let path = run_walk(&mut env, 1 << k, walk_seed(spec, 0, i))?;
        i += 1;
        let mut seen = FxHashSet::default();
        let mut found = Vec::new();
        for &v in &path.steps {
            if !seen.insert(v) {
                continue;
            }
            for &x in env.neighbors(v)? {
                if params.is_long(x - v) {
                    found.push((v, x));
                }
            }
            if found.len() >= 4 {
                break;
            }
        }
        for (v, x) in found {
            if edges >= edges_wanted {
                break;
            }
            edges += 1;
            let g = LocalizedGraph::new(&mut env, v, x, &params)?;
            let mut rng = ChaCha8Rng::seed_from_u64(walk_seed(spec, 1, edges as u64));
            for _ in 0..replays {
                let traj = run_localized(&g, t_special, &mut rng);
                let c = settle_check(&traj, v, x, h);
                runs += 1;
                if c.good {
                    good += 1;
                    matched += (c.predicted_far.is_some() && c.predicted_far == c.observed_far) as u64;
                }
            }
        }
    }
    Ok((runs, good, matched))
}

pub fn exp_crossing_law(spec: &ExperimentSpec, report: &mut ExperimentReport) -> Result<()> {
    let grid: Vec<(u32, f64)> = spec
        .sizes
        .iter()
        .flat_map(|&d| spec.returns.iter().map(move |&p| (d as u32, p)))
        .collect();
    let r = verify_crossing_claim(&grid, spec.trials as u64, spec.seed);
    let mut t = Table::new(&[
        "local_degree",
        "return_prob",
        "q",
        "tv_v",
        "tv_x",
        "gof_p",
        "independence_p",
        "far_fraction",
        "far_exact",
    ]);
    for c in &r.cells {
        report.rows.push(StatRow::new(
            format!("d={},p={}", c.local_degree, c.return_prob),
            &[
                ("q", c.q),
                ("tv_v", c.tv_v),
                ("tv_x", c.tv_x),
                ("gof_p", c.gof_v.p_value),
                ("independence_p", c.independence.p_value),
                ("far_fraction", c.far_fraction),
                ("far_exact", c.far_exact),
            ],
        ));
        t.push(vec![
            f(c.local_degree),
            f(c.return_prob),
            f(c.q),
            f(c.tv_v),
            f(c.tv_x),
            f(c.gof_v.p_value),
            f(c.independence.p_value),
            f(c.far_fraction),
            f(c.far_exact),
        ]);
    }
    report.raw.insert("cells".into(), t);
    for (d, p) in &r.degenerate {
        report.notes.push(format!("cell d={d}, p={p} never escapes and is skipped"));
    }
    report.p_values.insert("independence_bonferroni".into(), r.independence_p);
    report.check(Check::new("max_tv", r.max_tv, "<", spec.threshold("tv_max")?));
    report.check(Check::new("independence_p", r.independence_p, ">", spec.threshold("level")?));

    let (runs, good, matched) = settle_replays(spec, 64, 200)?;
    report.rows.push(StatRow::new(
        "settle",
        &[("runs", runs as f64), ("good", good as f64), ("matched", matched as f64)],
    ));
    let frac = if good > 0 { matched as f64 / good as f64 } else { f64::NAN };
    report.check(Check::new("settle_match", frac, ">=", spec.threshold("match_min")?));
    Ok(())
}

pub fn exp_short_steps(spec: &ExperimentSpec, report: &mut ExperimentReport) -> Result<()> {
    let recs = walk_ensemble(spec)?;
    let ws: Vec<f64> = recs.iter().map(|r| r.weight).collect();
    let mut ks = Vec::new();
    let mut means = Vec::new();
    let mut t = Table::new(&["walk", "weight", "k", "w_k"]);
    for &k in &spec.ks {
        let xs: Vec<f64> = recs.iter().map(|r| r.w_k[k as usize]).collect();
        let (m, se) = weighted_mean(&xs, &ws);
        report.rows.push(StatRow::new(
            format!("k={k}"),
            &[("mean_w", m), ("std_err", se), ("log2_mean_w", m.log2())],
        ));
        ks.push(k as f64);
        means.push(m);
        for (i, r) in recs.iter().enumerate() {
            t.push(vec![f(i), f(r.weight), f(k), f(r.w_k[k as usize])]);
        }
    }
    report.raw.insert("w_k".into(), t);
    report.truncation_bound = recs.iter().map(|r| r.truncation).fold(0.0, f64::max);
    let target = spec.threshold("slope_target")?;
    if let Some(fit) = log2_fit(report, "log2_mean_w", &ks, &means) {
        report.check(Check::new("slope", fit.slope, "<=", spec.threshold("slope_max")?));
        report.notes.push(format!(
            "slope {:.4} +- {:.4}; stricter target {:.4} {}",
            fit.slope,
            fit.slope_se,
            target,
            if fit.slope <= target { "met" } else { "not met" }
        ));
    }
    Ok(())
}

fn restrict(s: &PathSummary, q: f64) -> PathSummary {
    PathSummary {
        lq_norms: s.lq_norms.iter().copied().filter(|&(p, _)| p == q).collect(),
        ..s.clone()
    }
}

pub fn exp_stable_limit(spec: &ExperimentSpec, report: &mut ExperimentReport) -> Result<()> {
    let recs = walk_ensemble(spec)?;
    let alpha = spec.env.alpha();
    let k = spec.k_max()?;
    let endpoints: Vec<Vec<f64>> = recs.iter().map(|r| r.endpoint.clone()).collect();
    let ecf = estimate_alpha_ecf(&endpoints)?;
    let mut t = Table::new(&["xi", "minus_log_modulus"]);
    for (x, y) in &ecf.points {
        t.push(vec![f(x), f(y)]);
    }
    report.raw.insert("ecf".into(), t);
    let mut t = Table::new(&["walk", "weight", "coords"]);
    for (i, r) in recs.iter().enumerate() {
        let c: Vec<String> = r.endpoint.iter().map(f).collect();
        t.push(vec![f(i), f(r.weight), c.join(" ")]);
    }
    report.raw.insert("endpoints".into(), t);

    let jumps: Vec<f64> = recs.iter().flat_map(|r| r.long_jumps.iter().copied()).collect();
    let hill = estimate_alpha_hill(&jumps, spec.threshold("hill_fraction")?).ok();
    let scale = fit_scale(&endpoints, alpha, child_seed(spec.seed, 7))?;
    report.rows.push(StatRow::new(
        format!("k={k}"),
        &[
            ("alpha_ecf", ecf.alpha),
            ("alpha_ecf_se", ecf.alpha_se),
            ("ecf_r_squared", ecf.r_squared),
            ("alpha_hill", hill.map_or(f64::NAN, |h| h.alpha)),
            ("hill_tail_points", hill.map_or(0.0, |h| h.tail_points as f64)),
            ("fitted_scale", scale),
        ],
    ));
    report.truncation_bound = recs.iter().map(|r| r.truncation).fold(0.0, f64::max);
    report.check(Check::new(
        "alpha_error",
        (ecf.alpha - alpha).abs(),
        "<=",
        spec.threshold("alpha_tol")?,
    ));

    let p = StableParams::new(alpha, scale, spec.env.d)?;
    let stable_seeds = child_seed(spec.seed, 8);
    let mut reference = Vec::with_capacity(recs.len());
    for i in 0..recs.len() as u64 {
        let path = sample_stable_path(&p, 1 << k, child_seed(stable_seeds, i))?;
        reference.push(PathSummary::of(&path, &spec.qs));
    }
    let level = spec.threshold("level")?;
    for &q in &spec.qs {
        let a: Vec<PathSummary> = recs.iter().map(|r| restrict(&r.summary, q)).collect();
        let b: Vec<PathSummary> = reference.iter().map(|s| restrict(s, q)).collect();
        let test = two_sample_path_test(&a, &b, level)?;
        for (name, ks) in &test.tests {
            report.p_values.insert(format!("q{q}:{name}"), ks.p_value);
        }
        report.check(Check::new(&format!("path_test_q{q}"), test.combined_p, ">", level));
    }
    Ok(())
}

pub fn exp_phi_fluctuations(spec: &ExperimentSpec, report: &mut ExperimentReport) -> Result<()> {
    let recs = walk_ensemble(spec)?;
    let ws: Vec<f64> = recs.iter().map(|r| r.weight).collect();
    let k_max = spec.k_max()?;
    let ratio = |n: usize| -> Vec<f64> { recs.iter().map(|r| r.phi_tilde[n - 1] as f64 / n as f64).collect() };
    let (c_hat, c_se) = weighted_mean(&ratio(1 << k_max), &ws);
    let mut ks = Vec::new();
    let mut maxima = Vec::new();
    let mut drift = 0.0f64;
    let mut t = Table::new(&["walk", "k", "max_dev"]);
    for &k in &spec.ks {
        let n = 1usize << k;
        let (c_k, _) = weighted_mean(&ratio(n), &ws);
        let devs: Vec<f64> = recs
            .iter()
            .map(|r| {
                r.phi_tilde[..n]
                    .iter()
                    .enumerate()
                    .map(|(i, &p)| (p as f64 - (i + 1) as f64 * c_hat).abs())
                    .fold(0.0, f64::max)
            })
            .collect();
        for (i, d) in devs.iter().enumerate() {
            t.push(vec![f(i), f(k), f(d)]);
        }
        let (m, se) = weighted_mean(&devs, &ws);
        drift = drift.max((c_k / c_hat - 1.0).abs());
        report.rows.push(StatRow::new(
            format!("k={k}"),
            &[("c_hat_k", c_k), ("mean_max_dev", m), ("std_err", se), ("scaled_max_dev", m / n as f64)],
        ));
        ks.push(k as f64);
        maxima.push(m);
    }
    report.raw.insert("max_dev".into(), t);
    report
        .rows
        .push(StatRow::new("c_hat", &[("value", c_hat), ("std_err", c_se), ("max_rel_drift", drift)]));
    if let Some(fit) = log2_fit(report, "log2_max_dev", &ks, &maxima) {
        report.check(Check::new("growth_exponent", fit.slope, "<", spec.threshold("exponent_max")?));
    }
    report.check(Check::new("c_hat_drift", drift, "<=", spec.threshold("c_hat_tol")?));
    Ok(())
}

pub fn exp_heat_kernel(spec: &ExperimentSpec, report: &mut ExperimentReport) -> Result<()> {
    let k = *spec.ks.first().ok_or_else(|| LabError::InvalidConfig("empty k sweep".into()))?;
    let starts = 1usize << k;
    let n_list: Vec<usize> = spec.sizes.iter().map(|&e| 1usize << e).collect();
    let longest = *n_list
        .iter()
        .max()
        .ok_or_else(|| LabError::InvalidConfig("heat kernel needs lag exponents in sizes".into()))?;
    let len = starts + 2 * longest;
    let mut rates = vec![Vec::new(); n_list.len()];
    let mut ws = Vec::new();
    let mut t = Table::new(&["walk", "weight", "n", "returns", "p_hat"]);
    for i in 0..spec.trials as u64 {
        let (mut env, w) = sample_environment(&spec.env, spec.measure, spec.seed, i, len)?;
        let path = run_walk(&mut env, len, walk_seed(spec, 0, i))?;
        let prof = lag_return_profile(std::slice::from_ref(&path), &n_list, starts)?;
        for (j, row) in prof.rows.iter().enumerate() {
            rates[j].push(row.p_hat);
            t.push(vec![f(i), f(w), f(row.n), f(row.returns), f(row.p_hat)]);
        }
        ws.push(w);
        report.truncation_bound = report.truncation_bound.max(env.truncation_bound());
    }
    report.raw.insert("returns".into(), t);
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (j, &n) in n_list.iter().enumerate() {
        let (m, se) = weighted_mean(&rates[j], &ws);
        report.rows.push(StatRow::new(format!("n={n}"), &[("p_hat", m), ("std_err", se)]));
        xs.push((n as f64).log2());
        ys.push(m);
    }
    let target = -(spec.env.d as f64) / spec.env.alpha();
    if let Some(fit) = log2_fit(report, "log2_return", &xs, &ys) {
        report.check(Check::new("slope_error", (fit.slope - target).abs(), "<=", spec.threshold("slope_tol")?));
    }
    Ok(())
}

pub fn exp_coupling_errors(spec: &ExperimentSpec, clock: &Clock, report: &mut ExperimentReport) -> Result<()> {
    let alpha = spec.env.alpha();
    let mut t = Table::new(&[
        "k", "trial", "type1", "type2", "type3", "type4", "type5", "type6", "f_star", "d", "e", "f", "g",
    ]);
    let mut ks = Vec::new();
    let mut rates = Vec::new();
    for &k in &spec.ks {
        if clock.expired() {
            report.truncated = true;
            report.notes.push(format!("time budget exhausted before k={k}"));
            break;
        }
        let params = CouplingParams::new(k, spec.epsilon, spec.gamma, spec.delta, alpha)?;
        let n = 1usize << k;
        let mut bad = 0u64;
        let mut total_errors = 0u64;
        let mut by_type = [0u64; 6];
        let (mut f_star, mut h_event) = (0u64, 0u64);
        for i in 0..spec.trials as u64 {
            let (mut env, _) = sample_environment(&spec.env, spec.measure, child_seed(spec.seed, k as u64), i, n)?;
            let p1 = run_walk(&mut env, n, walk_seed(spec, 2 * k as u64, i))?;
            let p2 = run_walk(&mut env, n, walk_seed(spec, 2 * k as u64 + 1, i))?;
            let r = detect_bad_events(&[p1, p2], &mut env, &params)?;
            bad += !r.ledger.is_good() as u64;
            total_errors += r.ledger.total();
            for kind in ErrorKind::ALL {
                by_type[kind.number() - 1] += (r.ledger.count(kind) > 0) as u64;
            }
            f_star += r.f_star as u64;
            h_event += r.h_event() as u64;
            let mut row = vec![f(k), f(i)];
            row.extend(r.ledger.counts.iter().map(f));
            row.extend([r.f_star, r.d_event, r.e_event, r.f_event, r.g_event].iter().map(|&b| f(b as u8)));
            t.push(row);
        }
        let m = spec.trials as f64;
        let p = bad as f64 / m;
        let mut stats = vec![
            ("p_error", p),
            ("std_err", (p * (1.0 - p) / m).sqrt()),
            ("p_f_star", f_star as f64 / m),
            ("p_h", h_event as f64 / m),
            ("mean_errors", total_errors as f64 / m),
            ("ball_radius", params.ball_radius()),
            ("special_length", params.special_length() as f64),
        ];
        let names = ["p_type1", "p_type2", "p_type3", "p_type4", "p_type5", "p_type6"];
        for (j, name) in names.iter().enumerate() {
            stats.push((name, by_type[j] as f64 / m));
        }
        report.rows.push(StatRow::new(format!("k={k}"), &stats));
        ks.push(k as f64);
        rates.push(p);
    }
    report.raw.insert("errors".into(), t);
    let decreasing = rates.windows(2).all(|w| w[1] < w[0]);
    report.check(Check::flag("strictly_decreasing", decreasing && rates.len() >= 2));
    if let Some(fit) = log2_fit(report, "log2_p_error", &ks, &rates) {
        report.check(Check::new("slope", fit.slope, "<", spec.threshold("slope_max")?));
    } else {
        report.check(Check::flag("slope_fitted", false));
    }
    Ok(())
}

pub fn exp_sampler_selftest(spec: &ExperimentSpec, report: &mut ExperimentReport) -> Result<()> {
    let alpha = spec.threshold("alpha")?;
    let n = spec.trials;
    let p = StableParams::new(alpha, 1.0, 2)?;
    let ecf = estimate_alpha_ecf(&p.sample_points(1.0, n, child_seed(spec.seed, 1)))?;
    let (lo, hi) = ecf.band(2.0);
    report.rows.push(StatRow::new(
        "ecf",
        &[
            ("alpha_true", alpha),
            ("alpha_hat", ecf.alpha),
            ("band_lo", lo),
            ("band_hi", hi),
            ("r_squared", ecf.r_squared),
        ],
    ));
    report.check(Check::new("ecf_r_squared", ecf.r_squared, ">", spec.threshold("r2_min")?));
    let mut t = Table::new(&["xi", "minus_log_modulus"]);
    for (x, y) in &ecf.points {
        t.push(vec![f(x), f(y)]);
    }
    report.raw.insert("ecf_points".into(), t);

    let mut rng = ChaCha8Rng::seed_from_u64(child_seed(spec.seed, 2));
    let pareto: Vec<f64> = (0..spec.threshold("hill_samples")? as usize)
        .map(|_| (1.0 - rng.random::<f64>()).powf(-1.0 / 1.5))
        .collect();
    let hill = estimate_alpha_hill(&pareto, spec.threshold("hill_fraction")?)?;
    report.rows.push(StatRow::new(
        "hill",
        &[("alpha_true", 1.5), ("alpha_hat", hill.alpha), ("tail_points", hill.tail_points as f64)],
    ));
    report.check(Check::new("hill_error", (hill.alpha - 1.5).abs(), "<=", spec.threshold("hill_tol")?));

    let g = StableParams::new(2.0, 1.0, 2)?;
    let pts = g.sample_points(1.0, n, child_seed(spec.seed, 3));
    let want = 2.0 * g.scale;
    let sd = want * (2.0 / n as f64).sqrt();
    let mut worst = 0.0f64;
    for i in 0..2 {
        let xs: Vec<f64> = pts.iter().map(|v| v[i]).collect();
        worst = worst.max((variance(&xs) - want).abs() / sd);
    }
    let cov = mean(&pts.iter().map(|v| v[0] * v[1]).collect::<Vec<_>>());
    worst = worst.max(cov.abs() / (want / (n as f64).sqrt()));
    report.rows.push(StatRow::new("gaussian", &[("max_z", worst)]));
    report.check(Check::new("covariance_z", worst, "<=", spec.threshold("cov_sigmas")?));
    Ok(())
}

pub fn exp_gaussian_d1(spec: &ExperimentSpec, report: &mut ExperimentReport) -> Result<()> {
    let k = spec.k_max()?;
    let n = 1usize << k;
    let exps: Vec<i64> = spec.sizes.iter().copied().filter(|&e| e >= 0 && (1usize << e) <= n).collect();
    let mut pos = vec![Vec::new(); exps.len()];
    let mut ws = Vec::new();
    let mut endpoint = Vec::new();
    for i in 0..spec.trials as u64 {
        let (mut env, w) = sample_environment(&spec.env, spec.measure, spec.seed, i, n)?;
        let path = run_walk(&mut env, n, walk_seed(spec, 0, i))?;
        for (j, &e) in exps.iter().enumerate() {
            pos[j].push(path.steps[1 << e].coord(0) as f64);
        }
        endpoint.push(path.endpoint().coord(0) as f64 / (n as f64).sqrt());
        ws.push(w);
        report.truncation_bound = report.truncation_bound.max(env.truncation_bound());
    }
    let mut t = Table::new(&["walk", "rescaled_endpoint"]);
    for (i, x) in endpoint.iter().enumerate() {
        t.push(vec![f(i), f(x)]);
    }
    report.raw.insert("endpoints".into(), t);
    let ad = anderson_darling_normal(&endpoint)?;
    report.p_values.insert("anderson_darling".into(), ad.p_value);
    report.check(Check::new("normality_p", ad.p_value, ">", spec.threshold("level")?));
    let mut xs = Vec::new();
    let mut vs = Vec::new();
    let mut iqrs = Vec::new();
    for (j, &e) in exps.iter().enumerate() {
        let (m, _) = weighted_mean(&pos[j], &ws);
        let sq: Vec<f64> = pos[j].iter().map(|x| (x - m) * (x - m)).collect();
        let (v, se) = weighted_mean(&sq, &ws);
        let iqr = quantile(&pos[j], 0.75) - quantile(&pos[j], 0.25);
        report.rows.push(StatRow::new(
            format!("n={}", 1usize << e),
            &[("variance", v), ("std_err", se), ("iqr_sq", iqr * iqr)],
        ));
        xs.push(e as f64);
        vs.push(v);
        iqrs.push(iqr * iqr);
    }
    log2_fit(report, "log2_iqr_sq", &xs, &iqrs);
    if let Some(fit) = log2_fit(report, "log2_variance", &xs, &vs) {
        report.check(Check::new(
            "variance_slope_error",
            (fit.slope - 1.0).abs(),
            "<=",
            spec.threshold("var_slope_tol")?,
        ));
    }
    Ok(())
}

/// Union-find sizes against breadth-first search on every box size in `lo..=hi`.
pub fn cluster_oracle(spec: &ExperimentSpec, lo: i64, hi: i64, seeds: u64) -> Result<(usize, usize)> {
    let (mut total, mut agree) = (0, 0);
    for n in lo..=hi {
        for s in 0..seeds {
            let cfg = spec
                .env
                .with_seed(child_seed(child_seed(spec.seed, 1 << 20), (n as u64) << 8 | s))
                .with_backend(BackendKind::ExactBoxed { half_width: n });
            let env = Environment::new(cfg)?;
            let dec = decompose(&env, n)?;
            let mut bfs = bfs_cluster_sizes(&env, n);
            bfs.sort_unstable_by(|a, b| b.cmp(a));
            total += 1;
            agree += (bfs == dec.sizes) as usize;
        }
    }
    Ok((total, agree))
}

pub fn exp_cluster_sizes(spec: &ExperimentSpec, report: &mut ExperimentReport) -> Result<()> {
    let table = second_cluster_scaling(&spec.env, &spec.sizes, spec.trials, spec.seed)?;
    for r in &table.rows {
        report.rows.push(StatRow::new(
            format!("N={}", r.n),
            &[
                ("n1_median", r.n1_median),
                ("n2_median", r.n2_median),
                ("n2_q90", r.n2_q90),
                ("n2_max", r.n2_max as f64),
            ],
        ));
    }
    let mut t = Table::new(&["N", "seed", "n_1", "n_2"]);
    for r in &table.records {
        t.push(vec![f(r.n), f(r.seed), f(r.n1), f(r.n2)]);
    }
    report.raw.insert("clusters".into(), t);
    if let Some(fit) = table.polylog_fit {
        report.fits.insert("ln_n2_vs_lnln_n".into(), fit);
    }
    match table.power_fit {
        Some(fit) => {
            report.fits.insert("ln_n2_vs_ln_n".into(), fit);
            report.check(Check::new("power_slope", fit.slope, "<", spec.threshold("slope_max")?));
        }
        None => report.check(Check::flag("power_slope_fitted", false)),
    }
    let (total, agree) = cluster_oracle(
        spec,
        spec.threshold("oracle_min")? as i64,
        spec.threshold("oracle_max")? as i64,
        spec.threshold("oracle_seeds")? as u64,
    )?;
    report
        .rows
        .push(StatRow::new("oracle", &[("instances", total as f64), ("agree", agree as f64)]));
    report.check(Check::flag("union_find_equals_bfs", total > 0 && agree == total));
    Ok(())
}

fn long_jump_path(path: &WalkPath, threshold: f64, alpha: f64) -> Result<StepPath> {
    let n = path.len();
    let d = path.steps[0].dim();
    let scale = (n as f64).powf(-1.0 / alpha);
    let mut acc = LatticePoint::origin(d);
    let mut values = vec![0.0; d];
    for t in 1..=n {
        let j = path.jump(t);
        if j.norm() > threshold {
            acc = acc + j;
        }
        values.extend(acc.coords().iter().map(|&c| c as f64 * scale));
    }
    StepPath::new(d, values)
}

pub fn exp_surrogate_match(spec: &ExperimentSpec, report: &mut ExperimentReport) -> Result<()> {
    let k = spec.k_max()?;
    let n = 1usize << k;
    let alpha = spec.env.alpha();
    let params = CouplingParams::new(k, spec.epsilon, spec.gamma, spec.delta, alpha)?;
    let pool_max = spec.threshold("pool_max")? as usize;
    let mut walk_side = Vec::new();
    let mut ratios = Vec::new();
    let mut ws = Vec::new();
    let mut pool = Vec::new();
    for i in 0..spec.trials as u64 {
        let (mut env, w) = sample_environment(&spec.env, spec.measure, spec.seed, i, n)?;
        let path = run_walk(&mut env, n, walk_seed(spec, 0, i))?;
        walk_side.push(PathSummary::of(&long_jump_path(&path, params.long_threshold(), alpha)?, &spec.qs));
        let distinct: FxHashSet<LatticePoint> = path.steps.iter().copied().collect();
        ratios.push((distinct.len() - 1) as f64 / n as f64);
        ws.push(w);
        if pool.len() < pool_max {
            for t in 1..=n {
                if path.jump(t).norm() > params.long_threshold() {
                    for v in [path.steps[t - 1], path.steps[t]] {
                        let lc = local_characteristics(v, &mut env, &params, child_seed(spec.seed, pool.len() as u64))?;
                        pool.push(Endpoint::new(lc.local_degree, lc.return_prob));
                    }
                    break;
                }
            }
        }
    }
    let (c_hat, _) = weighted_mean(&ratios, &ws);
    let pool = if pool.is_empty() {
        report.notes.push("no long edge met; lattice endpoint pool used".into());
        EndpointPool::lattice(spec.env.d)
    } else {
        EndpointPool::new(pool)
    };
    let cfg = SurrogateConfig {
        k,
        epsilon: spec.epsilon,
        epsilon1: spec.epsilon1,
        c_hat,
        env: spec.env.clone(),
        pool,
    };
    let mut sur_side = Vec::new();
    let mut corr = f64::NAN;
    let mut z_count = 0;
    for i in 0..spec.trials as u64 {
        let s = surrogate_sum(&cfg, n, walk_seed(spec, 1, i))?;
        if i == 0 {
            let z = s.z_norms();
            z_count = z.len();
            let m = mean(&z);
            let v = variance(&z);
            let c: f64 = z.windows(2).map(|w| (w[0] - m) * (w[1] - m)).sum::<f64>() / (z.len() - 1) as f64;
            corr = if v > 0.0 { c / v } else { 0.0 };
        }
        sur_side.push(PathSummary::of(&s.frak_x, &spec.qs));
    }
    report.rows.push(StatRow::new(
        format!("k={k}"),
        &[("c_hat", c_hat), ("pool", cfg.pool.entries.len() as f64), ("lag1_corr", corr)],
    ));
    let test = two_sample_path_test(&walk_side, &sur_side, spec.threshold("level")?)?;
    for (name, ks) in &test.tests {
        report.p_values.insert(name.clone(), ks.p_value);
    }
    report.check(Check::new("path_test", test.combined_p, ">", spec.threshold("level")?));
    let band = spec.threshold("corr_sigmas")? / (z_count.max(1) as f64).sqrt();
    report.check(Check::new("lag1_corr", corr.abs(), "<=", band));
    Ok(())
}

/// Whether some `X_j` comes within `radius` of an `X_i` with `j >= i + lag`.
pub fn returns_after_lag(path: &WalkPath, lag: usize, radius: f64) -> bool {
    let mut index = Buckets::new(radius);
    for j in lag..path.steps.len() {
        index.insert(path.steps[j - lag]);
        if index.near(path.steps[j]) {
            return true;
        }
    }
    false
}

pub fn exp_no_return(spec: &ExperimentSpec, clock: &Clock, report: &mut ExperimentReport) -> Result<()> {
    let mut ks = Vec::new();
    let mut rates = Vec::new();
    for &k in &spec.ks {
        if clock.expired() {
            report.truncated = true;
            report.notes.push(format!("time budget exhausted before k={k}"));
            break;
        }
        let n = 1usize << k;
        let lag = 2f64.powf((1.0 - spec.epsilon) * k as f64).ceil() as usize;
        let radius = 2f64.powf(spec.delta * k as f64);
        let mut hits = 0u64;
        for i in 0..spec.trials as u64 {
            let (mut env, _) = sample_environment(&spec.env, spec.measure, child_seed(spec.seed, k as u64), i, n)?;
            let path = run_walk(&mut env, n, walk_seed(spec, k as u64, i))?;
            hits += returns_after_lag(&path, lag, radius) as u64;
        }
        let p = hits as f64 / spec.trials as f64;
        report.rows.push(StatRow::new(
            format!("k={k}"),
            &[("p_return", p), ("lag", lag as f64), ("radius", radius)],
        ));
        ks.push(k as f64);
        rates.push(p);
    }
    report.check(Check::flag("decreasing", rates.windows(2).all(|w| w[1] <= w[0])));
    if let Some(fit) = log2_fit(report, "log2_p_return", &ks, &rates) {
        report.check(Check::new("slope", fit.slope, "<", spec.threshold("slope_max")?));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::ExperimentId;

    #[test]
    fn straight_line_never_returns() {
        let steps: Vec<LatticePoint> = (0..50).map(|i| LatticePoint::new(&[i, 0]).unwrap()).collect();
        let p = WalkPath::from_points(steps, 8).unwrap();
        assert!(!returns_after_lag(&p, 10, 3.0));
        assert!(returns_after_lag(&p, 10, 10.0));
    }

    #[test]
    fn long_jump_path_keeps_long_jumps_only() {
        let pts = [[0, 0], [1, 0], [41, 0], [42, 0]];
        let steps: Vec<LatticePoint> = pts.iter().map(|c| LatticePoint::new(c).unwrap()).collect();
        let p = WalkPath::from_points(steps, 8).unwrap();
        let sp = long_jump_path(&p, 10.0, 1.0).unwrap();
        assert!((sp.endpoint()[0] - 40.0 / 3.0).abs() < 1e-12);
        assert_eq!(sp.value(1), &[0.0, 0.0]);
    }

    #[test]
    fn small_cluster_oracle_agrees() {
        let spec = ExperimentSpec::default_for(ExperimentId::ClusterSizes);
        let (total, agree) = cluster_oracle(&spec, 3, 6, 2).unwrap();
        assert_eq!(total, 8);
        assert_eq!(agree, total);
    }
}

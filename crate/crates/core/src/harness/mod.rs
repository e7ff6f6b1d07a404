//! Experiment specifications, reports, persistence and dispatch.

mod ensemble;
pub mod experiments;

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

pub use ensemble::{walk_ensemble, EnsembleKey, WalkRecord};
pub use experiments::*;

use crate::env::{EnvConfig, Environment};
use crate::error::{LabError, Result};
use crate::lattice::LatticePoint;
use crate::stable::long_edge_mass;
use crate::stats::LinearFit;
use crate::walk::cluster_reaches;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentId {
    BackendOracle,
    CrossingLaw,
    ShortSteps,
    StableLimit,
    HeatKernel,
    CouplingErrors,
    SamplerSelftest,
    PhiFluctuations,
    GaussianD1,
    ClusterSizes,
    SurrogateMatch,
    NoReturn,
}

impl ExperimentId {
    pub const ALL: [ExperimentId; 12] = [
        ExperimentId::BackendOracle,
        ExperimentId::CrossingLaw,
        ExperimentId::ShortSteps,
        ExperimentId::StableLimit,
        ExperimentId::HeatKernel,
        ExperimentId::CouplingErrors,
        ExperimentId::SamplerSelftest,
        ExperimentId::PhiFluctuations,
        ExperimentId::GaussianD1,
        ExperimentId::ClusterSizes,
        ExperimentId::SurrogateMatch,
        ExperimentId::NoReturn,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentId::BackendOracle => "backend_oracle",
            ExperimentId::CrossingLaw => "crossing_law",
            ExperimentId::ShortSteps => "short_steps",
            ExperimentId::StableLimit => "stable_limit",
            ExperimentId::HeatKernel => "heat_kernel",
            ExperimentId::CouplingErrors => "coupling_errors",
            ExperimentId::SamplerSelftest => "sampler_selftest",
            ExperimentId::PhiFluctuations => "phi_fluctuations",
            ExperimentId::GaussianD1 => "gaussian_d1",
            ExperimentId::ClusterSizes => "cluster_sizes",
            ExperimentId::SurrogateMatch => "surrogate_match",
            ExperimentId::NoReturn => "no_return",
        }
    }
}

impl fmt::Display for ExperimentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentId {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.replace('-', "_");
        Self::ALL
            .into_iter()
            .find(|e| e.name() == key)
            .ok_or_else(|| LabError::UnknownExperiment(s.to_string()))
    }
}

/// How environments are drawn and weighted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MeasureMode {
    /// Plain product measure, weight 1.
    Mu,
    /// Environments whose origin component reaches `(ln n)^3` vertices.
    Mu0Proxy,
    /// Weight `deg(0) / E deg(0)`.
    NuWeighted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub experiment: ExperimentId,
    pub env: EnvConfig,
    /// Scale sweep `k`; walks have `2^k` steps.
    pub ks: Vec<u32>,
    /// Primary ensemble size: walks, environments, seeds or trials per cell.
    pub trials: usize,
    pub epsilon: f64,
    pub epsilon1: f64,
    pub delta: f64,
    pub gamma: f64,
    pub qs: Vec<f64>,
    /// Box half-widths, lag exponents or grid degrees, depending on the experiment.
    pub sizes: Vec<i64>,
    /// Local return probabilities of the crossing grid.
    #[serde(default)]
    pub returns: Vec<f64>,
    pub measure: MeasureMode,
    pub seed: u64,
    #[serde(default)]
    pub out: Option<PathBuf>,
    /// Wall-clock budget in seconds; sweeps stop early past it.
    #[serde(default)]
    pub budget_secs: Option<f64>,
    pub thresholds: BTreeMap<String, f64>,
}

fn th(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

impl ExperimentSpec {
    /// Acceptance-scale defaults of each experiment.
    pub fn default_for(id: ExperimentId) -> Self {
        let desk = EnvConfig::desk_default(0);
        let alpha = desk.alpha();
        let base = Self {
            experiment: id,
            env: desk.clone(),
            ks: (10..=18).collect(),
            trials: 256,
            epsilon: 0.1,
            epsilon1: 0.05,
            delta: 0.25,
            gamma: 0.2,
            qs: vec![1.0, 2.0],
            sizes: Vec::new(),
            returns: Vec::new(),
            measure: MeasureMode::NuWeighted,
            seed: 0,
            out: None,
            budget_secs: None,
            thresholds: BTreeMap::new(),
        };
        let rho = (1.0 - alpha / 2.0) * base.epsilon;
        match id {
            ExperimentId::BackendOracle => Self {
                trials: 200,
                sizes: vec![32],
                measure: MeasureMode::Mu,
                thresholds: th(&[("level", 0.01)]),
                ..base
            },
            ExperimentId::CrossingLaw => Self {
                trials: 1_000_000,
                ks: vec![12],
                sizes: vec![1, 2, 3, 5, 8],
                returns: vec![0.0, 0.2, 0.4, 0.6, 0.8],
                measure: MeasureMode::Mu,
                thresholds: th(&[("tv_max", 0.01), ("level", 0.01), ("match_min", 1.0)]),
                ..base
            },
            ExperimentId::ShortSteps => Self {
                thresholds: th(&[("slope_max", -rho / 2.0), ("slope_target", -rho)]),
                ..base
            },
            ExperimentId::StableLimit => Self {
                ks: vec![18],
                thresholds: th(&[("alpha_tol", 0.15), ("level", 0.01), ("hill_fraction", 0.05)]),
                ..base
            },
            ExperimentId::HeatKernel => Self {
                ks: vec![20],
                trials: 16,
                sizes: (8..=16).collect(),
                thresholds: th(&[("slope_tol", 0.3)]),
                ..base
            },
            ExperimentId::CouplingErrors => Self {
                ks: (10..=16).collect(),
                trials: 200,
                measure: MeasureMode::Mu,
                thresholds: th(&[("slope_max", 0.0)]),
                ..base
            },
            ExperimentId::SamplerSelftest => Self {
                trials: 10_000,
                measure: MeasureMode::Mu,
                thresholds: th(&[
                    ("r2_min", 0.99),
                    ("hill_tol", 0.1),
                    ("hill_samples", 100_000.0),
                    ("hill_fraction", 0.05),
                    ("cov_sigmas", 3.0),
                    ("alpha", 1.2),
                ]),
                ..base
            },
            ExperimentId::PhiFluctuations => Self {
                thresholds: th(&[("exponent_max", 1.0), ("c_hat_tol", 0.02)]),
                ..base
            },
            ExperimentId::GaussianD1 => Self {
                env: EnvConfig {
                    d: 1,
                    s: 2.5,
                    ..desk
                },
                ks: vec![16],
                trials: 512,
                sizes: (10..=16).collect(),
                measure: MeasureMode::Mu,
                thresholds: th(&[("level", 0.01), ("var_slope_tol", 0.1)]),
                ..base
            },
            ExperimentId::ClusterSizes => Self {
                env: EnvConfig {
                    beta: 0.6,
                    nn_open: false,
                    ..desk
                },
                trials: 32,
                sizes: vec![64, 128, 256, 512],
                measure: MeasureMode::Mu,
                thresholds: th(&[("slope_max", 0.1), ("oracle_min", 8.0), ("oracle_max", 32.0), ("oracle_seeds", 4.0)]),
                ..base
            },
            ExperimentId::SurrogateMatch => Self {
                ks: vec![14],
                measure: MeasureMode::Mu,
                thresholds: th(&[("level", 0.01), ("corr_sigmas", 3.0), ("pool_max", 200.0)]),
                ..base
            },
            ExperimentId::NoReturn => Self {
                ks: (10..=14).collect(),
                trials: 64,
                measure: MeasureMode::Mu,
                thresholds: th(&[("slope_max", 0.0)]),
                ..base
            },
        }
    }

    /// Defaults of `id` overlaid with the fields present in the JSON object `text`.
    pub fn from_json(id: ExperimentId, text: &str) -> Result<Self> {
        let overlay: serde_json::Value = serde_json::from_str(text)?;
        let mut base = serde_json::to_value(Self::default_for(id))?;
        merge(&mut base, overlay);
        let spec: Self = serde_json::from_value(base)?;
        if spec.experiment != id {
            return Err(LabError::InvalidConfig(format!(
                "config names experiment {} but {} was requested",
                spec.experiment, id
            )));
        }
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_file(id: ExperimentId, path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| LabError::io(path, e))?;
        Self::from_json(id, &text)
    }

    pub fn validate(&self) -> Result<()> {
        self.env.validate()?;
        let unit = |name: &str, v: f64| {
            if v > 0.0 && v < 1.0 {
                Ok(())
            } else {
                Err(LabError::InvalidConfig(format!("{name} must lie in (0, 1), got {v}")))
            }
        };
        unit("epsilon", self.epsilon)?;
        unit("epsilon1", self.epsilon1)?;
        unit("delta", self.delta)?;
        unit("gamma", self.gamma)?;
        if self.epsilon1 >= self.epsilon {
            return Err(LabError::InvalidConfig("epsilon1 must be below epsilon".into()));
        }
        if self.ks.iter().any(|&k| k == 0 || k > 30) {
            return Err(LabError::InvalidConfig("every k must lie in 1..=30".into()));
        }
        if self.qs.iter().any(|&q| !(q >= 1.0) || !q.is_finite()) {
            return Err(LabError::InvalidConfig("every q must be finite and at least 1".into()));
        }
        Ok(())
    }

    pub fn threshold(&self, name: &str) -> Result<f64> {
        self.thresholds
            .get(name)
            .copied()
            .ok_or_else(|| LabError::InvalidConfig(format!("missing threshold `{name}` for {}", self.experiment)))
    }

    pub fn k_max(&self) -> Result<u32> {
        self.ks
            .iter()
            .copied()
            .max()
            .ok_or_else(|| LabError::InvalidConfig("empty k sweep".into()))
    }
}

fn merge(base: &mut serde_json::Value, overlay: serde_json::Value) {
    match (base, overlay) {
        (serde_json::Value::Object(b), serde_json::Value::Object(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    InsufficientData,
}

/// One threshold comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    /// `"<="`, `"<"`, `">="`, `">"` or `"=="`.
    pub op: String,
    pub pass: bool,
}

impl Check {
    pub fn new(name: &str, value: f64, op: &str, threshold: f64) -> Self {
        let pass = match op {
            "<=" => value <= threshold,
            "<" => value < threshold,
            ">=" => value >= threshold,
            ">" => value > threshold,
            "==" => value == threshold,
            _ => false,
        };
        Self {
            name: name.into(),
            value,
            threshold,
            op: op.into(),
            pass,
        }
    }

    pub fn flag(name: &str, ok: bool) -> Self {
        Self::new(name, ok as u8 as f64, "==", 1.0)
    }
}

/// A CSV table.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.join(","));
            out.push('\n');
        }
        out
    }
}

/// Statistics of one sweep point, e.g. one `k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatRow {
    pub key: String,
    pub stats: BTreeMap<String, f64>,
}

impl StatRow {
    pub fn new(key: impl Into<String>, stats: &[(&str, f64)]) -> Self {
        Self {
            key: key.into(),
            stats: stats.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub spec: ExperimentSpec,
    pub rows: Vec<StatRow>,
    pub fits: BTreeMap<String, LinearFit>,
    pub p_values: BTreeMap<String, f64>,
    pub checks: Vec<Check>,
    pub verdict: Verdict,
    /// Largest truncation error of the environments used.
    pub truncation_bound: f64,
    /// The sweep stopped early at the time budget.
    pub truncated: bool,
    pub notes: Vec<String>,
    #[serde(skip)]
    pub raw: BTreeMap<String, Table>,
    pub runtime_secs: f64,
}

impl ExperimentReport {
    pub fn new(spec: &ExperimentSpec) -> Self {
        Self {
            spec: spec.clone(),
            rows: Vec::new(),
            fits: BTreeMap::new(),
            p_values: BTreeMap::new(),
            checks: Vec::new(),
            verdict: Verdict::InsufficientData,
            truncation_bound: 0.0,
            truncated: false,
            notes: Vec::new(),
            raw: BTreeMap::new(),
            runtime_secs: 0.0,
        }
    }

    pub fn check(&mut self, c: Check) {
        self.checks.push(c);
    }

    /// Sets the verdict from the checks.
    pub fn finish(&mut self) {
        self.verdict = if self.truncated {
            Verdict::Fail
        } else if self.checks.is_empty() {
            Verdict::InsufficientData
        } else if self.checks.iter().all(|c| c.pass) {
            Verdict::Pass
        } else {
            Verdict::Fail
        };
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    /// The report as JSON with the runtime zeroed.
    pub fn body_json(&self) -> Result<String> {
        let mut r = self.clone();
        r.runtime_secs = 0.0;
        Ok(serde_json::to_string_pretty(&r)?)
    }

    pub fn summary_line(&self) -> String {
        let failing: Vec<String> = self
            .checks
            .iter()
            .filter(|c| !c.pass)
            .map(|c| format!("{}={:.4} (want {} {})", c.name, c.value, c.op, c.threshold))
            .collect();
        format!(
            "{} {:?} in {:.2}s{}",
            self.spec.experiment,
            self.verdict,
            self.runtime_secs,
            if failing.is_empty() {
                String::new()
            } else {
                format!(": {}", failing.join(", "))
            }
        )
    }
}

/// Tidy `(key, statistic, value)` rows of the per-sweep statistics and fits.
pub fn emit_plot_data(report: &ExperimentReport) -> Table {
    let mut t = Table::new(&["experiment", "key", "statistic", "value"]);
    let name = report.spec.experiment.name();
    for row in &report.rows {
        for (s, v) in &row.stats {
            t.push(vec![name.into(), row.key.clone(), s.clone(), v.to_string()]);
        }
    }
    for (f, fit) in &report.fits {
        for (s, v) in [
            ("slope", fit.slope),
            ("slope_se", fit.slope_se),
            ("intercept", fit.intercept),
            ("r_squared", fit.r_squared),
        ] {
            t.push(vec![name.into(), format!("fit:{f}"), s.into(), v.to_string()]);
        }
    }
    t
}

/// Writes `report.json`, `raw/*.csv` and `plots/*.csv` under `dir`.
pub fn write_report(report: &ExperimentReport, dir: &Path) -> Result<()> {
    let raw = dir.join("raw");
    let plots = dir.join("plots");
    for d in [dir, raw.as_path(), plots.as_path()] {
        fs::create_dir_all(d).map_err(|e| LabError::io(d, e))?;
    }
    let write = |p: PathBuf, text: String| fs::write(&p, text).map_err(|e| LabError::io(&p, e));
    write(dir.join("report.json"), serde_json::to_string_pretty(report)?)?;
    for (name, table) in &report.raw {
        write(raw.join(format!("{name}.csv")), table.to_csv())?;
    }
    write(
        plots.join(format!("{}.csv", report.spec.experiment)),
        emit_plot_data(report).to_csv(),
    )
}

/// Runs the experiment named in `spec` and persists its outputs when `spec.out` is set.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentReport> {
    spec.validate()?;
    let start = Instant::now();
    let mut report = ExperimentReport::new(spec);
    if spec.trials > 0 {
        let clock = Clock::new(spec.budget_secs);
        match spec.experiment {
            ExperimentId::BackendOracle => exp_backend_oracle(spec, &mut report)?,
            ExperimentId::CrossingLaw => exp_crossing_law(spec, &mut report)?,
            ExperimentId::ShortSteps => exp_short_steps(spec, &mut report)?,
            ExperimentId::StableLimit => exp_stable_limit(spec, &mut report)?,
            ExperimentId::HeatKernel => exp_heat_kernel(spec, &mut report)?,
            ExperimentId::CouplingErrors => exp_coupling_errors(spec, &clock, &mut report)?,
            ExperimentId::SamplerSelftest => exp_sampler_selftest(spec, &mut report)?,
            ExperimentId::PhiFluctuations => exp_phi_fluctuations(spec, &mut report)?,
            ExperimentId::GaussianD1 => exp_gaussian_d1(spec, &mut report)?,
            ExperimentId::ClusterSizes => exp_cluster_sizes(spec, &mut report)?,
            ExperimentId::SurrogateMatch => exp_surrogate_match(spec, &mut report)?,
            ExperimentId::NoReturn => exp_no_return(spec, &clock, &mut report)?,
        }
    } else {
        report.notes.push("no trials requested".into());
    }
    report.finish();
    report.runtime_secs = start.elapsed().as_secs_f64();
    if let Some(dir) = &spec.out {
        write_report(&report, dir)?;
    }
    Ok(report)
}

/// Wall-clock budget of a sweep.
pub struct Clock {
    start: Instant,
    budget: Option<f64>,
}

impl Clock {
    pub fn new(budget: Option<f64>) -> Self {
        Self {
            start: Instant::now(),
            budget,
        }
    }

    pub fn expired(&self) -> bool {
        self.budget.is_some_and(|b| self.start.elapsed().as_secs_f64() > b)
    }
}

/// `E_mu deg(0)` on the infinite lattice.
pub fn mean_degree(cfg: &EnvConfig) -> f64 {
    long_edge_mass(&crate::env::EdgeProbModel::from_config(cfg), 0.5, 64)
}

/// Draws environment number `index` under the measure mode and returns it
/// with its importance weight. `horizon` sets the cluster size demanded by
/// the conditioned mode.
pub fn sample_environment(
    cfg: &EnvConfig,
    mode: MeasureMode,
    seed: u64,
    index: u64,
    horizon: usize,
) -> Result<(Environment, f64)> {
    use crate::env::hash::child_seed;
    let origin = LatticePoint::origin(cfg.d);
    let mut attempt = 0;
    loop {
        let s = child_seed(child_seed(seed, index), attempt);
        let mut env = Environment::new(cfg.with_seed(s))?;
        match mode {
            MeasureMode::Mu => return Ok((env, 1.0)),
            MeasureMode::NuWeighted => {
                let w = env.degree(origin)? as f64 / mean_degree(cfg);
                return Ok((env, w));
            }
            MeasureMode::Mu0Proxy => {
                let limit = ((horizon.max(2) as f64).ln().powi(3)).ceil() as usize;
                if cluster_reaches(&mut env, origin, limit)? {
                    return Ok((env, 1.0));
                }
                attempt += 1;
                if attempt > 10_000 {
                    return Err(LabError::Degenerate("origin cluster is finite in every attempt".into()));
                }
            }
        }
    }
}

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use lrp_lab::harness::{run_experiment, ExperimentId, ExperimentSpec, MeasureMode};
use lrp_lab::Result;

#[derive(Parser)]
#[command(name = "lrp-lab", version, about = "Random walks on long-range percolation clusters")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Lazy backend against the exact box
    BackendOracle(RunArgs),
    /// Crossing-count law of long edges and the settling rule
    CrossingLaw(RunArgs),
    /// Decay of the short-jump maximum
    ShortSteps(RunArgs),
    /// Rescaled walks against the stable process
    StableLimit(RunArgs),
    /// Return probability exponent
    HeatKernel(RunArgs),
    /// Coupling error rates over k
    CouplingErrors(RunArgs),
    /// Stable sampler and estimator self-tests
    SamplerSelftest(RunArgs),
    /// Fluctuations of the new-vertex counter
    PhiFluctuations(RunArgs),
    /// One-dimensional Gaussian regime
    GaussianD1(RunArgs),
    /// Second-largest cluster scaling
    ClusterSizes(RunArgs),
    /// Long-jump paths against surrogate sums
    SurrogateMatch(RunArgs),
    /// Re-entry into balls after long lags
    NoReturn(RunArgs),
    /// Print the default spec of an experiment as JSON
    Defaults { experiment: String },
}

#[derive(Args)]
struct RunArgs {
    /// JSON file overriding the default spec
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for report.json, raw/ and plots/
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    trials: Option<usize>,
    /// Comma-separated k values
    #[arg(long, value_delimiter = ',')]
    ks: Option<Vec<u32>>,
    #[arg(long, value_delimiter = ',')]
    sizes: Option<Vec<i64>>,
    #[arg(long, value_delimiter = ',')]
    qs: Option<Vec<f64>>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    epsilon1: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    /// mu, mu0-proxy or nu-weighted
    #[arg(long)]
    measure: Option<String>,
    #[arg(long)]
    budget_secs: Option<f64>,
}

impl RunArgs {
    fn spec(self, id: ExperimentId) -> Result<ExperimentSpec> {
        let mut s = match &self.config {
            Some(p) => ExperimentSpec::from_file(id, p)?,
            None => ExperimentSpec::default_for(id),
        };
        if let Some(v) = self.seed {
            s.seed = v;
        }
        if let Some(v) = self.out {
            s.out = Some(v);
        }
        if let Some(v) = self.trials {
            s.trials = v;
        }
        if let Some(v) = self.ks {
            s.ks = v;
        }
        if let Some(v) = self.sizes {
            s.sizes = v;
        }
        if let Some(v) = self.qs {
            s.qs = v;
        }
        s.epsilon = self.epsilon.unwrap_or(s.epsilon);
        s.epsilon1 = self.epsilon1.unwrap_or(s.epsilon1);
        s.delta = self.delta.unwrap_or(s.delta);
        s.gamma = self.gamma.unwrap_or(s.gamma);
        if let Some(m) = self.measure {
            s.measure = serde_json::from_value::<MeasureMode>(serde_json::Value::String(m))?;
        }
        if self.budget_secs.is_some() {
            s.budget_secs = self.budget_secs;
        }
        s.validate()?;
        Ok(s)
    }
}

fn run(cli: Cli) -> Result<bool> {
    let (id, args) = match cli.command {
        Command::BackendOracle(a) => (ExperimentId::BackendOracle, a),
        Command::CrossingLaw(a) => (ExperimentId::CrossingLaw, a),
        Command::ShortSteps(a) => (ExperimentId::ShortSteps, a),
        Command::StableLimit(a) => (ExperimentId::StableLimit, a),
        Command::HeatKernel(a) => (ExperimentId::HeatKernel, a),
        Command::CouplingErrors(a) => (ExperimentId::CouplingErrors, a),
        Command::SamplerSelftest(a) => (ExperimentId::SamplerSelftest, a),
        Command::PhiFluctuations(a) => (ExperimentId::PhiFluctuations, a),
        Command::GaussianD1(a) => (ExperimentId::GaussianD1, a),
        Command::ClusterSizes(a) => (ExperimentId::ClusterSizes, a),
        Command::SurrogateMatch(a) => (ExperimentId::SurrogateMatch, a),
        Command::NoReturn(a) => (ExperimentId::NoReturn, a),
        Command::Defaults { experiment } => {
            let id: ExperimentId = experiment.parse()?;
            println!("{}", serde_json::to_string_pretty(&ExperimentSpec::default_for(id))?);
            return Ok(true);
        }
    };
    let report = run_experiment(&args.spec(id)?)?;
    println!("{}", report.summary_line());
    if let Some(dir) = &report.spec.out {
        println!("wrote {}", dir.display());
    }
    Ok(report.passed())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

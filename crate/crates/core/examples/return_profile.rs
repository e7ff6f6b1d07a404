//! Lag-pair return probabilities of long walks and their log-log slope.
//!
//! Run with `cargo run --release --example return_profile`.

use lrp_lab::env::{EnvConfig, Environment};
use lrp_lab::walk::{lag_return_profile, run_walk};

fn main() -> lrp_lab::Result<()> {
    let cfg = EnvConfig::desk_default(3);
    let want = -(cfg.d as f64) / cfg.alpha();
    let mut paths = Vec::new();
    for w in 0..4 {
        let mut env = Environment::new(cfg.with_seed(100 + w))?;
        paths.push(run_walk(&mut env, 1 << 17, w)?);
    }
    let lags: Vec<usize> = (6..=12).map(|e| 1 << e).collect();
    let profile = lag_return_profile(&paths, &lags, 1 << 15)?;
    for r in &profile.rows {
        println!("n = {:5}  p = {:.3e} +- {:.1e}  ({} returns)", r.n, r.p_hat, r.std_err, r.returns);
    }
    if let Some(fit) = profile.fit {
        println!("slope {:.3} +- {:.3}, expected {want:.3}", fit.slope, fit.slope_se);
    }
    Ok(())
}

//! Compares the lazy backend against the exact box on `[-32, 32]^2`.
//!
//! Run with `cargo run --release --example backend_oracle -- 200`.

use lrp_lab::env::oracle::oracle_compare_backends;
use lrp_lab::env::EnvConfig;

fn main() -> lrp_lab::Result<()> {
    let trials = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(50);
    let cfg = EnvConfig::desk_default(0);
    let r = oracle_compare_backends(&cfg, 32, trials, 2024)?;
    println!("trials            {}", r.trials);
    println!("mean degree       exact {:.4}  lazy {:.4}  box sum {:.4}", r.mean_degree_exact, r.mean_degree_lazy, r.mean_degree_box);
    println!("long edges        exact {}  lazy {}", r.long_edges_exact, r.long_edges_lazy);
    println!("degree law        p = {:.4} (deff {:.2})", r.degree.p_value, r.degree.design_effect);
    println!("long-edge length  p = {:.4} (deff {:.2})", r.long_length.p_value, r.long_length.design_effect);
    println!("shell occupancy   p = {:.4} (deff {:.2})", r.shell_occupancy.p_value, r.shell_occupancy.design_effect);
    println!("verdict           {}", if r.passes(0.01) { "agree" } else { "differ" });
    Ok(())
}

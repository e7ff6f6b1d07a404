//! Replays two walks through the coupling bookkeeping and lists the errors.
//!
//! Run with `cargo run --release --example coupling_events -- 12`.

use lrp_lab::coupling::{detect_bad_events, regeneration_times, CouplingParams, ErrorKind};
use lrp_lab::env::{EnvConfig, Environment};
use lrp_lab::walk::run_walk;

fn main() -> lrp_lab::Result<()> {
    let k: u32 = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(12);
    let cfg = EnvConfig::desk_default(5);
    let params = CouplingParams::new(k, 0.1, 0.2, 0.25, cfg.alpha())?;
    let mut env = Environment::new(cfg)?;
    let paths = vec![run_walk(&mut env, 1 << k, 1)?, run_walk(&mut env, 1 << k, 2)?];

    println!(
        "k = {k}: long threshold {:.1}, ball radius {:.1}, special phase {} steps",
        params.long_threshold(),
        params.ball_radius(),
        params.special_length()
    );
    let report = detect_bad_events(&paths, &mut env, &params)?;
    println!("discoveries {}, good event {}", report.discoveries, report.ledger.is_good());
    for kind in ErrorKind::ALL {
        println!("  type {} {:?}: {}", kind.number(), kind, report.ledger.count(kind));
    }
    let settled = report.settles.iter().filter(|s| s.good).count();
    println!("special phases settled cleanly: {settled} of {}", report.settles.len());

    let regen = regeneration_times(&paths[0], &mut env, &params)?;
    println!("regeneration times {} (largest gap {})", regen.beta, regen.max_gap);
    Ok(())
}

//! The i.i.d. long-jump surrogate sum and its main/remainder split.
//!
//! Run with `cargo run --release --example surrogate -- 14`.

use lrp_lab::env::EnvConfig;
use lrp_lab::stable::{estimate_alpha_ecf, surrogate_sum, EndpointPool, SurrogateConfig};

fn main() -> lrp_lab::Result<()> {
    let k: u32 = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(12);
    let cfg = SurrogateConfig {
        k,
        epsilon: 0.1,
        epsilon1: 0.05,
        c_hat: 0.6,
        env: EnvConfig::desk_default(0),
        pool: EndpointPool::lattice(2),
    };
    println!("thresholds {:.1} / {:.1}", cfg.threshold(), cfg.main_threshold());
    let mut ends = Vec::new();
    let mut rest = 0.0;
    for s in 0..400 {
        let path = surrogate_sum(&cfg, 1 << k, s)?;
        ends.push(path.frak_x.endpoint().to_vec());
        rest += path.frak_n.endpoint().iter().map(|v| v * v).sum::<f64>() / 400.0;
        if s == 0 {
            println!("first sample: {} steps carry long edges, {} crossed", path.with_long_edge, path.crossed);
        }
    }
    let ecf = estimate_alpha_ecf(&ends)?;
    println!("endpoint alpha {:.3}, mean square of the remainder {rest:.4}", ecf.alpha);
    Ok(())
}

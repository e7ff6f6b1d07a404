//! Cluster sizes of exact boxes and the growth of the second largest cluster.
//!
//! Run with `cargo run --release --example clusters`.

use lrp_lab::cluster::{bfs_cluster_sizes, decompose, second_cluster_scaling};
use lrp_lab::env::{BackendKind, EnvConfig, Environment};
use lrp_lab::LatticePoint;

fn main() -> lrp_lab::Result<()> {
    let cfg = EnvConfig {
        beta: 0.6,
        nn_open: false,
        ..EnvConfig::desk_default(0)
    };
    let n = 40;
    let env = Environment::new(cfg.with_backend(BackendKind::ExactBoxed { half_width: n }))?;
    let dec = decompose(&env, n)?;
    println!("N = {n}: {} clusters, n1 = {}, n2 = {}", dec.sizes.len(), dec.n1(), dec.n2());
    println!("origin in largest: {}", dec.in_largest(LatticePoint::origin(2)));
    println!("union-find equals BFS: {}", dec.sizes == bfs_cluster_sizes(&env, n));

    let table = second_cluster_scaling(&cfg, &[32, 64, 128], 8, 11)?;
    for r in &table.rows {
        println!("N = {:4}  median n1 {:9.1}  median n2 {:6.1}  max n2 {}", r.n, r.n1_median, r.n2_median, r.n2_max);
    }
    if let Some(f) = table.power_fit {
        println!("ln n2 vs ln N slope {:.3}", f.slope);
    }
    Ok(())
}

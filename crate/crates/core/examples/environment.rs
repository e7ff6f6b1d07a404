//! Reveals part of a lazy environment and round-trips it through a snapshot.
//!
//! Run with `cargo run --release --example environment`.

use lrp_lab::env::{snapshot, EnvConfig, Environment};
use lrp_lab::LatticePoint;

fn main() -> lrp_lab::Result<()> {
    let mut env = Environment::new(EnvConfig::desk_default(7))?;
    let origin = LatticePoint::origin(2);

    let nbrs = env.neighbors(origin)?.to_vec();
    println!("deg(0) = {}", nbrs.len());
    for y in &nbrs {
        println!("  {y}  |j| = {:.2}", y.norm());
    }

    let ball = env.reveal_ball(origin, 6.0)?;
    let edges: usize = ball.adjacency.iter().map(Vec::len).sum::<usize>() / 2;
    println!("ball of radius 6: {} vertices, {} internal edges", ball.vertices.len(), edges);

    let far = LatticePoint::new(&[1000, -250])?;
    println!("pair (0, {far}) is {:?}", env.pair_state(origin, far)?);
    println!("revealed vertices {}, truncation bound {:.3e}", env.revealed_count(), env.truncation_bound());

    let file = std::env::temp_dir().join("lrp_lab_env.tsv");
    snapshot::write(&env, &file)?;
    let (cfg, open) = snapshot::read(&file)?;
    println!("snapshot {}: seed {}, {} open edges", file.display(), cfg.seed, open.len());
    Ok(())
}

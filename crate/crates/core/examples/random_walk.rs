//! Runs one walk of `2^k` steps, exports it and reports its short-step maximum.
//!
//! Run with `cargo run --release --example random_walk -- 14`.

use lrp_lab::env::{EnvConfig, Environment};
use lrp_lab::walk::{export, rescale, run_walk, short_jump_max, JumpClass};

fn main() -> lrp_lab::Result<()> {
    let k: u32 = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(12);
    let cfg = EnvConfig::desk_default(1);
    let alpha = cfg.alpha();
    let mut env = Environment::new(cfg)?;
    let path = run_walk(&mut env, 1 << k, 42)?;

    let longs = path.jump_log.iter().filter(|&&c| c == JumpClass::Long).count();
    println!("n = 2^{k}, endpoint {}, long jumps {longs}, revealed {}", path.endpoint(), path.revealed);

    let w = short_jump_max(&path, k, 0.1, alpha)?;
    println!("threshold {:.2}, short steps {}, W_k = {:.4}", w.threshold, w.short_steps, w.w_k);

    let r = rescale(&path, alpha);
    for t in [0.25, 0.5, 0.75, 1.0] {
        let v = r.value_at(t);
        println!("X^n({t:.2}) = ({:+.3}, {:+.3})", v[0], v[1]);
    }

    let dir = std::env::temp_dir();
    export::write_csv(&path, dir.join("lrp_lab_walk.csv"))?;
    export::write_binary(&path, dir.join("lrp_lab_walk.bin"))?;
    let back = export::read_binary(dir.join("lrp_lab_walk.bin"))?;
    println!("binary round trip exact: {}", back.steps == path.steps && back.jump_log == path.jump_log);
    Ok(())
}

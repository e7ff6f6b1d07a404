//! Samples isotropic stable vectors and recovers the index two ways.
//!
//! Run with `cargo run --release --example stable_sampler -- 1.2`.

use lrp_lab::stable::{estimate_alpha_ecf, estimate_alpha_hill, sample_stable_path, StableParams};

fn main() -> lrp_lab::Result<()> {
    let alpha = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(1.2);
    let p = StableParams::new(alpha, 1.0, 2)?;
    let pts = p.sample_points(1.0, 20_000, 1);

    let ecf = estimate_alpha_ecf(&pts)?;
    let (lo, hi) = ecf.band(2.0);
    println!("ECF   alpha {:.3}  [{lo:.3}, {hi:.3}]  R^2 {:.4}", ecf.alpha, ecf.r_squared);

    let mags: Vec<f64> = pts.iter().map(|v| v.iter().map(|x| x * x).sum::<f64>().sqrt()).collect();
    let hill = estimate_alpha_hill(&mags, 0.02)?;
    println!("Hill  alpha {:.3} +- {:.3} from {} tail points", hill.alpha, hill.std_err, hill.tail_points);

    let path = sample_stable_path(&p, 1024, 2)?;
    let end = path.endpoint();
    println!("path on 1024 intervals ends at ({:+.3}, {:+.3})", end[0], end[1]);
    Ok(())
}

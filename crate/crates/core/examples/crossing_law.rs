//! Crossing counts of the two-endpoint excursion against their geometric law.
//!
//! Run with `cargo run --release --example crossing_law -- 200000`.

use lrp_lab::coupling::verify_crossing_claim;

fn main() {
    let trials = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(100_000);
    let grid = [(1, 0.0), (2, 0.4), (5, 0.2), (8, 0.8)];
    let r = verify_crossing_claim(&grid, trials, 9);
    for c in &r.cells {
        println!(
            "d = {} p = {:.1}: q = {:.4}  tv {:.4}/{:.4}  far {:.4} (exact {:.4})",
            c.local_degree, c.return_prob, c.q, c.tv_v, c.tv_x, c.far_fraction, c.far_exact
        );
    }
    println!("max tv {:.4}, independence p {:.3}", r.max_tv, r.independence_p);
}

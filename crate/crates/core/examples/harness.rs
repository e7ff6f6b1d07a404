//! Runs a scaled-down experiment through the harness and writes its report.
//!
//! Run with `cargo run --release --example harness -- heat-kernel`.

use lrp_lab::harness::{run_experiment, write_report, ExperimentId, ExperimentSpec};

fn main() -> lrp_lab::Result<()> {
    let id: ExperimentId = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "heat-kernel".into())
        .parse()?;
    let spec = ExperimentSpec::from_json(id, r#"{"trials": 4, "ks": [14], "sizes": [6, 7, 8, 9, 10]}"#)?;
    let report = run_experiment(&spec)?;
    println!("{}", report.summary_line());
    for row in &report.rows {
        println!("  {} {:?}", row.key, row.stats);
    }
    let dir = std::env::temp_dir().join("lrp_lab_harness");
    write_report(&report, &dir)?;
    println!("wrote {}", dir.display());
    Ok(())
}

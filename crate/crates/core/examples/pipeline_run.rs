//! Runs every pipeline stage from a config file and prints the claim table.
//!
//! cargo run --release --example pipeline_run -- configs/smoke.json

use front_lab::config::RunConfig;
use front_lab::pipeline::{run_pipeline, Stage};

fn main() -> front_lab::error::Result<()> {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/smoke.json").to_string());
    let mut cfg = RunConfig::load(std::path::Path::new(&path))?;
    let out = std::env::temp_dir().join("front-stability-lab-example");
    cfg.output_dir = out.clone();
    let outcome = run_pipeline(&cfg, Stage::All)?;
    for p in &outcome.artifacts {
        println!("wrote {}", p.display());
    }
    if let Some(report) = &outcome.report {
        print!("{}", report.summary_table());
        println!("all claims pass: {}", report.passed());
    }
    Ok(())
}

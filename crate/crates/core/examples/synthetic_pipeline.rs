//! Runs the staged pipeline on synthetic data into a directory, then runs
//! it again to show that unchanged stages are skipped.
//!
//! ```sh
//! cargo run --release --example synthetic_pipeline -- out/pipeline
//! ```

use std::path::PathBuf;

use cdr_demographics::classify::Penalty;
use cdr_demographics::pipeline::{run_pipeline, PipelineConfig};

fn main() -> cdr_demographics::Result<()> {
    let out: PathBuf = std::env::args().nth(1).unwrap_or_else(|| "out/pipeline".into()).into();
    let mut cfg = PipelineConfig::synthetic();
    cfg.synth.population = 10_000;
    cfg.classify.cs = vec![0.3, 3.0];
    cfg.classify.ks = vec![10, 0];
    cfg.classify.penalties = vec![Penalty::L2];
    println!("config:\n{}", cfg.to_toml_string()?);

    let first = run_pipeline(&cfg, &out, None)?;
    println!("first run executed {:?}", first.executed);
    let second = run_pipeline(&cfg, &out, None)?;
    println!("second run executed {:?}, skipped {:?}", second.executed, second.skipped);
    println!("accuracy table:\n{}", std::fs::read_to_string(out.join("accuracy_by_q.csv")).map_err(cdr_demographics::Error::Io)?);
    Ok(())
}

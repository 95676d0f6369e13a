use std::path::Path;
use std::process::Command;

use cdr_demographics::cli::{parse_grid, run};
use cdr_demographics::pipeline::stages::artifact;

fn call(out: &Path, args: &[&str]) -> i32 {
    let mut full = vec!["cdr-demographics".to_owned(), "--out-dir".to_owned(), out.display().to_string()];
    full.extend(args.iter().map(|s| s.to_string()));
    run(full)
}

fn p(dir: &Path, name: &str) -> String {
    dir.join(name).display().to_string()
}

#[test]
fn every_subcommand_runs_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let (calls, sms, labels, graph) = (p(d, artifact::CALLS), p(d, artifact::SMS), p(d, artifact::LABELS), p(d, artifact::GRAPH));
    let (features, probs, state) = (p(d, artifact::FEATURES), p(d, artifact::ML_PROBS), p(d, &artifact::state("rdif")));

    assert_eq!(call(d, &["--seed", "3", "synth", "--population", "1500"]), 0);
    assert_eq!(call(d, &["ingest", "--cdr", &calls, "--sms", &sms, "--labels", &labels]), 0);
    assert_eq!(call(d, &["features", "--cdr", &calls, "--sms", &sms]), 0);
    assert_eq!(call(d, &["pca", "--features", &features, "--k", "3"]), 0);
    assert_eq!(
        call(d, &["stats", "--cdr", &calls, "--labels", &labels, "--graph", &graph, "--features", &features, "--resamples", "50"]),
        0
    );
    assert_eq!(
        call(d, &["train", "--features", &features, "--labels", &labels, "--target", "age", "--grid", "c=1;k=10;penalty=l2"]),
        0
    );
    assert_eq!(call(d, &["--threads", "2", "diffuse", "--graph", &graph, "--labels", &labels]), 0);
    assert_eq!(
        call(d, &["diffuse", "--graph", &graph, "--labels", &labels, "--mode", "ml", "--ml-probs", &probs]),
        0
    );
    let assignments = p(d, "assignments.csv");
    assert_eq!(call(d, &["pps", "--probs", &state, "--q", "0.5", "--labels", &labels]), 0);
    assert_eq!(call(d, &["evaluate", "--graph", &graph, "--labels", &labels, "--assignments", &assignments]), 0);
    assert_eq!(call(d, &["evaluate", "--graph", &graph, "--labels", &labels, "--state", &state]), 0);
    for name in [artifact::PCA, artifact::TUKEY, artifact::MODEL, artifact::EVAL_REPORT, artifact::EVAL_STRATA, "state_ml_rdif.csv"] {
        assert!(d.join(name).is_file(), "missing {name}");
    }
}

#[test]
fn usage_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(call(d, &[]), 1);
    assert_eq!(call(d, &["frobnicate"]), 1);
    assert_eq!(call(d, &["pca"]), 1);
    assert_eq!(call(d, &["--threads", "0", "synth"]), 1);
    assert_eq!(call(d, &["train", "--features", "f", "--labels", "l", "--target", "height"]), 1);
    let cfg = d.join("bad.toml");
    std::fs::write(&cfg, "stages = [\"synth\", \"ingest\"]\n").unwrap();
    assert_eq!(call(d, &["pipeline", "--config", &cfg.display().to_string()]), 1);
}

#[test]
fn data_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let missing = p(d, "missing.csv");
    assert_eq!(call(d, &["features", "--cdr", &missing, "--sms", &missing]), 2);
    let bad = d.join("bad.csv");
    std::fs::write(&bad, "caller,callee,timestamp_iso8601,duration_s,direction,tower\na,b,never,1,outgoing,t\n").unwrap();
    let sms = d.join("sms.csv");
    std::fs::write(&sms, "sender,receiver,timestamp_iso8601,direction\n").unwrap();
    assert_eq!(call(d, &["features", "--cdr", &bad.display().to_string(), "--sms", &sms.display().to_string()]), 2);
    let cfg = d.join("diffuse.toml");
    std::fs::write(&cfg, "stages = [\"diffuse\"]\n").unwrap();
    assert_eq!(call(d, &["pipeline", "--config", &cfg.display().to_string()]), 2);
}

#[test]
fn help_and_version_succeed() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(call(dir.path(), &["--help"]), 0);
    assert_eq!(call(dir.path(), &["--version"]), 0);
}

#[test]
fn binary_reports_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bin = env!("CARGO_BIN_EXE_cdr-demographics");
    let status = |args: &[&str]| Command::new(bin).args(args).current_dir(dir.path()).status().unwrap().code();
    assert_eq!(status(&["--out-dir", "o", "synth", "--population", "200"]), Some(0));
    assert!(dir.path().join("o").join(artifact::CALLS).is_file());
    assert_eq!(status(&["bogus"]), Some(1));
    assert_eq!(status(&["pca", "--features", "nope.csv"]), Some(2));
}

#[test]
fn grid_spec_parsing() {
    assert_eq!(parse_grid("").unwrap().len(), 30);
    assert_eq!(parse_grid("c=1,2;k=all;penalty=l1").unwrap().len(), 2);
    assert!(parse_grid("c=").is_err());
    assert!(parse_grid("depth=3").is_err());
    assert!(parse_grid("k=ten").is_err());
}

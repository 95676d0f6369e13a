use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use cdr_demographics::classify::Penalty;
use cdr_demographics::pipeline::stages::artifact;
use cdr_demographics::pipeline::{
    manifest_name, run_pipeline, sha256_file, PipelineConfig, RunManifest, Stage, RUN_MANIFEST,
};
use cdr_demographics::Error;

fn small(population: usize) -> PipelineConfig {
    let mut cfg = PipelineConfig::synthetic();
    cfg.synth.population = population;
    cfg.classify.cs = vec![1.0];
    cfg.classify.ks = vec![10];
    cfg.classify.penalties = vec![Penalty::L2];
    cfg.stats.bootstrap_resamples = 100;
    cfg
}

fn listing(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap())
        })
        .collect()
}

#[test]
fn empty_stage_list_writes_only_the_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = PipelineConfig::from_toml_str("").unwrap();
    let report = run_pipeline(&cfg, dir.path(), Some(1)).unwrap();
    assert!(report.executed.is_empty() && report.skipped.is_empty());
    let files = listing(dir.path());
    assert_eq!(files.keys().collect::<Vec<_>>(), [RUN_MANIFEST]);
    let m: RunManifest = serde_json::from_slice(&files[RUN_MANIFEST]).unwrap();
    assert!(m.stages.is_empty() && m.artifacts.is_empty());
}

#[test]
fn synthetic_run_emits_every_artifact_and_reruns_as_noop() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small(10_000);
    let first = run_pipeline(&cfg, dir.path(), None).unwrap();
    assert_eq!(first.executed, cfg.ordered_stages());

    let mut expected: Vec<String> = [
        artifact::CALLS,
        artifact::SMS,
        artifact::LABELS,
        artifact::GRAPH,
        artifact::GRAPH_REPORT,
        artifact::FEATURES_RAW,
        artifact::FEATURES,
        artifact::SKEW,
        artifact::PCA,
        artifact::STATS_SUMMARY,
        artifact::TUKEY,
        artifact::BOOTSTRAP,
        artifact::HOMOPHILY_COMM,
        artifact::HOMOPHILY_NULL,
        artifact::HOMOPHILY_LOG_DIFF,
        artifact::DELTA_CURVE,
        artifact::MODEL,
        artifact::GRID,
        artifact::ML_PROBS,
        artifact::PYRAMID,
        artifact::ACCURACY_BY_Q,
        artifact::COVERAGE_BY_Q,
        artifact::EVAL_REPORT,
        artifact::EVAL_STRATA,
    ]
    .map(String::from)
    .to_vec();
    for m in ["rdif", "ml_rdif"] {
        expected.push(artifact::state(m));
        expected.push(artifact::trace(m));
    }
    for m in ["ml", "rdif", "ml_rdif", "baseline"] {
        for &q in &cfg.pps.qs {
            expected.push(artifact::pps(m, q));
        }
    }
    let files = listing(dir.path());
    for name in &expected {
        assert!(files.contains_key(name), "missing {name}");
    }
    for s in cfg.ordered_stages() {
        assert!(files.contains_key(&manifest_name(s)), "missing manifest for {s}");
    }

    let run: RunManifest = serde_json::from_slice(&files[RUN_MANIFEST]).unwrap();
    assert_eq!(run.artifacts.len(), expected.len());
    for (name, hash) in &run.artifacts {
        assert_eq!(&sha256_file(&dir.path().join(name)).unwrap(), hash, "{name}");
    }

    let accuracy = String::from_utf8(files[artifact::ACCURACY_BY_Q].clone()).unwrap();
    assert_eq!(accuracy.lines().next(), Some("method,q=1,q=0.5,q=0.25,q=0.125"));
    assert_eq!(accuracy.lines().count(), 5);

    let second = run_pipeline(&cfg, dir.path(), None).unwrap();
    assert!(second.executed.is_empty());
    assert_eq!(second.skipped, cfg.ordered_stages());
    assert_eq!(listing(dir.path()), files);
}

#[test]
fn changed_config_reruns_only_downstream_stages() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small(1500);
    cfg.stages.retain(|s| *s != Stage::Stats);
    run_pipeline(&cfg, dir.path(), None).unwrap();
    cfg.diffuse.lambda = 0.3;
    let r = run_pipeline(&cfg, dir.path(), None).unwrap();
    assert_eq!(r.skipped, [Stage::Synth, Stage::Features, Stage::Classify]);
    assert_eq!(r.executed, [Stage::Diffuse, Stage::Pps, Stage::Evaluate]);
}

#[test]
fn tampered_output_triggers_rerun() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small(800);
    cfg.stages = vec![Stage::Synth, Stage::Features];
    run_pipeline(&cfg, dir.path(), Some(1)).unwrap();
    let path = dir.path().join(artifact::FEATURES);
    let original = fs::read(&path).unwrap();
    fs::write(&path, b"user_id\n").unwrap();
    let r = run_pipeline(&cfg, dir.path(), Some(1)).unwrap();
    assert_eq!(r.executed, [Stage::Features]);
    assert_eq!(fs::read(&path).unwrap(), original);
}

#[test]
fn missing_input_names_the_stage() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = PipelineConfig { stages: vec![Stage::Diffuse], ..PipelineConfig::default() };
    match run_pipeline(&cfg, dir.path(), Some(1)) {
        Err(Error::Stage { stage, message }) => {
            assert_eq!(stage, "diffuse");
            assert!(message.contains("missing input"), "{message}");
        }
        other => panic!("unexpected {other:?}"),
    }
    cfg.stages = vec![Stage::Ingest];
    cfg.ingest.cdr = dir.path().join("nope.csv");
    let err = run_pipeline(&cfg, dir.path(), Some(1)).unwrap_err();
    assert!(err.to_string().contains("ingest"), "{err}");
}

#[test]
fn invalid_configs_are_rejected() {
    for text in [
        "stages = [\"synth\", \"ingest\"]",
        "stages = [\"features\", \"features\"]",
        "no_such_section = 1",
        "[pps]\nqs = [0.0]",
        "[classify]\ncs = []",
        "[diffuse]\nlambda = 1.5",
        "age_boundaries = [30, 20]",
    ] {
        assert!(matches!(PipelineConfig::from_toml_str(text), Err(Error::Config(_)) | Err(Error::InvalidArgument(_))), "{text}");
    }
}

#[test]
fn config_roundtrips_through_toml() {
    let cfg = small(1234);
    assert_eq!(PipelineConfig::from_toml_str(&cfg.to_toml_string().unwrap()).unwrap(), cfg);
}

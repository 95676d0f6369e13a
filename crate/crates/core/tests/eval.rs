mod common;

use cdr_demographics::diffusion::{Diffusion, DiffusionConfig, InitMode, NodeLabels};
use cdr_demographics::eval::{evaluate, DegreeBuckets, EvalReport, MethodTable};
use cdr_demographics::graph::{compute_topo_metrics, NodeId, SocialGraph, TopoMetrics};
use common::{pruned_instance, rng};
use proptest::prelude::*;
use rand::Rng;

fn names(c: usize) -> Vec<String> {
    (0..c).map(|k| format!("g{k}")).collect()
}

/// Graph, labels with every non-seed held out, metrics.
fn instance(seed: u64, n: usize, edges: usize, c: usize) -> (SocialGraph, NodeLabels, TopoMetrics) {
    let mut r = rng(seed);
    let (g, cats, _) = pruned_instance(&mut r, n, edges, c, 0.15);
    let validation = cats.iter().map(|s| s.is_none().then(|| r.random_range(0..c))).collect();
    let seeds: Vec<NodeId> = cats.iter().enumerate().filter(|(_, s)| s.is_some()).map(|(i, _)| NodeId::from(i)).collect();
    let metrics = compute_topo_metrics(&g, &seeds).unwrap();
    (g, NodeLabels::new(c, cats, validation).unwrap(), metrics)
}

fn run(g: &SocialGraph, labels: &NodeLabels, preds: &[Option<usize>], m: &TopoMetrics) -> EvalReport {
    evaluate(g, labels, preds, m, &DegreeBuckets::default(), &names(labels.categories)).unwrap()
}

#[test]
fn perfect_predictions_fill_every_cell_with_one() {
    let (g, labels, m) = instance(1, 400, 1200, 4);
    let preds: Vec<Option<usize>> = labels.validation.clone();
    let r = run(&g, &labels, &preds, &m);
    let cells = r.dts_degree_crosstab.iter().flatten();
    for s in r.by_age_group.iter().chain(&r.by_sin).chain(&r.by_dts).chain(&r.by_degree_bucket).chain(cells) {
        assert!(s.population == 0 || s.accuracy() == Some(1.0), "{s:?}");
    }
    assert_eq!(r.overall.accuracy(), Some(1.0));
}

#[test]
fn cyclic_relabeling_scores_zero() {
    let (g, labels, m) = instance(2, 400, 1200, 4);
    let preds: Vec<Option<usize>> = labels.validation.iter().map(|v| v.map(|c| (c + 1) % 4)).collect();
    assert_eq!(run(&g, &labels, &preds, &m).overall.accuracy(), Some(0.0));
}

#[test]
fn diffusion_accuracy_matches_recount() {
    let (g, labels, m) = instance(3, 800, 3000, 4);
    let cfg = DiffusionConfig { lambda: 0.5, max_iterations: 30, convergence_tol: 1e-8, mode: InitMode::Uniform };
    let state = Diffusion::new(&g, &labels, cfg, None).unwrap().run(None).state;
    let preds: Vec<Option<usize>> = state.argmax().into_iter().map(Some).collect();
    let r = run(&g, &labels, &preds, &m);
    let hits = labels.validation.iter().zip(&preds).filter(|(v, p)| v.is_some() && **v == **p).count();
    assert_eq!(r.overall.correct, hits);
    assert_eq!(r.overall.accuracy(), Some(hits as f64 / labels.validation_count() as f64));
}

#[test]
fn empty_validation_is_an_error() {
    let (g, labels, m) = instance(4, 100, 300, 4);
    let empty = NodeLabels::new(4, labels.seed.clone(), vec![None; g.node_count()]).unwrap();
    let preds = vec![Some(0); g.node_count()];
    assert!(evaluate(&g, &empty, &preds, &m, &DegreeBuckets::default(), &names(4)).is_err());
}

#[test]
fn report_csv_is_reproducible() {
    let (g, labels, m) = instance(5, 300, 900, 4);
    let preds: Vec<Option<usize>> = (0..g.node_count()).map(|x| (x % 3 != 0).then_some(x % 4)).collect();
    let write = || {
        let mut out = Vec::new();
        run(&g, &labels, &preds, &m).write_csv(&mut out).unwrap();
        out
    };
    let a = write();
    assert_eq!(a, write());
    assert!(String::from_utf8(a).unwrap().starts_with("table,bin,population,predicted,correct,accuracy\n"));
}

#[test]
fn method_table_layout() {
    let mut t = MethodTable::new(vec![1.0, 0.5, 0.25, 0.125]);
    for m in ["ML", "RDif", "ML+RDif", "baseline"] {
        t.push(m, vec![Some(0.4), Some(0.45), None, Some(0.6)]).unwrap();
    }
    assert!(t.push("extra", vec![Some(0.1)]).is_err());
    let mut out = Vec::new();
    t.write_csv(&mut out).unwrap();
    let text = String::from_utf8(out).unwrap();
    assert_eq!(text.lines().next(), Some("method,q=1,q=0.5,q=0.25,q=0.125"));
    assert_eq!(text.lines().nth(2), Some("RDif,0.400000,0.450000,,0.600000"));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn bins_partition_the_validation_set(seed in any::<u64>(), n in 20usize..300, density in 1usize..5, cover in 0.0f64..1.0) {
        let (g, labels, m) = instance(seed, n, n * density, 4);
        prop_assume!(labels.validation_count() > 0);
        let mut r = rng(seed ^ 0xe7a1);
        let preds: Vec<Option<usize>> = (0..g.node_count()).map(|_| r.random_bool(cover).then(|| r.random_range(0..4))).collect();
        let rep = run(&g, &labels, &preds, &m);
        let total = labels.validation_count();
        let sum = |v: &[cdr_demographics::eval::Stratum]| v.iter().map(|s| s.population).sum::<usize>();
        prop_assert_eq!(rep.overall.population, total);
        prop_assert_eq!(sum(&rep.by_age_group), total);
        prop_assert_eq!(sum(&rep.by_sin), total);
        prop_assert_eq!(sum(&rep.by_dts), total);
        prop_assert_eq!(sum(&rep.by_degree_bucket), total);
        let cross: Vec<_> = rep.dts_degree_crosstab.iter().flatten().cloned().collect();
        prop_assert_eq!(sum(&cross), total);
        let all = rep.by_age_group.iter().chain(&rep.by_sin).chain(&rep.by_dts).chain(&rep.by_degree_bucket).chain(&cross);
        for s in all {
            prop_assert!(s.correct <= s.predicted && s.predicted <= s.population);
            if let Some(a) = s.accuracy() {
                prop_assert!((0.0..=1.0).contains(&a));
            }
        }
        let predicted = labels.validation.iter().zip(&preds).filter(|(v, p)| v.is_some() && p.is_some()).count();
        prop_assert!((rep.coverage - predicted as f64 / total as f64).abs() < 1e-15);
    }
}

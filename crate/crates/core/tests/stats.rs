mod common;

use cdr_demographics::labels::{Gender, Role};
use cdr_demographics::stats::{
    bootstrap_means, gender_conditionals, homophily_matrices, log_difference, percentile_range, qtukey, tukey_hsd,
};
use common::{graph_from_pairs, label_store, mc_studentized_quantile, node_name, normal_groups, rng};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};

#[test]
fn bootstrap_of_constant_data_is_constant() {
    let means = bootstrap_means(&[7.0; 50], 400, 3).unwrap();
    assert_eq!(means.len(), 400);
    assert!(means.iter().all(|&m| m == 7.0));
}

#[test]
fn bootstrap_replays_an_independent_generator() {
    let values = [0.0, 1.0];
    let means = bootstrap_means(&values, 25, 99).unwrap();
    let mut r = rand_chacha::ChaCha8Rng::seed_from_u64(99);
    let replay: Vec<f64> = (0..25)
        .map(|_| (0..2).map(|_| values[r.random_range(0..2usize)]).sum::<f64>() / 2.0)
        .collect();
    assert_eq!(means, replay);
}

#[test]
fn bootstrap_rejects_empty_input() {
    assert!(bootstrap_means(&[], 10, 1).is_err());
    assert!(bootstrap_means(&[1.0], 0, 1).is_err());
}

#[test]
fn shifted_groups_give_disjoint_bootstrap_ranges() {
    let mut r = rng(8);
    let g = normal_groups(&mut r, &[100.0, 120.0], 20.0, &[2000, 2000]);
    let male = percentile_range(&bootstrap_means(&g[1], 400, 1).unwrap(), 0.95).unwrap();
    let female = percentile_range(&bootstrap_means(&g[0], 400, 2).unwrap(), 0.95).unwrap();
    assert!(female.1 < male.0);
}

#[test]
fn studentized_range_quantiles_match_tables() {
    // published table values
    for (p, k, df, want) in [(0.95, 3, 10.0, 3.877), (0.95, 4, 20.0, 3.958), (0.95, 2, 120.0, 2.800), (0.99, 5, 30.0, 5.048)] {
        let got = qtukey(p, k, df);
        assert!((got - want).abs() < 1.5e-3, "q({p},{k},{df}) = {got}, table {want}");
    }
}

#[test]
fn tukey_identical_groups() {
    let g = vec![vec![1.0, 2.0, 3.0], vec![1.0, 2.0, 3.0]];
    let t = tukey_hsd(&g, 0.05).unwrap();
    assert_eq!(t.pairs[0].meandiff, 0.0);
    assert!(!t.pairs[0].reject);
}

#[test]
fn tukey_separated_groups() {
    let g = vec![vec![0.0, 0.0, 0.01, 0.0], vec![10.0, 10.0, 10.0, 10.01]];
    let t = tukey_hsd(&g, 0.05).unwrap();
    assert!(t.pairs[0].reject);
    assert!(t.pairs[0].meandiff > 9.9);
}

#[test]
fn tukey_rejects_degenerate_groups() {
    assert!(tukey_hsd(&[vec![1.0, 2.0]], 0.05).is_err());
    assert!(tukey_hsd(&[vec![1.0, 2.0], vec![3.0]], 0.05).is_err());
}

#[test]
fn tukey_intervals_match_monte_carlo_quantile() {
    let mut r = rng(12);
    let groups = normal_groups(&mut r, &[10.0, 10.5, 11.0, 12.0], 1.0, &[12, 15, 9, 20]);
    let t = tukey_hsd(&groups, 0.05).unwrap();
    let q = mc_studentized_quantile(0.95, 4, t.df, 1_000_000, 77);
    for p in &t.pairs {
        let (ni, nj) = (groups[p.group1].len() as f64, groups[p.group2].len() as f64);
        let half = q * (t.mse / 2.0 * (1.0 / ni + 1.0 / nj)).sqrt();
        assert!((p.lower - (p.meandiff - half)).abs() < 0.005);
        assert!((p.upper - (p.meandiff + half)).abs() < 0.005);
    }
}

#[test]
fn published_gender_conditionals_reproduce_from_counts() {
    let mut rows = Vec::new();
    for i in 0..4 {
        let g = if i < 2 { Gender::Male } else { Gender::Female };
        rows.push((node_name(i), Some(30), Some(g), Role::Seed));
    }
    let labels = label_store(rows);
    let mut calls: Vec<(String, String)> = Vec::new();
    let mut push = |a: usize, b: usize, n: usize| calls.extend(std::iter::repeat_n((node_name(a), node_name(b)), n));
    push(0, 1, 6265);
    push(0, 2, 3735);
    push(2, 3, 4732);
    push(3, 0, 5268);
    let c = gender_conditionals(&calls, &labels);
    assert_eq!(c.p_f_given_m, Some(0.3735));
    assert_eq!(c.p_m_given_m, Some(0.6265));
    assert_eq!(c.p_f_given_f, Some(0.4732));
    assert_eq!(c.p_m_given_f, Some(0.5268));
    assert_eq!(c.p_m, Some(0.5));
}

#[test]
fn all_male_calls() {
    let labels = label_store((0..3).map(|i| (node_name(i), None, Some(Gender::Male), Role::Unlabeled)));
    let calls = [(node_name(0), node_name(1)), (node_name(2), node_name(1)), (node_name(0), node_name(9))];
    let c = gender_conditionals(&calls, &labels);
    assert_eq!(c.p_m_given_m, Some(1.0));
    assert_eq!(c.p_f_given_f, None);
    assert_eq!(c.calls_mm, 2);
}

#[test]
fn uniform_ages_give_a_flat_null() {
    // 4 ages, 2 users each, a 2-regular ring of 8 edges
    let n = 8;
    let pairs: Vec<(usize, usize)> = (0..n).map(|i| (i, (i + 1) % n)).collect();
    let g = graph_from_pairs(n, &pairs);
    let labels = label_store((0..n).map(|i| (node_name(i), Some(20 + (i % 4) as u32), None, Role::Seed)));
    let h = homophily_matrices(&g, &labels);
    let e = pairs.len() as f64;
    for i in 0..4 {
        for j in 0..4 {
            assert!((h.null.get(i, j) - e / 16.0 * 2.0).abs() < 1e-12);
        }
    }
    assert!((h.null.sum() - h.comm.sum()).abs() < 1e-6);
    assert_eq!(h.comm.sum(), 2.0 * e);
}

#[test]
fn equal_observed_and_expected_give_zero_log_difference() {
    let n = 12;
    let pairs: Vec<(usize, usize)> = (0..n).map(|i| (i, (i + 5) % n)).collect();
    let g = graph_from_pairs(n, &pairs);
    let labels = label_store((0..n).map(|i| (node_name(i), Some(30 + (i % 3) as u32), None, Role::Seed)));
    let h = homophily_matrices(&g, &labels);
    let z = log_difference(&h.comm, &h.comm, h.log_floor);
    assert!((0..z.size()).all(|i| z.row(i).iter().all(|&v| v == 0.0)));
}

#[test]
fn planted_two_age_blocks() {
    // ages 20 and 45, edges only within an age
    let n = 40;
    let mut pairs = Vec::new();
    for i in 0..20 {
        pairs.push((i, (i + 1) % 20));
        pairs.push((20 + i, 20 + (i + 1) % 20));
    }
    let g = graph_from_pairs(n, &pairs);
    let labels = label_store((0..n).map(|i| (node_name(i), Some(if i < 20 { 20 } else { 45 }), None, Role::Seed)));
    let h = homophily_matrices(&g, &labels);
    let peak = (0..h.delta_curve.len()).max_by_key(|&d| h.delta_curve[d]).unwrap();
    assert_eq!(peak, 0);
    assert_eq!(h.delta_curve[25], 0);
    let reg = h.regression.unwrap();
    assert!((reg.r - 1.0).abs() < 1e-12);
    assert!((reg.slope - 1.0).abs() < 1e-12);
}

#[test]
fn no_labeled_edges_warns() {
    let g = graph_from_pairs(3, &[(0, 1)]);
    let labels = label_store([(node_name(2), Some(30), None, Role::Seed)]);
    let h = homophily_matrices(&g, &labels);
    assert_eq!(h.labeled_edges, 0);
    assert!(!h.warnings.is_empty());
}

proptest! {
    #[test]
    fn bootstrap_is_deterministic(values in prop::collection::vec(-1e3f64..1e3, 1..40), seed in any::<u64>()) {
        prop_assert_eq!(bootstrap_means(&values, 20, seed).unwrap(), bootstrap_means(&values, 20, seed).unwrap());
    }

    #[test]
    fn conditionals_are_distributions(calls in prop::collection::vec((0usize..6, 0usize..6), 1..60)) {
        let labels = label_store((0..6).map(|i| {
            (node_name(i), None, Some(if i % 2 == 0 { Gender::Male } else { Gender::Female }), Role::Unlabeled)
        }));
        let named: Vec<(String, String)> = calls.iter().map(|&(a, b)| (node_name(a), node_name(b))).collect();
        let c = gender_conditionals(&named, &labels);
        if let (Some(a), Some(b)) = (c.p_f_given_m, c.p_m_given_m) {
            prop_assert!((a + b - 1.0).abs() <= 1e-12);
        }
        if let (Some(a), Some(b)) = (c.p_f_given_f, c.p_m_given_f) {
            prop_assert!((a + b - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn homophily_invariants(pairs in prop::collection::vec((0usize..30, 0usize..30), 1..80), ages in prop::collection::vec(prop::option::of(18u32..30), 30)) {
        let g = graph_from_pairs(30, &pairs);
        let labels = label_store((0..30).map(|i| (node_name(i), ages[i], None, if ages[i].is_some() { Role::Seed } else { Role::Unlabeled })));
        let h = homophily_matrices(&g, &labels);
        prop_assume!(h.labeled_edges > 0);
        prop_assert!(h.comm.is_symmetric(0.0));
        prop_assert!(h.null.is_symmetric(1e-12));
        prop_assert_eq!(h.comm.sum(), 2.0 * h.labeled_edges as f64);
        prop_assert!((h.null.sum() - h.comm.sum()).abs() < 1e-6);
        prop_assert_eq!(h.delta_curve.iter().sum::<u64>() as f64, h.comm.sum());
        // null marginals proportional to population
        let total: u64 = h.population.iter().sum();
        for i in 0..h.population.len() {
            let row: f64 = h.null.row(i).iter().sum();
            let want = h.comm.sum() * h.population[i] as f64 / total as f64;
            prop_assert!((row - want).abs() < 1e-9);
        }
    }
}

proptest! {
    // each case inverts the studentized range twice
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn tukey_swap_negates(seed in 0u64..1000, n1 in 2usize..10, n2 in 2usize..10) {
        let mut r = rng(seed);
        let g = normal_groups(&mut r, &[0.0, 1.0], 1.0, &[n1, n2]);
        let a = tukey_hsd(&g, 0.05).unwrap().pairs[0].clone();
        let b = tukey_hsd(&[g[1].clone(), g[0].clone()], 0.05).unwrap().pairs[0].clone();
        prop_assert!((a.meandiff + b.meandiff).abs() < 1e-12);
        prop_assert!((a.lower + b.upper).abs() < 1e-12);
        prop_assert!((a.upper + b.lower).abs() < 1e-12);
        prop_assert_eq!(a.reject, b.reject);
    }
}

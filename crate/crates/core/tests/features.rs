#![allow(clippy::needless_range_loop)]

mod common;

use chrono::{FixedOffset, NaiveDate};
use cdr_demographics::features::{
    extract_features, log_transform, pca, preprocess, read_cdr_csv, read_sms_csv, raw_column_names, skew_report,
    write_skew_csv, CdrRecord, ColumnKind, DaySplit, Direction, ExtractOptions, FeatureMatrix, ObservationWindow,
    SmsRecord, RAW_COLUMN_COUNT,
};
use common::{covariance, jacobi_eigen, rng};
use proptest::prelude::*;
use rand::Rng;

const DATA: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/data");

fn march_window() -> ExtractOptions {
    ExtractOptions {
        window: ObservationWindow::months(NaiveDate::from_ymd_opt(2015, 3, 1).unwrap(), 3).unwrap(),
        day_split: DaySplit::default(),
    }
}

fn utc() -> FixedOffset {
    FixedOffset::east_opt(0).unwrap()
}

fn call(a: &str, b: &str, t: &str, secs: u64) -> CdrRecord {
    CdrRecord {
        caller: a.into(),
        callee: b.into(),
        timestamp: chrono::NaiveDateTime::parse_from_str(t, "%Y-%m-%dT%H:%M:%S").unwrap(),
        duration_s: secs,
        direction: Direction::Outgoing,
        tower: String::new(),
    }
}

fn value(m: &FeatureMatrix, user: &str, col: &str) -> f64 {
    let i = m.user_ids().iter().position(|u| u == user).unwrap();
    m.value(i, m.column_index(col).unwrap())
}

#[test]
fn three_user_fixture_matches_golden_table() {
    let cdr = read_cdr_csv(std::fs::File::open(format!("{DATA}/three_users_cdr.csv")).unwrap(), utc()).unwrap();
    let sms = read_sms_csv(std::fs::File::open(format!("{DATA}/three_users_sms.csv")).unwrap(), utc()).unwrap();
    let ex = extract_features(&cdr, &sms, &march_window());
    let golden = FeatureMatrix::read_csv(std::fs::File::open(format!("{DATA}/three_users_expected.csv")).unwrap()).unwrap();
    assert_eq!(ex.skipped_outside_window, 1);
    assert_eq!(ex.matrix.column_names(), golden.column_names());
    assert_eq!(ex.matrix.user_ids(), golden.user_ids());
    for i in 0..golden.n_rows() {
        for j in 0..golden.n_cols() {
            assert_eq!(
                ex.matrix.value(i, j),
                golden.value(i, j),
                "{} / {}",
                golden.user_ids()[i],
                golden.column_names()[j]
            );
        }
    }
}

#[test]
fn single_weekend_incoming_call() {
    // Saturday
    let ex = extract_features(&[call("x", "u", "2015-03-07T15:00:00", 60)], &[], &march_window());
    let m = &ex.matrix;
    for (j, name) in m.column_names().iter().enumerate() {
        let v = m.value(m.user_ids().iter().position(|u| u == "u").unwrap(), j);
        let expected = match name.as_str() {
            "in-count-weekend" | "in-count-total" | "all-count-weekend" | "all-count-total" => 1.0,
            "in-time-weekend" | "in-time-total" | "all-time-weekend" | "all-time-total" => 60.0,
            "call-days-in" | "call-days-all" | "degree-in" | "degree-total" => 1.0,
            _ => 0.0,
        };
        assert_eq!(v, expected, "{name}");
    }
}

#[test]
fn same_day_calls_count_one_contact_day() {
    // Tuesday
    let calls = [call("u", "x", "2015-03-03T10:00:00", 5), call("u", "y", "2015-03-03T10:00:00", 7)];
    let m = extract_features(&calls, &[], &march_window()).matrix;
    assert_eq!(value(&m, "u", "out-count-weekdaylight"), 2.0);
    assert_eq!(value(&m, "u", "call-days-out"), 1.0);
    assert_eq!(value(&m, "u", "degree-out"), 2.0);
}

#[test]
fn unparseable_timestamp_names_the_row() {
    let text = "caller,callee,timestamp_iso8601,duration_s,direction,tower\na,b,2015-03-02T10:00:00,1,outgoing,t\na,b,never,1,outgoing,t\n";
    let err = read_cdr_csv(text.as_bytes(), utc()).unwrap_err();
    assert!(err.to_string().contains('3'), "{err}");
}

#[test]
fn preprocess_examples_and_layout() {
    let raw = FeatureMatrix::with_inferred_kinds(
        vec!["a".into(), "b".into(), "c".into()],
        vec!["x".into(), "y".into()],
        vec![0.0, 5.0, 999.0, 5.0, 9.0, 5.0],
    )
    .unwrap();
    let p = preprocess(&raw).unwrap();
    assert_eq!(p.n_cols(), 2 * 2 * 2);
    assert_eq!(value(&p, "a", "log-x"), 0.0);
    assert_eq!(value(&p, "b", "log-x"), 3.0);
    assert_eq!(value(&p, "b", "scaled:x"), 1.0);
    assert_eq!(value(&p, "c", "scaled:x"), 9.0 / 999.0);
    // constant column rescales to zero
    assert_eq!(value(&p, "a", "scaled:y"), 0.0);
    assert_eq!(value(&p, "a", "x"), 0.0);
    let kinds = p.column_kinds();
    assert_eq!(kinds.iter().filter(|k| **k == ColumnKind::Rescaled).count(), 4);
}

#[test]
fn published_quartiles_shrink_under_log() {
    let q = [662.0, 3838.0, 14108.0];
    let logs: Vec<f64> = q.iter().map(|&v| log_transform(v)).collect();
    // the published table truncates to two decimals
    for (got, want) in logs.iter().zip([282.0, 358.0, 414.0]) {
        assert_eq!((got * 100.0).floor(), want, "{got}");
    }
    assert!((q[2] - q[0]) / q[1] > 1.0);
    assert!((logs[2] - logs[0]) / logs[1] < 1.0);
}

#[test]
fn skew_examples() {
    let m = FeatureMatrix::with_inferred_kinds(
        (0..101).map(|i| format!("u{i:03}")).collect(),
        vec!["ramp".into(), "flat".into()],
        (0..101).flat_map(|i| [i as f64, 5.0]).collect(),
    )
    .unwrap();
    let rows = skew_report(&m);
    assert_eq!(rows[0].q2, Some(50.0));
    assert_eq!(rows[0].q1, Some(25.0));
    assert_eq!(rows[1].std, Some(0.0));
    assert_eq!(rows[1].iqr_over_q2, Some(0.0));
    let mut out = Vec::new();
    write_skew_csv(&rows, &mut out).unwrap();
    let text = String::from_utf8(out).unwrap();
    assert_eq!(text.lines().next().unwrap(), "column,count,mean,std,min,25%,50%,75%,max,iqr_over_q2");
    assert_eq!(text.lines().nth(1).unwrap(), "ramp,101,50.000000,29.300171,0.000000,25.000000,50.000000,75.000000,100.000000,1.000000");
}

fn matrix(rows: &[Vec<f64>]) -> FeatureMatrix {
    let p = rows[0].len();
    FeatureMatrix::with_inferred_kinds(
        (0..rows.len()).map(|i| format!("u{i:03}")).collect(),
        (0..p).map(|j| format!("c{j}")).collect(),
        rows.iter().flatten().copied().collect(),
    )
    .unwrap()
}

#[test]
fn pca_rank_one() {
    let rows: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64, 3.0 * i as f64]).collect();
    let r = pca(&matrix(&rows), &[0, 1], 2).unwrap();
    assert!((r.explained_variance_ratio[0] - 1.0).abs() < 1e-12);
    assert!(r.eigenvalues[1].abs() < 1e-9);
}

#[test]
fn pca_isotropic_data_spreads_variance_evenly() {
    // centered ±1 design with identity covariance up to scale
    let rows: Vec<Vec<f64>> = (0..8).map(|i| (0..3).map(|b| if i >> b & 1 == 1 { 1.0 } else { -1.0 }).collect()).collect();
    let r = pca(&matrix(&rows), &[0, 1, 2], 3).unwrap();
    for ratio in r.explained_variance_ratio {
        assert!((ratio - 1.0 / 3.0).abs() < 1e-9);
    }
}

#[test]
fn pca_matches_jacobi_oracle() {
    let mut r = rng(5);
    let rows: Vec<Vec<f64>> = (0..20).map(|_| (0..10).map(|_| r.random_range(-1.0..1.0)).collect()).collect();
    let res = pca(&matrix(&rows), &(0..10).collect::<Vec<_>>(), 10).unwrap();
    let (vals, vecs) = jacobi_eigen(&covariance(&rows));
    for k in 0..10 {
        assert!((res.eigenvalues[k] - vals[k]).abs() < 1e-8, "eigenvalue {k}");
        let dot: f64 = res.eigenvectors[k].iter().zip(&vecs[k]).map(|(a, b)| a * b).sum();
        assert!((dot.abs() - 1.0).abs() < 1e-8, "eigenvector {k}: {dot}");
    }
    for a in 0..10 {
        for b in a + 1..10 {
            let dot: f64 = res.eigenvectors[a].iter().zip(&res.eigenvectors[b]).map(|(x, y)| x * y).sum();
            assert!(dot.abs() < 1e-8);
        }
    }
    // full-rank reconstruction of the covariance
    let cov = covariance(&rows);
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..10 {
        for j in 0..10 {
            let rec: f64 = (0..10).map(|k| res.eigenvalues[k] * res.eigenvectors[k][i] * res.eigenvectors[k][j]).sum();
            num += (rec - cov[i][j]).powi(2);
            den += cov[i][j].powi(2);
        }
    }
    assert!((num / den).sqrt() < 1e-6);
    assert!(res.explained_variance_ratio.windows(2).all(|w| w[0] >= w[1]));
    assert!(res.explained_variance_ratio.iter().sum::<f64>() <= 1.0 + 1e-12);
}

#[test]
fn pca_needs_two_rows() {
    assert!(pca(&matrix(&[vec![1.0, 2.0]]), &[0, 1], 1).is_err());
}

#[test]
fn column_names_are_fixed() {
    let names = raw_column_names();
    assert_eq!(names.len(), RAW_COLUMN_COUNT);
    assert_eq!(names[0], "in-count-weekdaylight");
    assert_eq!(names[44], "degree-total");
}

fn arb_records() -> impl Strategy<Value = (Vec<CdrRecord>, Vec<SmsRecord>)> {
    let user = prop::sample::select(vec!["a", "b", "c", "d", "e"]);
    let minute = 0i64..(92 * 24 * 60);
    let start = NaiveDate::from_ymd_opt(2015, 3, 1).unwrap().and_hms_opt(0, 0, 0).unwrap();
    let calls = prop::collection::vec((user.clone(), user.clone(), minute.clone(), 0u64..4000), 0..40).prop_map(move |v| {
        v.into_iter()
            .map(|(a, b, m, d)| CdrRecord {
                caller: a.into(),
                callee: b.into(),
                timestamp: start + chrono::Duration::minutes(m),
                duration_s: d,
                direction: Direction::Outgoing,
                tower: String::new(),
            })
            .collect::<Vec<_>>()
    });
    let texts = prop::collection::vec((user.clone(), user, minute), 0..40).prop_map(move |v| {
        v.into_iter()
            .map(|(a, b, m)| SmsRecord {
                sender: a.into(),
                receiver: b.into(),
                timestamp: start + chrono::Duration::minutes(m),
                direction: Direction::Outgoing,
            })
            .collect::<Vec<_>>()
    });
    (calls, texts)
}

proptest! {
    #[test]
    fn in_and_out_totals_balance_on_closed_streams((calls, texts) in arb_records()) {
        let m = extract_features(&calls, &texts, &march_window()).matrix;
        let sum = |name: &str| m.column(m.column_index(name).unwrap()).iter().sum::<f64>();
        for metric in ["count", "time", "sms"] {
            prop_assert_eq!(sum(&format!("in-{metric}-total")), sum(&format!("out-{metric}-total")));
            for dir in ["in", "out", "all"] {
                let parts: f64 = ["weekdaylight", "weeknight", "weekend"].iter().map(|p| sum(&format!("{dir}-{metric}-{p}"))).sum();
                prop_assert_eq!(parts, sum(&format!("{dir}-{metric}-total")));
            }
        }
    }

    #[test]
    fn preprocess_columns_are_consistent((calls, texts) in arb_records()) {
        let raw = extract_features(&calls, &texts, &march_window()).matrix;
        prop_assume!(raw.n_rows() > 0);
        let p = preprocess(&raw).unwrap();
        prop_assert_eq!(p.n_cols(), 4 * RAW_COLUMN_COUNT);
        let mut names = p.column_names().to_vec();
        names.sort();
        names.dedup();
        prop_assert_eq!(names.len(), p.n_cols());
        for j in 0..RAW_COLUMN_COUNT {
            let name = &raw.column_names()[j];
            let l = p.column_index(&format!("log-{name}")).unwrap();
            let s = p.column_index(&format!("scaled:{name}")).unwrap();
            for i in 0..p.n_rows() {
                prop_assert_eq!(p.value(i, l), log_transform(raw.value(i, j)));
                prop_assert!((0.0..=1.0).contains(&p.value(i, s)));
                for k in 0..p.n_rows() {
                    if raw.value(i, j) < raw.value(k, j) {
                        prop_assert!(p.value(i, s) <= p.value(k, s));
                        prop_assert!(p.value(i, l) < p.value(k, l));
                    }
                }
            }
        }
    }
}

//! Grid-searched logistic regression predicting gender from behavioral
//! features, then PPS collapse at several coverage levels.
//!
//! ```sh
//! cargo run --release --example gender_classifier
//! ```

use cdr_demographics::classify::{grid, grid_search, predict, ModelKind, Penalty, PredictionSet};
use cdr_demographics::features::{extract_features, preprocess, DaySplit, ExtractOptions, FeatureMatrix};
use cdr_demographics::labels::{Gender, Role};
use cdr_demographics::pps::{compute_quotas, pps_assign};
use cdr_demographics::synth::{generate_events, generate_graph, generate_population, SynthConfig};

fn rows(m: &FeatureMatrix, keep: &[usize]) -> cdr_demographics::Result<FeatureMatrix> {
    let p = m.n_cols();
    let values = keep.iter().flat_map(|&i| (0..p).map(move |j| m.value(i, j))).collect();
    FeatureMatrix::with_inferred_kinds(keep.iter().map(|&i| m.user_ids()[i].clone()).collect(), m.column_names().to_vec(), values)
}

fn main() -> cdr_demographics::Result<()> {
    let mut cfg = SynthConfig { population: 8_000, ..SynthConfig::default() };
    cfg.events.male_outgoing_duration_factor = 1.4;
    let store = generate_population(&cfg)?;
    let g = generate_graph(&store, &cfg)?;
    let window = cfg.window.window()?;
    let events = generate_events(&g, &store, &cfg, &window)?;
    let features = preprocess(&extract_features(&events.calls, &events.sms, &ExtractOptions { window, day_split: DaySplit::default() }).matrix)?;

    let gender_of = |i: usize| store.get(&features.user_ids()[i]).and_then(|u| u.gender.map(|g| (u.role, g)));
    let train: Vec<usize> = (0..features.n_rows()).filter(|&i| matches!(gender_of(i), Some((Role::Seed, _)))).collect();
    let test: Vec<usize> = (0..features.n_rows()).filter(|&i| matches!(gender_of(i), Some((Role::Validation, _)))).collect();
    let target = |i: usize| usize::from(gender_of(i).map(|(_, g)| g) == Some(Gender::Female));

    let train_m = rows(&features, &train)?;
    let y: Vec<usize> = train.iter().map(|&i| target(i)).collect();
    let points = grid(&[0.1, 1.0, 10.0], &[Some(10), Some(30), None], &[Penalty::L1, Penalty::L2]);
    let result = grid_search(&train_m, &y, ModelKind::Binary, 2, &points, 0.7, 11)?;
    let b = &result.best;
    println!("best cell: {:?} C={} k={:?}, validation accuracy {:.4}", b.penalty, b.c, b.k, b.validation_accuracy);

    let test_m = rows(&features, &test)?;
    let probs: PredictionSet = predict(&result.model, &test_m)?;
    let male_share = store.iter().filter(|u| u.gender == Some(Gender::Male)).count() as f64 / store.len() as f64;
    // class 0 is male, class 1 female
    let dist = [male_share, 1.0 - male_share];
    for q in [1.0, 0.5, 0.25, 0.125] {
        let spec = compute_quotas(test.len(), q, &dist)?;
        let a = pps_assign(&probs, &spec)?;
        let (mut hits, mut n) = (0, 0);
        for (slot, &i) in a.assigned.iter().zip(&test) {
            if let Some(k) = slot {
                n += 1;
                hits += usize::from(*k == target(i));
            }
        }
        println!("q={q:<5} accuracy {:.4} over {n} users", hits as f64 / n as f64);
    }
    Ok(())
}

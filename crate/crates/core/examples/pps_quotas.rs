//! Quota computation and probability-proportional selection on a small
//! hand-written probability table.
//!
//! ```sh
//! cargo run --example pps_quotas
//! ```

use cdr_demographics::classify::PredictionSet;
use cdr_demographics::pps::{compute_quotas, pps_assign, DEFAULT_PYRAMID};

fn main() -> cdr_demographics::Result<()> {
    let rows = vec![
        vec![0.70, 0.10, 0.10, 0.10],
        vec![0.40, 0.35, 0.15, 0.10],
        vec![0.05, 0.80, 0.10, 0.05],
        vec![0.10, 0.20, 0.60, 0.10],
        vec![0.25, 0.25, 0.25, 0.25],
        vec![0.10, 0.10, 0.20, 0.60],
        vec![0.30, 0.30, 0.30, 0.10],
        vec![0.05, 0.05, 0.45, 0.45],
    ];
    let users: Vec<String> = (0..rows.len()).map(|i| format!("user{i}")).collect();
    let probs = PredictionSet::from_rows(users.clone(), rows)?;
    println!("target pyramid {DEFAULT_PYRAMID:?}");

    for q in [1.0, 0.5, 0.25] {
        let spec = compute_quotas(users.len(), q, &DEFAULT_PYRAMID)?;
        let a = pps_assign(&probs, &spec)?;
        println!("q={q}: quotas {:?}, filled {:?}, shortfall {:?}", spec.quotas, a.counts, a.shortfall);
        for (user, (slot, conf)) in users.iter().zip(a.assigned.iter().zip(&a.confidence)) {
            if let (Some(k), Some(p)) = (slot, conf) {
                println!("  {user} -> {k} (p={p:.2})");
            }
        }
    }
    Ok(())
}

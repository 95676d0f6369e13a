//! Extracts the per-user feature table from synthetic records, applies the
//! log and min-max transforms, and prints skew statistics and the leading
//! principal components.
//!
//! ```sh
//! cargo run --release --example feature_extraction
//! ```

use cdr_demographics::features::{extract_features, pca, preprocess, skew_report, DaySplit, ExtractOptions};
use cdr_demographics::synth::{generate_events, generate_graph, generate_population, SynthConfig};

fn main() -> cdr_demographics::Result<()> {
    let cfg = SynthConfig { population: 5_000, ..SynthConfig::default() };
    let store = generate_population(&cfg)?;
    let g = generate_graph(&store, &cfg)?;
    let window = cfg.window.window()?;
    let events = generate_events(&g, &store, &cfg, &window)?;

    let extraction = extract_features(&events.calls, &events.sms, &ExtractOptions { window, day_split: DaySplit::default() });
    let raw = extraction.matrix;
    println!("{} users x {} raw columns", raw.n_rows(), raw.n_cols());

    let pre = preprocess(&raw)?;
    println!("{} columns after preprocessing", pre.n_cols());
    println!("{:<28} {:>10} {:>10} {:>10}", "column", "q2", "iqr/q2", "max");
    for row in skew_report(&raw).iter().filter(|r| r.column.ends_with("-total")).take(8) {
        let f = |v: Option<f64>| v.map_or("-".to_owned(), |x| format!("{x:.2}"));
        println!("{:<28} {:>10} {:>10} {:>10}", row.column, f(row.q2), f(row.iqr_over_q2), f(row.max));
    }

    let scaled_log: Vec<usize> = pre
        .column_names()
        .iter()
        .enumerate()
        .filter(|(_, n)| n.starts_with("scaled:log-"))
        .map(|(j, _)| j)
        .collect();
    let r = pca(&pre, &scaled_log, 5)?;
    for (i, v) in r.explained_variance_ratio.iter().enumerate() {
        println!("pc{}: {:.1}% of variance", i + 1, v * 100.0);
    }
    Ok(())
}

//! Gender mixing, bootstrap ranges of call duration, Tukey HSD across age
//! groups and the age homophily curve on a synthetic population.
//!
//! ```sh
//! cargo run --release --example observational_stats
//! ```

use cdr_demographics::features::{extract_features, DaySplit, ExtractOptions};
use cdr_demographics::labels::Gender;
use cdr_demographics::stats::{bootstrap_means, gender_conditionals, homophily_matrices, percentile_range, tukey_hsd};
use cdr_demographics::synth::{generate_events, generate_graph, generate_population, SynthConfig};

fn main() -> cdr_demographics::Result<()> {
    let cfg = SynthConfig { population: 10_000, ..SynthConfig::default() };
    let store = generate_population(&cfg)?;
    let g = generate_graph(&store, &cfg)?;
    let window = cfg.window.window()?;
    let events = generate_events(&g, &store, &cfg, &window)?;

    let c = gender_conditionals(&events.calls, &store);
    let f = |v: Option<f64>| v.map_or("n/a".to_owned(), |x| format!("{x:.4}"));
    println!("P(M|M) {}  P(F|M) {}  P(M|F) {}  P(F|F) {}", f(c.p_m_given_m), f(c.p_f_given_m), f(c.p_m_given_f), f(c.p_f_given_f));

    let m = extract_features(&events.calls, &events.sms, &ExtractOptions { window, day_split: DaySplit::default() }).matrix;
    let (time, count) = (m.column_index("out-time-total").unwrap(), m.column_index("out-count-total").unwrap());
    let mut mean_duration = [Vec::new(), Vec::new()];
    let mut by_age = vec![Vec::new(); store.categories()];
    for (i, user) in m.user_ids().iter().enumerate() {
        let Some(label) = store.get(user) else { continue };
        if m.value(i, count) > 0.0 {
            let slot = usize::from(label.gender == Some(Gender::Female));
            mean_duration[slot].push(m.value(i, time) / m.value(i, count));
        }
        if let Some(k) = store.age_category(user) {
            by_age[k].push((m.value(i, count) + 1.0).log10());
        }
    }
    for (name, values, seed) in [("male", &mean_duration[0], 1), ("female", &mean_duration[1], 2)] {
        let range = percentile_range(&bootstrap_means(values, 1000, seed)?, 0.95).unwrap();
        println!("{name} mean outgoing call duration: 95% range [{:.1}, {:.1}] s", range.0, range.1);
    }

    let names = store.boundaries().labels();
    let t = tukey_hsd(&by_age, 0.05)?;
    println!("Tukey HSD on log outgoing calls (q_crit {:.3}):", t.q_crit);
    for p in &t.pairs {
        println!(
            "  {:>6} vs {:<6} diff {:+.3}  [{:+.3}, {:+.3}]  p_adj {:.3}  reject {}",
            names[p.group1], names[p.group2], p.meandiff, p.lower, p.upper, p.p_adj, p.reject
        );
    }

    let h = homophily_matrices(&g, &store);
    let peak = (0..h.delta_curve.len()).max_by_key(|&d| h.delta_curve[d]).unwrap_or(0);
    println!("age difference with most links: {peak}");
    for d in (0..h.delta_curve.len().min(40)).step_by(5) {
        println!("  delta {d:>2}: {}", h.delta_curve[d]);
    }
    if let Some(r) = &h.regression {
        println!("linked-age regression: slope {:.3}, r {:.3} over {} pairs", r.slope, r.r, r.pairs);
    }
    Ok(())
}

//! Kendall's τ-b, Pearson's ρ and Recall@k on small hand-made rankings.
//!
//! cargo run --example rank_metrics

use saliency_audit::evaluation::{kendall_tau, pearson_rho, recall_at_k, MetricSummary};

fn main() -> saliency_audit::Result<()> {
    let a = [0.9, 0.7, 0.7, 0.2, 0.1];
    let cases: [(&str, [f64; 5]); 4] = [
        ("same order", [5.0, 4.0, 4.0, 2.0, 1.0]),
        ("one swap", [5.0, 4.0, 4.0, 1.0, 2.0]),
        ("reversed", [0.1, 0.2, 0.2, 0.7, 0.9]),
        ("ties broken", [5.0, 4.5, 4.0, 2.0, 1.0]),
    ];
    let mut taus = Vec::new();
    for (name, b) in cases {
        let t = kendall_tau(&a, &b)?;
        taus.push(t);
        println!("{name:>12}: tau {t:+.4}  rho {:+.4}", pearson_rho(&a, &b)?);
    }
    match kendall_tau(&a, &[1.0; 5]) {
        Err(e) => println!("    constant: {e}"),
        Ok(t) => println!("    constant: {t}"),
    }

    // Cells 0 and 3 are relevant; the map ranks 0 first and 3 fourth.
    let map = [0.8, 0.5, 0.6, 0.3, 0.1, 0.0];
    for k in 1..=4 {
        println!("recall@{k} = {:.2}", recall_at_k(&map, &[0, 3], k)?);
    }
    println!("table cell over the four taus: {}", MetricSummary::of(&taus).expect("non-empty").cell());
    Ok(())
}

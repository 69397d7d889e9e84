//! Consistency and robustness audits of saliency maps.
//!
//! Both audits reduce a pair of maps to two ranking vectors over the cells
//! that hold the original window, then score the pair with Kendall's τ-b
//! and Pearson's ρ. Recall@k measures how many of those cells an explainer
//! places among its `k` most important.

mod controls;
mod metrics;
mod protocol;
mod records;

pub use controls::{NoiseExplainer, OracleExplainer};
pub use metrics::{kendall_tau, pearson_rho, recall_at_k, MetricSummary};
pub use protocol::{consistency_eval, robustness_eval, AuditContext};
pub use records::{load_records, read_records, save_records, write_records, EvaluationRecord, RECORD_HEADER};

#[cfg(test)]
mod tests;

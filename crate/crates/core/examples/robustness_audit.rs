//! Robustness audit: train a twin on frames whose signal row is swapped
//! with a noise row, then check whether the twin's map ranks the moved
//! cells like the original map ranks them.
//!
//! cargo run --example robustness_audit

use saliency_audit::attribution::ExplainerKind;
use saliency_audit::evaluation::{robustness_eval, AuditContext, OracleExplainer};
use saliency_audit::framing::Placement;
use saliency_audit::models::Arch;
use saliency_audit::pipeline::{
    correlation_table, prepare_dataset, recall_table, render_correlation, render_recall, swap_for, test_windows,
    train_model, ExperimentConfig, ReportFormat, Study, Variant,
};

fn main() -> saliency_audit::Result<()> {
    let cfg = ExperimentConfig::parse(
        "dataset.synthetic.num_windows = 160\nmodel.hidden_size = 16\ntrain.epochs = 15\neval.max_test_windows = 32\n",
    )?;
    let ds = prepare_dataset(&cfg.datasets[0], cfg.seed)?;
    let swap = swap_for(&cfg, &ds.name)?;
    println!("swapping rows {:?}", swap.rows());
    let windows = test_windows(&ds, &cfg);
    let ctx = AuditContext::new(&ds.name, cfg.seed);
    let placement = Placement::Middle;

    let mut records = Vec::new();
    let (plain, _) = train_model(&cfg, &ds, Arch::TemporalConv, &[placement], Variant::Plain, None)?;
    let (twin, _) = train_model(&cfg, &ds, Arch::TemporalConv, &[placement], Variant::Swapped(swap), None)?;
    records.extend(robustness_eval(plain.model(), twin.model(), &windows, swap, &OracleExplainer::default(), placement, &ctx)?);
    for kind in [ExplainerKind::FA, ExplainerKind::IG] {
        let e = cfg.attribution.explainer(kind, &[])?;
        records.extend(robustness_eval(plain.model(), twin.model(), &windows, swap, e.as_ref(), placement, &ctx)?);
    }
    print!("{}", render_correlation(&correlation_table(&records, Study::Robustness), Study::Robustness, ReportFormat::Md));
    println!();
    print!("{}", render_recall(&recall_table(&records, Study::Robustness), Study::Robustness, ReportFormat::Md));
    Ok(())
}

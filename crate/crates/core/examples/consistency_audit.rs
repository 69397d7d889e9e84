//! Consistency audit: explain the same windows at the top, middle and
//! bottom of the padded frame and compare the maps over the window cells.
//! The oracle and noise explainers bracket what a real explainer can score.
//!
//! cargo run --example consistency_audit

use saliency_audit::attribution::{Explainer, ExplainerKind};
use saliency_audit::evaluation::{consistency_eval, AuditContext, NoiseExplainer, OracleExplainer};
use saliency_audit::framing::Placement;
use saliency_audit::models::{train, Arch, Classifier};
use saliency_audit::pipeline::{
    correlation_table, model_config, prepare_dataset, render_correlation, test_windows, training_frames,
    ExperimentConfig, ReportFormat, Study, Variant,
};

fn main() -> saliency_audit::Result<()> {
    let cfg = ExperimentConfig::parse("dataset.synthetic.num_windows = 160\nmodel.hidden_size = 16\neval.max_test_windows = 32\n")?;
    let ds = prepare_dataset(&cfg.datasets[0], cfg.seed)?;
    let frames = training_frames(&cfg, &ds, &Placement::ALL, Variant::Plain)?;
    let windows = test_windows(&ds, &cfg);
    let ctx = AuditContext::new(&ds.name, cfg.seed);
    let mut tc = cfg.train.clone();
    tc.epochs = 10;

    let mut records = Vec::new();
    for arch in [Arch::Recurrent, Arch::TemporalConv] {
        let ck = train(Classifier::build(model_config(&cfg, arch, &ds)?)?, &frames, &tc, &ds.fingerprint())?;
        let mut explainers: Vec<Box<dyn Explainer>> = vec![Box::new(OracleExplainer::default()), Box::new(NoiseExplainer)];
        for kind in [ExplainerKind::FA, ExplainerKind::IG] {
            explainers.push(cfg.attribution.explainer(kind, &frames)?);
        }
        for e in &explainers {
            records.extend(consistency_eval(ck.model(), &windows, e.as_ref(), &Placement::ALL, &ctx)?);
        }
    }
    let table = correlation_table(&records, Study::Consistency);
    print!("{}", render_correlation(&table, Study::Consistency, ReportFormat::Md));
    Ok(())
}

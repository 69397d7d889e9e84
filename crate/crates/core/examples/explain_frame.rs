//! Train a recurrent classifier briefly, then explain one test frame with
//! FP, FA and IG and print each map as a heatmap.
//!
//! cargo run --example explain_frame

use saliency_audit::attribution::{resolve_targets, AttributionConfig, ExplainerKind};
use saliency_audit::models::{train, Arch, Classifier};
use saliency_audit::pipeline::{model_config, prepare_dataset, test_windows, training_frames, ExperimentConfig, Variant};
use saliency_audit::evaluation::AuditContext;
use saliency_audit::framing::Placement;

fn main() -> saliency_audit::Result<()> {
    let cfg = ExperimentConfig::parse("dataset.synthetic.num_windows = 160\nmodel.hidden_size = 16\n")?;
    let ds = prepare_dataset(&cfg.datasets[0], cfg.seed)?;
    let frames = training_frames(&cfg, &ds, &Placement::ALL, Variant::Plain)?;
    let mut tc = cfg.train.clone();
    tc.epochs = 15;
    let ck = train(Classifier::build(model_config(&cfg, Arch::Recurrent, &ds)?)?, &frames, &tc, &ds.fingerprint())?;
    let model = ck.model();

    // Feature permutation shuffles across a batch, so explain several frames.
    let ctx = AuditContext::new(&ds.name, cfg.seed);
    let batch = test_windows(&ds, &cfg)
        .iter()
        .take(8)
        .map(|w| ctx.frame_for(w, Placement::Middle))
        .collect::<saliency_audit::Result<Vec<_>>>()?;
    let targets = resolve_targets(model, &batch, cfg.attribution.target)?;
    println!(
        "window {} label {} predicted {}; the window occupies row {} from column {}",
        batch[0].source_window_id, batch[0].label, targets[0], batch[0].signal_feature, batch[0].time_offset
    );

    let attribution = AttributionConfig::default();
    for kind in ExplainerKind::ALL {
        let explainer = attribution.explainer(kind, &frames)?;
        let maps = explainer.explain(model, &batch, &targets, 1)?;
        let m = &maps[0];
        let row_sums: Vec<String> = (0..m.alpha).map(|n| format!("{:+.3}", m.row(n).iter().sum::<f64>())).collect();
        println!("\n{kind}: row sums [{}]", row_sums.join(", "));
        print!("{}", m.heatmap());
    }
    Ok(())
}

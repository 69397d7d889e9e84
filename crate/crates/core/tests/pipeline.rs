use saliency_audit::evaluation::load_records;
use saliency_audit::models::Arch;
use saliency_audit::pipeline::{
    prepare_dataset, run, swap_for, test_windows, train_model, ExperimentConfig, ReportFormat, Variant,
};

fn config(dir: &std::path::Path, seed: u64, extra: &str) -> ExperimentConfig {
    let text = format!(
        "seed = {seed}\ndataset.synthetic.num_windows = 40\nmodel.hidden_size = 6\ntrain.epochs = 2\n\
         attribution.fp_repetitions = 2\nattribution.ig_steps = 4\neval.max_test_windows = 5\n\
         output_dir = {}\n{extra}",
        dir.display()
    );
    ExperimentConfig::parse(&text).unwrap()
}

#[test]
fn record_counts_match_the_matrix() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), 9, "");
    let out = run(&cfg, ReportFormat::Csv, &mut |_| {}).unwrap();
    let n = 5;
    let consistency = out.records.iter().filter(|r| !r.is_robustness()).count();
    let robustness = out.records.iter().filter(|r| r.is_robustness()).count();
    assert_eq!(consistency, 3 * 3 * n * 3);
    assert_eq!(robustness, 3 * 3 * n);
    assert_eq!(load_records(&out.records_path).unwrap(), out.records);
    let manifest = std::fs::read_to_string(&out.manifest).unwrap();
    assert!(manifest.contains("status: ok"));
    assert!(manifest.contains(&cfg.hash()));
}

#[test]
fn reruns_reuse_checkpoints_and_reproduce_records() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), 9, "models = temporal_conv\nexplainers = FA, IG\n");
    let first = run(&cfg, ReportFormat::Csv, &mut |_| {}).unwrap();
    let bytes = std::fs::read(&first.records_path).unwrap();
    let mut log = Vec::new();
    let second = run(&cfg, ReportFormat::Csv, &mut |m| log.push(m.to_string())).unwrap();
    assert!(log.iter().any(|l| l.contains("cached")));
    assert_eq!(std::fs::read(&second.records_path).unwrap(), bytes);

    let other = config(dir.path(), 10, "models = temporal_conv\nexplainers = FA, IG\n");
    let ds = prepare_dataset(&other.datasets[0], other.seed).unwrap();
    let (_, cached) = train_model(&other, &ds, Arch::TemporalConv, &other.placements, Variant::Plain, Some(&dir.path().join("checkpoints"))).unwrap();
    assert!(!cached);
}

#[test]
fn random_swap_pairs_the_signal_row_with_another() {
    let dir = tempfile::tempdir().unwrap();
    for seed in 0..20 {
        let cfg = config(dir.path(), seed, "");
        let (i, j) = swap_for(&cfg, "synthetic").unwrap().rows();
        assert_eq!(i, cfg.frame.signal_feature);
        assert!(j != i && j < cfg.frame.alpha);
    }
}

#[test]
fn test_window_cap_keeps_the_lowest_ids() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), 9, "");
    let ds = prepare_dataset(&cfg.datasets[0], cfg.seed).unwrap();
    let w = test_windows(&ds, &cfg);
    assert_eq!(w.len(), 5);
    let mut ids: Vec<usize> = ds.test.iter().map(|w| w.window_id).collect();
    ids.sort();
    assert_eq!(w.iter().map(|w| w.window_id).collect::<Vec<_>>(), ids[..5]);
}

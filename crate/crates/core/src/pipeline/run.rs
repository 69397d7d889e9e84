use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use rand::Rng;
use sha2::{Digest, Sha256};

use super::config::{DatasetSource, ExperimentConfig, SwapChoice};
use super::report::{write_tables, ReportFormat};
use crate::data::{parse_ucr, parse_ucr_pair, synthesize, Dataset, LabeledWindow};
use crate::error::{Error, Result};
use crate::evaluation::{consistency_eval, robustness_eval, save_records, AuditContext, EvaluationRecord};
use crate::framing::{frame_seed, pad_window, swap_features, PaddedFrame, Placement, SwapSpec};
use crate::models::{train, Arch, Checkpoint, Classifier, ClassifierConfig};
use crate::seed::{derive_seed, rng_from};

/// Loads or synthesizes a dataset, splits it if needed and normalizes it
/// with train-split statistics.
pub fn prepare_dataset(src: &DatasetSource, master_seed: u64) -> Result<Dataset> {
    let split_seed = derive_seed(master_seed, &format!("split/{}", src.name()));
    let mut ds = match src {
        DatasetSource::Synthetic { spec, split_ratio, .. } => synthesize(spec)?.split(*split_ratio, split_seed)?,
        DatasetSource::Ucr { train, test: Some(test), delimiter, .. } => parse_ucr_pair(train, test, *delimiter)?,
        DatasetSource::Ucr { train, test: None, delimiter, split_ratio, .. } => {
            parse_ucr(train, *delimiter)?.split(*split_ratio, split_seed)?
        }
    };
    ds.name = src.name().to_string();
    ds.normalize()
}

/// Test windows in id order, capped by `eval.max_test_windows`.
pub fn test_windows(ds: &Dataset, cfg: &ExperimentConfig) -> Vec<LabeledWindow> {
    let mut w = ds.test.clone();
    w.sort_by_key(|w| w.window_id);
    if cfg.max_test_windows > 0 {
        w.truncate(cfg.max_test_windows);
    }
    w
}

/// The feature rows exchanged for the robustness audit of a dataset.
pub fn swap_for(cfg: &ExperimentConfig, dataset: &str) -> Result<SwapSpec> {
    let alpha = cfg.frame.alpha;
    match cfg.swap {
        SwapChoice::Pair(i, j) => SwapSpec::new(i, j, alpha),
        SwapChoice::Random => {
            let i = cfg.frame.signal_feature;
            let mut rng = rng_from(derive_seed(cfg.seed, &format!("swap/{dataset}")));
            let mut j = rng.random_range(0..alpha - 1);
            if j >= i {
                j += 1;
            }
            SwapSpec::new(i, j, alpha)
        }
    }
}

/// Which training data a classifier sees.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Variant {
    Plain,
    Swapped(SwapSpec),
}

impl Variant {
    pub fn tag(self) -> String {
        match self {
            Variant::Plain => "plain".into(),
            Variant::Swapped(s) => {
                let (i, j) = s.rows();
                format!("swap-{}-{}", i.min(j), i.max(j))
            }
        }
    }
}

pub fn training_frames(cfg: &ExperimentConfig, ds: &Dataset, placements: &[Placement], variant: Variant) -> Result<Vec<PaddedFrame>> {
    let mut out = Vec::with_capacity(ds.train.len() * placements.len());
    for w in &ds.train {
        for &p in placements {
            let f = pad_window(w, &cfg.frame, p, frame_seed(cfg.seed, &ds.name, w.window_id, p))?;
            out.push(match variant {
                Variant::Plain => f,
                Variant::Swapped(s) => swap_features(&f, s)?,
            });
        }
    }
    Ok(out)
}

pub fn model_config(cfg: &ExperimentConfig, arch: Arch, ds: &Dataset) -> Result<ClassifierConfig> {
    let len = cfg.frame.validate(ds.window_len())?;
    let size = cfg.model_sizes[&arch];
    Ok(ClassifierConfig {
        hidden_size: size.hidden_size,
        num_layers: size.num_layers,
        ..ClassifierConfig::new(arch, cfg.frame.alpha, len, ds.num_classes, derive_seed(cfg.seed, &format!("init/{}/{arch}", ds.name)))
    })
}

fn training_setup(
    cfg: &ExperimentConfig,
    ds: &Dataset,
    arch: Arch,
    placements: &[Placement],
    variant: Variant,
) -> Result<(ClassifierConfig, crate::models::TrainConfig, Vec<Placement>, String)> {
    let mc = model_config(cfg, arch, ds)?;
    let mut tc = cfg.train.clone();
    tc.seed = derive_seed(cfg.seed, &format!("batch/{}/{arch}/{}", ds.name, variant.tag()));
    let mut placements = placements.to_vec();
    placements.sort();
    placements.dedup();
    let key = format!(
        "{}\n{mc:?}\n{tc:?}\n{:?}\n{placements:?}\n{variant:?}\n{}\n",
        ds.fingerprint(),
        cfg.frame,
        cfg.seed
    );
    let hash = hex::encode(&Sha256::digest(key.as_bytes())[..8]);
    let file = format!("{arch}-{}-{hash}.ckpt", variant.tag());
    Ok((mc, tc, placements, file))
}

/// Where [`train_model`] caches the checkpoint for these inputs.
pub fn checkpoint_path(
    cfg: &ExperimentConfig,
    ds: &Dataset,
    arch: Arch,
    placements: &[Placement],
    variant: Variant,
) -> Result<PathBuf> {
    let (.., file) = training_setup(cfg, ds, arch, placements, variant)?;
    Ok(checkpoint_dir(cfg).join(&ds.name).join(file))
}

/// Trains one classifier, or loads it from `cache_dir` when a checkpoint
/// with the same inputs already exists. Returns the checkpoint and whether
/// it came from the cache.
pub fn train_model(
    cfg: &ExperimentConfig,
    ds: &Dataset,
    arch: Arch,
    placements: &[Placement],
    variant: Variant,
    cache_dir: Option<&Path>,
) -> Result<(Checkpoint, bool)> {
    let (mc, tc, placements, file) = training_setup(cfg, ds, arch, placements, variant)?;
    let path = cache_dir.map(|d| d.join(&ds.name).join(file));
    if let Some(p) = path.as_ref().filter(|p| p.exists()) {
        return Ok((Checkpoint::load(p)?, true));
    }
    let frames = training_frames(cfg, ds, &placements, variant)?;
    let ck = train(Classifier::build(mc)?, &frames, &tc, &ds.fingerprint())?;
    if let Some(p) = path {
        ck.save(p)?;
    }
    Ok((ck, false))
}

/// Writes each prepared dataset in canonical form under `<out>/data` and
/// the padded frames of its first `frames_per_dataset` test windows under
/// `<out>/frames`. Returns the written paths.
pub fn ingest(cfg: &ExperimentConfig, frames_per_dataset: usize) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    let frame_dir = cfg.output_dir.join("frames");
    for src in &cfg.datasets {
        let ds = prepare_dataset(src, cfg.seed)?;
        cfg.frame.validate(ds.window_len())?;
        written.extend(ds.write_canonical(cfg.output_dir.join("data"))?);
        std::fs::create_dir_all(&frame_dir).map_err(|e| Error::io(&frame_dir, e))?;
        for w in test_windows(&ds, cfg).iter().take(frames_per_dataset) {
            for &p in &cfg.placements {
                let f = pad_window(w, &cfg.frame, p, frame_seed(cfg.seed, &ds.name, w.window_id, p))?;
                let path = frame_dir.join(format!("{}_{}_{p}.txt", ds.name, w.window_id));
                std::fs::write(&path, f.to_text()).map_err(|e| Error::io(&path, e))?;
                written.push(path);
            }
        }
    }
    Ok(written)
}

/// Directory holding cached checkpoints.
pub fn checkpoint_dir(cfg: &ExperimentConfig) -> PathBuf {
    cfg.output_dir.join("checkpoints")
}

fn at(ds: &str, model: Arch, e: Error) -> Error {
    match e {
        e @ Error::At { .. } => e,
        e => Error::At {
            dataset: ds.to_string(),
            model: model.to_string(),
            explainer: "-".into(),
            window: "-".into(),
            source: Box::new(e),
        },
    }
}

/// Which parts of the matrix to execute.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Studies {
    pub consistency: bool,
    pub robustness: bool,
}

/// Runs the audits selected by `studies` for every dataset, model and
/// explainer. Records are appended to `records` as they complete so that a
/// failure leaves the finished part available.
pub fn evaluate(
    cfg: &ExperimentConfig,
    studies: Studies,
    records: &mut Vec<EvaluationRecord>,
    progress: &mut dyn FnMut(&str),
) -> Result<()> {
    let cache = checkpoint_dir(cfg);
    for src in &cfg.datasets {
        let ds = prepare_dataset(src, cfg.seed)?;
        let tests = test_windows(&ds, cfg);
        if tests.is_empty() {
            return Err(Error::EmptyDataset(format!("{} has no test windows", ds.name)));
        }
        progress(&format!(
            "dataset {}: {} train / {} test windows of length {}",
            ds.name,
            ds.train.len(),
            tests.len(),
            ds.window_len()
        ));
        let ctx = AuditContext {
            dataset: ds.name.clone(),
            master_seed: cfg.seed,
            frame: cfg.frame,
            k: cfg.k,
            target: cfg.attribution.target,
            batch_size: cfg.fp_batch,
        };
        if studies.consistency {
            for &arch in &cfg.models {
                let (ck, cached) = train_model(cfg, &ds, arch, &cfg.placements, Variant::Plain, Some(&cache)).map_err(|e| at(&ds.name, arch, e))?;
                report_training(progress, &ds.name, arch, Variant::Plain, &ck, cached);
                let reference = training_frames(cfg, &ds, &cfg.placements, Variant::Plain)?;
                for &kind in &cfg.explainers {
                    let explainer = cfg.attribution.explainer(kind, &reference)?;
                    let t = Instant::now();
                    let rs = consistency_eval(ck.model(), &tests, explainer.as_ref(), &cfg.placements, &ctx)?;
                    progress(&format!("  consistency {arch}/{kind}: {} records ({:.1?})", rs.len(), t.elapsed()));
                    records.extend(rs);
                }
            }
        }
        if studies.robustness {
            let swap = swap_for(cfg, &ds.name)?;
            for &arch in &cfg.models {
                let (plain, c1) = train_model(cfg, &ds, arch, &cfg.robustness_placements, Variant::Plain, Some(&cache)).map_err(|e| at(&ds.name, arch, e))?;
                report_training(progress, &ds.name, arch, Variant::Plain, &plain, c1);
                let (swapped, c2) = train_model(cfg, &ds, arch, &cfg.robustness_placements, Variant::Swapped(swap), Some(&cache))
                    .map_err(|e| at(&ds.name, arch, e))?;
                report_training(progress, &ds.name, arch, Variant::Swapped(swap), &swapped, c2);
                let reference = training_frames(cfg, &ds, &cfg.robustness_placements, Variant::Plain)?;
                for &kind in &cfg.explainers {
                    let explainer = cfg.attribution.explainer(kind, &reference)?;
                    for &p in &cfg.robustness_placements {
                        let t = Instant::now();
                        let rs = robustness_eval(plain.model(), swapped.model(), &tests, swap, explainer.as_ref(), p, &ctx)?;
                        progress(&format!("  robustness {arch}/{kind}@{p}: {} records ({:.1?})", rs.len(), t.elapsed()));
                        records.extend(rs);
                    }
                }
            }
        }
    }
    Ok(())
}

fn report_training(progress: &mut dyn FnMut(&str), ds: &str, arch: Arch, v: Variant, ck: &Checkpoint, cached: bool) {
    let h = ck.history();
    let last = h.last().expect("history starts at epoch 0");
    progress(&format!(
        "  {ds}/{arch}/{}: {} after {} epochs, train loss {:.4} -> {:.4}, accuracy {:.3}",
        v.tag(),
        if cached { "cached" } else { "trained" },
        last.epoch,
        h[0].loss,
        last.loss,
        last.accuracy
    ));
}

/// Result of a pipeline invocation.
#[derive(Clone, Debug)]
pub struct RunOutput {
    pub records: Vec<EvaluationRecord>,
    pub records_path: PathBuf,
    pub tables: Vec<PathBuf>,
    pub manifest: PathBuf,
}

/// Runs the selected studies and writes records, tables and a manifest
/// into the output directory. On failure the records finished so far and
/// a manifest describing the error are still written.
pub fn run_studies(
    cfg: &ExperimentConfig,
    studies: Studies,
    format: ReportFormat,
    progress: &mut dyn FnMut(&str),
) -> Result<RunOutput> {
    let out = &cfg.output_dir;
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let start = Instant::now();
    let mut records = Vec::new();
    let result = evaluate(cfg, studies, &mut records, progress);
    let records_path = out.join("records.csv");
    save_records(&records_path, &records)?;
    let manifest = out.join("manifest.txt");
    let status = match &result {
        Ok(()) => "ok".to_string(),
        Err(e) => format!("failed: {e}"),
    };
    write_manifest(&manifest, cfg, studies, &status, records.len(), start.elapsed().as_secs_f64())?;
    result?;
    let tables = write_tables(&records, out.join("reports"), format)?;
    Ok(RunOutput {
        records,
        records_path,
        tables,
        manifest,
    })
}

/// The full matrix as enabled by `eval.consistency` and `eval.robustness`.
pub fn run(cfg: &ExperimentConfig, format: ReportFormat, progress: &mut dyn FnMut(&str)) -> Result<RunOutput> {
    let studies = Studies {
        consistency: cfg.consistency,
        robustness: cfg.robustness,
    };
    run_studies(cfg, studies, format, progress)
}

fn write_manifest(path: &Path, cfg: &ExperimentConfig, studies: Studies, status: &str, records: usize, seconds: f64) -> Result<()> {
    let mut s = String::new();
    let now = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let _ = writeln!(s, "# run manifest");
    let _ = writeln!(s, "status: {status}");
    let _ = writeln!(s, "version: {} {}", env!("CARGO_PKG_NAME"), env!("CARGO_PKG_VERSION"));
    let _ = writeln!(s, "finished_unix: {now}");
    let _ = writeln!(s, "wall_clock_seconds: {seconds:.3}");
    let _ = writeln!(s, "studies: consistency={} robustness={}", studies.consistency, studies.robustness);
    let _ = writeln!(s, "records: {records}");
    let _ = writeln!(s, "config_hash: {}", cfg.hash());
    let _ = writeln!(s, "master_seed: {}", cfg.seed);
    for d in &cfg.datasets {
        let n = d.name();
        let _ = writeln!(s, "seed split/{n}: {}", derive_seed(cfg.seed, &format!("split/{n}")));
        if studies.robustness {
            if let Ok(sw) = swap_for(cfg, n) {
                let (i, j) = sw.rows();
                let _ = writeln!(s, "swap {n}: {i}-{j}");
            }
        }
        for arch in &cfg.models {
            let _ = writeln!(s, "seed init/{n}/{arch}: {}", derive_seed(cfg.seed, &format!("init/{n}/{arch}")));
        }
    }
    let _ = writeln!(s, "\n# configuration");
    s.push_str(&cfg.echo());
    std::fs::write(path, s).map_err(|e| Error::io(path, e))
}

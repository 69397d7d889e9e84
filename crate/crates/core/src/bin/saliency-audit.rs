//! Command-line front end. Every subcommand reads the same configuration
//! file; `--seed` and `--out` override its `seed` and `output_dir`.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use saliency_audit::attribution::{resolve_targets, ExplainerKind, SaliencyMap};
use saliency_audit::evaluation::load_records;
use saliency_audit::framing::PaddedFrame;
use saliency_audit::models::{accuracy, Checkpoint};
use saliency_audit::pipeline::{
    checkpoint_dir, checkpoint_path, ingest, map_summary, prepare_dataset, run, run_studies, test_windows, train_model,
    training_frames, write_tables, ExperimentConfig, RawConfig, ReportFormat, Studies, Variant,
};
use saliency_audit::seed::derive_seed;
use saliency_audit::{Error, Result};

#[derive(Parser)]
#[command(name = "saliency-audit", version, about = "Train time-series classifiers, explain them and audit the saliency maps")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment configuration (key = value lines). Defaults apply without it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed, overriding the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory, overriding the configuration.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Table format: csv or md.
    #[arg(long, global = true, default_value = "csv")]
    format: ReportFormat,
    /// Suppress progress messages.
    #[arg(long, short, global = true)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Load, split and normalize the datasets; write them and sample frames.
    Ingest {
        /// Test windows per dataset whose padded frames are written.
        #[arg(long, default_value_t = 3)]
        frames: usize,
    },
    /// Train (or load cached) classifiers for every dataset and model.
    Train,
    /// Explain frames with a trained classifier.
    Explain {
        #[arg(long)]
        checkpoint: PathBuf,
        /// Frame file as written by `ingest`; repeat for a batch.
        #[arg(long, required = true)]
        frame: Vec<PathBuf>,
        #[arg(long)]
        explainer: ExplainerKind,
    },
    /// Consistency audit across placements.
    EvalConsistency,
    /// Robustness audit against feature-swapped twins.
    EvalRobustness,
    /// Summarize a records file or a saved saliency map.
    Report {
        #[arg(long, conflicts_with = "from_map", required_unless_present = "from_map")]
        records: Option<PathBuf>,
        #[arg(long)]
        from_map: Option<PathBuf>,
    },
    /// Full matrix: training, both audits and tables.
    Run,
}

fn load_config(c: &Common) -> Result<ExperimentConfig> {
    let mut raw = match &c.config {
        Some(p) => RawConfig::load(p)?,
        None => RawConfig::default(),
    };
    raw.apply_env(std::env::vars());
    if let Some(s) = c.seed {
        raw.set("seed", s.to_string());
    }
    if let Some(o) = &c.out {
        raw.set("output_dir", o.display().to_string());
    }
    ExperimentConfig::from_raw(&raw)
}

fn execute(cli: Cli) -> Result<()> {
    let quiet = cli.common.quiet;
    let mut progress = |m: &str| {
        if !quiet {
            eprintln!("{m}");
        }
    };
    let format = cli.common.format;
    match cli.command {
        Command::Ingest { frames } => {
            let cfg = load_config(&cli.common)?;
            for p in ingest(&cfg, frames)? {
                println!("{}", p.display());
            }
        }
        Command::Train => {
            let cfg = load_config(&cli.common)?;
            let cache = checkpoint_dir(&cfg);
            for src in &cfg.datasets {
                let ds = prepare_dataset(src, cfg.seed)?;
                let tests = test_windows(&ds, &cfg);
                let mut test_frames = Vec::new();
                for w in &tests {
                    for &p in &cfg.placements {
                        let seed = saliency_audit::framing::frame_seed(cfg.seed, &ds.name, w.window_id, p);
                        test_frames.push(saliency_audit::framing::pad_window(w, &cfg.frame, p, seed)?);
                    }
                }
                for &arch in &cfg.models {
                    progress(&format!("training {}/{arch}", ds.name));
                    let (ck, cached) = train_model(&cfg, &ds, arch, &cfg.placements, Variant::Plain, Some(&cache))?;
                    let path = checkpoint_path(&cfg, &ds, arch, &cfg.placements, Variant::Plain)?;
                    let train_frames = training_frames(&cfg, &ds, &cfg.placements, Variant::Plain)?;
                    println!(
                        "{}\t{arch}\ttrain_acc={:.3}\ttest_acc={:.3}\tepochs={}\t{}{}",
                        ds.name,
                        accuracy(ck.model(), &train_frames)?,
                        accuracy(ck.model(), &test_frames)?,
                        ck.history().len() - 1,
                        path.display(),
                        if cached { "\t(cached)" } else { "" }
                    );
                }
            }
        }
        Command::Explain { checkpoint, frame, explainer } => {
            let cfg = load_config(&cli.common)?;
            let ck = Checkpoint::load(&checkpoint)?;
            let frames = frame
                .iter()
                .map(|p| {
                    let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
                    PaddedFrame::from_text(&text)
                })
                .collect::<Result<Vec<_>>>()?;
            let ex = cfg.attribution.explainer(explainer, &frames)?;
            let targets = resolve_targets(ck.model(), &frames, cfg.attribution.target)?;
            let seed = derive_seed(cfg.seed, &format!("explain/cli/{explainer}/{}", frames[0].source_window_id));
            let maps = ex.explain(ck.model(), &frames, &targets, seed)?;
            let dir = cfg.output_dir.join("maps");
            for (m, path) in maps.iter().zip(&frame) {
                let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("frame");
                let out = dir.join(format!("{stem}_{explainer}.txt"));
                m.save(&out)?;
                println!("{}", out.display());
                if !quiet {
                    eprint!("{}", m.heatmap());
                }
            }
        }
        Command::EvalConsistency | Command::EvalRobustness | Command::Run => {
            let cfg = load_config(&cli.common)?;
            let out = match cli.command {
                Command::Run => run(&cfg, format, &mut progress)?,
                Command::EvalConsistency => run_studies(&cfg, Studies { consistency: true, robustness: false }, format, &mut progress)?,
                _ => run_studies(&cfg, Studies { consistency: false, robustness: true }, format, &mut progress)?,
            };
            println!("{}", out.records_path.display());
            for t in &out.tables {
                println!("{}", t.display());
            }
            println!("{}", out.manifest.display());
        }
        Command::Report { records, from_map } => {
            if let Some(p) = from_map {
                let m = SaliencyMap::load(&p)?;
                print!("{}", map_summary(&m));
                if !quiet {
                    eprint!("{}", m.heatmap());
                }
            } else if let Some(p) = records {
                let cfg = load_config(&cli.common)?;
                let rs = load_records(&p)?;
                for t in write_tables(&rs, cfg.output_dir.join("reports"), format)? {
                    println!("{}", t.display());
                }
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

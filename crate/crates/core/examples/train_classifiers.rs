//! Train the three classifier families on a synthetic dataset and report
//! train and test accuracy.
//!
//! cargo run --example train_classifiers -- [epochs]

use std::time::Instant;

use saliency_audit::data::{synthesize, SyntheticSpec};
use saliency_audit::framing::{frame_seed, pad_window, FrameSpec, Placement};
use saliency_audit::models::{accuracy, train, Arch, Classifier, ClassifierConfig, TrainConfig};

fn main() -> saliency_audit::Result<()> {
    let epochs = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(10);
    let ds = synthesize(&SyntheticSpec::default())?.split(0.7, 1)?.normalize()?;
    let spec = FrameSpec::default();
    let frames = |windows: &[saliency_audit::data::LabeledWindow]| -> saliency_audit::Result<Vec<_>> {
        let mut out = Vec::new();
        for w in windows {
            for p in Placement::ALL {
                out.push(pad_window(w, &spec, p, frame_seed(0, &ds.name, w.window_id, p))?);
            }
        }
        Ok(out)
    };
    let train_frames = frames(&ds.train)?;
    let test_frames = frames(&ds.test)?;
    let (alpha, len) = train_frames[0].shape();
    println!("{} train frames, {} test frames, {alpha}x{len}", train_frames.len(), test_frames.len());

    for arch in Arch::ALL {
        let start = Instant::now();
        let model = Classifier::build(ClassifierConfig::new(arch, alpha, len, ds.num_classes, 7))?;
        let cfg = TrainConfig { epochs, ..TrainConfig::default() };
        let ck = train(model, &train_frames, &cfg, &ds.fingerprint())?;
        let last = ck.history().last().expect("history has epoch 0");
        println!(
            "{arch:>13}: {} epochs, train loss {:.4}, test accuracy {:.3} ({:.1?})",
            last.epoch,
            last.loss,
            accuracy(ck.model(), &test_frames)?,
            start.elapsed()
        );
    }
    Ok(())
}

//! Saliency maps for padded frames.
//!
//! Three explainers are provided: integrated gradients ([`IntegratedGradients`]),
//! per-cell ablation ([`FeatureAblation`]) and cross-batch permutation
//! ([`FeaturePermutation`]). All of them score the target class through a
//! [`ScoreModel`], by default on the pre-softmax score, and return one
//! [`SaliencyMap`] per frame aligned cell-for-cell with it.

mod ablation;
mod gradients;
mod map;
mod permutation;

use std::fmt;
use std::str::FromStr;

pub use ablation::FeatureAblation;
pub use gradients::IntegratedGradients;
pub use map::SaliencyMap;
pub use permutation::FeaturePermutation;

use crate::autodiff::{softmax, ScoreKind};
use crate::error::{Error, Result};
use crate::framing::PaddedFrame;
use crate::models::{argmax, batch_logits, ScoreModel};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ExplainerKind {
    FP,
    FA,
    IG,
}

impl ExplainerKind {
    pub const ALL: [ExplainerKind; 3] = [ExplainerKind::FP, ExplainerKind::FA, ExplainerKind::IG];

    pub fn name(self) -> &'static str {
        match self {
            ExplainerKind::FP => "FP",
            ExplainerKind::FA => "FA",
            ExplainerKind::IG => "IG",
        }
    }
}

impl fmt::Display for ExplainerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExplainerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "FP" => Ok(ExplainerKind::FP),
            "FA" => Ok(ExplainerKind::FA),
            "IG" => Ok(ExplainerKind::IG),
            _ => Err(Error::config(format!("unknown explainer {s:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum IgBaseline {
    #[default]
    Zeros,
    /// Per-cell mean of a set of reference frames.
    DatasetMean,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum FaBaseline {
    #[default]
    Zeros,
    /// A fresh standard normal draw, matching the padding distribution.
    NoiseResample,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Granularity {
    #[default]
    PerCell,
    /// One ablation per feature row, shared evenly among the row's cells.
    PerFeatureRow,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum TargetPolicy {
    #[default]
    Predicted,
    Label,
}

macro_rules! keyword_enum {
    ($ty:ty, $($text:literal => $val:expr),+ $(,)?) => {
        impl FromStr for $ty {
            type Err = Error;
            fn from_str(s: &str) -> Result<Self> {
                match s.trim() {
                    $($text => Ok($val),)+
                    other => Err(Error::config(format!(concat!("unknown ", stringify!($ty), " {:?}"), other))),
                }
            }
        }
        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                $(if *self == $val { return f.write_str($text); })+
                unreachable!()
            }
        }
    };
}

keyword_enum!(IgBaseline, "zeros" => IgBaseline::Zeros, "dataset-mean" => IgBaseline::DatasetMean);
keyword_enum!(FaBaseline, "zeros" => FaBaseline::Zeros, "noise-resample" => FaBaseline::NoiseResample);
keyword_enum!(Granularity, "per_cell" => Granularity::PerCell, "per_feature_row" => Granularity::PerFeatureRow);
keyword_enum!(TargetPolicy, "predicted" => TargetPolicy::Predicted, "label" => TargetPolicy::Label);
keyword_enum!(ScoreKind, "logit" => ScoreKind::Logit, "probability" => ScoreKind::Probability);

#[derive(Clone, Debug, PartialEq)]
pub struct AttributionConfig {
    pub ig_steps: usize,
    pub ig_baseline: IgBaseline,
    pub fa_baseline: FaBaseline,
    pub fp_repetitions: usize,
    pub granularity: Granularity,
    pub target: TargetPolicy,
    pub score: ScoreKind,
}

impl Default for AttributionConfig {
    fn default() -> Self {
        Self {
            ig_steps: 50,
            ig_baseline: IgBaseline::Zeros,
            fa_baseline: FaBaseline::Zeros,
            fp_repetitions: 10,
            granularity: Granularity::PerCell,
            target: TargetPolicy::Predicted,
            score: ScoreKind::Logit,
        }
    }
}

impl AttributionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.ig_steps < 2 {
            return Err(Error::config(format!("ig_steps = {} < 2", self.ig_steps)));
        }
        if self.fp_repetitions < 1 {
            return Err(Error::config("fp_repetitions must be at least 1"));
        }
        Ok(())
    }

    /// Builds an explainer; `reference` frames supply the dataset-mean IG
    /// baseline when that baseline is selected.
    pub fn explainer(&self, kind: ExplainerKind, reference: &[PaddedFrame]) -> Result<Box<dyn Explainer>> {
        self.validate()?;
        Ok(match kind {
            ExplainerKind::IG => {
                let mut ig = IntegratedGradients::new(self.ig_steps)?.with_score(self.score);
                if self.ig_baseline == IgBaseline::DatasetMean {
                    ig = ig.with_baseline(mean_frame(reference)?);
                }
                Box::new(ig)
            }
            ExplainerKind::FA => Box::new(FeatureAblation {
                baseline: self.fa_baseline,
                granularity: self.granularity,
                score: self.score,
            }),
            ExplainerKind::FP => Box::new(FeaturePermutation::new(self.fp_repetitions)?.with_score(self.score)),
        })
    }
}

/// Per-cell mean of equally shaped frames.
pub fn mean_frame(frames: &[PaddedFrame]) -> Result<Vec<f64>> {
    let first = frames
        .first()
        .ok_or_else(|| Error::EmptyDataset("no reference frames for a mean baseline".into()))?;
    let mut mean = vec![0.0; first.data.len()];
    for f in frames {
        if f.data.len() != mean.len() {
            return Err(Error::dim("reference frames differ in shape"));
        }
        for (m, v) in mean.iter_mut().zip(&f.data) {
            *m += v;
        }
    }
    let n = frames.len() as f64;
    mean.iter_mut().for_each(|m| *m /= n);
    Ok(mean)
}

/// Produces saliency maps for a batch of frames.
pub trait Explainer: Sync {
    fn name(&self) -> &str;

    /// `targets[i]` is the class explained for `frames[i]`; `seed` drives any
    /// randomness so that equal inputs give equal maps.
    fn explain(&self, model: &dyn ScoreModel, frames: &[PaddedFrame], targets: &[usize], seed: u64) -> Result<Vec<SaliencyMap>>;
}

/// Class to explain for each frame.
pub fn resolve_targets(model: &dyn ScoreModel, frames: &[PaddedFrame], policy: TargetPolicy) -> Result<Vec<usize>> {
    match policy {
        TargetPolicy::Label => Ok(frames.iter().map(|f| f.label).collect()),
        TargetPolicy::Predicted => {
            let refs: Vec<&[f64]> = frames.iter().map(|f| f.data.as_slice()).collect();
            Ok(batch_logits(model, &refs)?.iter().map(|z| argmax(z)).collect())
        }
    }
}

pub(crate) fn check_batch(model: &dyn ScoreModel, frames: &[PaddedFrame], targets: &[usize]) -> Result<()> {
    if frames.len() != targets.len() {
        return Err(Error::dim(format!("{} frames with {} targets", frames.len(), targets.len())));
    }
    let shape = model.frame_shape();
    for f in frames {
        if f.shape() != shape {
            return Err(Error::dim(format!("frame {:?} does not fit model {:?}", f.shape(), shape)));
        }
    }
    if let Some(&t) = targets.iter().find(|&&t| t >= model.num_classes()) {
        return Err(Error::Index(format!("target class {t} of {}", model.num_classes())));
    }
    Ok(())
}

/// Target scores of flattened input rows; `rows` holds whole frames
/// back to back and `targets` one class per frame.
pub(crate) fn row_scores(model: &dyn ScoreModel, rows: &[f64], targets: &[usize], kind: ScoreKind) -> Result<Vec<f64>> {
    let cells = rows.len() / targets.len().max(1);
    let refs: Vec<&[f64]> = rows.chunks(cells.max(1)).collect();
    let logits = batch_logits(model, &refs)?;
    Ok(logits
        .iter()
        .zip(targets)
        .map(|(z, &t)| match kind {
            ScoreKind::Logit => z[t],
            ScoreKind::Probability => softmax(z)[t],
        })
        .collect())
}

#[cfg(test)]
mod tests;

use rand_distr::{Distribution, StandardNormal};

use super::{check_batch, row_scores, Explainer, FaBaseline, Granularity, SaliencyMap};
use crate::autodiff::ScoreKind;
use crate::error::Result;
use crate::framing::PaddedFrame;
use crate::models::ScoreModel;
use crate::seed::{derive_seed, rng_from};

/// Score drop when a cell, or a whole feature row, is replaced by a
/// baseline value.
///
/// With [`Granularity::PerFeatureRow`] the drop for row `n` is divided
/// evenly over its `T` cells, so each row of the map sums to that row's
/// ablation drop.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct FeatureAblation {
    pub baseline: FaBaseline,
    pub granularity: Granularity,
    pub score: ScoreKind,
}

impl FeatureAblation {
    fn attribute(&self, model: &dyn ScoreModel, frame: &PaddedFrame, target: usize, seed: u64) -> Result<Vec<f64>> {
        let (alpha, len) = frame.shape();
        let x = &frame.data;
        let cells = x.len();
        let replacement: Vec<f64> = match self.baseline {
            FaBaseline::Zeros => vec![0.0; cells],
            FaBaseline::NoiseResample => {
                let purpose = format!("ablate/{}/{}", frame.source_window_id, frame.placement);
                let mut rng = rng_from(derive_seed(seed, &purpose));
                (0..cells).map(|_| StandardNormal.sample(&mut rng)).collect()
            }
        };
        let groups: Vec<std::ops::Range<usize>> = match self.granularity {
            Granularity::PerCell => (0..cells).map(|c| c..c + 1).collect(),
            Granularity::PerFeatureRow => (0..alpha).map(|n| n * len..(n + 1) * len).collect(),
        };
        let mut rows = Vec::with_capacity((groups.len() + 1) * cells);
        rows.extend_from_slice(x);
        for g in &groups {
            let start = rows.len();
            rows.extend_from_slice(x);
            rows[start + g.start..start + g.end].copy_from_slice(&replacement[g.clone()]);
        }
        let scores = row_scores(model, &rows, &vec![target; groups.len() + 1], self.score)?;
        let full = scores[0];
        let mut out = vec![0.0; cells];
        for (g, s) in groups.iter().zip(&scores[1..]) {
            let share = (full - s) / g.len() as f64;
            out[g.clone()].iter_mut().for_each(|o| *o = share);
        }
        Ok(out)
    }
}

impl Explainer for FeatureAblation {
    fn name(&self) -> &str {
        "FA"
    }

    fn explain(&self, model: &dyn ScoreModel, frames: &[PaddedFrame], targets: &[usize], seed: u64) -> Result<Vec<SaliencyMap>> {
        check_batch(model, frames, targets)?;
        frames
            .iter()
            .zip(targets)
            .map(|(f, &t)| SaliencyMap::new(self.attribute(model, f, t, seed)?, f, "FA", t, seed))
            .collect()
    }
}

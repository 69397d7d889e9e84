use rand::seq::SliceRandom;

use super::{check_batch, row_scores, Explainer, SaliencyMap};
use crate::autodiff::ScoreKind;
use crate::error::{Error, Result};
use crate::framing::PaddedFrame;
use crate::models::ScoreModel;
use crate::seed::rng_from;

/// Mean score drop when one cell's values are shuffled across the batch.
///
/// For every cell `(n, t)` and each repetition, the batch's values at that
/// cell are permuted (a uniform shuffle, redrawn whenever it comes out as
/// the identity) while every other cell stays put. A frame's attribution
/// at `(n, t)` is its average of `original score - permuted score`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FeaturePermutation {
    pub repetitions: usize,
    pub score: ScoreKind,
}

impl FeaturePermutation {
    pub fn new(repetitions: usize) -> Result<Self> {
        if repetitions == 0 {
            return Err(Error::config("feature permutation needs at least one repetition"));
        }
        Ok(Self {
            repetitions,
            score: ScoreKind::Logit,
        })
    }

    pub fn with_score(mut self, score: ScoreKind) -> Self {
        self.score = score;
        self
    }
}

impl Explainer for FeaturePermutation {
    fn name(&self) -> &str {
        "FP"
    }

    fn explain(&self, model: &dyn ScoreModel, frames: &[PaddedFrame], targets: &[usize], seed: u64) -> Result<Vec<SaliencyMap>> {
        check_batch(model, frames, targets)?;
        let b = frames.len();
        if b < 2 {
            return Err(Error::config("feature permutation needs a batch of at least two frames"));
        }
        let cells = frames[0].data.len();
        let flat: Vec<f64> = frames.iter().flat_map(|f| f.data.iter().copied()).collect();
        let base = row_scores(model, &flat, targets, self.score)?;

        let reps = self.repetitions;
        let mut rng = rng_from(seed);
        let mut perm: Vec<usize> = (0..b).collect();
        let mut rows = Vec::with_capacity(reps * b * cells);
        let mut row_targets = Vec::with_capacity(reps * b);
        let mut out = vec![vec![0.0; cells]; b];
        for c in 0..cells {
            rows.clear();
            row_targets.clear();
            for _ in 0..reps {
                loop {
                    perm.shuffle(&mut rng);
                    if perm.iter().enumerate().any(|(i, &p)| i != p) {
                        break;
                    }
                }
                for (i, &p) in perm.iter().enumerate() {
                    let start = rows.len();
                    rows.extend_from_slice(&flat[i * cells..(i + 1) * cells]);
                    rows[start + c] = flat[p * cells + c];
                }
                row_targets.extend_from_slice(targets);
            }
            let scores = row_scores(model, &rows, &row_targets, self.score)?;
            for (r, s) in scores.iter().enumerate() {
                let i = r % b;
                out[i][c] += (base[i] - s) / reps as f64;
            }
        }
        frames
            .iter()
            .zip(targets)
            .zip(out)
            .map(|((f, &t), v)| SaliencyMap::new(v, f, "FP", t, seed))
            .collect()
    }
}

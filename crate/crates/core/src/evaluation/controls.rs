use rand_distr::{Distribution, StandardNormal};

use crate::attribution::{Explainer, SaliencyMap};
use crate::error::Result;
use crate::framing::PaddedFrame;
use crate::models::ScoreModel;
use crate::seed::{derive_seed, rng_from};

/// Reference explainer whose attribution is the magnitude of each cell,
/// optionally negated. It ignores the model, so any two frames holding
/// the same values at matched cells get identical rankings there.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct OracleExplainer {
    pub negate: bool,
}

impl Explainer for OracleExplainer {
    fn name(&self) -> &str {
        if self.negate {
            "neg-oracle"
        } else {
            "oracle"
        }
    }

    fn explain(&self, _model: &dyn ScoreModel, frames: &[PaddedFrame], targets: &[usize], seed: u64) -> Result<Vec<SaliencyMap>> {
        let sign = if self.negate { -1.0 } else { 1.0 };
        frames
            .iter()
            .zip(targets)
            .map(|(f, &t)| SaliencyMap::new(f.data.iter().map(|v| sign * v.abs()).collect(), f, self.name(), t, seed))
            .collect()
    }
}

/// Null explainer: independent standard normal values, seeded by the frame
/// identity and the call seed, never by the frame's content.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct NoiseExplainer;

impl Explainer for NoiseExplainer {
    fn name(&self) -> &str {
        "noise"
    }

    fn explain(&self, _model: &dyn ScoreModel, frames: &[PaddedFrame], targets: &[usize], seed: u64) -> Result<Vec<SaliencyMap>> {
        frames
            .iter()
            .zip(targets)
            .map(|(f, &t)| {
                let mut rng = rng_from(derive_seed(seed, &format!("noise/{}/{}", f.source_window_id, f.placement)));
                let v = (0..f.data.len()).map(|_| StandardNormal.sample(&mut rng)).collect();
                SaliencyMap::new(v, f, "noise", t, seed)
            })
            .collect()
    }
}

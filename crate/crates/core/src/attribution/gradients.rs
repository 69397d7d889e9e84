use super::{check_batch, Explainer, SaliencyMap};
use crate::autodiff::{input_gradient_rows, ScoreKind, Tensor};
use crate::error::{Error, Result};
use crate::framing::PaddedFrame;
use crate::models::ScoreModel;

/// Path points evaluated per forward pass.
const CHUNK_ROWS: usize = 32;

/// Integrated gradients along the straight path from a baseline `b` to the
/// input `x`:
///
/// ```text
/// IG(x)_c = (x_c - b_c) · (1/K) · Σ_{k=1..K} ∂f(b + (k/K)(x - b)) / ∂x_c
/// ```
///
/// The sum samples the path at its right end points `k/K`, so the input
/// itself is always included and `x == b` yields an all-zero map.
#[derive(Clone, Debug, PartialEq)]
pub struct IntegratedGradients {
    pub steps: usize,
    /// All-zeros when `None`.
    pub baseline: Option<Vec<f64>>,
    pub score: ScoreKind,
}

impl IntegratedGradients {
    pub fn new(steps: usize) -> Result<Self> {
        if steps < 2 {
            return Err(Error::config(format!("integrated gradients needs at least 2 steps, got {steps}")));
        }
        Ok(Self {
            steps,
            baseline: None,
            score: ScoreKind::Logit,
        })
    }

    pub fn with_baseline(mut self, baseline: Vec<f64>) -> Self {
        self.baseline = Some(baseline);
        self
    }

    pub fn with_score(mut self, score: ScoreKind) -> Self {
        self.score = score;
        self
    }

    fn attribute(&self, model: &dyn ScoreModel, x: &[f64], target: usize) -> Result<Vec<f64>> {
        let cells = x.len();
        let zeros;
        let b = match &self.baseline {
            Some(b) if b.len() != cells => {
                return Err(Error::dim(format!("baseline has {} cells, frame has {cells}", b.len())));
            }
            Some(b) => b.as_slice(),
            None => {
                zeros = vec![0.0; cells];
                &zeros
            }
        };
        let k_total = self.steps;
        let mut grad_sum = vec![0.0; cells];
        let mut k = 1;
        while k <= k_total {
            let rows = CHUNK_ROWS.min(k_total - k + 1);
            let mut data = Vec::with_capacity(rows * cells);
            for j in 0..rows {
                let a = (k + j) as f64 / k_total as f64;
                data.extend(b.iter().zip(x).map(|(bi, xi)| bi + a * (xi - bi)));
            }
            let input = Tensor::new(&[rows, cells], data)?;
            let g = input_gradient_rows(|tape, v| model.logits(tape, v), &input, &vec![target; rows], self.score)?;
            for row in g.data().chunks(cells) {
                for (s, gi) in grad_sum.iter_mut().zip(row) {
                    *s += gi;
                }
            }
            k += rows;
        }
        Ok(grad_sum
            .iter()
            .zip(x.iter().zip(b))
            .map(|(g, (xi, bi))| (xi - bi) * g / k_total as f64)
            .collect())
    }
}

impl Explainer for IntegratedGradients {
    fn name(&self) -> &str {
        "IG"
    }

    fn explain(&self, model: &dyn ScoreModel, frames: &[PaddedFrame], targets: &[usize], seed: u64) -> Result<Vec<SaliencyMap>> {
        check_batch(model, frames, targets)?;
        frames
            .iter()
            .zip(targets)
            .map(|(f, &t)| SaliencyMap::new(self.attribute(model, &f.data, t)?, f, "IG", t, seed))
            .collect()
    }
}

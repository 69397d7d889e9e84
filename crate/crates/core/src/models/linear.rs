use super::{affine, ScoreModel};
use crate::autodiff::{Tape, Tensor, Var};
use crate::error::{Error, Result};

/// Fixed linear scorer `z_c = Σ w_c[n,t]·x[n,t] + b_c`.
///
/// Its input gradient is exactly `w_c`, which makes it a convenient
/// reference model for the explainers.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearScoreModel {
    alpha: usize,
    len: usize,
    weights: Tensor,
    bias: Tensor,
}

impl LinearScoreModel {
    /// `class_weights[c]` is a feature-major `α·T` weight frame for class `c`.
    pub fn new(alpha: usize, len: usize, class_weights: &[Vec<f64>], bias: &[f64]) -> Result<Self> {
        let c = class_weights.len();
        if c < 2 || bias.len() != c {
            return Err(Error::dim(format!("{c} weight frames with {} biases", bias.len())));
        }
        let cells = alpha * len;
        let mut w = vec![0.0; cells * c];
        for (k, frame) in class_weights.iter().enumerate() {
            if frame.len() != cells {
                return Err(Error::dim(format!("weight frame {k} has {} cells, expected {cells}", frame.len())));
            }
            for (i, &x) in frame.iter().enumerate() {
                w[i * c + k] = x;
            }
        }
        Ok(Self {
            alpha,
            len,
            weights: Tensor::new(&[cells, c], w)?,
            bias: Tensor::new(&[1, c], bias.to_vec())?,
        })
    }

    pub fn class_weight(&self, class: usize, feature: usize, time: usize) -> f64 {
        self.weights.at2(feature * self.len + time, class)
    }
}

impl ScoreModel for LinearScoreModel {
    fn num_classes(&self) -> usize {
        self.bias.len()
    }

    fn frame_shape(&self) -> (usize, usize) {
        (self.alpha, self.len)
    }

    fn logits(&self, tape: &mut Tape, input: Var) -> Result<Var> {
        let w = tape.constant(self.weights.clone());
        let b = tape.constant(self.bias.clone());
        affine(tape, input, w, b)
    }

    fn label(&self) -> String {
        "linear".into()
    }
}

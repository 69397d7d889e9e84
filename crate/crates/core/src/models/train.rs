//! Mini-batch Adam on softmax cross-entropy with early stopping.
//!
//! One epoch is a seeded shuffle of the training frames followed by one
//! update per batch. After every epoch the whole training set is scored
//! again; the parameters with the lowest full-set loss seen so far
//! (including before the first update) are the ones returned.

use rand::seq::SliceRandom;

use super::{argmax, batch_logits, Checkpoint, Classifier, ScoreModel};
use crate::autodiff::{Tape, Tensor, Var};
use crate::error::{Error, Result};
use crate::framing::PaddedFrame;
use crate::seed::{derive_seed, rng_from};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub adam: AdamConfig,
    /// Epochs without a new best loss before stopping; 0 disables.
    pub patience: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 100,
            batch_size: 32,
            learning_rate: 1e-3,
            adam: AdamConfig::default(),
            patience: 10,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::config("batch size must be positive"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::config(format!("learning rate {} must be positive", self.learning_rate)));
        }
        let a = self.adam;
        if !(0.0..1.0).contains(&a.beta1) || !(0.0..1.0).contains(&a.beta2) || a.epsilon <= 0.0 {
            return Err(Error::config("Adam needs betas in [0, 1) and a positive epsilon"));
        }
        Ok(())
    }
}

/// Full-training-set loss and accuracy; epoch 0 is the untrained model.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub loss: f64,
    pub accuracy: f64,
}

struct Adam {
    cfg: AdamConfig,
    lr: f64,
    step: i32,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl Adam {
    fn new(params: &[Tensor], lr: f64, cfg: AdamConfig) -> Self {
        let zeros: Vec<Vec<f64>> = params.iter().map(|p| vec![0.0; p.len()]).collect();
        Self {
            cfg,
            lr,
            step: 0,
            m: zeros.clone(),
            v: zeros,
        }
    }

    fn update(&mut self, params: &mut [Tensor], grads: &[Tensor]) {
        self.step += 1;
        let AdamConfig { beta1, beta2, epsilon } = self.cfg;
        let c1 = 1.0 - beta1.powi(self.step);
        let c2 = 1.0 - beta2.powi(self.step);
        for (k, (p, g)) in params.iter_mut().zip(grads).enumerate() {
            let (m, v) = (&mut self.m[k], &mut self.v[k]);
            for (i, (w, &gi)) in p.data_mut().iter_mut().zip(g.data()).enumerate() {
                m[i] = beta1 * m[i] + (1.0 - beta1) * gi;
                v[i] = beta2 * v[i] + (1.0 - beta2) * gi * gi;
                let mh = m[i] / c1;
                let vh = v[i] / c2;
                *w -= self.lr * mh / (vh.sqrt() + epsilon);
            }
        }
    }
}

fn evaluate(model: &Classifier, frames: &[PaddedFrame]) -> Result<(f64, f64)> {
    let refs: Vec<&[f64]> = frames.iter().map(|f| f.data.as_slice()).collect();
    let logits = batch_logits(model, &refs)?;
    let mut loss = 0.0;
    let mut correct = 0usize;
    for (z, f) in logits.iter().zip(frames) {
        let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = m + z.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
        loss += lse - z[f.label];
        if argmax(z) == f.label {
            correct += 1;
        }
    }
    let n = frames.len() as f64;
    Ok((loss / n, correct as f64 / n))
}

/// Fraction of frames whose predicted class equals their label.
pub fn accuracy(model: &dyn ScoreModel, frames: &[PaddedFrame]) -> Result<f64> {
    if frames.is_empty() {
        return Err(Error::EmptyDataset("no frames to score".into()));
    }
    let refs: Vec<&[f64]> = frames.iter().map(|f| f.data.as_slice()).collect();
    let logits = batch_logits(model, &refs)?;
    let correct = logits.iter().zip(frames).filter(|(z, f)| argmax(z) == f.label).count();
    Ok(correct as f64 / frames.len() as f64)
}

/// Trains `model` on `frames` and returns the best parameters seen.
pub fn train(mut model: Classifier, frames: &[PaddedFrame], cfg: &TrainConfig, fingerprint: &str) -> Result<Checkpoint> {
    cfg.validate()?;
    if frames.is_empty() {
        return Err(Error::EmptyDataset("no training frames".into()));
    }
    let mc = model.config().clone();
    for f in frames {
        if (f.alpha, f.len) != (mc.input_features, mc.seq_len) {
            return Err(Error::dim(format!(
                "frame {}x{} does not fit a {}x{} model",
                f.alpha, f.len, mc.input_features, mc.seq_len
            )));
        }
        if f.label >= mc.num_classes {
            return Err(Error::Index(format!("label {} with {} classes", f.label, mc.num_classes)));
        }
    }

    let (loss0, acc0) = evaluate(&model, frames)?;
    if !loss0.is_finite() {
        return Err(Error::Divergence { epoch: 0, loss: loss0 });
    }
    let mut history = vec![EpochRecord {
        epoch: 0,
        loss: loss0,
        accuracy: acc0,
    }];
    let mut best = (loss0, model.params().to_vec());
    let mut stale = 0;
    let mut adam = Adam::new(model.params(), cfg.learning_rate, cfg.adam);
    let mut rng = rng_from(derive_seed(cfg.seed, "batch-order"));
    let mut order: Vec<usize> = (0..frames.len()).collect();
    let cells = mc.frame_cells();
    let mut tape = Tape::new();

    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(cfg.batch_size) {
            let mut data = Vec::with_capacity(batch.len() * cells);
            let mut labels = Vec::with_capacity(batch.len());
            for &i in batch {
                data.extend_from_slice(&frames[i].data);
                labels.push(frames[i].label);
            }
            tape.clear();
            let vars: Vec<Var> = model.params().iter().map(|p| tape.var(p.clone())).collect();
            let x = tape.constant(Tensor::new(&[batch.len(), cells], data)?);
            let z = model.forward(&mut tape, x, &vars)?;
            let loss = tape.softmax_cross_entropy(z, &labels)?;
            let value = tape.value(loss).item()?;
            if !value.is_finite() {
                return Err(Error::Divergence { epoch, loss: value });
            }
            let mut g = tape.backward(loss)?;
            let grads: Vec<Tensor> = vars
                .iter()
                .map(|v| g.take(*v).ok_or_else(|| Error::Contract("missing parameter gradient".into())))
                .collect::<Result<_>>()?;
            adam.update(model.params_mut(), &grads);
        }
        let (loss, acc) = evaluate(&model, frames)?;
        if !loss.is_finite() {
            return Err(Error::Divergence { epoch, loss });
        }
        history.push(EpochRecord {
            epoch,
            loss,
            accuracy: acc,
        });
        if loss < best.0 {
            best = (loss, model.params().to_vec());
            stale = 0;
        } else {
            stale += 1;
            if cfg.patience > 0 && stale >= cfg.patience {
                break;
            }
        }
    }
    let model = Classifier::from_params(mc, best.1)?;
    Ok(Checkpoint::new(model, history, fingerprint.to_string()))
}

//! Small classifiers over padded frames.
//!
//! Every model reads a batch of frames as one `[B × α·T]` tensor whose rows
//! are feature-major flattened frames (the same layout as
//! [`PaddedFrame::data`]) and returns `[B × C]` pre-softmax class scores.
//! Samples never interact inside a batch, so row `b` of the output depends
//! only on row `b` of the input.

mod attention;
mod checkpoint;
mod linear;
mod recurrent;
mod temporal_conv;
mod train;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::Rng;

pub use checkpoint::Checkpoint;
pub use linear::LinearScoreModel;
pub use train::{accuracy, train, AdamConfig, EpochRecord, TrainConfig};

use crate::autodiff::{input_gradient, softmax, ScoreKind, Tape, Tensor, Var};
use crate::error::{Error, Result};
use crate::framing::PaddedFrame;
use crate::seed::rng_from;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Arch {
    Recurrent,
    TemporalConv,
    Attention,
}

impl Arch {
    pub const ALL: [Arch; 3] = [Arch::Recurrent, Arch::TemporalConv, Arch::Attention];

    pub fn name(self) -> &'static str {
        match self {
            Arch::Recurrent => "recurrent",
            Arch::TemporalConv => "temporal_conv",
            Arch::Attention => "attention",
        }
    }

    /// Desk-scale layer count: one recurrent layer, three dilated
    /// convolution blocks (dilations 1, 2, 4), one encoder block.
    pub fn default_layers(self) -> usize {
        match self {
            Arch::Recurrent => 1,
            Arch::TemporalConv => 3,
            Arch::Attention => 1,
        }
    }
}

impl fmt::Display for Arch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Arch {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "recurrent" | "lstm" => Ok(Arch::Recurrent),
            "temporal_conv" | "tcn" => Ok(Arch::TemporalConv),
            "attention" | "transformer" => Ok(Arch::Attention),
            other => Err(Error::config(format!("unsupported architecture {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClassifierConfig {
    pub arch: Arch,
    pub hidden_size: usize,
    pub num_layers: usize,
    pub num_classes: usize,
    /// Feature rows α of the input frames.
    pub input_features: usize,
    /// Time columns T of the input frames.
    pub seq_len: usize,
    pub seed: u64,
}

impl ClassifierConfig {
    pub fn new(arch: Arch, input_features: usize, seq_len: usize, num_classes: usize, seed: u64) -> Self {
        Self {
            arch,
            hidden_size: 32,
            num_layers: arch.default_layers(),
            num_classes,
            input_features,
            seq_len,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.hidden_size < 4 {
            return Err(Error::config(format!("hidden size {} < 4", self.hidden_size)));
        }
        if self.num_layers < 1 {
            return Err(Error::config("at least one layer is required"));
        }
        if self.num_classes < 2 {
            return Err(Error::config("at least two classes are required"));
        }
        if self.input_features < 1 || self.seq_len < 1 {
            return Err(Error::config("empty input frame"));
        }
        if self.arch == Arch::Attention && !self.hidden_size.is_multiple_of(attention::NUM_HEADS) {
            return Err(Error::config(format!(
                "attention width {} is not divisible by {} heads",
                self.hidden_size,
                attention::NUM_HEADS
            )));
        }
        Ok(())
    }

    pub fn frame_cells(&self) -> usize {
        self.input_features * self.seq_len
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) enum Init {
    Uniform(f64),
    Zeros,
}

#[derive(Clone, Debug, PartialEq)]
pub(crate) struct ParamSpec {
    pub name: String,
    pub shape: Vec<usize>,
    pub init: Init,
}

impl ParamSpec {
    pub fn new(name: impl Into<String>, shape: &[usize], init: Init) -> Self {
        Self {
            name: name.into(),
            shape: shape.to_vec(),
            init,
        }
    }

    /// Weight matrix with fan-in scaled uniform initialization.
    pub fn weight(name: impl Into<String>, rows: usize, cols: usize) -> Self {
        Self::new(name, &[rows, cols], Init::Uniform(1.0 / (rows as f64).sqrt()))
    }

    pub fn bias(name: impl Into<String>, cols: usize) -> Self {
        Self::new(name, &[1, cols], Init::Zeros)
    }
}

pub(crate) fn param_specs(config: &ClassifierConfig) -> Vec<ParamSpec> {
    match config.arch {
        Arch::Recurrent => recurrent::param_specs(config),
        Arch::TemporalConv => temporal_conv::param_specs(config),
        Arch::Attention => attention::param_specs(config),
    }
}

/// Number of trainable scalars implied by a configuration.
pub fn param_count(config: &ClassifierConfig) -> usize {
    param_specs(config)
        .iter()
        .map(|p| p.shape.iter().product::<usize>())
        .sum()
}

/// Anything that maps a batch of frames to class scores on a tape.
pub trait ScoreModel: Sync {
    fn num_classes(&self) -> usize;

    /// `(α, T)` of accepted frames.
    fn frame_shape(&self) -> (usize, usize);

    /// `input` is `[B × α·T]`; returns `[B × C]` pre-softmax scores.
    fn logits(&self, tape: &mut Tape, input: Var) -> Result<Var>;

    fn label(&self) -> String {
        "model".into()
    }
}

const INFERENCE_CHUNK: usize = 32;

fn check_frame(model: &dyn ScoreModel, frame: &[f64]) -> Result<()> {
    let (a, t) = model.frame_shape();
    if frame.len() != a * t {
        return Err(Error::dim(format!(
            "frame has {} cells, model expects {a}x{t}",
            frame.len()
        )));
    }
    Ok(())
}

/// Pre-softmax scores for many flattened frames, evaluated in chunks.
pub fn batch_logits(model: &dyn ScoreModel, frames: &[&[f64]]) -> Result<Vec<Vec<f64>>> {
    let (a, t) = model.frame_shape();
    let c = model.num_classes();
    let mut out = Vec::with_capacity(frames.len());
    let mut tape = Tape::new();
    for chunk in frames.chunks(INFERENCE_CHUNK) {
        let mut data = Vec::with_capacity(chunk.len() * a * t);
        for f in chunk {
            check_frame(model, f)?;
            data.extend_from_slice(f);
        }
        tape.clear();
        let x = tape.constant(Tensor::new(&[chunk.len(), a * t], data)?);
        let z = model.logits(&mut tape, x)?;
        out.extend(tape.value(z).data().chunks(c).map(<[f64]>::to_vec));
    }
    Ok(out)
}

pub fn predict_proba(model: &dyn ScoreModel, frame: &PaddedFrame) -> Result<Vec<f64>> {
    let z = batch_logits(model, &[&frame.data])?;
    Ok(softmax(&z[0]))
}

pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// Gradient of the target-class score with respect to each frame cell,
/// returned as an `α × T` tensor aligned with the frame.
pub fn score_gradient(model: &dyn ScoreModel, frame: &PaddedFrame, target: usize, kind: ScoreKind) -> Result<Tensor> {
    check_frame(model, &frame.data)?;
    let x = Tensor::new(&[1, frame.data.len()], frame.data.clone())?;
    let g = input_gradient(|tape, v| model.logits(tape, v), &x, target, kind)?;
    g.reshape(&[frame.alpha, frame.len])
}

/// Trainable classifier of one of the three families.
#[derive(Clone, Debug, PartialEq)]
pub struct Classifier {
    config: ClassifierConfig,
    params: Vec<Tensor>,
}

impl Classifier {
    /// Seeded initialization.
    pub fn build(config: ClassifierConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = rng_from(config.seed);
        let params = param_specs(&config)
            .into_iter()
            .map(|spec| {
                let n: usize = spec.shape.iter().product();
                let data = match spec.init {
                    Init::Zeros => vec![0.0; n],
                    Init::Uniform(b) => (0..n).map(|_| rng.random_range(-b..b)).collect(),
                };
                Tensor::new(&spec.shape, data)
            })
            .collect::<Result<_>>()?;
        Ok(Self { config, params })
    }

    pub fn from_params(config: ClassifierConfig, params: Vec<Tensor>) -> Result<Self> {
        config.validate()?;
        let specs = param_specs(&config);
        if specs.len() != params.len()
            || specs.iter().zip(&params).any(|(s, p)| s.shape != p.shape())
        {
            return Err(Error::dim("parameter shapes do not match the configuration"));
        }
        Ok(Self { config, params })
    }

    pub fn config(&self) -> &ClassifierConfig {
        &self.config
    }

    pub fn params(&self) -> &[Tensor] {
        &self.params
    }

    pub(crate) fn params_mut(&mut self) -> &mut [Tensor] {
        &mut self.params
    }

    pub fn param_names(&self) -> Vec<String> {
        param_specs(&self.config).into_iter().map(|p| p.name).collect()
    }

    pub fn flat_params(&self) -> Vec<f64> {
        self.params.iter().flat_map(|p| p.data().iter().copied()).collect()
    }

    /// Forward pass with parameters already recorded on the tape.
    pub fn forward(&self, tape: &mut Tape, input: Var, params: &[Var]) -> Result<Var> {
        let (b, cells) = tape.value(input).dims2()?;
        if cells != self.config.frame_cells() {
            return Err(Error::dim(format!(
                "input rows have {cells} cells, model expects {}",
                self.config.frame_cells()
            )));
        }
        match self.config.arch {
            Arch::Recurrent => recurrent::forward(&self.config, tape, input, b, params),
            Arch::TemporalConv => temporal_conv::forward(&self.config, tape, input, b, params),
            Arch::Attention => attention::forward(&self.config, tape, input, b, params),
        }
    }
}

impl ScoreModel for Classifier {
    fn num_classes(&self) -> usize {
        self.config.num_classes
    }

    fn frame_shape(&self) -> (usize, usize) {
        (self.config.input_features, self.config.seq_len)
    }

    fn logits(&self, tape: &mut Tape, input: Var) -> Result<Var> {
        let params: Vec<Var> = self.params.iter().map(|p| tape.constant(p.clone())).collect();
        self.forward(tape, input, &params)
    }

    fn label(&self) -> String {
        self.config.arch.name().into()
    }
}

/// Repeats an `[r × c]` block `times` times down the rows.
pub(crate) fn tile_rows(tape: &mut Tape, row: Var, times: usize) -> Result<Var> {
    tape.tile_rows(row, times)
}

/// `x·W + b` with the bias tiled over the rows of `x`.
pub(crate) fn affine(tape: &mut Tape, x: Var, w: Var, b: Var) -> Result<Var> {
    let rows = tape.value(x).dims2()?.0;
    let xw = tape.matmul(x, w)?;
    let bias = tile_rows(tape, b, rows)?;
    tape.add(xw, bias)
}

/// Gather map from `[B × α·T]` frames to time-major `[T·B × α]` rows
/// (row `t·B + b` is frame `b` at time `t`).
pub(crate) fn time_major_index(batch: usize, alpha: usize, len: usize) -> Arc<[usize]> {
    let mut idx = Vec::with_capacity(batch * alpha * len);
    for t in 0..len {
        for b in 0..batch {
            for n in 0..alpha {
                idx.push(b * alpha * len + n * len + t);
            }
        }
    }
    idx.into()
}

/// Gather map from `[B × α·T]` frames to sample-major `[B·T × α]` rows
/// (row `b·T + t`).
pub(crate) fn sample_major_index(batch: usize, alpha: usize, len: usize) -> Arc<[usize]> {
    let mut idx = Vec::with_capacity(batch * alpha * len);
    for b in 0..batch {
        for t in 0..len {
            for n in 0..alpha {
                idx.push(b * alpha * len + n * len + t);
            }
        }
    }
    idx.into()
}

/// Mean over time of time-major `[T·B × c]` rows, giving `[B × c]`.
pub(crate) fn mean_over_time(tape: &mut Tape, h: Var, len: usize) -> Result<Var> {
    let s = tape.sum_blocks(h, len)?;
    tape.scale(s, 1.0 / len as f64)
}

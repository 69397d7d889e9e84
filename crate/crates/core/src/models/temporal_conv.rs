//! Dilated causal convolutions with residual connections and a global
//! average pool over time.
//!
//! Block `l` uses dilation `2^l` and kernel width 3, so the output at time
//! `t` sees inputs `t`, `t - 2^l`, `t - 2·2^l`. Three blocks see 15 steps;
//! the pool then mixes all time steps.

use super::{affine, mean_over_time, time_major_index, ClassifierConfig, ParamSpec};
use crate::autodiff::{Tape, Var};
use crate::error::Result;

pub(super) const KERNEL: usize = 3;

pub(super) fn param_specs(cfg: &ClassifierConfig) -> Vec<ParamSpec> {
    let h = cfg.hidden_size;
    let mut specs = Vec::new();
    for l in 0..cfg.num_layers {
        let input = if l == 0 { cfg.input_features } else { h };
        specs.push(ParamSpec::weight(format!("block{l}.conv.w"), KERNEL * input, h));
        specs.push(ParamSpec::bias(format!("block{l}.conv.b"), h));
        if input != h {
            specs.push(ParamSpec::weight(format!("block{l}.res.w"), input, h));
            specs.push(ParamSpec::bias(format!("block{l}.res.b"), h));
        }
    }
    specs.push(ParamSpec::weight("head.w", h, cfg.num_classes));
    specs.push(ParamSpec::bias("head.b", cfg.num_classes));
    specs
}

pub(super) fn forward(cfg: &ClassifierConfig, tape: &mut Tape, input: Var, batch: usize, p: &[Var]) -> Result<Var> {
    let (h, len) = (cfg.hidden_size, cfg.seq_len);
    let idx = time_major_index(batch, cfg.input_features, len);
    let mut x = tape.gather(input, idx, &[len * batch, cfg.input_features])?;
    let mut in_width = cfg.input_features;
    let mut k = 0;
    for l in 0..cfg.num_layers {
        let dilation = 1usize << l;
        let (w, b) = (p[k], p[k + 1]);
        k += 2;
        // Tap j reads the input `(KERNEL - 1 - j)·dilation` steps back; in
        // time-major rows one step is `batch` rows.
        let mut conv: Option<Var> = None;
        for j in 0..KERNEL {
            let lag = (KERNEL - 1 - j) * dilation;
            if lag >= len {
                continue;
            }
            let shifted = if lag == 0 { x } else { tape.shift_rows(x, lag * batch)? };
            let wj = tape.slice_rows(w, j * in_width, in_width)?;
            let term = tape.matmul(shifted, wj)?;
            conv = Some(match conv {
                None => term,
                Some(acc) => tape.add(acc, term)?,
            });
        }
        let conv = conv.expect("zero lag tap is always present");
        let rows = len * batch;
        let bias = super::tile_rows(tape, b, rows)?;
        let conv = tape.add(conv, bias)?;
        let y = tape.relu(conv)?;
        let residual = if in_width != h {
            let r = affine(tape, x, p[k], p[k + 1])?;
            k += 2;
            r
        } else {
            x
        };
        x = tape.add(y, residual)?;
        in_width = h;
    }
    let pooled = mean_over_time(tape, x, len)?;
    affine(tape, pooled, p[k], p[k + 1])
}

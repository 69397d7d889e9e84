//! Encoder-only self-attention over time steps with learned positional
//! embeddings and mean pooling.
//!
//! Each block is multi-head attention, residual, layer norm, a two-layer
//! ReLU feed-forward of width `2D`, residual, layer norm. The layer norms
//! carry no learned gain or shift.

use super::{affine, mean_over_time, sample_major_index, tile_rows, ClassifierConfig, Init, ParamSpec};
use crate::autodiff::{Tape, Var};
use crate::error::Result;

pub(super) const NUM_HEADS: usize = 2;
const LN_EPS: f64 = 1e-5;

pub(super) fn param_specs(cfg: &ClassifierConfig) -> Vec<ParamSpec> {
    let d = cfg.hidden_size;
    let mut specs = vec![
        ParamSpec::weight("embed.w", cfg.input_features, d),
        ParamSpec::bias("embed.b", d),
        ParamSpec::new("embed.pos", &[cfg.seq_len, d], Init::Uniform(0.1)),
    ];
    for l in 0..cfg.num_layers {
        for name in ["q", "k", "v", "o"] {
            specs.push(ParamSpec::weight(format!("block{l}.{name}.w"), d, d));
            specs.push(ParamSpec::bias(format!("block{l}.{name}.b"), d));
        }
        specs.push(ParamSpec::weight(format!("block{l}.ff1.w"), d, 2 * d));
        specs.push(ParamSpec::bias(format!("block{l}.ff1.b"), 2 * d));
        specs.push(ParamSpec::weight(format!("block{l}.ff2.w"), 2 * d, d));
        specs.push(ParamSpec::bias(format!("block{l}.ff2.b"), d));
    }
    specs.push(ParamSpec::weight("head.w", d, cfg.num_classes));
    specs.push(ParamSpec::bias("head.b", cfg.num_classes));
    specs
}

pub(super) fn forward(cfg: &ClassifierConfig, tape: &mut Tape, input: Var, batch: usize, p: &[Var]) -> Result<Var> {
    let (d, len) = (cfg.hidden_size, cfg.seq_len);
    let dh = d / NUM_HEADS;
    let rows = batch * len;
    let idx = sample_major_index(batch, cfg.input_features, len);
    let x = tape.gather(input, idx, &[rows, cfg.input_features])?;
    let e = affine(tape, x, p[0], p[1])?;
    let pos = tile_rows(tape, p[2], batch)?;
    let mut e = tape.add(e, pos)?;

    let mut k = 3;
    for _ in 0..cfg.num_layers {
        let bp = &p[k..k + 12];
        k += 12;
        let q = affine(tape, e, bp[0], bp[1])?;
        let kk = affine(tape, e, bp[2], bp[3])?;
        let v = affine(tape, e, bp[4], bp[5])?;
        let mut wo = Vec::with_capacity(NUM_HEADS);
        for hd in 0..NUM_HEADS {
            wo.push(tape.slice_rows(bp[6], hd * dh, dh)?);
        }
        let scale = 1.0 / (dh as f64).sqrt();
        let mut samples = Vec::with_capacity(batch);
        for s in 0..batch {
            let qs = tape.slice_rows(q, s * len, len)?;
            let ks = tape.slice_rows(kk, s * len, len)?;
            let vs = tape.slice_rows(v, s * len, len)?;
            let mut acc: Option<Var> = None;
            for (hd, &wo_h) in wo.iter().enumerate() {
                let qh = tape.slice_cols(qs, hd * dh, dh)?;
                let kh = tape.slice_cols(ks, hd * dh, dh)?;
                let vh = tape.slice_cols(vs, hd * dh, dh)?;
                let kt = tape.transpose(kh)?;
                let scores = tape.matmul(qh, kt)?;
                let scores = tape.scale(scores, scale)?;
                let a = tape.softmax_rows(scores)?;
                let oh = tape.matmul(a, vh)?;
                let proj = tape.matmul(oh, wo_h)?;
                acc = Some(match acc {
                    None => proj,
                    Some(prev) => tape.add(prev, proj)?,
                });
            }
            samples.push(acc.expect("at least one head"));
        }
        let attn = tape.concat_rows(&samples)?;
        let bo = tile_rows(tape, bp[7], rows)?;
        let attn = tape.add(attn, bo)?;
        let r1 = tape.add(e, attn)?;
        let r1 = tape.layer_norm_rows(r1, LN_EPS)?;
        let f = affine(tape, r1, bp[8], bp[9])?;
        let f = tape.relu(f)?;
        let f = affine(tape, f, bp[10], bp[11])?;
        let r2 = tape.add(r1, f)?;
        e = tape.layer_norm_rows(r2, LN_EPS)?;
    }
    // Sample-major rows to time-major so the pool sums consecutive blocks.
    let idx: Vec<usize> = (0..len)
        .flat_map(|t| (0..batch).flat_map(move |s| (0..d).map(move |c| (s * len + t) * d + c)))
        .collect();
    let tm = tape.gather(e, idx.into(), &[rows, d])?;
    let pooled = mean_over_time(tape, tm, len)?;
    affine(tape, pooled, p[k], p[k + 1])
}


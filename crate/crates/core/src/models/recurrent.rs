//! Stacked LSTM read out from the last hidden state.
//!
//! Gate blocks are laid out `i, f, g, o` along the columns of the
//! `[in × 4h]` input and `[h × 4h]` recurrent weights, each with its own bias.

use super::{affine, time_major_index, ClassifierConfig, Init, ParamSpec};
use crate::autodiff::{Tape, Var};
use crate::error::Result;

pub(super) fn param_specs(cfg: &ClassifierConfig) -> Vec<ParamSpec> {
    let h = cfg.hidden_size;
    let bound = 1.0 / (h as f64).sqrt();
    let mut specs = Vec::new();
    for l in 0..cfg.num_layers {
        let input = if l == 0 { cfg.input_features } else { h };
        specs.push(ParamSpec::new(format!("lstm{l}.w_ih"), &[input, 4 * h], Init::Uniform(bound)));
        specs.push(ParamSpec::new(format!("lstm{l}.w_hh"), &[h, 4 * h], Init::Uniform(bound)));
        specs.push(ParamSpec::new(format!("lstm{l}.b_ih"), &[1, 4 * h], Init::Uniform(bound)));
        specs.push(ParamSpec::new(format!("lstm{l}.b_hh"), &[1, 4 * h], Init::Uniform(bound)));
    }
    specs.push(ParamSpec::weight("head.w", h, cfg.num_classes));
    specs.push(ParamSpec::bias("head.b", cfg.num_classes));
    specs
}

pub(super) fn forward(cfg: &ClassifierConfig, tape: &mut Tape, input: Var, batch: usize, p: &[Var]) -> Result<Var> {
    let (h, len) = (cfg.hidden_size, cfg.seq_len);
    let idx = time_major_index(batch, cfg.input_features, len);
    let mut layer_in = tape.gather(input, idx, &[len * batch, cfg.input_features])?;
    let mut last = None;
    for l in 0..cfg.num_layers {
        let [w_ih, w_hh, b_ih, b_hh] = [p[4 * l], p[4 * l + 1], p[4 * l + 2], p[4 * l + 3]];
        let bias = tape.add(b_ih, b_hh)?;
        let xw = affine(tape, layer_in, w_ih, bias)?;
        let mut state: Option<(Var, Var)> = None;
        let mut outputs = Vec::with_capacity(len);
        for t in 0..len {
            let mut pre = tape.slice_rows(xw, t * batch, batch)?;
            if let Some((hp, _)) = state {
                let rec = tape.matmul(hp, w_hh)?;
                pre = tape.add(pre, rec)?;
            }
            let i = tape.slice_cols(pre, 0, h)?;
            let i = tape.sigmoid(i)?;
            let g = tape.slice_cols(pre, 2 * h, h)?;
            let g = tape.tanh(g)?;
            let o = tape.slice_cols(pre, 3 * h, h)?;
            let o = tape.sigmoid(o)?;
            let ig = tape.mul(i, g)?;
            let c = match state {
                None => ig,
                Some((_, cp)) => {
                    let f = tape.slice_cols(pre, h, h)?;
                    let f = tape.sigmoid(f)?;
                    let fc = tape.mul(f, cp)?;
                    tape.add(fc, ig)?
                }
            };
            let tc = tape.tanh(c)?;
            let hn = tape.mul(o, tc)?;
            outputs.push(hn);
            state = Some((hn, c));
        }
        last = state.map(|s| s.0);
        if l + 1 < cfg.num_layers {
            layer_in = tape.concat_rows(&outputs)?;
        }
    }
    let n = p.len();
    affine(tape, last.expect("sequence is non-empty"), p[n - 2], p[n - 1])
}

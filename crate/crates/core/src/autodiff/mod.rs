//! Dense tensors with define-by-run reverse-mode differentiation.
//!
//! A [`Tape`] records every operation applied to its [`Var`] handles. After
//! the forward pass, [`Tape::backward`] sweeps the record once in reverse and
//! returns the gradient of a scalar loss with respect to every leaf created
//! with [`Tape::var`]. Tapes are cheap and rebuilt for each forward pass,
//! which keeps recurrent unrolling trivial.
//!
//! Broadcasting is limited to equal shapes and scalar-versus-tensor; bias
//! rows and positional tables are tiled explicitly with [`Tape::tile_rows`].
//!
//! ```
//! use saliency_audit::autodiff::{Tape, Tensor};
//!
//! let mut tape = Tape::new();
//! let x = tape.var(Tensor::scalar(3.0));
//! let y = tape.mul(x, x).unwrap();
//! let grads = tape.backward(y).unwrap();
//! assert_eq!(grads.get(x).unwrap().data(), &[6.0]);
//! ```

mod tape;
mod tensor;

pub use tape::{Gradients, Tape, Var};
pub use tensor::{softmax, Tensor};

use crate::error::{Error, Result};

/// Which quantity an input gradient differentiates.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ScoreKind {
    /// Pre-softmax score of the target class.
    #[default]
    Logit,
    /// Post-softmax probability of the target class.
    Probability,
}

/// Gradient of the target-class score with respect to every input cell.
///
/// `forward` maps the recorded input to logits, either a length-C vector or
/// a `B×C` matrix; with a batch, the per-row target scores are summed, so
/// each input row receives the gradient of its own score.
pub fn input_gradient<F>(forward: F, input: &Tensor, target: usize, kind: ScoreKind) -> Result<Tensor>
where
    F: FnOnce(&mut Tape, Var) -> Result<Var>,
{
    let rows = match input.shape() {
        [r, _] => *r,
        _ => 1,
    };
    input_gradient_rows(forward, input, &vec![target; rows], kind)
}

/// Like [`input_gradient`] with a separate target class for each batch row.
pub fn input_gradient_rows<F>(forward: F, input: &Tensor, targets: &[usize], kind: ScoreKind) -> Result<Tensor>
where
    F: FnOnce(&mut Tape, Var) -> Result<Var>,
{
    let mut tape = Tape::new();
    let x = tape.var(input.clone());
    let logits = forward(&mut tape, x)?;
    let score = row_target_score(&mut tape, logits, targets, kind)?;
    let mut grads = tape.backward(score)?;
    let g = grads
        .take(x)
        .ok_or_else(|| Error::Contract("input gradient was not tracked".into()))?;
    if g.data().iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("non-finite input gradient".into()));
    }
    Ok(g)
}

/// Sum over batch rows of the target-class score.
pub fn target_score(tape: &mut Tape, logits: Var, target: usize, kind: ScoreKind) -> Result<Var> {
    let rows = match tape.value(logits).shape() {
        [r, _] => *r,
        _ => 1,
    };
    row_target_score(tape, logits, &vec![target; rows], kind)
}

/// Sum over batch rows of each row's own target-class score.
pub fn row_target_score(tape: &mut Tape, logits: Var, targets: &[usize], kind: ScoreKind) -> Result<Var> {
    let shape = tape.value(logits).shape().to_vec();
    let (logits, rows, classes) = match shape[..] {
        [c] => (tape.reshape(logits, &[1, c])?, 1, c),
        [r, c] => (logits, r, c),
        _ => return Err(Error::dim(format!("logits must be 1-D or 2-D, got {shape:?}"))),
    };
    if targets.len() != rows {
        return Err(Error::dim(format!("{} targets for {rows} rows", targets.len())));
    }
    if let Some(&t) = targets.iter().find(|&&t| t >= classes) {
        return Err(Error::Index(format!("target class {t} of {classes}")));
    }
    let scores = match kind {
        ScoreKind::Logit => logits,
        ScoreKind::Probability => tape.softmax_rows(logits)?,
    };
    let idx: Vec<usize> = targets.iter().enumerate().map(|(r, &t)| r * classes + t).collect();
    let picked = tape.gather(scores, idx.into(), &[rows])?;
    tape.sum(picked)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(rng: &mut ChaCha8Rng, shape: &[usize]) -> Tensor {
        let n = shape.iter().product();
        Tensor::new(shape, (0..n).map(|_| rng.random_range(-1.5..1.5)).collect()).unwrap()
    }

    /// Checks `build` against central differences in every input cell.
    fn grad_check(inputs: &[Tensor], build: impl Fn(&mut Tape, &[Var]) -> Result<Var>) {
        let mut tape = Tape::new();
        let vars: Vec<Var> = inputs.iter().map(|t| tape.var(t.clone())).collect();
        let loss = build(&mut tape, &vars).unwrap();
        let grads = tape.backward(loss).unwrap();
        let eval = |ins: &[Tensor]| {
            let mut t = Tape::new();
            let v: Vec<Var> = ins.iter().map(|x| t.constant(x.clone())).collect();
            let l = build(&mut t, &v).unwrap();
            t.value(l).item().unwrap()
        };
        let h = 1e-5;
        for (which, input) in inputs.iter().enumerate() {
            let analytic = grads.get(vars[which]).unwrap();
            for k in 0..input.len() {
                let mut plus = inputs.to_vec();
                plus[which].data_mut()[k] += h;
                let mut minus = inputs.to_vec();
                minus[which].data_mut()[k] -= h;
                let numeric = (eval(&plus) - eval(&minus)) / (2.0 * h);
                let a = analytic.data()[k];
                let err = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-3);
                assert!(err < 1e-4, "input {which} cell {k}: analytic {a} numeric {numeric}");
            }
        }
    }

    #[test]
    fn matmul_identity_and_dot() {
        let mut t = Tape::new();
        let i = t.constant(Tensor::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap());
        let m = t.constant(Tensor::from_rows(&[vec![3.0, 4.0], vec![5.0, 6.0]]).unwrap());
        let p = t.matmul(i, m).unwrap();
        assert_eq!(t.value(p).data(), &[3.0, 4.0, 5.0, 6.0]);

        let a = t.constant(Tensor::from_rows(&[vec![1.0, 2.0]]).unwrap());
        let b = t.constant(Tensor::from_rows(&[vec![3.0], vec![4.0]]).unwrap());
        let p = t.matmul(a, b).unwrap();
        assert_eq!(t.value(p).data(), &[11.0]);
    }

    #[test]
    fn matmul_matches_triple_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = random(&mut rng, &[3, 4]);
        let b = random(&mut rng, &[4, 2]);
        let mut expected = [0.0; 6];
        for i in 0..3 {
            for j in 0..2 {
                for p in 0..4 {
                    expected[i * 2 + j] += a.at2(i, p) * b.at2(p, j);
                }
            }
        }
        let mut t = Tape::new();
        let (va, vb) = (t.constant(a), t.constant(b));
        let p = t.matmul(va, vb).unwrap();
        for (x, e) in t.value(p).data().iter().zip(expected) {
            assert!((x - e).abs() < 1e-14);
        }
    }

    #[test]
    fn matmul_shape_mismatch_is_dimension_error() {
        let mut t = Tape::new();
        let a = t.constant(Tensor::zeros(&[2, 3]).unwrap());
        let b = t.constant(Tensor::zeros(&[2, 3]).unwrap());
        assert!(matches!(t.matmul(a, b), Err(Error::Dimension(_))));
        assert!(t.add(a, b).is_ok());
        let c = t.constant(Tensor::zeros(&[3, 2]).unwrap());
        assert!(matches!(t.add(a, c), Err(Error::Dimension(_))));
    }

    #[test]
    fn elementwise_definitions() {
        let mut t = Tape::new();
        let x = t.constant(Tensor::vector(vec![0.0, -3.0, 3.0]).unwrap());
        let s = t.sigmoid(x).unwrap();
        assert_eq!(t.value(s).data()[0], 0.5);
        let r = t.relu(x).unwrap();
        assert_eq!(t.value(r).data(), &[0.0, 0.0, 3.0]);
    }

    /// tanh from its Taylor series near zero and exponential form elsewhere,
    /// both evaluated with compensated summation.
    fn tanh_reference(x: f64) -> f64 {
        if x.abs() < 0.5 {
            // tanh x = x - x^3/3 + 2x^5/15 - 17x^7/315 + 62x^9/2835 - ...
            let coeffs = [
                1.0,
                -1.0 / 3.0,
                2.0 / 15.0,
                -17.0 / 315.0,
                62.0 / 2835.0,
                -1382.0 / 155925.0,
                21844.0 / 6081075.0,
                -929569.0 / 638512875.0,
                6404582.0 / 10854718875.0,
                -443861162.0 / 1856156927625.0,
                18888466084.0 / 194896477400625.0,
                -113927491862.0 / 2900518163668125.0,
            ];
            let x2 = x * x;
            let mut term = x;
            let mut sum = 0.0;
            for c in coeffs {
                sum += c * term;
                term *= x2;
            }
            sum
        } else {
            let e = (-2.0 * x.abs()).exp();
            x.signum() * (1.0 - e) / (1.0 + e)
        }
    }

    #[test]
    fn tanh_matches_reference_on_grid() {
        let grid: Vec<f64> = (-60..=60).map(|i| i as f64 * 0.1).collect();
        let mut t = Tape::new();
        let x = t.constant(Tensor::vector(grid.clone()).unwrap());
        let y = t.tanh(x).unwrap();
        for (&xv, &yv) in grid.iter().zip(t.value(y).data()) {
            assert!((yv - tanh_reference(xv)).abs() < 1e-12, "x={xv}");
        }
    }

    #[test]
    fn cross_entropy_cases() {
        let mut t = Tape::new();
        let z = t.constant(Tensor::vector(vec![0.3; 4]).unwrap());
        let l = t.softmax_cross_entropy(z, &[2]).unwrap();
        assert!((t.value(l).item().unwrap() - 4f64.ln()).abs() < 1e-15);

        let z = t.constant(Tensor::vector(vec![0.0, 1e6, 0.0]).unwrap());
        let l = t.softmax_cross_entropy(z, &[1]).unwrap();
        assert!(t.value(l).item().unwrap().abs() < 1e-12);

        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let logits: Vec<f64> = (0..5).map(|_| rng.random_range(-4.0..4.0)).collect();
            let y = rng.random_range(0..5);
            let direct = -logits[y] + logits.iter().map(|v: &f64| v.exp()).sum::<f64>().ln();
            let z = t.constant(Tensor::vector(logits).unwrap());
            let l = t.softmax_cross_entropy(z, &[y]).unwrap();
            assert!((t.value(l).item().unwrap() - direct).abs() < 1e-12);
        }

        let z = t.constant(Tensor::vector(vec![0.0; 3]).unwrap());
        assert!(matches!(t.softmax_cross_entropy(z, &[3]), Err(Error::Index(_))));
    }

    #[test]
    fn backward_basic_cases() {
        let mut t = Tape::new();
        let x = t.var(Tensor::scalar(3.0));
        let y = t.mul(x, x).unwrap();
        assert_eq!(t.backward(y).unwrap().get(x).unwrap().data(), &[6.0]);

        let mut t = Tape::new();
        let w = t.var(Tensor::vector(vec![1.0, 2.0]).unwrap());
        let c = t.constant(Tensor::scalar(4.0));
        let g = t.backward(c).unwrap();
        assert_eq!(g.get(w).unwrap().data(), &[0.0, 0.0]);

        let mut t = Tape::new();
        let v = t.var(Tensor::vector(vec![1.0, 2.0]).unwrap());
        assert!(matches!(t.backward(v), Err(Error::Contract(_))));
        assert!(matches!(Tape::new().backward(v), Err(Error::Contract(_))));
    }

    #[test]
    fn every_op_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let a = random(&mut rng, &[3, 4]);
        let b = random(&mut rng, &[4, 2]);
        grad_check(&[a.clone(), b], |t, v| {
            let p = t.matmul(v[0], v[1])?;
            let q = t.tanh(p)?;
            t.sum(q)
        });
        let c = random(&mut rng, &[3, 4]);
        let s = random(&mut rng, &[1]);
        grad_check(&[a.clone(), c.clone(), s], |t, v| {
            let x = t.add(v[0], v[1])?;
            let y = t.mul(x, v[2])?;
            let z = t.sub(y, v[0])?;
            let w = t.sigmoid(z)?;
            let e = t.exp(w)?;
            let m = t.mul(e, v[1])?;
            let k = t.scale(m, -0.7)?;
            t.sum(k)
        });
        grad_check(&[a.clone(), c.clone()], |t, v| {
            let x = t.transpose(v[0])?;
            let y = t.softmax_rows(x)?;
            let z = t.layer_norm_rows(v[1], 1e-5)?;
            let zt = t.transpose(z)?;
            let p = t.mul(y, zt)?;
            t.sum(p)
        });
        grad_check(&[a.clone(), c.clone()], |t, v| {
            let s = t.shift_rows(v[0], 1)?;
            let r = t.slice_rows(s, 1, 2)?;
            let q = t.slice_cols(v[1], 1, 2)?;
            let q = t.slice_rows(q, 0, 2)?;
            let q = t.relu(q)?;
            let rq = t.slice_cols(r, 0, 2)?;
            let cat = t.concat_rows(&[rq, q])?;
            let sb = t.sum_blocks(cat, 2)?;
            let tiled = t.tile_rows(sb, 3)?;
            let tq = t.mul(tiled, tiled)?;
            let tq = t.sum_blocks(tq, 3)?;
            let sq = t.mul(sb, tq)?;
            let g = t.gather(sq, vec![0, 3, 3, 1].into(), &[2, 2])?;
            let r2 = t.reshape(g, &[4])?;
            let ce = t.softmax_cross_entropy(r2, &[2])?;
            let k = t.pick(r2, 1)?;
            t.add(ce, k)
        });
        grad_check(&[a], |t, v| {
            let ce = t.softmax_cross_entropy(v[0], &[0, 3, 1])?;
            t.scale(ce, 2.0)
        });
    }

    #[test]
    fn backward_is_bit_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random(&mut rng, &[5, 6]);
        let run = || {
            let mut t = Tape::new();
            let x = t.var(a.clone());
            let y = t.transpose(x).unwrap();
            let z = t.matmul(x, y).unwrap();
            let s = t.softmax_rows(z).unwrap();
            let l = t.sum(s).unwrap();
            let l2 = t.mul(l, l).unwrap();
            t.backward(l2).unwrap().take(x).unwrap()
        };
        let g1 = run();
        let g2 = run();
        assert!(g1.data().iter().zip(g2.data()).all(|(x, y)| x.to_bits() == y.to_bits()));
    }

    #[test]
    fn input_gradient_of_linear_and_constant_scores() {
        let w = Tensor::from_rows(&[vec![0.5, -1.0, 2.0], vec![1.0, 1.0, 1.0]]).unwrap();
        let x = Tensor::vector(vec![0.3, 0.1, -0.2]).unwrap();
        let wt = w.clone();
        let g = input_gradient(
            move |t, v| {
                let wv = t.constant(wt);
                let col = t.reshape(v, &[3, 1])?;
                let z = t.matmul(wv, col)?;
                t.reshape(z, &[2])
            },
            &x,
            0,
            ScoreKind::Logit,
        )
        .unwrap();
        assert_eq!(g.data(), &w.data()[..3]);

        let g = input_gradient(
            |t, _| Ok(t.constant(Tensor::vector(vec![1.0, 2.0]).unwrap())),
            &x,
            1,
            ScoreKind::Logit,
        )
        .unwrap();
        assert!(g.data().iter().all(|&v| v == 0.0));
    }
}

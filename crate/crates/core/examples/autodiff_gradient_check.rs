//! Build a small expression on a tape, differentiate it, and compare the
//! result with central finite differences.
//!
//! cargo run --example autodiff_gradient_check

use saliency_audit::autodiff::{Tape, Tensor};

fn f(tape: &mut Tape, x: saliency_audit::autodiff::Var, w: saliency_audit::autodiff::Var) -> saliency_audit::Result<saliency_audit::autodiff::Var> {
    // sum(tanh(x·w) ⊙ sigmoid(x·w))
    let z = tape.matmul(x, w)?;
    let a = tape.tanh(z)?;
    let b = tape.sigmoid(z)?;
    let p = tape.mul(a, b)?;
    tape.sum(p)
}

fn main() -> saliency_audit::Result<()> {
    let x0 = Tensor::new(&[2, 3], vec![0.5, -1.0, 2.0, 1.5, 0.25, -0.75])?;
    let w0 = Tensor::new(&[3, 2], vec![0.1, -0.4, 0.3, 0.8, -0.6, 0.2])?;

    let mut tape = Tape::new();
    let x = tape.var(x0.clone());
    let w = tape.var(w0.clone());
    let y = f(&mut tape, x, w)?;
    println!("f = {:.6}, tape holds {} nodes", tape.value(y).item()?, tape.len());
    let grads = tape.backward(y)?;

    let eval = |x: &Tensor, w: &Tensor| -> saliency_audit::Result<f64> {
        let mut t = Tape::new();
        let (x, w) = (t.constant(x.clone()), t.constant(w.clone()));
        let y = f(&mut t, x, w)?;
        t.value(y).item()
    };
    let h = 1e-5;
    for (name, var, base, is_x) in [("x", x, &x0, true), ("w", w, &w0, false)] {
        let analytic = grads.get(var).expect("leaf gradient");
        for k in 0..base.len() {
            let mut plus = base.clone();
            plus.data_mut()[k] += h;
            let mut minus = base.clone();
            minus.data_mut()[k] -= h;
            let num = if is_x {
                (eval(&plus, &w0)? - eval(&minus, &w0)?) / (2.0 * h)
            } else {
                (eval(&x0, &plus)? - eval(&x0, &minus)?) / (2.0 * h)
            };
            println!("d f / d {name}[{k}]: analytic {:+.8}  numeric {:+.8}", analytic.data()[k], num);
        }
    }
    Ok(())
}

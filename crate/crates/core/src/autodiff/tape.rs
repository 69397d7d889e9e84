use std::sync::Arc;

use super::tensor::{matmul_a_bt_acc, matmul_at_b_acc, matmul_raw, Tensor};
use crate::error::{Error, Result};

/// Handle to a value recorded on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug)]
enum Op {
    Leaf,
    MatMul(Var, Var),
    Transpose(Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Scale(Var, f64),
    Sigmoid(Var),
    Tanh(Var),
    Relu(Var),
    Exp(Var),
    SoftmaxRows(Var),
    /// Saved per-row `1/sqrt(var + eps)`.
    LayerNormRows(Var, Vec<f64>),
    ShiftRows(Var, usize),
    SliceRows(Var, usize),
    SliceCols(Var, usize),
    ConcatRows(Vec<Var>),
    Gather(Var, Arc<[usize]>),
    SumBlocks(Var),
    TileRows(Var),
    Reshape(Var),
    Sum(Var),
    CrossEntropy {
        logits: Var,
        labels: Vec<usize>,
        probs: Vec<f64>,
    },
}

#[derive(Debug)]
struct Node {
    value: Tensor,
    op: Op,
    requires_grad: bool,
}

/// Define-by-run record of tensor operations.
///
/// Nodes are appended in evaluation order, so every node's inputs precede it
/// and a single reverse sweep visits each node once.
#[derive(Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

/// Gradients produced by [`Tape::backward`], one buffer per leaf that
/// requires a gradient.
#[derive(Debug)]
pub struct Gradients {
    grads: Vec<Option<Tensor>>,
}

impl Gradients {
    /// `∂loss/∂v` for a gradient-tracking leaf, `None` otherwise.
    pub fn get(&self, v: Var) -> Option<&Tensor> {
        self.grads.get(v.0).and_then(Option::as_ref)
    }

    pub fn take(&mut self, v: Var) -> Option<Tensor> {
        self.grads.get_mut(v.0).and_then(Option::take)
    }
}

#[derive(Clone, Copy)]
enum Broadcast {
    Same,
    LeftScalar,
    RightScalar,
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn clear(&mut self) {
        self.nodes.clear();
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    pub fn requires_grad(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    /// Gradient-tracking leaf.
    pub fn var(&mut self, value: Tensor) -> Var {
        self.push_leaf(value, true)
    }

    pub fn constant(&mut self, value: Tensor) -> Var {
        self.push_leaf(value, false)
    }

    fn push_leaf(&mut self, value: Tensor, requires_grad: bool) -> Var {
        self.nodes.push(Node {
            value,
            op: Op::Leaf,
            requires_grad,
        });
        Var(self.nodes.len() - 1)
    }

    fn push(&mut self, value: Tensor, op: Op, inputs: &[Var]) -> Var {
        let requires_grad = inputs.iter().any(|v| self.nodes[v.0].requires_grad);
        self.nodes.push(Node {
            value,
            op,
            requires_grad,
        });
        Var(self.nodes.len() - 1)
    }

    fn dims2(&self, v: Var) -> Result<(usize, usize)> {
        self.nodes[v.0].value.dims2()
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (m, k) = self.dims2(a)?;
        let (k2, n) = self.dims2(b)?;
        if k != k2 {
            return Err(Error::dim(format!(
                "matmul inner dimensions differ: {m}x{k} by {k2}x{n}"
            )));
        }
        let out = matmul_raw(self.value(a).data(), self.value(b).data(), m, k, n);
        let value = Tensor::new(&[m, n], out)?;
        Ok(self.push(value, Op::MatMul(a, b), &[a, b]))
    }

    pub fn transpose(&mut self, a: Var) -> Result<Var> {
        let (r, c) = self.dims2(a)?;
        let src = self.value(a).data();
        let mut out = vec![0.0; r * c];
        for i in 0..r {
            for j in 0..c {
                out[j * r + i] = src[i * c + j];
            }
        }
        let value = Tensor::new(&[c, r], out)?;
        Ok(self.push(value, Op::Transpose(a), &[a]))
    }

    fn broadcast(&self, a: Var, b: Var) -> Result<(Broadcast, Vec<usize>)> {
        let (ta, tb) = (self.value(a), self.value(b));
        if ta.shape() == tb.shape() {
            Ok((Broadcast::Same, ta.shape().to_vec()))
        } else if tb.is_scalar() {
            Ok((Broadcast::RightScalar, ta.shape().to_vec()))
        } else if ta.is_scalar() {
            Ok((Broadcast::LeftScalar, tb.shape().to_vec()))
        } else {
            Err(Error::dim(format!(
                "incompatible shapes {:?} and {:?}",
                ta.shape(),
                tb.shape()
            )))
        }
    }

    fn zip_with(&self, a: Var, b: Var, f: impl Fn(f64, f64) -> f64) -> Result<Tensor> {
        let (mode, shape) = self.broadcast(a, b)?;
        let (da, db) = (self.value(a).data(), self.value(b).data());
        let out = match mode {
            Broadcast::Same => da.iter().zip(db).map(|(&x, &y)| f(x, y)).collect(),
            Broadcast::RightScalar => da.iter().map(|&x| f(x, db[0])).collect(),
            Broadcast::LeftScalar => db.iter().map(|&y| f(da[0], y)).collect(),
        };
        Tensor::new(&shape, out)
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let value = self.zip_with(a, b, |x, y| x + y)?;
        Ok(self.push(value, Op::Add(a, b), &[a, b]))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        let value = self.zip_with(a, b, |x, y| x - y)?;
        Ok(self.push(value, Op::Sub(a, b), &[a, b]))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        let value = self.zip_with(a, b, |x, y| x * y)?;
        Ok(self.push(value, Op::Mul(a, b), &[a, b]))
    }

    pub fn scale(&mut self, a: Var, factor: f64) -> Result<Var> {
        let value = self.map(a, |x| x * factor)?;
        Ok(self.push(value, Op::Scale(a, factor), &[a]))
    }

    fn map(&self, a: Var, f: impl Fn(f64) -> f64) -> Result<Tensor> {
        let t = self.value(a);
        Tensor::new(t.shape(), t.data().iter().map(|&x| f(x)).collect())
    }

    pub fn sigmoid(&mut self, a: Var) -> Result<Var> {
        let value = self.map(a, sigmoid)?;
        Ok(self.push(value, Op::Sigmoid(a), &[a]))
    }

    pub fn tanh(&mut self, a: Var) -> Result<Var> {
        let value = self.map(a, f64::tanh)?;
        Ok(self.push(value, Op::Tanh(a), &[a]))
    }

    pub fn relu(&mut self, a: Var) -> Result<Var> {
        let value = self.map(a, |x| x.max(0.0))?;
        Ok(self.push(value, Op::Relu(a), &[a]))
    }

    pub fn exp(&mut self, a: Var) -> Result<Var> {
        let value = self.map(a, f64::exp)?;
        Ok(self.push(value, Op::Exp(a), &[a]))
    }

    fn rows_cols(&self, a: Var) -> (usize, usize) {
        let s = self.value(a).shape();
        match s {
            [c] => (1, *c),
            _ => {
                let c = *s.last().unwrap_or(&1);
                (self.value(a).len() / c, c)
            }
        }
    }

    /// Softmax along the last axis.
    pub fn softmax_rows(&mut self, a: Var) -> Result<Var> {
        let (r, c) = self.rows_cols(a);
        let src = self.value(a);
        let mut out = Vec::with_capacity(r * c);
        for row in src.data().chunks(c) {
            out.extend(super::tensor::softmax(row));
        }
        let value = Tensor::new(src.shape(), out)?;
        Ok(self.push(value, Op::SoftmaxRows(a), &[a]))
    }

    /// Zero-mean, unit-variance normalization of each row (no affine part).
    pub fn layer_norm_rows(&mut self, a: Var, eps: f64) -> Result<Var> {
        let (r, c) = self.rows_cols(a);
        let src = self.value(a);
        let mut out = Vec::with_capacity(r * c);
        let mut inv = Vec::with_capacity(r);
        for row in src.data().chunks(c) {
            let mean = row.iter().sum::<f64>() / c as f64;
            let var = row.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / c as f64;
            let s = 1.0 / (var + eps).sqrt();
            inv.push(s);
            out.extend(row.iter().map(|x| (x - mean) * s));
        }
        let value = Tensor::new(src.shape(), out)?;
        Ok(self.push(value, Op::LayerNormRows(a, inv), &[a]))
    }

    /// Moves every row down by `shift`, filling the vacated top rows with zeros.
    pub fn shift_rows(&mut self, a: Var, shift: usize) -> Result<Var> {
        let (r, c) = self.dims2(a)?;
        let src = self.value(a).data();
        let mut out = vec![0.0; r * c];
        if shift < r {
            out[shift * c..].copy_from_slice(&src[..(r - shift) * c]);
        }
        let value = Tensor::new(&[r, c], out)?;
        Ok(self.push(value, Op::ShiftRows(a, shift), &[a]))
    }

    pub fn slice_rows(&mut self, a: Var, start: usize, len: usize) -> Result<Var> {
        let (r, c) = self.dims2(a)?;
        if len == 0 || start + len > r {
            return Err(Error::dim(format!("row slice {start}..{} of {r} rows", start + len)));
        }
        let out = self.value(a).data()[start * c..(start + len) * c].to_vec();
        let value = Tensor::new(&[len, c], out)?;
        Ok(self.push(value, Op::SliceRows(a, start), &[a]))
    }

    pub fn slice_cols(&mut self, a: Var, start: usize, len: usize) -> Result<Var> {
        let (r, c) = self.dims2(a)?;
        if len == 0 || start + len > c {
            return Err(Error::dim(format!("column slice {start}..{} of {c} columns", start + len)));
        }
        let src = self.value(a).data();
        let mut out = Vec::with_capacity(r * len);
        for row in src.chunks(c) {
            out.extend_from_slice(&row[start..start + len]);
        }
        let value = Tensor::new(&[r, len], out)?;
        Ok(self.push(value, Op::SliceCols(a, start), &[a]))
    }

    pub fn concat_rows(&mut self, parts: &[Var]) -> Result<Var> {
        let first = parts
            .first()
            .ok_or_else(|| Error::dim("concat of zero tensors"))?;
        let (_, c) = self.dims2(*first)?;
        let mut rows = 0;
        let mut out = Vec::new();
        for &p in parts {
            let (r, pc) = self.dims2(p)?;
            if pc != c {
                return Err(Error::dim(format!("concat column mismatch: {c} vs {pc}")));
            }
            rows += r;
            out.extend_from_slice(self.value(p).data());
        }
        let value = Tensor::new(&[rows, c], out)?;
        Ok(self.push(value, Op::ConcatRows(parts.to_vec()), parts))
    }

    /// `out.flat[i] = a.flat[indices[i]]`, reshaped to `shape`.
    pub fn gather(&mut self, a: Var, indices: Arc<[usize]>, shape: &[usize]) -> Result<Var> {
        let src = self.value(a).data();
        if let Some(&bad) = indices.iter().find(|&&i| i >= src.len()) {
            return Err(Error::Index(format!("gather index {bad} out of {}", src.len())));
        }
        let out = indices.iter().map(|&i| src[i]).collect();
        let value = Tensor::new(shape, out)?;
        Ok(self.push(value, Op::Gather(a, indices), &[a]))
    }

    /// Stacks `times` copies of `a` vertically: `[m × c] → [times·m × c]`.
    pub fn tile_rows(&mut self, a: Var, times: usize) -> Result<Var> {
        let (r, c) = self.dims2(a)?;
        if times == 0 {
            return Err(Error::dim("tile count must be positive"));
        }
        let src = self.value(a).data();
        let mut out = Vec::with_capacity(times * src.len());
        for _ in 0..times {
            out.extend_from_slice(src);
        }
        let value = Tensor::new(&[times * r, c], out)?;
        Ok(self.push(value, Op::TileRows(a), &[a]))
    }

    /// Single element as a scalar.
    pub fn pick(&mut self, a: Var, index: usize) -> Result<Var> {
        self.gather(a, Arc::from(vec![index]), &[1])
    }

    /// Sums `blocks` equal consecutive row blocks: `[blocks·m × c] → [m × c]`.
    pub fn sum_blocks(&mut self, a: Var, blocks: usize) -> Result<Var> {
        let (r, c) = self.dims2(a)?;
        if blocks == 0 || r % blocks != 0 {
            return Err(Error::dim(format!("{r} rows do not split into {blocks} blocks")));
        }
        let m = r / blocks;
        let src = self.value(a).data();
        let mut out = vec![0.0; m * c];
        for block in src.chunks(m * c) {
            for (o, &x) in out.iter_mut().zip(block) {
                *o += x;
            }
        }
        let value = Tensor::new(&[m, c], out)?;
        Ok(self.push(value, Op::SumBlocks(a), &[a]))
    }

    pub fn reshape(&mut self, a: Var, shape: &[usize]) -> Result<Var> {
        let value = self.value(a).clone().reshape(shape)?;
        Ok(self.push(value, Op::Reshape(a), &[a]))
    }

    pub fn sum(&mut self, a: Var) -> Result<Var> {
        let s = self.value(a).data().iter().sum();
        Ok(self.push(Tensor::scalar(s), Op::Sum(a), &[a]))
    }

    /// Mean of `−log softmax(logits_b)[label_b]` over rows.
    ///
    /// `logits` is either a length-C vector with one label or a `B×C`
    /// matrix with `B` labels.
    pub fn softmax_cross_entropy(&mut self, logits: Var, labels: &[usize]) -> Result<Var> {
        let (r, c) = self.rows_cols(logits);
        if labels.len() != r {
            return Err(Error::dim(format!("{r} logit rows but {} labels", labels.len())));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= c) {
            return Err(Error::Index(format!("label {bad} out of range for {c} classes")));
        }
        let src = self.value(logits).data();
        let mut probs = Vec::with_capacity(r * c);
        let mut loss = 0.0;
        for (row, &label) in src.chunks(c).zip(labels) {
            let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lse = max + row.iter().map(|z| (z - max).exp()).sum::<f64>().ln();
            loss += lse - row[label];
            probs.extend(super::tensor::softmax(row));
        }
        let op = Op::CrossEntropy {
            logits,
            labels: labels.to_vec(),
            probs,
        };
        Ok(self.push(Tensor::scalar(loss / r as f64), op, &[logits]))
    }

    /// Reverse sweep from a scalar `loss`.
    pub fn backward(&self, loss: Var) -> Result<Gradients> {
        if self.nodes.is_empty() {
            return Err(Error::Contract("backward on an empty tape".into()));
        }
        if !self.value(loss).is_scalar() {
            return Err(Error::Contract(format!(
                "backward needs a scalar loss, got shape {:?}",
                self.value(loss).shape()
            )));
        }
        let n = loss.0 + 1;
        let mut grads: Vec<Option<Vec<f64>>> = vec![None; n];
        grads[loss.0] = Some(vec![1.0]);
        let mut out: Vec<Option<Tensor>> = vec![None; self.nodes.len()];

        for i in (0..n).rev() {
            let node = &self.nodes[i];
            if !node.requires_grad {
                continue;
            }
            if let Op::Leaf = node.op {
                let g = grads[i].take().unwrap_or_else(|| vec![0.0; node.value.len()]);
                out[i] = Some(Tensor::new(node.value.shape(), g)?);
                continue;
            }
            let Some(g) = grads[i].take() else { continue };
            self.backprop_node(node, &g, &mut grads);
        }
        // Leaves recorded after the loss cannot influence it.
        for (i, node) in self.nodes.iter().enumerate().skip(n) {
            if node.requires_grad && matches!(node.op, Op::Leaf) {
                out[i] = Some(Tensor::zeros(node.value.shape())?);
            }
        }
        Ok(Gradients { grads: out })
    }

    fn slot<'g>(&self, grads: &'g mut [Option<Vec<f64>>], v: Var) -> Option<&'g mut Vec<f64>> {
        let node = &self.nodes[v.0];
        if !node.requires_grad {
            return None;
        }
        Some(grads[v.0].get_or_insert_with(|| vec![0.0; node.value.len()]))
    }

    fn accumulate_broadcast(
        &self,
        grads: &mut [Option<Vec<f64>>],
        v: Var,
        g: &[f64],
        scalar: bool,
        factor: impl Fn(usize) -> f64,
    ) {
        if let Some(s) = self.slot(grads, v) {
            if scalar {
                s[0] += g.iter().enumerate().map(|(k, gv)| gv * factor(k)).sum::<f64>();
            } else {
                for (k, (sv, gv)) in s.iter_mut().zip(g).enumerate() {
                    *sv += gv * factor(k);
                }
            }
        }
    }

    fn backprop_node(&self, node: &Node, g: &[f64], grads: &mut [Option<Vec<f64>>]) {
        let y = node.value.data();
        match &node.op {
            Op::Leaf => {}
            Op::MatMul(a, b) => {
                let (m, k) = self.value(*a).dims2().unwrap_or((0, 0));
                let n = node.value.shape()[1];
                if self.nodes[a.0].requires_grad {
                    let bd = self.value(*b).data();
                    if let Some(s) = self.slot(grads, *a) {
                        matmul_a_bt_acc(s, g, bd, m, k, n);
                    }
                }
                if self.nodes[b.0].requires_grad {
                    let ad = self.value(*a).data();
                    if let Some(s) = self.slot(grads, *b) {
                        matmul_at_b_acc(s, ad, g, m, k, n);
                    }
                }
            }
            Op::Transpose(a) => {
                let (r, c) = self.value(*a).dims2().unwrap_or((0, 0));
                if let Some(s) = self.slot(grads, *a) {
                    for i in 0..r {
                        for j in 0..c {
                            s[i * c + j] += g[j * r + i];
                        }
                    }
                }
            }
            Op::Add(a, b) | Op::Sub(a, b) => {
                let sign = if matches!(node.op, Op::Sub(..)) { -1.0 } else { 1.0 };
                let a_scalar = self.value(*a).len() != g.len();
                let b_scalar = self.value(*b).len() != g.len();
                self.accumulate_broadcast(grads, *a, g, a_scalar, |_| 1.0);
                self.accumulate_broadcast(grads, *b, g, b_scalar, |_| sign);
            }
            Op::Mul(a, b) => {
                let (da, db) = (self.value(*a).data(), self.value(*b).data());
                let a_scalar = da.len() != g.len();
                let b_scalar = db.len() != g.len();
                let pick = |d: &[f64], scalar: bool, k: usize| if scalar { d[0] } else { d[k] };
                self.accumulate_broadcast(grads, *a, g, a_scalar, |k| pick(db, b_scalar, k));
                self.accumulate_broadcast(grads, *b, g, b_scalar, |k| pick(da, a_scalar, k));
            }
            Op::Scale(a, f) => {
                if let Some(s) = self.slot(grads, *a) {
                    for (sv, gv) in s.iter_mut().zip(g) {
                        *sv += gv * f;
                    }
                }
            }
            Op::Sigmoid(a) => self.unary_back(grads, *a, g, |k| y[k] * (1.0 - y[k])),
            Op::Tanh(a) => self.unary_back(grads, *a, g, |k| 1.0 - y[k] * y[k]),
            Op::Relu(a) => {
                let x = self.value(*a).data();
                self.unary_back(grads, *a, g, |k| if x[k] > 0.0 { 1.0 } else { 0.0 })
            }
            Op::Exp(a) => self.unary_back(grads, *a, g, |k| y[k]),
            Op::SoftmaxRows(a) => {
                let (_, c) = self.rows_cols(*a);
                if let Some(s) = self.slot(grads, *a) {
                    for ((srow, grow), yrow) in s.chunks_mut(c).zip(g.chunks(c)).zip(y.chunks(c)) {
                        let dot: f64 = grow.iter().zip(yrow).map(|(gv, yv)| gv * yv).sum();
                        for ((sv, gv), yv) in srow.iter_mut().zip(grow).zip(yrow) {
                            *sv += yv * (gv - dot);
                        }
                    }
                }
            }
            Op::LayerNormRows(a, inv) => {
                let (_, c) = self.rows_cols(*a);
                let cf = c as f64;
                if let Some(s) = self.slot(grads, *a) {
                    let rows = s.chunks_mut(c).zip(g.chunks(c)).zip(y.chunks(c)).zip(inv);
                    for (((srow, grow), yrow), inv_std) in rows {
                        let mean_g = grow.iter().sum::<f64>() / cf;
                        let mean_gy = grow.iter().zip(yrow).map(|(a, b)| a * b).sum::<f64>() / cf;
                        for ((sv, gv), yv) in srow.iter_mut().zip(grow).zip(yrow) {
                            *sv += inv_std * (gv - mean_g - yv * mean_gy);
                        }
                    }
                }
            }
            Op::ShiftRows(a, shift) => {
                let (r, c) = self.value(*a).dims2().unwrap_or((0, 0));
                if let Some(s) = self.slot(grads, *a) {
                    if *shift < r {
                        for (sv, gv) in s[..(r - shift) * c].iter_mut().zip(&g[shift * c..]) {
                            *sv += gv;
                        }
                    }
                }
            }
            Op::SliceRows(a, start) => {
                let c = self.value(*a).shape()[1];
                if let Some(s) = self.slot(grads, *a) {
                    for (sv, gv) in s[start * c..start * c + g.len()].iter_mut().zip(g) {
                        *sv += gv;
                    }
                }
            }
            Op::SliceCols(a, start) => {
                let c = self.value(*a).shape()[1];
                let len = node.value.shape()[1];
                if let Some(s) = self.slot(grads, *a) {
                    for (srow, grow) in s.chunks_mut(c).zip(g.chunks(len)) {
                        for (sv, gv) in srow[*start..start + len].iter_mut().zip(grow) {
                            *sv += gv;
                        }
                    }
                }
            }
            Op::ConcatRows(parts) => {
                let mut offset = 0;
                for p in parts {
                    let len = self.value(*p).len();
                    if let Some(s) = self.slot(grads, *p) {
                        for (sv, gv) in s.iter_mut().zip(&g[offset..offset + len]) {
                            *sv += gv;
                        }
                    }
                    offset += len;
                }
            }
            Op::Gather(a, indices) => {
                if let Some(s) = self.slot(grads, *a) {
                    for (&i, gv) in indices.iter().zip(g) {
                        s[i] += gv;
                    }
                }
            }
            Op::SumBlocks(a) => {
                let m = g.len();
                if let Some(s) = self.slot(grads, *a) {
                    for block in s.chunks_mut(m) {
                        for (sv, gv) in block.iter_mut().zip(g) {
                            *sv += gv;
                        }
                    }
                }
            }
            Op::TileRows(a) => {
                if let Some(s) = self.slot(grads, *a) {
                    let m = s.len();
                    for block in g.chunks(m) {
                        for (sv, gv) in s.iter_mut().zip(block) {
                            *sv += gv;
                        }
                    }
                }
            }
            Op::Reshape(a) => {
                if let Some(s) = self.slot(grads, *a) {
                    for (sv, gv) in s.iter_mut().zip(g) {
                        *sv += gv;
                    }
                }
            }
            Op::Sum(a) => {
                if let Some(s) = self.slot(grads, *a) {
                    for sv in s.iter_mut() {
                        *sv += g[0];
                    }
                }
            }
            Op::CrossEntropy {
                logits,
                labels,
                probs,
            } => {
                let c = probs.len() / labels.len();
                let scale = g[0] / labels.len() as f64;
                if let Some(s) = self.slot(grads, *logits) {
                    for (b, &label) in labels.iter().enumerate() {
                        for j in 0..c {
                            let onehot = if j == label { 1.0 } else { 0.0 };
                            s[b * c + j] += scale * (probs[b * c + j] - onehot);
                        }
                    }
                }
            }
        }
    }

    fn unary_back(&self, grads: &mut [Option<Vec<f64>>], a: Var, g: &[f64], d: impl Fn(usize) -> f64) {
        if let Some(s) = self.slot(grads, a) {
            for (k, (sv, gv)) in s.iter_mut().zip(g).enumerate() {
                *sv += gv * d(k);
            }
        }
    }
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

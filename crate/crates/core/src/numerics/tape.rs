//! Reverse-mode differentiation over [`Matrix`] values.
//!
//! Nodes are appended in evaluation order, so node index order is a
//! topological order and the backward sweep walks indices in reverse.

use std::collections::HashMap;

use super::ops::{self, gelu, gelu_grad};
use super::{Gradients, Mask, Matrix, ParamId, ParamStore};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

enum Op<T> {
    Constant,
    Param(ParamId),
    MatMul(Var, Var),
    MatMulBT(Var, Var),
    Transpose(Var),
    Add(Var, Var),
    AddRow(Var, Var),
    Scale(Var, T),
    Softmax(Var),
    MaxPool { x: Var, argmax: Vec<usize> },
    MeanPool { x: Var, mask: Mask },
    LayerNorm { x: Var, gain: Var, bias: Var, normed: Matrix<T>, inv_std: Vec<T> },
    Gelu(Var),
    Gather { table: Var, ids: Vec<usize> },
    SliceCols { x: Var, start: usize },
    ConcatCols(Vec<Var>),
    CrossEntropy { logits: Var, gold: usize },
    Sum(Var),
}

struct Node<T> {
    value: Matrix<T>,
    op: Op<T>,
}

pub struct Tape<T> {
    nodes: Vec<Node<T>>,
    param_vars: HashMap<ParamId, Var>,
}

impl<T: Scalar> Default for Tape<T> {
    fn default() -> Self {
        Tape { nodes: Vec::new(), param_vars: HashMap::new() }
    }
}

impl<T: Scalar> Tape<T> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Matrix<T> {
        &self.nodes[v.0].value
    }

    /// The scalar held by a 1×1 node.
    pub fn scalar(&self, v: Var) -> T {
        self.nodes[v.0].value.data()[0]
    }

    fn push(&mut self, value: Matrix<T>, op: Op<T>) -> Result<Var> {
        if !value.is_finite() {
            return Err(Error::Numeric(format!("non-finite value produced by {}", op.name())));
        }
        self.nodes.push(Node { value, op });
        Ok(Var(self.nodes.len() - 1))
    }

    pub fn constant(&mut self, value: Matrix<T>) -> Result<Var> {
        self.push(value, Op::Constant)
    }

    /// Leaf for a trainable parameter; repeated calls return the same node.
    pub fn param(&mut self, store: &ParamStore<T>, id: ParamId) -> Var {
        if let Some(&v) = self.param_vars.get(&id) {
            return v;
        }
        self.nodes.push(Node { value: store.get(id).clone(), op: Op::Param(id) });
        let v = Var(self.nodes.len() - 1);
        self.param_vars.insert(id, v);
        v
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let out = self.value(a).matmul(self.value(b))?;
        self.push(out, Op::MatMul(a, b))
    }

    /// `a · bᵀ`
    pub fn matmul_bt(&mut self, a: Var, b: Var) -> Result<Var> {
        let out = self.value(a).matmul_bt(self.value(b))?;
        self.push(out, Op::MatMulBT(a, b))
    }

    pub fn transpose(&mut self, a: Var) -> Result<Var> {
        let out = self.value(a).transpose();
        self.push(out, Op::Transpose(a))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let out = self.value(a).add(self.value(b))?;
        self.push(out, Op::Add(a, b))
    }

    /// Adds the 1×n row `bias` to every row of `a`.
    pub fn add_row(&mut self, a: Var, bias: Var) -> Result<Var> {
        let (x, b) = (self.value(a), self.value(bias));
        if b.rows() != 1 || b.cols() != x.cols() {
            return Err(Error::shape("add_row", format!("{:?} + {:?}", x.shape(), b.shape())));
        }
        let mut out = x.clone();
        for i in 0..out.rows() {
            for (o, &v) in out.row_mut(i).iter_mut().zip(b.row(0)) {
                *o = *o + v;
            }
        }
        self.push(out, Op::AddRow(a, bias))
    }

    pub fn scale(&mut self, a: Var, c: T) -> Result<Var> {
        let out = self.value(a).scale(c);
        self.push(out, Op::Scale(a, c))
    }

    pub fn masked_softmax(&mut self, a: Var, col_mask: &Mask) -> Result<Var> {
        let out = ops::masked_softmax(self.value(a), col_mask)?;
        self.push(out, Op::Softmax(a))
    }

    pub fn masked_max_pool(&mut self, x: Var, row_mask: &Mask) -> Result<Var> {
        let (out, argmax) = ops::masked_max_pool_with_argmax(self.value(x), row_mask)?;
        self.push(out, Op::MaxPool { x, argmax })
    }

    pub fn mean_pool_rows(&mut self, x: Var, row_mask: &Mask) -> Result<Var> {
        let out = ops::mean_pool_rows(self.value(x), row_mask)?;
        self.push(out, Op::MeanPool { x, mask: row_mask.clone() })
    }

    pub fn layer_norm(&mut self, x: Var, gain: Var, bias: Var) -> Result<Var> {
        let (normed, inv_std) = ops::normalize_rows(self.value(x));
        let (g, b) = (self.value(gain), self.value(bias));
        if g.shape() != (1, normed.cols()) || b.shape() != (1, normed.cols()) {
            return Err(Error::shape("layer_norm", "gain/bias must be 1×d"));
        }
        let out = Matrix::from_fn(normed.rows(), normed.cols(), |i, j| {
            normed.get(i, j) * g.get(0, j) + b.get(0, j)
        });
        self.push(out, Op::LayerNorm { x, gain, bias, normed, inv_std })
    }

    pub fn gelu(&mut self, x: Var) -> Result<Var> {
        let out = self.value(x).map(|v| T::narrow(gelu(v.widen())));
        self.push(out, Op::Gelu(x))
    }

    /// Rows of `table` selected by `ids`.
    pub fn gather(&mut self, table: Var, ids: &[usize]) -> Result<Var> {
        let t = self.value(table);
        if let Some(&bad) = ids.iter().find(|&&i| i >= t.rows()) {
            return Err(Error::InvalidInput(format!("row {bad} outside table of {}", t.rows())));
        }
        let mut out = Matrix::zeros(ids.len(), t.cols());
        for (r, &id) in ids.iter().enumerate() {
            out.row_mut(r).copy_from_slice(t.row(id));
        }
        self.push(out, Op::Gather { table, ids: ids.to_vec() })
    }

    pub fn slice_cols(&mut self, x: Var, start: usize, len: usize) -> Result<Var> {
        let out = self.value(x).slice_cols(start, len)?;
        self.push(out, Op::SliceCols { x, start })
    }

    pub fn concat_cols(&mut self, parts: &[Var]) -> Result<Var> {
        let mats: Vec<&Matrix<T>> = parts.iter().map(|&p| self.value(p)).collect();
        let out = Matrix::concat_cols(&mats)?;
        self.push(out, Op::ConcatCols(parts.to_vec()))
    }

    /// `−log softmax(logits)[gold]` for a 1×C row of logits.
    pub fn cross_entropy(&mut self, logits: Var, gold: usize) -> Result<Var> {
        let l = self.value(logits);
        if l.rows() != 1 || gold >= l.cols() {
            return Err(Error::shape("cross_entropy", format!("{:?} with gold {gold}", l.shape())));
        }
        let row = l.row(0);
        let max = row.iter().map(|v| v.widen()).fold(f64::NEG_INFINITY, f64::max);
        let lse = max + row.iter().map(|v| (v.widen() - max).exp()).sum::<f64>().ln();
        let loss = lse - row[gold].widen();
        self.push(Matrix::row_vector(vec![T::narrow(loss)]), Op::CrossEntropy { logits, gold })
    }

    /// Sum of all entries, as 1×1.
    pub fn sum(&mut self, x: Var) -> Result<Var> {
        let s = self.value(x).data().iter().map(|v| v.widen()).sum::<f64>();
        self.push(Matrix::row_vector(vec![T::narrow(s)]), Op::Sum(x))
    }

    /// Back-propagates from the 1×1 node `loss` and returns parameter gradients.
    pub fn backward(&self, loss: Var) -> Result<Gradients<T>> {
        if self.value(loss).shape() != (1, 1) {
            return Err(Error::shape("backward", "loss must be 1×1"));
        }
        let mut grads: Vec<Option<Matrix<T>>> = Vec::new();
        grads.resize_with(loss.0 + 1, || None);
        grads[loss.0] = Some(Matrix::row_vector(vec![T::one()]));
        let mut out = Gradients::empty(0);

        for idx in (0..=loss.0).rev() {
            let Some(g) = grads[idx].take() else { continue };
            let node = &self.nodes[idx];
            match &node.op {
                Op::Constant => {}
                Op::Param(id) => out.accumulate(*id, g),
                Op::MatMul(a, b) => {
                    let da = g.matmul_bt(self.value(*b))?;
                    let db = self.value(*a).matmul_at(&g)?;
                    acc(&mut grads, *a, da);
                    acc(&mut grads, *b, db);
                }
                Op::MatMulBT(a, b) => {
                    let da = g.matmul(self.value(*b))?;
                    let db = g.matmul_at(self.value(*a))?;
                    acc(&mut grads, *a, da);
                    acc(&mut grads, *b, db);
                }
                Op::Transpose(a) => acc(&mut grads, *a, g.transpose()),
                Op::Add(a, b) => {
                    acc(&mut grads, *a, g.clone());
                    acc(&mut grads, *b, g);
                }
                Op::AddRow(a, bias) => {
                    let mut db = vec![0.0f64; g.cols()];
                    for i in 0..g.rows() {
                        for (s, &v) in db.iter_mut().zip(g.row(i)) {
                            *s += v.widen();
                        }
                    }
                    acc(&mut grads, *bias, Matrix::row_vector(db.into_iter().map(T::narrow).collect()));
                    acc(&mut grads, *a, g);
                }
                Op::Scale(a, c) => acc(&mut grads, *a, g.scale(*c)),
                Op::Softmax(a) => {
                    let y = &node.value;
                    let mut dx = Matrix::zeros(y.rows(), y.cols());
                    for i in 0..y.rows() {
                        let (yr, gr) = (y.row(i), g.row(i));
                        let inner: f64 = yr.iter().zip(gr).map(|(a, b)| a.widen() * b.widen()).sum();
                        for ((o, &yv), &gv) in dx.row_mut(i).iter_mut().zip(yr).zip(gr) {
                            *o = T::narrow(yv.widen() * (gv.widen() - inner));
                        }
                    }
                    acc(&mut grads, *a, dx);
                }
                Op::MaxPool { x, argmax } => {
                    let src = self.value(*x);
                    let mut dx = Matrix::zeros(src.rows(), src.cols());
                    for (j, &r) in argmax.iter().enumerate() {
                        dx.set(r, j, dx.get(r, j) + g.get(0, j));
                    }
                    acc(&mut grads, *x, dx);
                }
                Op::MeanPool { x, mask } => {
                    let src = self.value(*x);
                    let inv = T::narrow(1.0 / mask.valid_count() as f64);
                    let mut dx = Matrix::zeros(src.rows(), src.cols());
                    for i in mask.valid_indices() {
                        for (o, &v) in dx.row_mut(i).iter_mut().zip(g.row(0)) {
                            *o = v * inv;
                        }
                    }
                    acc(&mut grads, *x, dx);
                }
                Op::LayerNorm { x, gain, bias, normed, inv_std } => {
                    let gv = self.value(*gain);
                    let (rows, cols) = normed.shape();
                    let n = cols as f64;
                    let mut dgain = vec![0.0f64; cols];
                    let mut dbias = vec![0.0f64; cols];
                    let mut dx = Matrix::zeros(rows, cols);
                    let mut dxhat = vec![0.0f64; cols];
                    for i in 0..rows {
                        let (gr, xr) = (g.row(i), normed.row(i));
                        let mut sum_d = 0.0;
                        let mut sum_dx = 0.0;
                        for j in 0..cols {
                            let gj = gr[j].widen();
                            let xh = xr[j].widen();
                            dgain[j] += gj * xh;
                            dbias[j] += gj;
                            dxhat[j] = gj * gv.get(0, j).widen();
                            sum_d += dxhat[j];
                            sum_dx += dxhat[j] * xh;
                        }
                        let r = inv_std[i].widen();
                        for (j, o) in dx.row_mut(i).iter_mut().enumerate() {
                            let xh = xr[j].widen();
                            *o = T::narrow(r / n * (n * dxhat[j] - sum_d - xh * sum_dx));
                        }
                    }
                    acc(&mut grads, *x, dx);
                    acc(&mut grads, *gain, Matrix::row_vector(dgain.into_iter().map(T::narrow).collect()));
                    acc(&mut grads, *bias, Matrix::row_vector(dbias.into_iter().map(T::narrow).collect()));
                }
                Op::Gelu(x) => {
                    let dx = self
                        .value(*x)
                        .zip_with(&g, "gelu", |v, gv| T::narrow(gelu_grad(v.widen()) * gv.widen()))?;
                    acc(&mut grads, *x, dx);
                }
                Op::Gather { table, ids } => {
                    let t = self.value(*table);
                    let mut dt = Matrix::zeros(t.rows(), t.cols());
                    for (r, &id) in ids.iter().enumerate() {
                        for (o, &v) in dt.row_mut(id).iter_mut().zip(g.row(r)) {
                            *o = *o + v;
                        }
                    }
                    acc(&mut grads, *table, dt);
                }
                Op::SliceCols { x, start } => {
                    let src = self.value(*x);
                    let mut dx = Matrix::zeros(src.rows(), src.cols());
                    for i in 0..g.rows() {
                        dx.row_mut(i)[*start..*start + g.cols()].copy_from_slice(g.row(i));
                    }
                    acc(&mut grads, *x, dx);
                }
                Op::ConcatCols(parts) => {
                    let mut offset = 0;
                    for &p in parts {
                        let w = self.value(p).cols();
                        acc(&mut grads, p, g.slice_cols(offset, w)?);
                        offset += w;
                    }
                }
                Op::CrossEntropy { logits, gold } => {
                    let row = self.value(*logits).row(0);
                    let max = row.iter().map(|v| v.widen()).fold(f64::NEG_INFINITY, f64::max);
                    let exps: Vec<f64> = row.iter().map(|v| (v.widen() - max).exp()).collect();
                    let total: f64 = exps.iter().sum();
                    let scale = g.get(0, 0).widen();
                    let dl = exps
                        .iter()
                        .enumerate()
                        .map(|(j, e)| {
                            let p = e / total - if j == *gold { 1.0 } else { 0.0 };
                            T::narrow(p * scale)
                        })
                        .collect();
                    acc(&mut grads, *logits, Matrix::row_vector(dl));
                }
                Op::Sum(x) => {
                    let src = self.value(*x);
                    let gv = g.get(0, 0);
                    acc(&mut grads, *x, Matrix::from_fn(src.rows(), src.cols(), |_, _| gv));
                }
            }
        }
        Ok(out)
    }
}

fn acc<T: Scalar>(grads: &mut [Option<Matrix<T>>], v: Var, g: Matrix<T>) {
    match &mut grads[v.0] {
        Some(existing) => existing.add_assign(&g).expect("gradient shape"),
        slot @ None => *slot = Some(g),
    }
}

impl<T> Op<T> {
    fn name(&self) -> &'static str {
        match self {
            Op::Constant => "constant",
            Op::Param(_) => "param",
            Op::MatMul(..) => "matmul",
            Op::MatMulBT(..) => "matmul_bt",
            Op::Transpose(_) => "transpose",
            Op::Add(..) => "add",
            Op::AddRow(..) => "add_row",
            Op::Scale(..) => "scale",
            Op::Softmax(_) => "masked_softmax",
            Op::MaxPool { .. } => "masked_max_pool",
            Op::MeanPool { .. } => "mean_pool_rows",
            Op::LayerNorm { .. } => "layer_norm",
            Op::Gelu(_) => "gelu",
            Op::Gather { .. } => "gather",
            Op::SliceCols { .. } => "slice_cols",
            Op::ConcatCols(_) => "concat_cols",
            Op::CrossEntropy { .. } => "cross_entropy",
            Op::Sum(_) => "sum",
        }
    }
}

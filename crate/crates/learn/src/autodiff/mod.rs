//! Tape-based reverse-mode differentiation over dense `f64` tensors.
//!
//! A [`Graph`] records every operation as a node holding its forward value.
//! Nodes are appended in evaluation order, so walking them backwards is a
//! reverse topological order and [`Graph::backward`] visits each node once.
//! Only bias addition broadcasts; every other binary op needs equal shapes.

mod checkpoint;
mod gradcheck;
mod params;
mod tensor;

pub use checkpoint::{load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint, Checkpoint, CHECKPOINT_VERSION};
pub use gradcheck::{grad_check, GradCheckReport};
pub use params::ParamStore;
pub use tensor::Tensor;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum AutodiffError {
    #[error("shape mismatch in {op}: {a:?} vs {b:?}")]
    Shape {
        op: &'static str,
        a: Vec<usize>,
        b: Vec<usize>,
    },
    #[error("{op}: {msg}")]
    Invalid { op: &'static str, msg: String },
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("checkpoint header: {0}")]
    Json(#[from] serde_json::Error),
}

/// Handle to a node of a [`Graph`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(usize);

#[derive(Clone, Debug)]
enum Op {
    Leaf,
    MatMul(Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    AddBias(Var, Var),
    MulCols(Var, Var),
    Scale(Var, f64),
    SoftmaxRows(Var),
    LayerNorm { x: Var, inv_std: Vec<f64> },
    Gelu(Var),
    Sigmoid(Var),
    ConcatCols(Vec<Var>),
    ConcatRows(Vec<Var>),
    SliceCols(Var, usize, usize),
    SliceRows(Var, usize),
    Transpose(Var),
    Mean(Var),
    Sum(Var),
    Mse(Var, Var),
}

#[derive(Clone, Debug)]
struct Node {
    value: Tensor,
    op: Op,
    needs_grad: bool,
    param: Option<usize>,
}

#[derive(Clone, Debug, Default)]
pub struct Graph {
    nodes: Vec<Node>,
}

const GELU_C: f64 = 0.797_884_560_802_865_4; // sqrt(2 / pi)
const GELU_A: f64 = 0.044_715;

fn gelu(x: f64) -> f64 {
    0.5 * x * (1.0 + (GELU_C * (x + GELU_A * x * x * x)).tanh())
}

fn gelu_grad(x: f64) -> f64 {
    let t = (GELU_C * (x + GELU_A * x * x * x)).tanh();
    0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * GELU_C * (1.0 + 3.0 * GELU_A * x * x)
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `c += a (m x k) * b (k x n)`.
fn matmul_acc(a: &[f64], b: &[f64], c: &mut [f64], m: usize, k: usize, n: usize) {
    for i in 0..m {
        let crow = &mut c[i * n..(i + 1) * n];
        for p in 0..k {
            let aip = a[i * k + p];
            if aip == 0.0 {
                continue;
            }
            let brow = &b[p * n..(p + 1) * n];
            for (cv, bv) in crow.iter_mut().zip(brow) {
                *cv += aip * bv;
            }
        }
    }
}

fn is_matrix(t: &Tensor) -> bool {
    t.shape.len() == 2
}

impl Graph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: Tensor, op: Op, parents: &[Var]) -> Var {
        let needs_grad = parents.iter().any(|p| self.nodes[p.0].needs_grad);
        self.nodes.push(Node {
            value,
            op,
            needs_grad,
            param: None,
        });
        Var(self.nodes.len() - 1)
    }

    /// A leaf that receives no gradient.
    pub fn constant(&mut self, t: Tensor) -> Var {
        self.nodes.push(Node {
            value: t,
            op: Op::Leaf,
            needs_grad: false,
            param: None,
        });
        Var(self.nodes.len() - 1)
    }

    /// A differentiable leaf.
    pub fn input(&mut self, t: Tensor) -> Var {
        self.nodes.push(Node {
            value: t,
            op: Op::Leaf,
            needs_grad: true,
            param: None,
        });
        Var(self.nodes.len() - 1)
    }

    /// A differentiable leaf tied to parameter slot `id`.
    pub fn param(&mut self, t: &Tensor, id: usize) -> Var {
        let v = self.input(t.clone());
        self.nodes[v.0].param = Some(id);
        v
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    fn shape(&self, v: Var) -> &[usize] {
        &self.nodes[v.0].value.shape
    }

    fn same_shape(&self, op: &'static str, a: Var, b: Var) -> Result<(), AutodiffError> {
        if self.shape(a) != self.shape(b) {
            return Err(AutodiffError::Shape {
                op,
                a: self.shape(a).to_vec(),
                b: self.shape(b).to_vec(),
            });
        }
        Ok(())
    }

    fn need_matrix(&self, op: &'static str, a: Var) -> Result<(usize, usize), AutodiffError> {
        let t = self.value(a);
        if !is_matrix(t) {
            return Err(AutodiffError::Invalid {
                op,
                msg: format!("expected a matrix, got shape {:?}", t.shape),
            });
        }
        Ok((t.shape[0], t.shape[1]))
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var, AutodiffError> {
        let (m, k) = self.need_matrix("matmul", a)?;
        let (k2, n) = self.need_matrix("matmul", b)?;
        if k != k2 {
            return Err(AutodiffError::Shape {
                op: "matmul",
                a: vec![m, k],
                b: vec![k2, n],
            });
        }
        let mut out = vec![0.0; m * n];
        matmul_acc(&self.value(a).data, &self.value(b).data, &mut out, m, k, n);
        Ok(self.push(Tensor { shape: vec![m, n], data: out }, Op::MatMul(a, b), &[a, b]))
    }

    fn zip(&mut self, op: &'static str, a: Var, b: Var, f: impl Fn(f64, f64) -> f64, node: Op) -> Result<Var, AutodiffError> {
        self.same_shape(op, a, b)?;
        let (x, y) = (self.value(a), self.value(b));
        let data = x.data.iter().zip(&y.data).map(|(p, q)| f(*p, *q)).collect();
        let shape = x.shape.clone();
        Ok(self.push(Tensor { shape, data }, node, &[a, b]))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var, AutodiffError> {
        self.zip("add", a, b, |x, y| x + y, Op::Add(a, b))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var, AutodiffError> {
        self.zip("sub", a, b, |x, y| x - y, Op::Sub(a, b))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var, AutodiffError> {
        self.zip("mul", a, b, |x, y| x * y, Op::Mul(a, b))
    }

    fn row_broadcast(
        &mut self,
        op: &'static str,
        a: Var,
        v: Var,
        f: impl Fn(f64, f64) -> f64,
        node: Op,
    ) -> Result<Var, AutodiffError> {
        let (_, n) = self.need_matrix(op, a)?;
        if self.shape(v) != [n] {
            return Err(AutodiffError::Shape {
                op,
                a: self.shape(a).to_vec(),
                b: self.shape(v).to_vec(),
            });
        }
        let (x, b) = (self.value(a), self.value(v));
        let data = x.data.iter().enumerate().map(|(k, p)| f(*p, b.data[k % n])).collect();
        let shape = x.shape.clone();
        Ok(self.push(Tensor { shape, data }, node, &[a, v]))
    }

    /// Adds a length-`n` vector to every row of an `m x n` matrix.
    pub fn add_bias(&mut self, a: Var, bias: Var) -> Result<Var, AutodiffError> {
        self.row_broadcast("add_bias", a, bias, |x, b| x + b, Op::AddBias(a, bias))
    }

    /// Multiplies every row of an `m x n` matrix elementwise by a length-`n` vector.
    pub fn mul_cols(&mut self, a: Var, gain: Var) -> Result<Var, AutodiffError> {
        self.row_broadcast("mul_cols", a, gain, |x, g| x * g, Op::MulCols(a, gain))
    }

    pub fn scale(&mut self, a: Var, c: f64) -> Var {
        let x = self.value(a);
        let t = Tensor {
            shape: x.shape.clone(),
            data: x.data.iter().map(|v| v * c).collect(),
        };
        self.push(t, Op::Scale(a, c), &[a])
    }

    fn map(&mut self, a: Var, f: impl Fn(f64) -> f64, node: Op) -> Var {
        let x = self.value(a);
        let t = Tensor {
            shape: x.shape.clone(),
            data: x.data.iter().map(|v| f(*v)).collect(),
        };
        self.push(t, node, &[a])
    }

    pub fn gelu(&mut self, a: Var) -> Var {
        self.map(a, gelu, Op::Gelu(a))
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        self.map(a, sigmoid, Op::Sigmoid(a))
    }

    pub fn softmax_rows(&mut self, a: Var) -> Result<Var, AutodiffError> {
        let (m, n) = self.need_matrix("softmax_rows", a)?;
        let x = &self.value(a).data;
        let mut out = vec![0.0; m * n];
        for i in 0..m {
            let row = &x[i * n..(i + 1) * n];
            let mx = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let mut s = 0.0;
            for j in 0..n {
                let e = (row[j] - mx).exp();
                out[i * n + j] = e;
                s += e;
            }
            for v in &mut out[i * n..(i + 1) * n] {
                *v /= s;
            }
        }
        Ok(self.push(Tensor { shape: vec![m, n], data: out }, Op::SoftmaxRows(a), &[a]))
    }

    /// Normalizes each row to zero mean and unit variance (`var + eps` under the root).
    pub fn layer_norm(&mut self, a: Var, eps: f64) -> Result<Var, AutodiffError> {
        let (m, n) = self.need_matrix("layer_norm", a)?;
        let x = &self.value(a).data;
        let mut out = vec![0.0; m * n];
        let mut inv_std = vec![0.0; m];
        for i in 0..m {
            let row = &x[i * n..(i + 1) * n];
            let mean = row.iter().sum::<f64>() / n as f64;
            let var = row.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
            let is = 1.0 / (var + eps).sqrt();
            inv_std[i] = is;
            for j in 0..n {
                out[i * n + j] = (row[j] - mean) * is;
            }
        }
        Ok(self.push(Tensor { shape: vec![m, n], data: out }, Op::LayerNorm { x: a, inv_std }, &[a]))
    }

    pub fn concat_cols(&mut self, parts: &[Var]) -> Result<Var, AutodiffError> {
        let m = self.need_matrix("concat_cols", parts[0])?.0;
        let mut widths = Vec::with_capacity(parts.len());
        for &p in parts {
            let (r, c) = self.need_matrix("concat_cols", p)?;
            if r != m {
                return Err(AutodiffError::Shape {
                    op: "concat_cols",
                    a: self.shape(parts[0]).to_vec(),
                    b: self.shape(p).to_vec(),
                });
            }
            widths.push(c);
        }
        let n: usize = widths.iter().sum();
        let mut out = Vec::with_capacity(m * n);
        for i in 0..m {
            for &p in parts {
                out.extend_from_slice(self.value(p).row(i));
            }
        }
        Ok(self.push(Tensor { shape: vec![m, n], data: out }, Op::ConcatCols(parts.to_vec()), parts))
    }

    pub fn concat_rows(&mut self, parts: &[Var]) -> Result<Var, AutodiffError> {
        let n = self.need_matrix("concat_rows", parts[0])?.1;
        let mut m = 0;
        let mut out = Vec::new();
        for &p in parts {
            let (r, c) = self.need_matrix("concat_rows", p)?;
            if c != n {
                return Err(AutodiffError::Shape {
                    op: "concat_rows",
                    a: self.shape(parts[0]).to_vec(),
                    b: self.shape(p).to_vec(),
                });
            }
            m += r;
            out.extend_from_slice(&self.value(p).data);
        }
        Ok(self.push(Tensor { shape: vec![m, n], data: out }, Op::ConcatRows(parts.to_vec()), parts))
    }

    pub fn slice_cols(&mut self, a: Var, start: usize, end: usize) -> Result<Var, AutodiffError> {
        let (m, n) = self.need_matrix("slice_cols", a)?;
        if start >= end || end > n {
            return Err(AutodiffError::Invalid {
                op: "slice_cols",
                msg: format!("range {start}..{end} invalid for {n} columns"),
            });
        }
        let x = self.value(a);
        let mut out = Vec::with_capacity(m * (end - start));
        for i in 0..m {
            out.extend_from_slice(&x.row(i)[start..end]);
        }
        Ok(self.push(Tensor { shape: vec![m, end - start], data: out }, Op::SliceCols(a, start, end), &[a]))
    }

    pub fn slice_rows(&mut self, a: Var, start: usize, end: usize) -> Result<Var, AutodiffError> {
        let (m, n) = self.need_matrix("slice_rows", a)?;
        if start >= end || end > m {
            return Err(AutodiffError::Invalid {
                op: "slice_rows",
                msg: format!("range {start}..{end} invalid for {m} rows"),
            });
        }
        let data = self.value(a).data[start * n..end * n].to_vec();
        Ok(self.push(Tensor { shape: vec![end - start, n], data }, Op::SliceRows(a, start), &[a]))
    }

    pub fn transpose(&mut self, a: Var) -> Result<Var, AutodiffError> {
        let (m, n) = self.need_matrix("transpose", a)?;
        let x = &self.value(a).data;
        let mut out = vec![0.0; m * n];
        for i in 0..m {
            for j in 0..n {
                out[j * m + i] = x[i * n + j];
            }
        }
        Ok(self.push(Tensor { shape: vec![n, m], data: out }, Op::Transpose(a), &[a]))
    }

    pub fn mean(&mut self, a: Var) -> Var {
        let x = self.value(a);
        let v = x.data.iter().sum::<f64>() / x.numel().max(1) as f64;
        self.push(Tensor::scalar(v), Op::Mean(a), &[a])
    }

    pub fn sum(&mut self, a: Var) -> Var {
        let v = self.value(a).data.iter().sum::<f64>();
        self.push(Tensor::scalar(v), Op::Sum(a), &[a])
    }

    /// Mean squared error over all elements.
    pub fn mse(&mut self, pred: Var, target: Var) -> Result<Var, AutodiffError> {
        self.same_shape("mse", pred, target)?;
        let (p, t) = (self.value(pred), self.value(target));
        let n = p.numel().max(1) as f64;
        let v = p.data.iter().zip(&t.data).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / n;
        Ok(self.push(Tensor::scalar(v), Op::Mse(pred, target), &[pred, target]))
    }

    /// Gradients of the scalar `loss` with respect to every node.
    pub fn backward(&self, loss: Var) -> Result<Gradients, AutodiffError> {
        if self.value(loss).numel() != 1 {
            return Err(AutodiffError::Invalid {
                op: "backward",
                msg: format!("loss must be a scalar, got shape {:?}", self.shape(loss)),
            });
        }
        let mut grads: Vec<Option<Vec<f64>>> = vec![None; self.nodes.len()];
        grads[loss.0] = Some(vec![1.0]);
        for idx in (0..=loss.0).rev() {
            let node = &self.nodes[idx];
            if !node.needs_grad {
                continue;
            }
            let Some(g) = grads[idx].take() else { continue };
            self.propagate(node, &g, &mut grads);
            grads[idx] = Some(g);
        }
        Ok(Gradients {
            grads: grads
                .into_iter()
                .zip(&self.nodes)
                .map(|(g, n)| {
                    g.map(|data| Tensor {
                        shape: n.value.shape.clone(),
                        data,
                    })
                })
                .collect(),
            params: self.nodes.iter().map(|n| n.param).collect(),
        })
    }

    fn propagate(&self, node: &Node, g: &[f64], grads: &mut [Option<Vec<f64>>]) {
        let needs = |v: Var| self.nodes[v.0].needs_grad;
        let mut acc = |v: Var, f: &dyn Fn(&mut [f64])| {
            if needs(v) {
                let n = self.nodes[v.0].value.numel();
                let slot = grads[v.0].get_or_insert_with(|| vec![0.0; n]);
                f(slot);
            }
        };
        let val = |v: Var| &self.nodes[v.0].value;
        match &node.op {
            Op::Leaf => {}
            Op::MatMul(a, b) => {
                let (m, k) = (val(*a).shape[0], val(*a).shape[1]);
                let n = val(*b).shape[1];
                acc(*a, &|da| {
                    let bd = &val(*b).data;
                    for i in 0..m {
                        for p in 0..k {
                            let brow = &bd[p * n..(p + 1) * n];
                            let grow = &g[i * n..(i + 1) * n];
                            da[i * k + p] += grow.iter().zip(brow).map(|(x, y)| x * y).sum::<f64>();
                        }
                    }
                });
                acc(*b, &|db| {
                    let ad = &val(*a).data;
                    for i in 0..m {
                        let grow = &g[i * n..(i + 1) * n];
                        for p in 0..k {
                            let aip = ad[i * k + p];
                            if aip == 0.0 {
                                continue;
                            }
                            for (d, gv) in db[p * n..(p + 1) * n].iter_mut().zip(grow) {
                                *d += aip * gv;
                            }
                        }
                    }
                });
            }
            Op::Add(a, b) => {
                acc(*a, &|d| d.iter_mut().zip(g).for_each(|(x, y)| *x += y));
                acc(*b, &|d| d.iter_mut().zip(g).for_each(|(x, y)| *x += y));
            }
            Op::Sub(a, b) => {
                acc(*a, &|d| d.iter_mut().zip(g).for_each(|(x, y)| *x += y));
                acc(*b, &|d| d.iter_mut().zip(g).for_each(|(x, y)| *x -= y));
            }
            Op::Mul(a, b) => {
                acc(*a, &|d| {
                    for (k, x) in d.iter_mut().enumerate() {
                        *x += g[k] * val(*b).data[k];
                    }
                });
                acc(*b, &|d| {
                    for (k, x) in d.iter_mut().enumerate() {
                        *x += g[k] * val(*a).data[k];
                    }
                });
            }
            Op::AddBias(a, b) => {
                let n = val(*b).numel();
                acc(*a, &|d| d.iter_mut().zip(g).for_each(|(x, y)| *x += y));
                acc(*b, &|d| {
                    for (k, gv) in g.iter().enumerate() {
                        d[k % n] += gv;
                    }
                });
            }
            Op::MulCols(a, w) => {
                let n = val(*w).numel();
                acc(*a, &|d| {
                    for (k, x) in d.iter_mut().enumerate() {
                        *x += g[k] * val(*w).data[k % n];
                    }
                });
                acc(*w, &|d| {
                    for (k, gv) in g.iter().enumerate() {
                        d[k % n] += gv * val(*a).data[k];
                    }
                });
            }
            Op::Scale(a, c) => acc(*a, &|d| d.iter_mut().zip(g).for_each(|(x, y)| *x += c * y)),
            Op::SoftmaxRows(a) => {
                let y = &node.value.data;
                let n = node.value.shape[1];
                acc(*a, &|d| {
                    for (yr, (gr, dr)) in y.chunks(n).zip(g.chunks(n).zip(d.chunks_mut(n))) {
                        let dot: f64 = yr.iter().zip(gr).map(|(p, q)| p * q).sum();
                        for j in 0..n {
                            dr[j] += yr[j] * (gr[j] - dot);
                        }
                    }
                });
            }
            Op::LayerNorm { x, inv_std } => {
                let y = &node.value.data;
                let n = node.value.shape[1];
                acc(*x, &|d| {
                    for (i, (yr, (gr, dr))) in y.chunks(n).zip(g.chunks(n).zip(d.chunks_mut(n))).enumerate() {
                        let mg = gr.iter().sum::<f64>() / n as f64;
                        let mgy = gr.iter().zip(yr).map(|(p, q)| p * q).sum::<f64>() / n as f64;
                        for j in 0..n {
                            dr[j] += inv_std[i] * (gr[j] - mg - yr[j] * mgy);
                        }
                    }
                });
            }
            Op::Gelu(a) => acc(*a, &|d| {
                for (k, x) in d.iter_mut().enumerate() {
                    *x += g[k] * gelu_grad(val(*a).data[k]);
                }
            }),
            Op::Sigmoid(a) => {
                let y = &node.value.data;
                acc(*a, &|d| {
                    for (k, x) in d.iter_mut().enumerate() {
                        *x += g[k] * y[k] * (1.0 - y[k]);
                    }
                });
            }
            Op::ConcatCols(parts) => {
                let n = node.value.shape[1];
                let mut off = 0;
                for &p in parts {
                    let w = val(p).shape[1];
                    acc(p, &|d| {
                        for (i, dr) in d.chunks_mut(w).enumerate() {
                            for (j, x) in dr.iter_mut().enumerate() {
                                *x += g[i * n + off + j];
                            }
                        }
                    });
                    off += w;
                }
            }
            Op::ConcatRows(parts) => {
                let mut off = 0;
                for &p in parts {
                    let len = val(p).numel();
                    acc(p, &|d| d.iter_mut().zip(&g[off..off + len]).for_each(|(x, y)| *x += y));
                    off += len;
                }
            }
            Op::SliceCols(a, s, e) => {
                let n = val(*a).shape[1];
                let w = e - s;
                acc(*a, &|d| {
                    for (i, gr) in g.chunks(w).enumerate() {
                        for (j, gv) in gr.iter().enumerate() {
                            d[i * n + s + j] += gv;
                        }
                    }
                });
            }
            Op::SliceRows(a, s) => {
                let n = val(*a).shape[1];
                acc(*a, &|d| {
                    d[s * n..s * n + g.len()].iter_mut().zip(g).for_each(|(x, y)| *x += y);
                });
            }
            Op::Transpose(a) => {
                let (m, n) = (val(*a).shape[0], val(*a).shape[1]);
                acc(*a, &|d| {
                    for i in 0..m {
                        for j in 0..n {
                            d[i * n + j] += g[j * m + i];
                        }
                    }
                });
            }
            Op::Mean(a) => {
                let c = g[0] / val(*a).numel().max(1) as f64;
                acc(*a, &|d| d.iter_mut().for_each(|x| *x += c));
            }
            Op::Sum(a) => acc(*a, &|d| d.iter_mut().for_each(|x| *x += g[0])),
            Op::Mse(p, t) => {
                let n = val(*p).numel().max(1) as f64;
                let c = 2.0 * g[0] / n;
                acc(*p, &|d| {
                    for (k, x) in d.iter_mut().enumerate() {
                        *x += c * (val(*p).data[k] - val(*t).data[k]);
                    }
                });
                acc(*t, &|d| {
                    for (k, x) in d.iter_mut().enumerate() {
                        *x -= c * (val(*p).data[k] - val(*t).data[k]);
                    }
                });
            }
        }
    }
}

/// Result of [`Graph::backward`].
#[derive(Clone, Debug)]
pub struct Gradients {
    grads: Vec<Option<Tensor>>,
    params: Vec<Option<usize>>,
}

impl Gradients {
    pub fn get(&self, v: Var) -> Option<&Tensor> {
        self.grads[v.0].as_ref()
    }

    /// Gradient of `v`, zeros when nothing flowed into it.
    pub fn get_or_zeros(&self, v: Var, shape: &[usize]) -> Tensor {
        self.get(v).cloned().unwrap_or_else(|| Tensor::zeros(shape))
    }

    /// Adds every parameter-leaf gradient into `out[param id]` (scaled by `weight`).
    pub fn accumulate_params(&self, out: &mut [Tensor], weight: f64) {
        for (g, p) in self.grads.iter().zip(&self.params) {
            if let (Some(g), Some(id)) = (g, p) {
                for (o, v) in out[*id].data.iter_mut().zip(&g.data) {
                    *o += weight * v;
                }
            }
        }
    }
}

#[cfg(test)]
mod tests;

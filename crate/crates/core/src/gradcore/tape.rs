use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::GradError;

/// Dense row-major f64 matrix. Vectors are 1xN or Nx1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tensor {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Tensor {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "data length must match shape");
        Tensor { rows, cols, data }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Tensor { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn row_vec(data: Vec<f64>) -> Self {
        Tensor { rows: 1, cols: data.len(), data }
    }

    pub fn numel(&self) -> usize {
        self.rows * self.cols
    }

    pub fn shape_str(&self) -> String {
        format!("{}x{}", self.rows, self.cols)
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }
}

/// Handle to a node on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NodeId(usize);

enum Op {
    /// Leaf; gradient accumulates here.
    Input,
    MatMul(NodeId, NodeId),
    /// x [m,n] + b [1,n], broadcast over rows.
    AddBias(NodeId, NodeId),
    Relu(NodeId),
    /// Row-wise softmax.
    Softmax(NodeId),
    /// Column-wise concat of two tensors with equal row counts.
    Concat(NodeId, NodeId),
    /// Mean absolute error against a constant target.
    L1Loss(NodeId, Tensor),
    /// Per-class weighted cross entropy over logits, mean over the batch.
    WeightedCe {
        logits: NodeId,
        labels: Vec<usize>,
        weights: Vec<f64>,
    },
}

struct Node {
    op: Op,
    value: Tensor,
    grad: Vec<f64>,
}

/// A recorded computation. Build nodes forward, then call
/// [`Tape::backward`] once; gradients land in [`Tape::grad`].
#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

/// Parallelize matmuls only when the work is worth the fork.
const PAR_FLOPS_THRESHOLD: usize = 1 << 20;

fn matmul_values(a: &Tensor, b: &Tensor) -> Tensor {
    let (m, k, n) = (a.rows, a.cols, b.cols);
    let mut out = vec![0.0; m * n];
    let body = |i: usize, row_out: &mut [f64]| {
        let a_row = a.row(i);
        for (l, &av) in a_row.iter().enumerate() {
            if av == 0.0 {
                continue;
            }
            let b_row = b.row(l);
            for (o, &bv) in row_out.iter_mut().zip(b_row) {
                *o += av * bv;
            }
        }
    };
    if m * k * n >= PAR_FLOPS_THRESHOLD {
        out.par_chunks_mut(n).enumerate().for_each(|(i, row)| body(i, row));
    } else {
        for (i, row) in out.chunks_mut(n).enumerate() {
            body(i, row);
        }
    }
    Tensor::new(m, n, out)
}

/// dA = dC [m,n] @ B^T [n,k]
fn matmul_nt(dc: &Tensor, b: &Tensor) -> Tensor {
    let (m, n, k) = (dc.rows, dc.cols, b.rows);
    let mut out = vec![0.0; m * k];
    let body = |i: usize, row_out: &mut [f64]| {
        let dc_row = dc.row(i);
        for (j, o) in row_out.iter_mut().enumerate() {
            let b_row = b.row(j);
            *o = dc_row.iter().zip(b_row).map(|(x, y)| x * y).sum();
        }
    };
    if m * n * k >= PAR_FLOPS_THRESHOLD {
        out.par_chunks_mut(k).enumerate().for_each(|(i, row)| body(i, row));
    } else {
        for (i, row) in out.chunks_mut(k).enumerate() {
            body(i, row);
        }
    }
    Tensor::new(m, k, out)
}

/// dB = A^T [k,m] @ dC [m,n]
fn matmul_tn(a: &Tensor, dc: &Tensor) -> Tensor {
    let (m, k, n) = (a.rows, a.cols, dc.cols);
    let mut out = vec![0.0; k * n];
    // column-parallel would need a transpose; the k x n output is small for
    // MLP layers, so accumulate rows sequentially
    for i in 0..m {
        let a_row = a.row(i);
        let dc_row = dc.row(i);
        for (j, &av) in a_row.iter().enumerate() {
            if av == 0.0 {
                continue;
            }
            let out_row = &mut out[j * n..(j + 1) * n];
            for (o, &dv) in out_row.iter_mut().zip(dc_row) {
                *o += av * dv;
            }
        }
    }
    Tensor::new(k, n, out)
}

fn softmax_rows(x: &Tensor) -> Tensor {
    let mut out = x.clone();
    for i in 0..out.rows {
        let row = &mut out.data[i * out.cols..(i + 1) * out.cols];
        let m = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut z = 0.0;
        for v in row.iter_mut() {
            *v = (*v - m).exp();
            z += *v;
        }
        for v in row.iter_mut() {
            *v /= z;
        }
    }
    out
}

impl Tape {
    pub fn new() -> Self {
        Tape::default()
    }

    fn push(&mut self, op: Op, value: Tensor) -> NodeId {
        let grad = vec![0.0; value.numel()];
        self.nodes.push(Node { op, value, grad });
        NodeId(self.nodes.len() - 1)
    }

    pub fn input(&mut self, value: Tensor) -> NodeId {
        self.push(Op::Input, value)
    }

    pub fn value(&self, id: NodeId) -> &Tensor {
        &self.nodes[id.0].value
    }

    /// Gradient accumulated by the last backward pass.
    pub fn grad(&self, id: NodeId) -> &[f64] {
        &self.nodes[id.0].grad
    }

    pub fn matmul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, GradError> {
        let (ta, tb) = (&self.nodes[a.0].value, &self.nodes[b.0].value);
        if ta.cols != tb.rows {
            return Err(GradError::ShapeMismatch {
                op: "matmul",
                lhs: ta.shape_str(),
                rhs: tb.shape_str(),
            });
        }
        let value = matmul_values(ta, tb);
        Ok(self.push(Op::MatMul(a, b), value))
    }

    pub fn add_bias(&mut self, x: NodeId, b: NodeId) -> Result<NodeId, GradError> {
        let (tx, tb) = (&self.nodes[x.0].value, &self.nodes[b.0].value);
        if tb.rows != 1 || tb.cols != tx.cols {
            return Err(GradError::ShapeMismatch {
                op: "add_bias",
                lhs: tx.shape_str(),
                rhs: tb.shape_str(),
            });
        }
        let mut value = tx.clone();
        for i in 0..value.rows {
            let row = &mut value.data[i * value.cols..(i + 1) * value.cols];
            for (v, &bv) in row.iter_mut().zip(&tb.data) {
                *v += bv;
            }
        }
        Ok(self.push(Op::AddBias(x, b), value))
    }

    pub fn relu(&mut self, x: NodeId) -> NodeId {
        let mut value = self.nodes[x.0].value.clone();
        for v in &mut value.data {
            if *v < 0.0 {
                *v = 0.0;
            }
        }
        self.push(Op::Relu(x), value)
    }

    pub fn softmax(&mut self, x: NodeId) -> NodeId {
        let value = softmax_rows(&self.nodes[x.0].value);
        self.push(Op::Softmax(x), value)
    }

    pub fn concat(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, GradError> {
        let (ta, tb) = (&self.nodes[a.0].value, &self.nodes[b.0].value);
        if ta.rows != tb.rows {
            return Err(GradError::ShapeMismatch {
                op: "concat",
                lhs: ta.shape_str(),
                rhs: tb.shape_str(),
            });
        }
        let (rows, ca, cb) = (ta.rows, ta.cols, tb.cols);
        let mut data = Vec::with_capacity(rows * (ca + cb));
        for i in 0..rows {
            data.extend_from_slice(ta.row(i));
            data.extend_from_slice(tb.row(i));
        }
        let value = Tensor::new(rows, ca + cb, data);
        Ok(self.push(Op::Concat(a, b), value))
    }

    /// Mean absolute error between `pred` and a constant `target`.
    pub fn l1_loss(&mut self, pred: NodeId, target: Tensor) -> Result<NodeId, GradError> {
        let tp = &self.nodes[pred.0].value;
        if tp.rows != target.rows || tp.cols != target.cols {
            return Err(GradError::ShapeMismatch {
                op: "l1_loss",
                lhs: tp.shape_str(),
                rhs: target.shape_str(),
            });
        }
        let n = tp.numel() as f64;
        let loss = tp
            .data
            .iter()
            .zip(&target.data)
            .map(|(p, t)| (p - t).abs())
            .sum::<f64>()
            / n;
        Ok(self.push(Op::L1Loss(pred, target), Tensor::new(1, 1, vec![loss])))
    }

    /// Weighted cross entropy: mean over the batch of
    /// `-weights[label] * log softmax(logits)[label]`.
    pub fn weighted_cross_entropy(
        &mut self,
        logits: NodeId,
        labels: &[usize],
        weights: &[f64],
    ) -> Result<NodeId, GradError> {
        let tl = &self.nodes[logits.0].value;
        if labels.len() != tl.rows || weights.len() != tl.cols {
            return Err(GradError::ShapeMismatch {
                op: "weighted_cross_entropy",
                lhs: tl.shape_str(),
                rhs: format!("{} labels, {} weights", labels.len(), weights.len()),
            });
        }
        for &l in labels {
            if l >= tl.cols {
                return Err(GradError::InvalidLabel { label: l, classes: tl.cols });
            }
        }
        let mut loss = 0.0;
        for i in 0..tl.rows {
            let row = tl.row(i);
            let m = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let logz = row.iter().map(|&v| (v - m).exp()).sum::<f64>().ln() + m;
            loss += weights[labels[i]] * (logz - row[labels[i]]);
        }
        loss /= tl.rows as f64;
        Ok(self.push(
            Op::WeightedCe {
                logits,
                labels: labels.to_vec(),
                weights: weights.to_vec(),
            },
            Tensor::new(1, 1, vec![loss]),
        ))
    }

    /// Run the reverse pass from a scalar loss with seed 1.
    pub fn backward(&mut self, loss: NodeId) -> Result<(), GradError> {
        let t = &self.nodes[loss.0].value;
        if t.numel() != 1 {
            return Err(GradError::NonScalarRoot { rows: t.rows, cols: t.cols });
        }
        self.backward_with_seed(loss, &[1.0]);
        Ok(())
    }

    /// Reverse pass from any node with a caller-supplied output gradient.
    /// Used where the objective's gradient is known analytically (e.g. RL
    /// surrogate losses).
    pub fn backward_with_seed(&mut self, root: NodeId, seed: &[f64]) {
        assert_eq!(
            seed.len(),
            self.nodes[root.0].value.numel(),
            "seed must match the root shape"
        );
        for n in &mut self.nodes {
            n.grad.iter_mut().for_each(|g| *g = 0.0);
        }
        self.nodes[root.0].grad.copy_from_slice(seed);
        // nodes are appended in topological order; walk backwards,
        // collecting each node's input contributions before applying them
        for idx in (0..self.nodes.len()).rev() {
            if self.nodes[idx].grad.iter().all(|&g| g == 0.0) {
                continue;
            }
            let contributions = self.input_grads(idx);
            for (target, delta) in contributions {
                accumulate(&mut self.nodes[target].grad, &delta);
            }
        }
    }

    /// Gradient contributions of node `idx` to each of its inputs, given
    /// the gradient already accumulated at `idx`. Read-only.
    fn input_grads(&self, idx: usize) -> Vec<(usize, Vec<f64>)> {
        let grad = &self.nodes[idx].grad;
        match &self.nodes[idx].op {
            Op::Input => Vec::new(),
            Op::MatMul(a, b) => {
                let dc = Tensor::new(
                    self.nodes[idx].value.rows,
                    self.nodes[idx].value.cols,
                    grad.clone(),
                );
                let da = matmul_nt(&dc, &self.nodes[b.0].value);
                let db = matmul_tn(&self.nodes[a.0].value, &dc);
                vec![(a.0, da.data), (b.0, db.data)]
            }
            Op::AddBias(x, b) => {
                let cols = self.nodes[idx].value.cols;
                let mut db = vec![0.0; cols];
                for (i, g) in grad.iter().enumerate() {
                    db[i % cols] += g;
                }
                vec![(x.0, grad.clone()), (b.0, db)]
            }
            Op::Relu(x) => {
                let mut dx = grad.clone();
                for (d, v) in dx.iter_mut().zip(&self.nodes[x.0].value.data) {
                    if *v <= 0.0 {
                        *d = 0.0;
                    }
                }
                vec![(x.0, dx)]
            }
            Op::Softmax(x) => {
                let y = &self.nodes[idx].value;
                let mut dx = vec![0.0; y.numel()];
                for i in 0..y.rows {
                    let yr = y.row(i);
                    let gr = &grad[i * y.cols..(i + 1) * y.cols];
                    let dot: f64 = yr.iter().zip(gr).map(|(a, b)| a * b).sum();
                    let dr = &mut dx[i * y.cols..(i + 1) * y.cols];
                    for ((d, &yv), &gv) in dr.iter_mut().zip(yr).zip(gr) {
                        *d = yv * (gv - dot);
                    }
                }
                vec![(x.0, dx)]
            }
            Op::Concat(a, b) => {
                let (ca, cb) = (self.nodes[a.0].value.cols, self.nodes[b.0].value.cols);
                let rows = self.nodes[idx].value.rows;
                let mut da = vec![0.0; rows * ca];
                let mut db = vec![0.0; rows * cb];
                for i in 0..rows {
                    let g = &grad[i * (ca + cb)..(i + 1) * (ca + cb)];
                    da[i * ca..(i + 1) * ca].copy_from_slice(&g[..ca]);
                    db[i * cb..(i + 1) * cb].copy_from_slice(&g[ca..]);
                }
                vec![(a.0, da), (b.0, db)]
            }
            Op::L1Loss(pred, target) => {
                let g = grad[0];
                let n = target.numel() as f64;
                let dp: Vec<f64> = self.nodes[pred.0]
                    .value
                    .data
                    .iter()
                    .zip(&target.data)
                    .map(|(p, t)| g * (p - t).signum() / n)
                    .collect();
                vec![(pred.0, dp)]
            }
            Op::WeightedCe { logits, labels, weights } => {
                let g = grad[0];
                let probs = softmax_rows(&self.nodes[logits.0].value);
                let rows = probs.rows as f64;
                let cols = probs.cols;
                let mut dl = probs.data;
                for (i, &label) in labels.iter().enumerate() {
                    let w = weights[label];
                    let row = &mut dl[i * cols..(i + 1) * cols];
                    for v in row.iter_mut() {
                        *v *= w;
                    }
                    row[label] -= w;
                    for v in row.iter_mut() {
                        *v *= g / rows;
                    }
                }
                vec![(logits.0, dl)]
            }
        }
    }
}

fn accumulate(dst: &mut [f64], src: &[f64]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d += s;
    }
}

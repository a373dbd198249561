use crate::{GentocError, Result};

use super::param::ParamBundle;

/// Handle to a node on the tape.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NodeId(pub(crate) usize);

const LN_EPS: f64 = 1e-5;

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    Matmul { a: usize, b: usize },
    MatmulNT { a: usize, b: usize },
    Add { a: usize, b: usize },
    AddRow { a: usize, row: usize },
    AddRowsAt { a: usize, v: usize, positions: Vec<usize> },
    Mul { a: usize, b: usize },
    Scale { a: usize, factor: f32 },
    Relu { a: usize },
    Sigmoid { a: usize },
    SoftmaxRows { a: usize },
    LayerNorm { a: usize, gain: usize, bias: usize },
    Embed { table: usize, ids: Vec<usize> },
    SliceCols { a: usize, start: usize },
    ConcatCols { parts: Vec<usize> },
    GatherRows { a: usize, rows: Vec<usize> },
    Dropout { a: usize, mask: Vec<f32> },
    CrossEntropyRows { logits: usize, targets: Vec<usize> },
    BceWithLogits { logits: usize, targets: Vec<f32> },
    SumAll { a: usize },
    MeanAll { a: usize },
}

struct Node {
    rows: usize,
    cols: usize,
    value: Vec<f32>,
    grad: Option<Vec<f32>>,
    op: Op,
    /// Index into the parameter bundle when this leaf mirrors a parameter.
    param: Option<usize>,
}

/// Computation tape. Nodes are appended in forward order, so reverse index
/// order is a valid reverse-topological order for the backward sweep.
pub struct Graph {
    nodes: Vec<Node>,
}

impl Default for Graph {
    fn default() -> Self {
        Self::new()
    }
}

impl Graph {
    pub fn new() -> Self {
        Graph { nodes: Vec::new() }
    }

    fn push(&mut self, rows: usize, cols: usize, value: Vec<f32>, op: Op) -> NodeId {
        debug_assert_eq!(rows * cols, value.len());
        self.nodes.push(Node { rows, cols, value, grad: None, op, param: None });
        NodeId(self.nodes.len() - 1)
    }

    /// Constant/input leaf.
    pub fn input(&mut self, rows: usize, cols: usize, value: Vec<f32>) -> Result<NodeId> {
        if rows * cols != value.len() {
            return Err(shape("input", format!("{}x{} vs {} values", rows, cols, value.len())));
        }
        Ok(self.push(rows, cols, value, Op::Leaf))
    }

    /// Leaf bound to a parameter of `bundle`; gradients flow back via
    /// [`Graph::accumulate_param_grads`].
    pub fn param(&mut self, bundle: &ParamBundle, index: usize) -> NodeId {
        let p = bundle.get(index);
        let id = self.push(p.rows, p.cols, p.value.clone(), Op::Leaf);
        self.nodes[id.0].param = Some(index);
        id
    }

    pub fn shape(&self, id: NodeId) -> (usize, usize) {
        let n = &self.nodes[id.0];
        (n.rows, n.cols)
    }

    pub fn value(&self, id: NodeId) -> &[f32] {
        &self.nodes[id.0].value
    }

    pub fn grad(&self, id: NodeId) -> Option<&[f32]> {
        self.nodes[id.0].grad.as_deref()
    }

    // ── forward ops ─────────────────────────────────────────────────

    /// `A (m,k) @ B (k,n) -> (m,n)`
    pub fn matmul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let (m, k) = self.shape(a);
        let (k2, n) = self.shape(b);
        if k != k2 {
            return Err(shape("matmul", format!("{}x{} @ {}x{}", m, k, k2, n)));
        }
        let v = mm(self.value(a), self.value(b), m, k, n);
        Ok(self.push(m, n, v, Op::Matmul { a: a.0, b: b.0 }))
    }

    /// `A (m,k) @ B^T` where `B` is `(n,k)` -> `(m,n)`
    pub fn matmul_nt(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let (m, k) = self.shape(a);
        let (n, k2) = self.shape(b);
        if k != k2 {
            return Err(shape("matmul_nt", format!("{}x{} @ ({}x{})^T", m, k, n, k2)));
        }
        let v = mm_nt(self.value(a), self.value(b), m, k, n);
        Ok(self.push(m, n, v, Op::MatmulNT { a: a.0, b: b.0 }))
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let (m, n) = self.shape(a);
        if self.shape(b) != (m, n) {
            return Err(shape("add", format!("{:?} vs {:?}", (m, n), self.shape(b))));
        }
        let v: Vec<f32> =
            self.value(a).iter().zip(self.value(b)).map(|(x, y)| x + y).collect();
        Ok(self.push(m, n, v, Op::Add { a: a.0, b: b.0 }))
    }

    /// Broadcast-add a `1 x n` row to every row of `a`.
    pub fn add_row(&mut self, a: NodeId, row: NodeId) -> Result<NodeId> {
        let (m, n) = self.shape(a);
        if self.shape(row) != (1, n) {
            return Err(shape("add_row", format!("{:?} + {:?}", (m, n), self.shape(row))));
        }
        let r = self.value(row).to_vec();
        let mut v = self.value(a).to_vec();
        for i in 0..m {
            for j in 0..n {
                v[i * n + j] += r[j];
            }
        }
        Ok(self.push(m, n, v, Op::AddRow { a: a.0, row: row.0 }))
    }

    /// Add the `1 x n` vector `v` to the rows of `a` listed in `positions`.
    pub fn add_rows_at(&mut self, a: NodeId, v: NodeId, positions: &[usize]) -> Result<NodeId> {
        let (m, n) = self.shape(a);
        if self.shape(v) != (1, n) {
            return Err(shape("add_rows_at", format!("{:?} + {:?}", (m, n), self.shape(v))));
        }
        if let Some(&p) = positions.iter().find(|&&p| p >= m) {
            return Err(shape("add_rows_at", format!("row {} out of {} rows", p, m)));
        }
        let vec = self.value(v).to_vec();
        let mut out = self.value(a).to_vec();
        for &p in positions {
            for j in 0..n {
                out[p * n + j] += vec[j];
            }
        }
        Ok(self.push(m, n, out, Op::AddRowsAt { a: a.0, v: v.0, positions: positions.to_vec() }))
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let (m, n) = self.shape(a);
        if self.shape(b) != (m, n) {
            return Err(shape("mul", format!("{:?} vs {:?}", (m, n), self.shape(b))));
        }
        let v: Vec<f32> =
            self.value(a).iter().zip(self.value(b)).map(|(x, y)| x * y).collect();
        Ok(self.push(m, n, v, Op::Mul { a: a.0, b: b.0 }))
    }

    pub fn scale(&mut self, a: NodeId, factor: f32) -> NodeId {
        let (m, n) = self.shape(a);
        let v: Vec<f32> = self.value(a).iter().map(|x| x * factor).collect();
        self.push(m, n, v, Op::Scale { a: a.0, factor })
    }

    pub fn relu(&mut self, a: NodeId) -> NodeId {
        let (m, n) = self.shape(a);
        let v: Vec<f32> = self.value(a).iter().map(|x| x.max(0.0)).collect();
        self.push(m, n, v, Op::Relu { a: a.0 })
    }

    pub fn sigmoid(&mut self, a: NodeId) -> NodeId {
        let (m, n) = self.shape(a);
        let v: Vec<f32> = self.value(a).iter().map(|&x| sigmoid(x)).collect();
        self.push(m, n, v, Op::Sigmoid { a: a.0 })
    }

    /// Row-wise softmax. With `causal`, entry `(i, j)` for `j > i` is masked
    /// out before normalization (requires a square input).
    pub fn softmax_rows(&mut self, a: NodeId, causal: bool) -> Result<NodeId> {
        let (m, n) = self.shape(a);
        if causal && m != n {
            return Err(shape("softmax_rows", format!("causal mask needs square input, got {}x{}", m, n)));
        }
        let x = self.value(a);
        let mut v = vec![0.0f32; m * n];
        for i in 0..m {
            let lim = if causal { i + 1 } else { n };
            let row = &x[i * n..i * n + lim];
            let max = row.iter().fold(f32::NEG_INFINITY, |acc, &z| acc.max(z));
            let mut sum = 0.0f64;
            for j in 0..lim {
                let e = ((row[j] - max) as f64).exp();
                v[i * n + j] = e as f32;
                sum += e;
            }
            for j in 0..lim {
                v[i * n + j] = (v[i * n + j] as f64 / sum) as f32;
            }
        }
        Ok(self.push(m, n, v, Op::SoftmaxRows { a: a.0 }))
    }

    /// Row-wise layer normalization with learned `1 x n` gain and bias.
    pub fn layer_norm(&mut self, a: NodeId, gain: NodeId, bias: NodeId) -> Result<NodeId> {
        let (m, n) = self.shape(a);
        if self.shape(gain) != (1, n) || self.shape(bias) != (1, n) {
            return Err(shape(
                "layer_norm",
                format!("input {:?}, gain {:?}, bias {:?}", (m, n), self.shape(gain), self.shape(bias)),
            ));
        }
        let x = self.value(a);
        let g = self.value(gain).to_vec();
        let b = self.value(bias).to_vec();
        let mut v = vec![0.0f32; m * n];
        for i in 0..m {
            let row = &x[i * n..(i + 1) * n];
            let mean = row.iter().map(|&z| z as f64).sum::<f64>() / n as f64;
            let var = row.iter().map(|&z| (z as f64 - mean).powi(2)).sum::<f64>() / n as f64;
            let inv = 1.0 / (var + LN_EPS).sqrt();
            for j in 0..n {
                let xhat = ((row[j] as f64 - mean) * inv) as f32;
                v[i * n + j] = g[j] * xhat + b[j];
            }
        }
        Ok(self.push(m, n, v, Op::LayerNorm { a: a.0, gain: gain.0, bias: bias.0 }))
    }

    /// Gather rows of an embedding table `(V, d)` by id -> `(len, d)`.
    pub fn embed(&mut self, table: NodeId, ids: &[usize]) -> Result<NodeId> {
        let (vocab, d) = self.shape(table);
        if let Some(&bad) = ids.iter().find(|&&i| i >= vocab) {
            return Err(shape("embed", format!("id {} out of vocabulary size {}", bad, vocab)));
        }
        if ids.is_empty() {
            return Err(shape("embed", "empty id list".into()));
        }
        let t = self.value(table);
        let mut v = Vec::with_capacity(ids.len() * d);
        for &i in ids {
            v.extend_from_slice(&t[i * d..(i + 1) * d]);
        }
        Ok(self.push(ids.len(), d, v, Op::Embed { table: table.0, ids: ids.to_vec() }))
    }

    pub fn slice_cols(&mut self, a: NodeId, start: usize, len: usize) -> Result<NodeId> {
        let (m, n) = self.shape(a);
        if start + len > n {
            return Err(shape("slice_cols", format!("[{}..{}] of {} cols", start, start + len, n)));
        }
        let x = self.value(a);
        let mut v = Vec::with_capacity(m * len);
        for i in 0..m {
            v.extend_from_slice(&x[i * n + start..i * n + start + len]);
        }
        Ok(self.push(m, len, v, Op::SliceCols { a: a.0, start }))
    }

    pub fn concat_cols(&mut self, parts: &[NodeId]) -> Result<NodeId> {
        if parts.is_empty() {
            return Err(shape("concat_cols", "no parts".into()));
        }
        let m = self.shape(parts[0]).0;
        if let Some(&p) = parts.iter().find(|&&p| self.shape(p).0 != m) {
            return Err(shape("concat_cols", format!("row mismatch: {} vs {}", m, self.shape(p).0)));
        }
        let total: usize = parts.iter().map(|&p| self.shape(p).1).sum();
        let mut v = Vec::with_capacity(m * total);
        for i in 0..m {
            for &p in parts {
                let (_, n) = self.shape(p);
                let x = self.value(p);
                v.extend_from_slice(&x[i * n..(i + 1) * n]);
            }
        }
        Ok(self.push(m, total, v, Op::ConcatCols { parts: parts.iter().map(|p| p.0).collect() }))
    }

    pub fn gather_rows(&mut self, a: NodeId, rows: &[usize]) -> Result<NodeId> {
        let (m, n) = self.shape(a);
        if let Some(&bad) = rows.iter().find(|&&r| r >= m) {
            return Err(shape("gather_rows", format!("row {} out of {}", bad, m)));
        }
        if rows.is_empty() {
            return Err(shape("gather_rows", "empty row list".into()));
        }
        let x = self.value(a);
        let mut v = Vec::with_capacity(rows.len() * n);
        for &r in rows {
            v.extend_from_slice(&x[r * n..(r + 1) * n]);
        }
        Ok(self.push(rows.len(), n, v, Op::GatherRows { a: a.0, rows: rows.to_vec() }))
    }

    /// Inverted dropout with a caller-supplied keep mask of `0.0` / `1/keep`
    /// entries (sampled by the trainer so determinism stays with the seed).
    pub fn dropout(&mut self, a: NodeId, mask: Vec<f32>) -> Result<NodeId> {
        let (m, n) = self.shape(a);
        if mask.len() != m * n {
            return Err(shape("dropout", format!("mask len {} vs {}x{}", mask.len(), m, n)));
        }
        let v: Vec<f32> = self.value(a).iter().zip(&mask).map(|(x, k)| x * k).collect();
        Ok(self.push(m, n, v, Op::Dropout { a: a.0, mask }))
    }

    /// Mean token-level cross entropy of `(n, V)` logits against `n` target ids.
    pub fn cross_entropy_rows(&mut self, logits: NodeId, targets: &[usize]) -> Result<NodeId> {
        let (n, vocab) = self.shape(logits);
        if targets.len() != n {
            return Err(shape("cross_entropy", format!("{} rows vs {} targets", n, targets.len())));
        }
        if let Some(&bad) = targets.iter().find(|&&t| t >= vocab) {
            return Err(shape("cross_entropy", format!("target {} out of {} classes", bad, vocab)));
        }
        let x = self.value(logits);
        let mut total = 0.0f64;
        for (i, &t) in targets.iter().enumerate() {
            let row = &x[i * vocab..(i + 1) * vocab];
            total += row_lse(row) - row[t] as f64;
        }
        let loss = (total / n as f64) as f32;
        Ok(self.push(1, 1, vec![loss], Op::CrossEntropyRows { logits: logits.0, targets: targets.to_vec() }))
    }

    /// Mean binary cross entropy of `(n, 1)` logits against 0/1 targets.
    pub fn bce_with_logits(&mut self, logits: NodeId, targets: &[f32]) -> Result<NodeId> {
        let (n, c) = self.shape(logits);
        if c != 1 || targets.len() != n {
            return Err(shape("bce", format!("logits {}x{} vs {} targets", n, c, targets.len())));
        }
        let x = self.value(logits);
        let mut total = 0.0f64;
        for (i, &t) in targets.iter().enumerate() {
            let z = x[i] as f64;
            // max(z,0) - z*t + ln(1 + e^{-|z|})
            total += z.max(0.0) - z * t as f64 + (1.0 + (-z.abs()).exp()).ln();
        }
        let loss = (total / n as f64) as f32;
        Ok(self.push(1, 1, vec![loss], Op::BceWithLogits { logits: logits.0, targets: targets.to_vec() }))
    }

    pub fn sum_all(&mut self, a: NodeId) -> NodeId {
        let s: f64 = self.value(a).iter().map(|&x| x as f64).sum();
        self.push(1, 1, vec![s as f32], Op::SumAll { a: a.0 })
    }

    pub fn mean_all(&mut self, a: NodeId) -> NodeId {
        let len = self.value(a).len();
        let s: f64 = self.value(a).iter().map(|&x| x as f64).sum();
        self.push(1, 1, vec![(s / len as f64) as f32], Op::MeanAll { a: a.0 })
    }

    // ── backward ────────────────────────────────────────────────────

    /// Reverse sweep from a scalar loss; populates gradients of every node
    /// that contributed to it.
    pub fn backward(&mut self, loss: NodeId) -> Result<()> {
        if self.shape(loss) != (1, 1) {
            return Err(GentocError::InvalidInput(format!(
                "backward requires a scalar loss, got {:?}",
                self.shape(loss)
            )));
        }
        for n in &mut self.nodes {
            n.grad = None;
        }
        self.nodes[loss.0].grad = Some(vec![1.0]);

        for i in (0..=loss.0).rev() {
            let Some(dout) = self.nodes[i].grad.take() else { continue };
            let op = self.nodes[i].op.clone();
            self.step_backward(i, &op, &dout);
            self.nodes[i].grad = Some(dout);
        }
        Ok(())
    }

    fn add_grad(&mut self, idx: usize, delta: &[f32]) {
        let n = &mut self.nodes[idx];
        let g = n.grad.get_or_insert_with(|| vec![0.0; n.rows * n.cols]);
        for (gi, &d) in g.iter_mut().zip(delta) {
            *gi += d;
        }
    }

    fn step_backward(&mut self, idx: usize, op: &Op, dout: &[f32]) {
        match op {
            Op::Leaf => {}
            Op::Matmul { a, b } => {
                let (m, k) = (self.nodes[*a].rows, self.nodes[*a].cols);
                let n = self.nodes[*b].cols;
                let da = mm_nt(dout, &self.nodes[*b].value, m, n, k);
                let db = mm_tn(&self.nodes[*a].value, dout, m, k, n);
                self.add_grad(*a, &da);
                self.add_grad(*b, &db);
            }
            Op::MatmulNT { a, b } => {
                // C = A B^T; dA = dC B, dB = dC^T A
                let (m, k) = (self.nodes[*a].rows, self.nodes[*a].cols);
                let n = self.nodes[*b].rows;
                let da = mm(dout, &self.nodes[*b].value, m, n, k);
                let db = mm_tn(dout, &self.nodes[*a].value, m, n, k);
                self.add_grad(*a, &da);
                self.add_grad(*b, &db);
            }
            Op::Add { a, b } => {
                self.add_grad(*a, dout);
                self.add_grad(*b, dout);
            }
            Op::AddRow { a, row } => {
                self.add_grad(*a, dout);
                let n = self.nodes[*row].cols;
                let m = self.nodes[idx].rows;
                let mut dr = vec![0.0f32; n];
                for i in 0..m {
                    for j in 0..n {
                        dr[j] += dout[i * n + j];
                    }
                }
                self.add_grad(*row, &dr);
            }
            Op::AddRowsAt { a, v, positions } => {
                self.add_grad(*a, dout);
                let n = self.nodes[*v].cols;
                let mut dv = vec![0.0f32; n];
                for &p in positions {
                    for j in 0..n {
                        dv[j] += dout[p * n + j];
                    }
                }
                self.add_grad(*v, &dv);
            }
            Op::Mul { a, b } => {
                let da: Vec<f32> = dout.iter().zip(&self.nodes[*b].value).map(|(d, y)| d * y).collect();
                let db: Vec<f32> = dout.iter().zip(&self.nodes[*a].value).map(|(d, x)| d * x).collect();
                self.add_grad(*a, &da);
                self.add_grad(*b, &db);
            }
            Op::Scale { a, factor } => {
                let da: Vec<f32> = dout.iter().map(|d| d * factor).collect();
                self.add_grad(*a, &da);
            }
            Op::Relu { a } => {
                let da: Vec<f32> = dout
                    .iter()
                    .zip(&self.nodes[*a].value)
                    .map(|(d, &x)| if x > 0.0 { *d } else { 0.0 })
                    .collect();
                self.add_grad(*a, &da);
            }
            Op::Sigmoid { a } => {
                let y = &self.nodes[idx].value;
                let da: Vec<f32> = dout.iter().zip(y).map(|(d, &s)| d * s * (1.0 - s)).collect();
                self.add_grad(*a, &da);
            }
            Op::SoftmaxRows { a } => {
                let (m, n) = (self.nodes[idx].rows, self.nodes[idx].cols);
                let y = self.nodes[idx].value.clone();
                let mut da = vec![0.0f32; m * n];
                for i in 0..m {
                    let mut dot = 0.0f64;
                    for j in 0..n {
                        dot += dout[i * n + j] as f64 * y[i * n + j] as f64;
                    }
                    for j in 0..n {
                        da[i * n + j] = (y[i * n + j] as f64
                            * (dout[i * n + j] as f64 - dot)) as f32;
                    }
                }
                self.add_grad(*a, &da);
            }
            Op::LayerNorm { a, gain, bias } => {
                let (m, n) = (self.nodes[*a].rows, self.nodes[*a].cols);
                let x = self.nodes[*a].value.clone();
                let g = self.nodes[*gain].value.clone();
                let mut da = vec![0.0f32; m * n];
                let mut dg = vec![0.0f32; n];
                let mut db = vec![0.0f32; n];
                for i in 0..m {
                    let row = &x[i * n..(i + 1) * n];
                    let mean = row.iter().map(|&z| z as f64).sum::<f64>() / n as f64;
                    let var = row.iter().map(|&z| (z as f64 - mean).powi(2)).sum::<f64>() / n as f64;
                    let inv = 1.0 / (var + LN_EPS).sqrt();
                    let xhat: Vec<f64> = row.iter().map(|&z| (z as f64 - mean) * inv).collect();
                    let dy = &dout[i * n..(i + 1) * n];
                    let mut sum_dxhat = 0.0f64;
                    let mut sum_dxhat_xhat = 0.0f64;
                    for j in 0..n {
                        let dxh = dy[j] as f64 * g[j] as f64;
                        sum_dxhat += dxh;
                        sum_dxhat_xhat += dxh * xhat[j];
                        dg[j] += (dy[j] as f64 * xhat[j]) as f32;
                        db[j] += dy[j];
                    }
                    for j in 0..n {
                        let dxh = dy[j] as f64 * g[j] as f64;
                        da[i * n + j] = (inv
                            * (dxh - sum_dxhat / n as f64 - xhat[j] * sum_dxhat_xhat / n as f64))
                            as f32;
                    }
                }
                self.add_grad(*a, &da);
                self.add_grad(*gain, &dg);
                self.add_grad(*bias, &db);
            }
            Op::Embed { table, ids } => {
                let d = self.nodes[*table].cols;
                let rows = self.nodes[*table].rows;
                let mut dt = vec![0.0f32; rows * d];
                for (r, &id) in ids.iter().enumerate() {
                    for j in 0..d {
                        dt[id * d + j] += dout[r * d + j];
                    }
                }
                self.add_grad(*table, &dt);
            }
            Op::SliceCols { a, start } => {
                let (m, n) = (self.nodes[*a].rows, self.nodes[*a].cols);
                let len = self.nodes[idx].cols;
                let mut da = vec![0.0f32; m * n];
                for i in 0..m {
                    for j in 0..len {
                        da[i * n + start + j] = dout[i * len + j];
                    }
                }
                self.add_grad(*a, &da);
            }
            Op::ConcatCols { parts } => {
                let m = self.nodes[idx].rows;
                let total = self.nodes[idx].cols;
                let mut offset = 0usize;
                for &p in parts {
                    let n = self.nodes[p].cols;
                    let mut dp = vec![0.0f32; m * n];
                    for i in 0..m {
                        dp[i * n..(i + 1) * n]
                            .copy_from_slice(&dout[i * total + offset..i * total + offset + n]);
                    }
                    self.add_grad(p, &dp);
                    offset += n;
                }
            }
            Op::GatherRows { a, rows } => {
                let n = self.nodes[*a].cols;
                let m = self.nodes[*a].rows;
                let mut da = vec![0.0f32; m * n];
                for (r, &src) in rows.iter().enumerate() {
                    for j in 0..n {
                        da[src * n + j] += dout[r * n + j];
                    }
                }
                self.add_grad(*a, &da);
            }
            Op::Dropout { a, mask } => {
                let da: Vec<f32> = dout.iter().zip(mask).map(|(d, k)| d * k).collect();
                self.add_grad(*a, &da);
            }
            Op::CrossEntropyRows { logits, targets } => {
                let (n, vocab) = (self.nodes[*logits].rows, self.nodes[*logits].cols);
                let x = self.nodes[*logits].value.clone();
                let scale = dout[0] as f64 / n as f64;
                let mut dl = vec![0.0f32; n * vocab];
                for (i, &t) in targets.iter().enumerate() {
                    let row = &x[i * vocab..(i + 1) * vocab];
                    let lse = row_lse(row);
                    for j in 0..vocab {
                        let p = ((row[j] as f64) - lse).exp();
                        let delta = if j == t { 1.0 } else { 0.0 };
                        dl[i * vocab + j] = ((p - delta) * scale) as f32;
                    }
                }
                self.add_grad(*logits, &dl);
            }
            Op::BceWithLogits { logits, targets } => {
                let n = self.nodes[*logits].rows;
                let x = self.nodes[*logits].value.clone();
                let scale = dout[0] as f64 / n as f64;
                let dl: Vec<f32> = x
                    .iter()
                    .zip(targets)
                    .map(|(&z, &t)| ((sigmoid(z) as f64 - t as f64) * scale) as f32)
                    .collect();
                self.add_grad(*logits, &dl);
            }
            Op::SumAll { a } => {
                let len = self.nodes[*a].value.len();
                let da = vec![dout[0]; len];
                self.add_grad(*a, &da);
            }
            Op::MeanAll { a } => {
                let len = self.nodes[*a].value.len();
                let da = vec![dout[0] / len as f32; len];
                self.add_grad(*a, &da);
            }
        }
    }

    /// Fold gradients of parameter-bound leaves back into the bundle
    /// (accumulating, so batches can sum over multiple graphs).
    pub fn accumulate_param_grads(&self, bundle: &mut ParamBundle) {
        for node in &self.nodes {
            if let (Some(idx), Some(grad)) = (node.param, node.grad.as_ref()) {
                bundle.accumulate_grad(idx, grad);
            }
        }
        bundle.mark_grads_ready();
    }
}

fn shape(op: &'static str, detail: String) -> GentocError {
    GentocError::ShapeMismatch { op, detail }
}

fn sigmoid(x: f32) -> f32 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn row_lse(row: &[f32]) -> f64 {
    let max = row.iter().fold(f32::NEG_INFINITY, |a, &b| a.max(b)) as f64;
    let sum: f64 = row.iter().map(|&z| ((z as f64) - max).exp()).sum();
    max + sum.ln()
}

// Raw matmul kernels, f32 accumulation, loop orders chosen to vectorize.

/// `A (m,k) @ B (k,n)`
fn mm(a: &[f32], b: &[f32], m: usize, k: usize, n: usize) -> Vec<f32> {
    let mut c = vec![0.0f32; m * n];
    for i in 0..m {
        for p in 0..k {
            let aip = a[i * k + p];
            let brow = &b[p * n..(p + 1) * n];
            let crow = &mut c[i * n..(i + 1) * n];
            for j in 0..n {
                crow[j] += aip * brow[j];
            }
        }
    }
    c
}

/// `A (m,k) @ B^T` with `B (n,k)`
fn mm_nt(a: &[f32], b: &[f32], m: usize, k: usize, n: usize) -> Vec<f32> {
    let mut c = vec![0.0f32; m * n];
    for i in 0..m {
        let arow = &a[i * k..(i + 1) * k];
        for j in 0..n {
            let brow = &b[j * k..(j + 1) * k];
            let mut s = 0.0f32;
            for p in 0..k {
                s += arow[p] * brow[p];
            }
            c[i * n + j] = s;
        }
    }
    c
}

/// `A^T @ B` with `A (m,k)`, `B (m,n)` -> `(k,n)`
fn mm_tn(a: &[f32], b: &[f32], m: usize, k: usize, n: usize) -> Vec<f32> {
    let mut c = vec![0.0f32; k * n];
    for i in 0..m {
        let brow = &b[i * n..(i + 1) * n];
        for p in 0..k {
            let aip = a[i * k + p];
            let crow = &mut c[p * n..(p + 1) * n];
            for j in 0..n {
                crow[j] += aip * brow[j];
            }
        }
    }
    c
}

//! Define-by-run reverse-mode differentiation over 2-D tensors.
//!
//! Values are computed eagerly as nodes are pushed; `backward` walks the
//! node list in reverse and accumulates gradients into earlier nodes.
//! Attention masks are expressed as per-row visible prefix lengths so no
//! -inf ever enters a tensor.

use super::{softmax_into, NumericsError, Tensor};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Var(usize);

enum Op {
    Leaf,
    /// C[m,n] = A[m,k] @ B[k,n]
    MatMul { a: Var, b: Var },
    /// C[m,n] = A[m,k] @ B[n,k]^T
    MatMulNT { a: Var, b: Var },
    Add { a: Var, b: Var },
    /// [m,n] + row[n] broadcast over rows
    AddRow { a: Var, row: Var },
    /// elementwise + constant tensor (no gradient into the constant)
    AddConst { a: Var },
    Scale { a: Var, c: f64 },
    Relu { a: Var },
    /// elementwise multiply by a fixed mask (inverted-dropout style)
    Dropout { a: Var, mask: Vec<f64> },
    /// row-wise softmax over the first `allowed[i]` entries, zeros beyond
    SoftmaxPrefixRows { a: Var, allowed: Vec<usize> },
    /// row-wise layer norm; stats (mean, inv_std) cached per row
    LayerNormRows {
        a: Var,
        gain: Var,
        bias: Var,
        stats: Vec<(f64, f64)>,
    },
    /// out[i] = table[indices[i]]
    GatherRows { table: Var, indices: Vec<usize> },
    SliceCols { a: Var, start: usize, len: usize },
    ConcatCols { parts: Vec<Var> },
    /// elementwise sum of same-shape tensors
    AddN { parts: Vec<Var> },
    /// summed label-smoothed cross entropy over rows of log-softmax(logits)
    CrossEntropyLs {
        logits: Var,
        targets: Vec<usize>,
        smoothing: f64,
        probs: Vec<f64>,
    },
}

pub struct Tape {
    values: Vec<Tensor>,
    ops: Vec<Op>,
    grads: Vec<Option<Vec<f64>>>,
}

impl Default for Tape {
    fn default() -> Self {
        Self::new()
    }
}

impl Tape {
    pub fn new() -> Self {
        Self {
            values: Vec::new(),
            ops: Vec::new(),
            grads: Vec::new(),
        }
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.values[v.0]
    }

    pub fn grad(&self, v: Var) -> Option<&[f64]> {
        self.grads[v.0].as_deref()
    }

    fn push(&mut self, op: &'static str, value: Tensor, node: Op) -> Result<Var, NumericsError> {
        if !value.all_finite() {
            return Err(NumericsError::NonFinite { op });
        }
        self.values.push(value);
        self.ops.push(node);
        self.grads.push(None);
        Ok(Var(self.values.len() - 1))
    }

    pub fn leaf(&mut self, t: Tensor) -> Var {
        self.values.push(t);
        self.ops.push(Op::Leaf);
        self.grads.push(None);
        Var(self.values.len() - 1)
    }

    fn dims2(&self, v: Var) -> (usize, usize) {
        let t = &self.values[v.0];
        (t.rows(), t.cols())
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var, NumericsError> {
        let (m, k) = self.dims2(a);
        let (k2, n) = self.dims2(b);
        if k != k2 {
            return Err(NumericsError::ShapeMismatch {
                op: "matmul",
                lhs: self.values[a.0].shape().to_vec(),
                rhs: self.values[b.0].shape().to_vec(),
            });
        }
        let mut out = vec![0.0; m * n];
        mm(
            self.values[a.0].data(),
            self.values[b.0].data(),
            m,
            k,
            n,
            &mut out,
        );
        let t = Tensor::new(vec![m, n], out)?;
        self.push("matmul", t, Op::MatMul { a, b })
    }

    pub fn matmul_nt(&mut self, a: Var, b: Var) -> Result<Var, NumericsError> {
        let (m, k) = self.dims2(a);
        let (n, k2) = self.dims2(b);
        if k != k2 {
            return Err(NumericsError::ShapeMismatch {
                op: "matmul_nt",
                lhs: self.values[a.0].shape().to_vec(),
                rhs: self.values[b.0].shape().to_vec(),
            });
        }
        let mut out = vec![0.0; m * n];
        mm_nt(
            self.values[a.0].data(),
            self.values[b.0].data(),
            m,
            k,
            n,
            &mut out,
        );
        let t = Tensor::new(vec![m, n], out)?;
        self.push("matmul_nt", t, Op::MatMulNT { a, b })
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var, NumericsError> {
        if self.values[a.0].shape() != self.values[b.0].shape() {
            return Err(NumericsError::ShapeMismatch {
                op: "add",
                lhs: self.values[a.0].shape().to_vec(),
                rhs: self.values[b.0].shape().to_vec(),
            });
        }
        let data: Vec<f64> = self.values[a.0]
            .data()
            .iter()
            .zip(self.values[b.0].data())
            .map(|(x, y)| x + y)
            .collect();
        let t = Tensor::new(self.values[a.0].shape().to_vec(), data)?;
        self.push("add", t, Op::Add { a, b })
    }

    pub fn add_row(&mut self, a: Var, row: Var) -> Result<Var, NumericsError> {
        let (m, n) = self.dims2(a);
        if self.values[row.0].len() != n {
            return Err(NumericsError::ShapeMismatch {
                op: "add_row",
                lhs: vec![m, n],
                rhs: self.values[row.0].shape().to_vec(),
            });
        }
        let r = self.values[row.0].data();
        let mut data = self.values[a.0].data().to_vec();
        for i in 0..m {
            for j in 0..n {
                data[i * n + j] += r[j];
            }
        }
        let t = Tensor::new(vec![m, n], data)?;
        self.push("add_row", t, Op::AddRow { a, row })
    }

    pub fn add_const(&mut self, a: Var, c: Tensor) -> Result<Var, NumericsError> {
        if self.values[a.0].shape() != c.shape() {
            return Err(NumericsError::ShapeMismatch {
                op: "add_const",
                lhs: self.values[a.0].shape().to_vec(),
                rhs: c.shape().to_vec(),
            });
        }
        let data: Vec<f64> = self.values[a.0]
            .data()
            .iter()
            .zip(c.data())
            .map(|(x, y)| x + y)
            .collect();
        let t = Tensor::new(c.shape().to_vec(), data)?;
        self.push("add_const", t, Op::AddConst { a })
    }

    pub fn scale(&mut self, a: Var, c: f64) -> Result<Var, NumericsError> {
        let data: Vec<f64> = self.values[a.0].data().iter().map(|x| x * c).collect();
        let t = Tensor::new(self.values[a.0].shape().to_vec(), data)?;
        self.push("scale", t, Op::Scale { a, c })
    }

    pub fn relu(&mut self, a: Var) -> Result<Var, NumericsError> {
        let data: Vec<f64> = self.values[a.0].data().iter().map(|x| x.max(0.0)).collect();
        let t = Tensor::new(self.values[a.0].shape().to_vec(), data)?;
        self.push("relu", t, Op::Relu { a })
    }

    pub fn dropout(&mut self, a: Var, mask: Vec<f64>) -> Result<Var, NumericsError> {
        if mask.len() != self.values[a.0].len() {
            return Err(NumericsError::ShapeMismatch {
                op: "dropout",
                lhs: self.values[a.0].shape().to_vec(),
                rhs: vec![mask.len()],
            });
        }
        let data: Vec<f64> = self.values[a.0]
            .data()
            .iter()
            .zip(&mask)
            .map(|(x, m)| x * m)
            .collect();
        let t = Tensor::new(self.values[a.0].shape().to_vec(), data)?;
        self.push("dropout", t, Op::Dropout { a, mask })
    }

    /// Row i is softmaxed over its first `allowed[i]` entries; the rest are 0.
    pub fn softmax_prefix_rows(&mut self, a: Var, allowed: Vec<usize>) -> Result<Var, NumericsError> {
        let (m, n) = self.dims2(a);
        if allowed.len() != m || allowed.iter().any(|&w| w == 0 || w > n) {
            return Err(NumericsError::ShapeMismatch {
                op: "softmax_prefix_rows",
                lhs: vec![m, n],
                rhs: vec![allowed.len()],
            });
        }
        let x = self.values[a.0].data();
        let mut data = vec![0.0; m * n];
        for i in 0..m {
            let w = allowed[i];
            softmax_into(&x[i * n..i * n + w], &mut data[i * n..i * n + w]);
        }
        let t = Tensor::new(vec![m, n], data)?;
        self.push("softmax_prefix_rows", t, Op::SoftmaxPrefixRows { a, allowed })
    }

    pub fn layer_norm_rows(
        &mut self,
        a: Var,
        gain: Var,
        bias: Var,
        eps: f64,
    ) -> Result<Var, NumericsError> {
        let (m, n) = self.dims2(a);
        if self.values[gain.0].len() != n || self.values[bias.0].len() != n {
            return Err(NumericsError::ShapeMismatch {
                op: "layer_norm_rows",
                lhs: vec![m, n],
                rhs: self.values[gain.0].shape().to_vec(),
            });
        }
        let x = self.values[a.0].data();
        let g = self.values[gain.0].data();
        let b = self.values[bias.0].data();
        let mut data = vec![0.0; m * n];
        let mut stats = Vec::with_capacity(m);
        for i in 0..m {
            let row = &x[i * n..(i + 1) * n];
            let mean = row.iter().sum::<f64>() / n as f64;
            let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
            let inv = 1.0 / (var + eps).sqrt();
            stats.push((mean, inv));
            for j in 0..n {
                data[i * n + j] = g[j] * (row[j] - mean) * inv + b[j];
            }
        }
        let t = Tensor::new(vec![m, n], data)?;
        self.push(
            "layer_norm_rows",
            t,
            Op::LayerNormRows { a, gain, bias, stats },
        )
    }

    pub fn gather_rows(&mut self, table: Var, indices: Vec<usize>) -> Result<Var, NumericsError> {
        let (rows, d) = self.dims2(table);
        if let Some(&bad) = indices.iter().find(|&&i| i >= rows) {
            return Err(NumericsError::ShapeMismatch {
                op: "gather_rows",
                lhs: vec![rows, d],
                rhs: vec![bad],
            });
        }
        let src = self.values[table.0].data();
        let mut data = Vec::with_capacity(indices.len() * d);
        for &i in &indices {
            data.extend_from_slice(&src[i * d..(i + 1) * d]);
        }
        let t = Tensor::new(vec![indices.len(), d], data)?;
        self.push("gather_rows", t, Op::GatherRows { table, indices })
    }

    pub fn slice_cols(&mut self, a: Var, start: usize, len: usize) -> Result<Var, NumericsError> {
        let (m, n) = self.dims2(a);
        if start + len > n {
            return Err(NumericsError::ShapeMismatch {
                op: "slice_cols",
                lhs: vec![m, n],
                rhs: vec![start, len],
            });
        }
        let x = self.values[a.0].data();
        let mut data = Vec::with_capacity(m * len);
        for i in 0..m {
            data.extend_from_slice(&x[i * n + start..i * n + start + len]);
        }
        let t = Tensor::new(vec![m, len], data)?;
        self.push("slice_cols", t, Op::SliceCols { a, start, len })
    }

    pub fn concat_cols(&mut self, parts: &[Var]) -> Result<Var, NumericsError> {
        if parts.is_empty() {
            return Err(NumericsError::EmptyInput("concat_cols"));
        }
        let m = self.dims2(parts[0]).0;
        let mut widths = Vec::with_capacity(parts.len());
        for &p in parts {
            let (pm, pn) = self.dims2(p);
            if pm != m {
                return Err(NumericsError::ShapeMismatch {
                    op: "concat_cols",
                    lhs: vec![m],
                    rhs: vec![pm],
                });
            }
            widths.push(pn);
        }
        let total: usize = widths.iter().sum();
        let mut data = vec![0.0; m * total];
        let mut off = 0;
        for (&p, &w) in parts.iter().zip(&widths) {
            let x = self.values[p.0].data();
            for i in 0..m {
                data[i * total + off..i * total + off + w].copy_from_slice(&x[i * w..(i + 1) * w]);
            }
            off += w;
        }
        let t = Tensor::new(vec![m, total], data)?;
        self.push(
            "concat_cols",
            t,
            Op::ConcatCols {
                parts: parts.to_vec(),
            },
        )
    }

    pub fn add_n(&mut self, parts: &[Var]) -> Result<Var, NumericsError> {
        if parts.is_empty() {
            return Err(NumericsError::EmptyInput("add_n"));
        }
        let shape = self.values[parts[0].0].shape().to_vec();
        let mut data = vec![0.0; self.values[parts[0].0].len()];
        for &p in parts {
            if self.values[p.0].shape() != shape.as_slice() {
                return Err(NumericsError::ShapeMismatch {
                    op: "add_n",
                    lhs: shape,
                    rhs: self.values[p.0].shape().to_vec(),
                });
            }
            for (o, x) in data.iter_mut().zip(self.values[p.0].data()) {
                *o += x;
            }
        }
        let t = Tensor::new(shape, data)?;
        self.push(
            "add_n",
            t,
            Op::AddN {
                parts: parts.to_vec(),
            },
        )
    }

    /// Sum over rows of the label-smoothed negative log-likelihood.
    /// Row targets index the vocabulary (last dimension of `logits`).
    pub fn cross_entropy_ls(
        &mut self,
        logits: Var,
        targets: Vec<usize>,
        smoothing: f64,
    ) -> Result<Var, NumericsError> {
        let (m, v) = self.dims2(logits);
        if targets.len() != m || targets.iter().any(|&t| t >= v) {
            return Err(NumericsError::ShapeMismatch {
                op: "cross_entropy_ls",
                lhs: vec![m, v],
                rhs: vec![targets.len()],
            });
        }
        let x = self.values[logits.0].data();
        let mut probs = vec![0.0; m * v];
        let mut total = 0.0;
        let uniform = smoothing / v as f64;
        for i in 0..m {
            let row = &x[i * v..(i + 1) * v];
            let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let mut sum = 0.0;
            for (p, &z) in probs[i * v..(i + 1) * v].iter_mut().zip(row) {
                let e = (z - max).exp();
                *p = e;
                sum += e;
            }
            let lse = max + sum.ln();
            let mut loss = 0.0;
            for j in 0..v {
                probs[i * v + j] /= sum;
                let q = uniform + if j == targets[i] { 1.0 - smoothing } else { 0.0 };
                if q > 0.0 {
                    loss -= q * (row[j] - lse);
                }
            }
            total += loss;
        }
        let t = Tensor::scalar(total)?;
        self.push(
            "cross_entropy_ls",
            t,
            Op::CrossEntropyLs {
                logits,
                targets,
                smoothing,
                probs,
            },
        )
    }

    /// Accumulate gradients of `loss` (a scalar node) into every node.
    pub fn backward(&mut self, loss: Var) -> Result<(), NumericsError> {
        if self.values[loss.0].len() != 1 {
            return Err(NumericsError::ShapeMismatch {
                op: "backward",
                lhs: self.values[loss.0].shape().to_vec(),
                rhs: vec![1],
            });
        }
        let mut grads: Vec<Option<Vec<f64>>> = vec![None; self.values.len()];
        grads[loss.0] = Some(vec![1.0]);
        for i in (0..self.ops.len()).rev() {
            // Consumers all have higher indices, so grads[i] is complete here.
            let Some(gy) = grads[i].take() else { continue };
            self.propagate(i, &gy, &mut grads)?;
            grads[i] = Some(gy);
        }
        self.grads = grads;
        Ok(())
    }

    fn propagate(
        &self,
        i: usize,
        gy: &[f64],
        grads: &mut [Option<Vec<f64>>],
    ) -> Result<(), NumericsError> {
        if gy.iter().any(|v| !v.is_finite()) {
            return Err(NumericsError::NonFinite { op: "backward" });
        }
        // One slot is borrowed at a time, so an op that references the same
        // node twice accumulates both contributions correctly.
        fn into_slot(
            grads: &mut [Option<Vec<f64>>],
            v: Var,
            len: usize,
            f: impl FnOnce(&mut [f64]),
        ) {
            f(grads[v.0].get_or_insert_with(|| vec![0.0; len]));
        }
        match &self.ops[i] {
            Op::Leaf => {}
            Op::MatMul { a, b } => {
                let (m, k) = self.dims2(*a);
                let n = self.dims2(*b).1;
                let av = self.values[a.0].data();
                let bv = self.values[b.0].data();
                into_slot(grads, *a, m * k, |ga| mm_nt(gy, bv, m, n, k, ga)); // dA = dC @ B^T
                into_slot(grads, *b, k * n, |gb| mm_tn(av, gy, m, k, n, gb)); // dB = A^T @ dC
            }
            Op::MatMulNT { a, b } => {
                let (m, k) = self.dims2(*a);
                let n = self.dims2(*b).0;
                let av = self.values[a.0].data();
                let bv = self.values[b.0].data();
                into_slot(grads, *a, m * k, |ga| mm(gy, bv, m, n, k, ga)); // dA = dC @ B
                into_slot(grads, *b, n * k, |gb| mm_tn(gy, av, m, n, k, gb)); // dB = dC^T @ A
            }
            Op::Add { a, b } => {
                for &v in &[*a, *b] {
                    into_slot(grads, v, gy.len(), |g| {
                        for (g, &d) in g.iter_mut().zip(gy) {
                            *g += d;
                        }
                    });
                }
            }
            Op::AddRow { a, row } => {
                let (m, n) = self.dims2(*a);
                into_slot(grads, *a, gy.len(), |g| {
                    for (g, &d) in g.iter_mut().zip(gy) {
                        *g += d;
                    }
                });
                into_slot(grads, *row, n, |gr| {
                    for i in 0..m {
                        for j in 0..n {
                            gr[j] += gy[i * n + j];
                        }
                    }
                });
            }
            Op::AddConst { a } => {
                into_slot(grads, *a, gy.len(), |g| {
                    for (g, &d) in g.iter_mut().zip(gy) {
                        *g += d;
                    }
                });
            }
            Op::Scale { a, c } => {
                into_slot(grads, *a, gy.len(), |g| {
                    for (g, &d) in g.iter_mut().zip(gy) {
                        *g += d * c;
                    }
                });
            }
            Op::Relu { a } => {
                let x = self.values[a.0].data();
                into_slot(grads, *a, gy.len(), |ga| {
                    for j in 0..gy.len() {
                        if x[j] > 0.0 {
                            ga[j] += gy[j];
                        }
                    }
                });
            }
            Op::Dropout { a, mask } => {
                into_slot(grads, *a, gy.len(), |ga| {
                    for j in 0..gy.len() {
                        ga[j] += gy[j] * mask[j];
                    }
                });
            }
            Op::SoftmaxPrefixRows { a, allowed } => {
                let (m, n) = self.dims2(*a);
                let p = self.values[i].data();
                into_slot(grads, *a, m * n, |ga| {
                    for r in 0..m {
                        let w = allowed[r];
                        let pr = &p[r * n..r * n + w];
                        let gr = &gy[r * n..r * n + w];
                        let dot: f64 = pr.iter().zip(gr).map(|(p, g)| p * g).sum();
                        for j in 0..w {
                            ga[r * n + j] += pr[j] * (gr[j] - dot);
                        }
                    }
                });
            }
            Op::LayerNormRows { a, gain, bias, stats } => {
                let (m, n) = self.dims2(*a);
                let x = self.values[a.0].data();
                let g = self.values[gain.0].data();
                into_slot(grads, *bias, n, |gb| {
                    for r in 0..m {
                        for j in 0..n {
                            gb[j] += gy[r * n + j];
                        }
                    }
                });
                into_slot(grads, *gain, n, |gg| {
                    for r in 0..m {
                        let (mean, inv) = stats[r];
                        for j in 0..n {
                            gg[j] += gy[r * n + j] * (x[r * n + j] - mean) * inv;
                        }
                    }
                });
                into_slot(grads, *a, m * n, |ga| {
                    for r in 0..m {
                        let (mean, inv) = stats[r];
                        let row = &x[r * n..(r + 1) * n];
                        let gr = &gy[r * n..(r + 1) * n];
                        let mut mean_dxhat = 0.0;
                        let mut mean_dxhat_xhat = 0.0;
                        for j in 0..n {
                            let xhat = (row[j] - mean) * inv;
                            let dxhat = gr[j] * g[j];
                            mean_dxhat += dxhat;
                            mean_dxhat_xhat += dxhat * xhat;
                        }
                        mean_dxhat /= n as f64;
                        mean_dxhat_xhat /= n as f64;
                        for j in 0..n {
                            let xhat = (row[j] - mean) * inv;
                            let dxhat = gr[j] * g[j];
                            ga[r * n + j] += inv * (dxhat - mean_dxhat - xhat * mean_dxhat_xhat);
                        }
                    }
                });
            }
            Op::GatherRows { table, indices } => {
                let (rows, d) = self.dims2(*table);
                into_slot(grads, *table, rows * d, |gt| {
                    for (r, &idx) in indices.iter().enumerate() {
                        for j in 0..d {
                            gt[idx * d + j] += gy[r * d + j];
                        }
                    }
                });
            }
            Op::SliceCols { a, start, len } => {
                let (m, n) = self.dims2(*a);
                into_slot(grads, *a, m * n, |ga| {
                    for r in 0..m {
                        for j in 0..*len {
                            ga[r * n + start + j] += gy[r * len + j];
                        }
                    }
                });
            }
            Op::ConcatCols { parts } => {
                let total = self.values[i].cols();
                let m = self.values[i].rows();
                let mut off = 0;
                for &p in parts {
                    let w = self.dims2(p).1;
                    into_slot(grads, p, m * w, |gp| {
                        for r in 0..m {
                            for j in 0..w {
                                gp[r * w + j] += gy[r * total + off + j];
                            }
                        }
                    });
                    off += w;
                }
            }
            Op::AddN { parts } => {
                for &p in parts {
                    into_slot(grads, p, gy.len(), |g| {
                        for (g, &d) in g.iter_mut().zip(gy) {
                            *g += d;
                        }
                    });
                }
            }
            Op::CrossEntropyLs {
                logits,
                targets,
                smoothing,
                probs,
            } => {
                let (m, v) = self.dims2(*logits);
                let uniform = smoothing / v as f64;
                let g0 = gy[0];
                into_slot(grads, *logits, m * v, |gl| {
                    for r in 0..m {
                        for j in 0..v {
                            let q =
                                uniform + if j == targets[r] { 1.0 - smoothing } else { 0.0 };
                            gl[r * v + j] += g0 * (probs[r * v + j] - q);
                        }
                    }
                });
            }
        }
        Ok(())
    }
}

// The three dense kernels. All accumulate into `out` (callers zero it when
// that is what they need).

/// out[m,n] += a[m,k] @ b[k,n]
fn mm(a: &[f64], b: &[f64], m: usize, k: usize, n: usize, out: &mut [f64]) {
    for i in 0..m {
        let arow = &a[i * k..(i + 1) * k];
        let orow = &mut out[i * n..(i + 1) * n];
        for (p, &av) in arow.iter().enumerate() {
            let brow = &b[p * n..(p + 1) * n];
            for j in 0..n {
                orow[j] += av * brow[j];
            }
        }
    }
}

/// out[m,n] += a[m,k] @ b[n,k]^T
fn mm_nt(a: &[f64], b: &[f64], m: usize, k: usize, n: usize, out: &mut [f64]) {
    for i in 0..m {
        let arow = &a[i * k..(i + 1) * k];
        for j in 0..n {
            let brow = &b[j * k..(j + 1) * k];
            let mut s = 0.0;
            for p in 0..k {
                s += arow[p] * brow[p];
            }
            out[i * n + j] += s;
        }
    }
}

/// out[k,n] += a[m,k]^T @ b[m,n]
fn mm_tn(a: &[f64], b: &[f64], m: usize, k: usize, n: usize, out: &mut [f64]) {
    for i in 0..m {
        let arow = &a[i * k..(i + 1) * k];
        let brow = &b[i * n..(i + 1) * n];
        for (p, &av) in arow.iter().enumerate() {
            let orow = &mut out[p * n..(p + 1) * n];
            for j in 0..n {
                orow[j] += av * brow[j];
            }
        }
    }
}

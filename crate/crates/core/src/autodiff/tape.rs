use super::tensor::{matmul_nn, matmul_nt, matmul_tn};
use super::{AutodiffError, Tensor};

/// Handle to a node recorded on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    MatMul(Var, Var),
    MatMulT(Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    AddRow(Var, Var),
    Mul(Var, Var),
    Scale(Var, f64),
    AddScalar(Var),
    Neg(Var),
    Tanh(Var),
    Exp(Var),
    Log(Var),
    Abs(Var),
    Clamp(Var, f64, f64),
    Maximum(Var, Var),
    Minimum(Var, Var),
    RowSoftmax(Var),
    RowLogSoftmax(Var),
    Sum(Var),
    Mean(Var),
    MaxAll(Var, usize),
    MinAll(Var, usize),
    RowSum(Var),
    RowMax(Var, Vec<usize>),
    RowMinPositive(Var, Vec<Option<usize>>),
    Gather(Var, Vec<usize>),
    Reshape(Var),
}

struct Node {
    value: Tensor,
    op: Op,
    requires_grad: bool,
}

/// Linear record of primitive operations. Nodes are appended in evaluation
/// order, so the node list is already a topological order.
#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

/// Gradients produced by [`Tape::backward`], indexed by [`Var`].
#[derive(Debug, Clone)]
pub struct Gradients {
    grads: Vec<Option<Tensor>>,
    shapes: Vec<Vec<usize>>,
}

impl Gradients {
    /// Gradient of the loss w.r.t. `var`; zeros when `var` does not reach the loss.
    pub fn get(&self, var: Var) -> Tensor {
        match &self.grads[var.0] {
            Some(g) => g.clone(),
            None => Tensor::zeros(&self.shapes[var.0]),
        }
    }

    pub fn get_many(&self, vars: &[Var]) -> Vec<Tensor> {
        vars.iter().map(|&v| self.get(v)).collect()
    }
}

fn same_len(op: &'static str, a: &Tensor, b: &Tensor) -> Result<(), AutodiffError> {
    if a.len() != b.len() {
        return Err(AutodiffError::ShapeMismatch {
            op,
            detail: format!("{:?} vs {:?}", a.shape(), b.shape()),
        });
    }
    Ok(())
}

fn require_2d(op: &'static str, t: &Tensor) -> Result<(usize, usize), AutodiffError> {
    if t.shape().len() != 2 {
        return Err(AutodiffError::ShapeMismatch { op, detail: format!("expected 2-D, got {:?}", t.shape()) });
    }
    Ok((t.shape()[0], t.shape()[1]))
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

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    fn push(&mut self, name: &'static str, value: Tensor, op: Op, requires_grad: bool) -> Result<Var, AutodiffError> {
        if !value.is_finite() {
            return Err(AutodiffError::NonFinite { op: name });
        }
        self.nodes.push(Node { value, op, requires_grad });
        Ok(Var(self.nodes.len() - 1))
    }

    fn rg(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    /// Trainable leaf.
    pub fn param(&mut self, value: Tensor) -> Var {
        self.nodes.push(Node { value, op: Op::Leaf, requires_grad: true });
        Var(self.nodes.len() - 1)
    }

    /// Non-trainable leaf.
    pub fn constant(&mut self, value: Tensor) -> Var {
        self.nodes.push(Node { value, op: Op::Leaf, requires_grad: false });
        Var(self.nodes.len() - 1)
    }

    pub fn params(&mut self, values: &[&Tensor]) -> Vec<Var> {
        values.iter().map(|t| self.param((*t).clone())).collect()
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var, AutodiffError> {
        let out = self.value(a).matmul(self.value(b))?;
        let rg = self.rg(a) || self.rg(b);
        self.push("matmul", out, Op::MatMul(a, b), rg)
    }

    /// `a · bᵀ`
    pub fn matmul_t(&mut self, a: Var, b: Var) -> Result<Var, AutodiffError> {
        let out = self.value(a).matmul_t(self.value(b))?;
        let rg = self.rg(a) || self.rg(b);
        self.push("matmul_t", out, Op::MatMulT(a, b), rg)
    }

    fn zip_with(
        &mut self,
        name: &'static str,
        a: Var,
        b: Var,
        op: Op,
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<Var, AutodiffError> {
        let (ta, tb) = (self.value(a), self.value(b));
        same_len(name, ta, tb)?;
        let data = ta.data().iter().zip(tb.data()).map(|(&x, &y)| f(x, y)).collect();
        let out = Tensor::new(ta.shape().to_vec(), data)?;
        let rg = self.rg(a) || self.rg(b);
        self.push(name, out, op, rg)
    }

    fn unary(&mut self, name: &'static str, a: Var, op: Op, f: impl Fn(f64) -> f64) -> Result<Var, AutodiffError> {
        let out = self.value(a).map(f);
        let rg = self.rg(a);
        self.push(name, out, op, rg)
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var, AutodiffError> {
        self.zip_with("add", a, b, Op::Add(a, b), |x, y| x + y)
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var, AutodiffError> {
        self.zip_with("sub", a, b, Op::Sub(a, b), |x, y| x - y)
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var, AutodiffError> {
        self.zip_with("mul", a, b, Op::Mul(a, b), |x, y| x * y)
    }

    pub fn maximum(&mut self, a: Var, b: Var) -> Result<Var, AutodiffError> {
        self.zip_with("maximum", a, b, Op::Maximum(a, b), f64::max)
    }

    pub fn minimum(&mut self, a: Var, b: Var) -> Result<Var, AutodiffError> {
        self.zip_with("minimum", a, b, Op::Minimum(a, b), f64::min)
    }

    /// Adds the row vector `b` (length n) to every row of the `m × n` matrix `a`.
    pub fn add_row(&mut self, a: Var, b: Var) -> Result<Var, AutodiffError> {
        let (m, n) = require_2d("add_row", self.value(a))?;
        if self.value(b).len() != n {
            return Err(AutodiffError::ShapeMismatch {
                op: "add_row",
                detail: format!("{:?} + row {:?}", self.value(a).shape(), self.value(b).shape()),
            });
        }
        let mut data = self.value(a).data().to_vec();
        let row = self.value(b).data();
        for i in 0..m {
            for (x, &r) in data[i * n..(i + 1) * n].iter_mut().zip(row) {
                *x += r;
            }
        }
        let rg = self.rg(a) || self.rg(b);
        self.push("add_row", Tensor::matrix(m, n, data), Op::AddRow(a, b), rg)
    }

    pub fn scale(&mut self, a: Var, c: f64) -> Result<Var, AutodiffError> {
        self.unary("scale", a, Op::Scale(a, c), |x| x * c)
    }

    pub fn add_scalar(&mut self, a: Var, c: f64) -> Result<Var, AutodiffError> {
        self.unary("add_scalar", a, Op::AddScalar(a), |x| x + c)
    }

    pub fn neg(&mut self, a: Var) -> Result<Var, AutodiffError> {
        self.unary("neg", a, Op::Neg(a), |x| -x)
    }

    pub fn tanh(&mut self, a: Var) -> Result<Var, AutodiffError> {
        self.unary("tanh", a, Op::Tanh(a), f64::tanh)
    }

    pub fn exp(&mut self, a: Var) -> Result<Var, AutodiffError> {
        self.unary("exp", a, Op::Exp(a), f64::exp)
    }

    pub fn log(&mut self, a: Var) -> Result<Var, AutodiffError> {
        self.unary("log", a, Op::Log(a), f64::ln)
    }

    pub fn abs(&mut self, a: Var) -> Result<Var, AutodiffError> {
        self.unary("abs", a, Op::Abs(a), f64::abs)
    }

    pub fn clamp(&mut self, a: Var, lo: f64, hi: f64) -> Result<Var, AutodiffError> {
        self.unary("clamp", a, Op::Clamp(a, lo, hi), |x| x.clamp(lo, hi))
    }

    pub fn row_softmax(&mut self, a: Var) -> Result<Var, AutodiffError> {
        let (m, n) = require_2d("row_softmax", self.value(a))?;
        let src = self.value(a).data();
        let mut data = vec![0.0; m * n];
        for i in 0..m {
            softmax_into(&src[i * n..(i + 1) * n], &mut data[i * n..(i + 1) * n]);
        }
        let rg = self.rg(a);
        self.push("row_softmax", Tensor::matrix(m, n, data), Op::RowSoftmax(a), rg)
    }

    pub fn row_log_softmax(&mut self, a: Var) -> Result<Var, AutodiffError> {
        let (m, n) = require_2d("row_log_softmax", self.value(a))?;
        let src = self.value(a).data();
        let mut data = vec![0.0; m * n];
        for i in 0..m {
            let row = &src[i * n..(i + 1) * n];
            let mx = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lse = mx + row.iter().map(|&v| (v - mx).exp()).sum::<f64>().ln();
            for (o, &v) in data[i * n..(i + 1) * n].iter_mut().zip(row) {
                *o = v - lse;
            }
        }
        let rg = self.rg(a);
        self.push("row_log_softmax", Tensor::matrix(m, n, data), Op::RowLogSoftmax(a), rg)
    }

    pub fn sum(&mut self, a: Var) -> Result<Var, AutodiffError> {
        let s = self.value(a).data().iter().sum();
        let rg = self.rg(a);
        self.push("sum", Tensor::scalar(s), Op::Sum(a), rg)
    }

    pub fn mean(&mut self, a: Var) -> Result<Var, AutodiffError> {
        let t = self.value(a);
        if t.is_empty() {
            return Err(AutodiffError::ShapeMismatch { op: "mean", detail: "empty tensor".into() });
        }
        let s = t.data().iter().sum::<f64>() / t.len() as f64;
        let rg = self.rg(a);
        self.push("mean", Tensor::scalar(s), Op::Mean(a), rg)
    }

    pub fn max_reduce(&mut self, a: Var) -> Result<Var, AutodiffError> {
        let (idx, v) = arg_extreme(self.value(a).data(), |x, best| x > best)
            .ok_or(AutodiffError::ShapeMismatch { op: "max_reduce", detail: "empty tensor".into() })?;
        let rg = self.rg(a);
        self.push("max_reduce", Tensor::scalar(v), Op::MaxAll(a, idx), rg)
    }

    pub fn min_reduce(&mut self, a: Var) -> Result<Var, AutodiffError> {
        let (idx, v) = arg_extreme(self.value(a).data(), |x, best| x < best)
            .ok_or(AutodiffError::ShapeMismatch { op: "min_reduce", detail: "empty tensor".into() })?;
        let rg = self.rg(a);
        self.push("min_reduce", Tensor::scalar(v), Op::MinAll(a, idx), rg)
    }

    /// Sum of each row of a matrix, shape `[m]`.
    pub fn row_sum(&mut self, a: Var) -> Result<Var, AutodiffError> {
        let (m, n) = require_2d("row_sum", self.value(a))?;
        let src = self.value(a).data();
        let data = (0..m).map(|i| src[i * n..(i + 1) * n].iter().sum()).collect();
        let rg = self.rg(a);
        self.push("row_sum", Tensor::vector(data), Op::RowSum(a), rg)
    }

    /// Max of each row, shape `[m]`. Ties resolve to the lowest column.
    pub fn row_max(&mut self, a: Var) -> Result<Var, AutodiffError> {
        let (m, n) = require_2d("row_max", self.value(a))?;
        if n == 0 {
            return Err(AutodiffError::ShapeMismatch { op: "row_max", detail: "zero columns".into() });
        }
        let src = self.value(a).data();
        let mut idx = Vec::with_capacity(m);
        let mut data = Vec::with_capacity(m);
        for i in 0..m {
            let (j, v) = arg_extreme(&src[i * n..(i + 1) * n], |x, best| x > best).unwrap();
            idx.push(j);
            data.push(v);
        }
        let rg = self.rg(a);
        self.push("row_max", Tensor::vector(data), Op::RowMax(a, idx), rg)
    }

    /// Minimum over the strictly positive entries of each row; 0 for rows
    /// without any.
    pub fn row_min_positive(&mut self, a: Var) -> Result<Var, AutodiffError> {
        let (m, n) = require_2d("row_min_positive", self.value(a))?;
        let src = self.value(a).data();
        let mut idx = Vec::with_capacity(m);
        let mut data = Vec::with_capacity(m);
        for i in 0..m {
            let mut best: Option<(usize, f64)> = None;
            for (j, &v) in src[i * n..(i + 1) * n].iter().enumerate() {
                if v > 0.0 && best.is_none_or(|(_, b)| v < b) {
                    best = Some((j, v));
                }
            }
            idx.push(best.map(|(j, _)| j));
            data.push(best.map_or(0.0, |(_, v)| v));
        }
        let rg = self.rg(a);
        self.push("row_min_positive", Tensor::vector(data), Op::RowMinPositive(a, idx), rg)
    }

    /// Picks `a[i, cols[i]]` for every row, shape `[m]`.
    pub fn gather(&mut self, a: Var, cols: &[usize]) -> Result<Var, AutodiffError> {
        let (m, n) = require_2d("gather", self.value(a))?;
        if cols.len() != m || cols.iter().any(|&c| c >= n) {
            return Err(AutodiffError::ShapeMismatch {
                op: "gather",
                detail: format!("{} indices into {:?}", cols.len(), self.value(a).shape()),
            });
        }
        let src = self.value(a).data();
        let data = cols.iter().enumerate().map(|(i, &c)| src[i * n + c]).collect();
        let rg = self.rg(a);
        self.push("gather", Tensor::vector(data), Op::Gather(a, cols.to_vec()), rg)
    }

    pub fn reshape(&mut self, a: Var, shape: Vec<usize>) -> Result<Var, AutodiffError> {
        let out = self.value(a).clone().reshape(shape)?;
        let rg = self.rg(a);
        self.push("reshape", out, Op::Reshape(a), rg)
    }

    /// Reverse sweep from a scalar `loss`. Does not mutate the tape, so it
    /// can be called repeatedly.
    pub fn backward(&self, loss: Var) -> Result<Gradients, AutodiffError> {
        if self.value(loss).len() != 1 {
            return Err(AutodiffError::NonScalarLoss { shape: self.value(loss).shape().to_vec() });
        }
        let mut grads: Vec<Option<Vec<f64>>> = vec![None; self.nodes.len()];
        grads[loss.0] = Some(vec![1.0]);

        for i in (0..=loss.0).rev() {
            let Some(g) = grads[i].take() else { continue };
            let node = &self.nodes[i];
            if !node.requires_grad {
                grads[i] = Some(g);
                continue;
            }
            self.propagate(i, &g, &mut grads);
            grads[i] = Some(g);
        }

        let shapes = self.nodes.iter().map(|n| n.value.shape().to_vec()).collect();
        let grads = grads
            .into_iter()
            .zip(&self.nodes)
            .map(|(g, n)| g.map(|d| Tensor::new(n.value.shape().to_vec(), d).expect("grad shape")))
            .collect();
        Ok(Gradients { grads, shapes })
    }

    fn accumulate(&self, grads: &mut [Option<Vec<f64>>], v: Var, f: impl FnOnce(&mut [f64])) {
        if !self.rg(v) {
            return;
        }
        let slot = grads[v.0].get_or_insert_with(|| vec![0.0; self.nodes[v.0].value.len()]);
        f(slot);
    }

    fn propagate(&self, i: usize, g: &[f64], grads: &mut [Option<Vec<f64>>]) {
        let out = &self.nodes[i].value;
        match &self.nodes[i].op {
            Op::Leaf => {}
            Op::MatMul(a, b) => {
                let (ta, tb) = (self.value(*a), self.value(*b));
                let (m, k, n) = (ta.rows(), ta.cols(), tb.cols());
                // dA = G·Bᵀ, dB = Aᵀ·G
                self.accumulate(grads, *a, |ga| matmul_nt(g, tb.data(), ga, m, n, k));
                self.accumulate(grads, *b, |gb| matmul_tn(ta.data(), g, gb, m, k, n));
            }
            Op::MatMulT(a, b) => {
                let (ta, tb) = (self.value(*a), self.value(*b));
                let (m, k, n) = (ta.rows(), ta.cols(), tb.rows());
                // out = A·Bᵀ: dA = G·B, dB = Gᵀ·A
                self.accumulate(grads, *a, |ga| matmul_nn(g, tb.data(), ga, m, n, k));
                self.accumulate(grads, *b, |gb| matmul_tn(g, ta.data(), gb, m, n, k));
            }
            Op::Add(a, b) => {
                self.accumulate(grads, *a, |ga| add_into(ga, g));
                self.accumulate(grads, *b, |gb| add_into(gb, g));
            }
            Op::Sub(a, b) => {
                self.accumulate(grads, *a, |ga| add_into(ga, g));
                self.accumulate(grads, *b, |gb| gb.iter_mut().zip(g).for_each(|(x, &y)| *x -= y));
            }
            Op::AddRow(a, b) => {
                self.accumulate(grads, *a, |ga| add_into(ga, g));
                let n = self.value(*b).len();
                self.accumulate(grads, *b, |gb| {
                    for row in g.chunks(n) {
                        add_into(gb, row);
                    }
                });
            }
            Op::Mul(a, b) => {
                let (va, vb) = (self.value(*a).data(), self.value(*b).data());
                self.accumulate(grads, *a, |ga| {
                    ga.iter_mut().zip(g.iter().zip(vb)).for_each(|(x, (&gi, &bi))| *x += gi * bi)
                });
                self.accumulate(grads, *b, |gb| {
                    gb.iter_mut().zip(g.iter().zip(va)).for_each(|(x, (&gi, &ai))| *x += gi * ai)
                });
            }
            Op::Scale(a, c) => {
                let c = *c;
                self.accumulate(grads, *a, |ga| ga.iter_mut().zip(g).for_each(|(x, &y)| *x += c * y));
            }
            Op::AddScalar(a) => self.accumulate(grads, *a, |ga| add_into(ga, g)),
            Op::Neg(a) => self.accumulate(grads, *a, |ga| ga.iter_mut().zip(g).for_each(|(x, &y)| *x -= y)),
            Op::Tanh(a) => self.accumulate(grads, *a, |ga| {
                ga.iter_mut().zip(g.iter().zip(out.data())).for_each(|(x, (&gi, &t))| *x += gi * (1.0 - t * t))
            }),
            Op::Exp(a) => self.accumulate(grads, *a, |ga| {
                ga.iter_mut().zip(g.iter().zip(out.data())).for_each(|(x, (&gi, &e))| *x += gi * e)
            }),
            Op::Log(a) => {
                let va = self.value(*a).data();
                self.accumulate(grads, *a, |ga| {
                    ga.iter_mut().zip(g.iter().zip(va)).for_each(|(x, (&gi, &v))| *x += gi / v)
                })
            }
            Op::Abs(a) => {
                let va = self.value(*a).data();
                self.accumulate(grads, *a, |ga| {
                    ga.iter_mut().zip(g.iter().zip(va)).for_each(|(x, (&gi, &v))| *x += gi * sign0(v))
                })
            }
            Op::Clamp(a, lo, hi) => {
                let (lo, hi) = (*lo, *hi);
                let va = self.value(*a).data();
                self.accumulate(grads, *a, |ga| {
                    ga.iter_mut().zip(g.iter().zip(va)).for_each(|(x, (&gi, &v))| {
                        if v >= lo && v <= hi {
                            *x += gi
                        }
                    })
                })
            }
            Op::Maximum(a, b) | Op::Minimum(a, b) => {
                let take_a_when_max = matches!(self.nodes[i].op, Op::Maximum(..));
                let (va, vb) = (self.value(*a).data(), self.value(*b).data());
                // Ties send the gradient to the first operand.
                let picks_a: Vec<bool> = va
                    .iter()
                    .zip(vb)
                    .map(|(&x, &y)| if take_a_when_max { x >= y } else { x <= y })
                    .collect();
                self.accumulate(grads, *a, |ga| {
                    for ((x, &gi), &p) in ga.iter_mut().zip(g).zip(&picks_a) {
                        if p {
                            *x += gi
                        }
                    }
                });
                self.accumulate(grads, *b, |gb| {
                    for ((x, &gi), &p) in gb.iter_mut().zip(g).zip(&picks_a) {
                        if !p {
                            *x += gi
                        }
                    }
                });
            }
            Op::RowSoftmax(a) => {
                let n = out.cols();
                self.accumulate(grads, *a, |ga| {
                    for ((gr, sr), ar) in g.chunks(n).zip(out.data().chunks(n)).zip(ga.chunks_mut(n)) {
                        let dotp: f64 = gr.iter().zip(sr).map(|(x, y)| x * y).sum();
                        for ((x, &gi), &si) in ar.iter_mut().zip(gr).zip(sr) {
                            *x += si * (gi - dotp);
                        }
                    }
                })
            }
            Op::RowLogSoftmax(a) => {
                let n = out.cols();
                self.accumulate(grads, *a, |ga| {
                    for ((gr, lr), ar) in g.chunks(n).zip(out.data().chunks(n)).zip(ga.chunks_mut(n)) {
                        let gsum: f64 = gr.iter().sum();
                        for ((x, &gi), &li) in ar.iter_mut().zip(gr).zip(lr) {
                            *x += gi - li.exp() * gsum;
                        }
                    }
                })
            }
            Op::Sum(a) => self.accumulate(grads, *a, |ga| ga.iter_mut().for_each(|x| *x += g[0])),
            Op::Mean(a) => {
                let n = self.value(*a).len() as f64;
                self.accumulate(grads, *a, |ga| ga.iter_mut().for_each(|x| *x += g[0] / n))
            }
            Op::MaxAll(a, idx) | Op::MinAll(a, idx) => {
                let idx = *idx;
                self.accumulate(grads, *a, |ga| ga[idx] += g[0])
            }
            Op::RowSum(a) => {
                let n = self.value(*a).cols();
                self.accumulate(grads, *a, |ga| {
                    for (row, &gi) in ga.chunks_mut(n).zip(g) {
                        row.iter_mut().for_each(|x| *x += gi);
                    }
                })
            }
            Op::RowMax(a, idx) => {
                let n = self.value(*a).cols();
                self.accumulate(grads, *a, |ga| {
                    for (r, (&j, &gi)) in idx.iter().zip(g).enumerate() {
                        ga[r * n + j] += gi;
                    }
                })
            }
            Op::RowMinPositive(a, idx) => {
                let n = self.value(*a).cols();
                self.accumulate(grads, *a, |ga| {
                    for (r, (j, &gi)) in idx.iter().zip(g).enumerate() {
                        if let Some(j) = j {
                            ga[r * n + j] += gi;
                        }
                    }
                })
            }
            Op::Gather(a, cols) => {
                let n = self.value(*a).cols();
                self.accumulate(grads, *a, |ga| {
                    for (r, (&c, &gi)) in cols.iter().zip(g).enumerate() {
                        ga[r * n + c] += gi;
                    }
                })
            }
            Op::Reshape(a) => self.accumulate(grads, *a, |ga| add_into(ga, g)),
        }
    }
}

fn add_into(dst: &mut [f64], src: &[f64]) {
    dst.iter_mut().zip(src).for_each(|(x, &y)| *x += y);
}

/// Sub-gradient of |x| with 0 at the kink.
fn sign0(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

fn arg_extreme(data: &[f64], better: impl Fn(f64, f64) -> bool) -> Option<(usize, f64)> {
    let mut it = data.iter().copied().enumerate();
    let first = it.next()?;
    Some(it.fold(first, |(bi, bv), (i, v)| if better(v, bv) { (i, v) } else { (bi, bv) }))
}

/// Numerically stable softmax of one row.
pub fn softmax_into(row: &[f64], out: &mut [f64]) {
    let mx = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut s = 0.0;
    for (o, &v) in out.iter_mut().zip(row) {
        *o = (v - mx).exp();
        s += *o;
    }
    for o in out.iter_mut() {
        *o /= s;
    }
}

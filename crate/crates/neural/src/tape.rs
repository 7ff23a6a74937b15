//! Reverse-mode automatic differentiation over [`Mat`] values.
//!
//! Operations are recorded on a [`Tape`] as they are evaluated; calling
//! [`Tape::backward`] on a scalar node returns the gradient of that scalar
//! with respect to every recorded node.

use crate::tensor::{gemm_acc, Mat};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

const LN_EPS: f64 = 1e-5;
const GELU_C: f64 = 0.797_884_560_802_865_4; // sqrt(2 / pi)
const GELU_K: f64 = 0.044_715;

enum Op {
    Leaf,
    MatMul { a: Var, b: Var, ta: bool, tb: bool },
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    AddRow(Var, Var),
    Scale(Var, f64),
    ScaleBy(Var, Var),
    Exp(Var),
    Gelu(Var),
    Tanh(Var),
    Abs(Var),
    LayerNorm { a: Var, gain: Var, bias: Var, xhat: Mat, inv_std: Vec<f64> },
    Softmax(Var),
    SliceCols { a: Var, start: usize },
    ConcatCols(Vec<Var>),
    SliceRows { a: Var, start: usize },
    StackRows(Vec<Var>),
    Gather { table: Var, ids: Vec<usize> },
    MeanRows(Var),
    L2NormalizeRows { a: Var, norms: Vec<f64> },
    Transpose(Var),
    CrossEntropy { logits: Var, targets: Vec<usize>, probs: Mat },
    Mean(Var),
    BceWithLogits { z: Var, labels: Vec<f64> },
}

struct Node {
    value: Mat,
    op: Op,
}

#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

fn gelu(x: f64) -> f64 {
    0.5 * x * (1.0 + (GELU_C * (x + GELU_K * x * x * x)).tanh())
}

fn gelu_grad(x: f64) -> f64 {
    let t = (GELU_C * (x + GELU_K * x * x * x)).tanh();
    0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * GELU_C * (1.0 + 3.0 * GELU_K * x * x)
}

fn zip_map(a: &Mat, b: &Mat, f: impl Fn(f64, f64) -> f64) -> Mat {
    assert_eq!(a.shape(), b.shape(), "elementwise shape mismatch");
    Mat::from_vec(a.rows, a.cols, a.data.iter().zip(&b.data).map(|(&x, &y)| f(x, y)).collect())
}

/// Row-wise softmax with the usual max shift.
pub fn softmax_rows(a: &Mat) -> Mat {
    let mut y = a.clone();
    for r in 0..y.rows {
        let row = y.row_mut(r);
        let m = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut s = 0.0;
        for v in row.iter_mut() {
            *v = (*v - m).exp();
            s += *v;
        }
        for v in row.iter_mut() {
            *v /= s;
        }
    }
    y
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

    fn push(&mut self, value: Mat, op: Op) -> Var {
        self.nodes.push(Node { value, op });
        Var(self.nodes.len() - 1)
    }

    pub fn value(&self, v: Var) -> &Mat {
        &self.nodes[v.0].value
    }

    pub fn scalar(&self, v: Var) -> f64 {
        let m = self.value(v);
        assert_eq!(m.shape(), (1, 1), "not a scalar");
        m.data[0]
    }

    /// A leaf: a parameter or a constant input.
    pub fn leaf(&mut self, value: Mat) -> Var {
        self.push(value, Op::Leaf)
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Var {
        self.matmul_t(a, false, b, false)
    }

    /// `op(a) · op(b)`, transposing the operands as flagged.
    pub fn matmul_t(&mut self, a: Var, ta: bool, b: Var, tb: bool) -> Var {
        let v = Mat::matmul(self.value(a), ta, self.value(b), tb);
        self.push(v, Op::MatMul { a, b, ta, tb })
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        let v = zip_map(self.value(a), self.value(b), |x, y| x + y);
        self.push(v, Op::Add(a, b))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Var {
        let v = zip_map(self.value(a), self.value(b), |x, y| x - y);
        self.push(v, Op::Sub(a, b))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Var {
        let v = zip_map(self.value(a), self.value(b), |x, y| x * y);
        self.push(v, Op::Mul(a, b))
    }

    /// Adds the `1 × c` row `row` to every row of `a`.
    pub fn add_row(&mut self, a: Var, row: Var) -> Var {
        let (av, rv) = (self.value(a), self.value(row));
        assert_eq!((rv.rows, rv.cols), (1, av.cols), "bias shape");
        let mut v = av.clone();
        for r in 0..v.rows {
            for (x, b) in v.row_mut(r).iter_mut().zip(&rv.data) {
                *x += b;
            }
        }
        self.push(v, Op::AddRow(a, row))
    }

    pub fn scale(&mut self, a: Var, s: f64) -> Var {
        let v = self.value(a).map(|x| x * s);
        self.push(v, Op::Scale(a, s))
    }

    /// Multiplies `a` by the `1 × 1` node `s`.
    pub fn scale_by(&mut self, a: Var, s: Var) -> Var {
        let k = self.scalar(s);
        let v = self.value(a).map(|x| x * k);
        self.push(v, Op::ScaleBy(a, s))
    }

    pub fn exp(&mut self, a: Var) -> Var {
        let v = self.value(a).map(f64::exp);
        self.push(v, Op::Exp(a))
    }

    /// GELU, tanh approximation.
    pub fn gelu(&mut self, a: Var) -> Var {
        let v = self.value(a).map(gelu);
        self.push(v, Op::Gelu(a))
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        let v = self.value(a).map(f64::tanh);
        self.push(v, Op::Tanh(a))
    }

    pub fn abs(&mut self, a: Var) -> Var {
        let v = self.value(a).map(f64::abs);
        self.push(v, Op::Abs(a))
    }

    /// Row-wise layer normalization with `1 × c` gain and bias.
    pub fn layer_norm(&mut self, a: Var, gain: Var, bias: Var) -> Var {
        let x = self.value(a);
        let (g, b) = (self.value(gain), self.value(bias));
        let n = x.cols as f64;
        let mut xhat = x.clone();
        let mut inv_std = Vec::with_capacity(x.rows);
        let mut y = Mat::zeros(x.rows, x.cols);
        for r in 0..x.rows {
            let row = xhat.row_mut(r);
            let mean = row.iter().sum::<f64>() / n;
            let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
            let inv = 1.0 / (var + LN_EPS).sqrt();
            for v in row.iter_mut() {
                *v = (*v - mean) * inv;
            }
            inv_std.push(inv);
            for (c, out) in y.row_mut(r).iter_mut().enumerate() {
                *out = xhat.at(r, c) * g.data[c] + b.data[c];
            }
        }
        self.push(y, Op::LayerNorm { a, gain, bias, xhat, inv_std })
    }

    pub fn softmax(&mut self, a: Var) -> Var {
        let v = softmax_rows(self.value(a));
        self.push(v, Op::Softmax(a))
    }

    pub fn slice_cols(&mut self, a: Var, start: usize, width: usize) -> Var {
        let x = self.value(a);
        assert!(start + width <= x.cols);
        let mut v = Mat::zeros(x.rows, width);
        for r in 0..x.rows {
            v.row_mut(r).copy_from_slice(&x.row(r)[start..start + width]);
        }
        self.push(v, Op::SliceCols { a, start })
    }

    pub fn concat_cols(&mut self, parts: &[Var]) -> Var {
        let rows = self.value(parts[0]).rows;
        let cols: usize = parts.iter().map(|&p| self.value(p).cols).sum();
        let mut v = Mat::zeros(rows, cols);
        let mut off = 0;
        for &p in parts {
            let x = self.value(p);
            assert_eq!(x.rows, rows, "concat row mismatch");
            for r in 0..rows {
                v.row_mut(r)[off..off + x.cols].copy_from_slice(x.row(r));
            }
            off += x.cols;
        }
        self.push(v, Op::ConcatCols(parts.to_vec()))
    }

    pub fn slice_rows(&mut self, a: Var, start: usize, count: usize) -> Var {
        let x = self.value(a);
        assert!(start + count <= x.rows, "row slice out of range");
        let v = Mat::from_vec(count, x.cols, x.data[start * x.cols..(start + count) * x.cols].to_vec());
        self.push(v, Op::SliceRows { a, start })
    }

    pub fn stack_rows(&mut self, parts: &[Var]) -> Var {
        let cols = self.value(parts[0]).cols;
        let mut data = Vec::new();
        let mut rows = 0;
        for &p in parts {
            let x = self.value(p);
            assert_eq!(x.cols, cols, "stack column mismatch");
            data.extend_from_slice(&x.data);
            rows += x.rows;
        }
        self.push(Mat::from_vec(rows, cols, data), Op::StackRows(parts.to_vec()))
    }

    /// Rows `ids` of `table`, in order.
    pub fn gather(&mut self, table: Var, ids: &[usize]) -> Var {
        let t = self.value(table);
        let mut v = Mat::zeros(ids.len(), t.cols);
        for (r, &id) in ids.iter().enumerate() {
            v.row_mut(r).copy_from_slice(t.row(id));
        }
        self.push(v, Op::Gather { table, ids: ids.to_vec() })
    }

    /// Column means as a `1 × c` row; zero for an empty input.
    pub fn mean_rows(&mut self, a: Var) -> Var {
        let x = self.value(a);
        let mut v = Mat::zeros(1, x.cols);
        if x.rows > 0 {
            for r in 0..x.rows {
                for (o, y) in v.data.iter_mut().zip(x.row(r)) {
                    *o += y;
                }
            }
            v.scale_assign(1.0 / x.rows as f64);
        }
        self.push(v, Op::MeanRows(a))
    }

    /// Rows divided by `sqrt(|row|^2 + eps)`.
    pub fn l2_normalize_rows(&mut self, a: Var, eps: f64) -> Var {
        let mut v = self.value(a).clone();
        let mut norms = Vec::with_capacity(v.rows);
        for r in 0..v.rows {
            let row = v.row_mut(r);
            let n = (row.iter().map(|x| x * x).sum::<f64>() + eps).sqrt();
            for x in row.iter_mut() {
                *x /= n;
            }
            norms.push(n);
        }
        self.push(v, Op::L2NormalizeRows { a, norms })
    }

    pub fn transpose(&mut self, a: Var) -> Var {
        let v = self.value(a).transpose();
        self.push(v, Op::Transpose(a))
    }

    /// Mean over rows of softmax cross-entropy against target columns.
    pub fn cross_entropy(&mut self, logits: Var, targets: &[usize]) -> Var {
        let z = self.value(logits);
        assert_eq!(z.rows, targets.len(), "one target per row");
        let probs = softmax_rows(z);
        let mut loss = 0.0;
        for (r, &t) in targets.iter().enumerate() {
            let row = z.row(r);
            let m = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let lse = m + row.iter().map(|x| (x - m).exp()).sum::<f64>().ln();
            loss += lse - row[t];
        }
        loss /= targets.len().max(1) as f64;
        self.push(Mat::scalar(loss), Op::CrossEntropy { logits, targets: targets.to_vec(), probs })
    }

    pub fn mean(&mut self, a: Var) -> Var {
        let x = self.value(a);
        let v = x.sum() / x.len().max(1) as f64;
        self.push(Mat::scalar(v), Op::Mean(a))
    }

    /// Mean binary cross-entropy of logits `z` (one per row of an `n × 1`
    /// column) against labels in {0, 1}.
    pub fn bce_with_logits(&mut self, z: Var, labels: &[f64]) -> Var {
        let zv = self.value(z);
        assert_eq!(zv.len(), labels.len());
        let loss = zv
            .data
            .iter()
            .zip(labels)
            .map(|(&x, &y)| x.max(0.0) - x * y + (-x.abs()).exp().ln_1p())
            .sum::<f64>()
            / labels.len().max(1) as f64;
        self.push(Mat::scalar(loss), Op::BceWithLogits { z, labels: labels.to_vec() })
    }

    /// Gradients of the scalar `loss` with respect to every node.
    pub fn backward(&self, loss: Var) -> Grads {
        assert_eq!(self.value(loss).shape(), (1, 1), "backward needs a scalar");
        let mut g: Vec<Option<Mat>> = (0..self.nodes.len()).map(|_| None).collect();
        g[loss.0] = Some(Mat::scalar(1.0));
        for i in (0..=loss.0).rev() {
            let Some(dy) = g[i].take() else { continue };
            let node = &self.nodes[i];
            let val = |v: Var| &self.nodes[v.0].value;
            match &node.op {
                Op::Leaf => {
                    g[i] = Some(dy);
                    continue;
                }
                Op::MatMul { a, b, ta, tb } => {
                    let (av, bv) = (val(*a), val(*b));
                    let mut da = Mat::zeros(av.rows, av.cols);
                    if *ta {
                        gemm_acc(1.0, bv, *tb, &dy, true, &mut da);
                    } else {
                        gemm_acc(1.0, &dy, false, bv, !*tb, &mut da);
                    }
                    let mut db = Mat::zeros(bv.rows, bv.cols);
                    if *tb {
                        gemm_acc(1.0, &dy, true, av, *ta, &mut db);
                    } else {
                        gemm_acc(1.0, av, !*ta, &dy, false, &mut db);
                    }
                    acc(&mut g, *a, da);
                    acc(&mut g, *b, db);
                }
                Op::Add(a, b) => {
                    acc(&mut g, *a, dy.clone());
                    acc(&mut g, *b, dy);
                }
                Op::Sub(a, b) => {
                    acc(&mut g, *b, dy.map(|x| -x));
                    acc(&mut g, *a, dy);
                }
                Op::Mul(a, b) => {
                    acc(&mut g, *a, zip_map(&dy, val(*b), |d, y| d * y));
                    acc(&mut g, *b, zip_map(&dy, val(*a), |d, x| d * x));
                }
                Op::AddRow(a, row) => {
                    let mut dr = Mat::zeros(1, dy.cols);
                    for r in 0..dy.rows {
                        for (o, d) in dr.data.iter_mut().zip(dy.row(r)) {
                            *o += d;
                        }
                    }
                    acc(&mut g, *row, dr);
                    acc(&mut g, *a, dy);
                }
                Op::Scale(a, s) => acc(&mut g, *a, dy.map(|d| d * s)),
                Op::ScaleBy(a, s) => {
                    let k = val(*s).data[0];
                    let ds = dy.data.iter().zip(&val(*a).data).map(|(d, x)| d * x).sum();
                    acc(&mut g, *s, Mat::scalar(ds));
                    acc(&mut g, *a, dy.map(|d| d * k));
                }
                Op::Exp(a) => acc(&mut g, *a, zip_map(&dy, &node.value, |d, y| d * y)),
                Op::Gelu(a) => acc(&mut g, *a, zip_map(&dy, val(*a), |d, x| d * gelu_grad(x))),
                Op::Tanh(a) => acc(&mut g, *a, zip_map(&dy, &node.value, |d, y| d * (1.0 - y * y))),
                Op::Abs(a) => acc(&mut g, *a, zip_map(&dy, val(*a), |d, x| d * x.signum() * f64::from(x != 0.0))),
                Op::LayerNorm { a, gain, bias, xhat, inv_std } => {
                    let gv = val(*gain);
                    let cols = dy.cols;
                    let n = cols as f64;
                    let mut dg = Mat::zeros(1, cols);
                    let mut db = Mat::zeros(1, cols);
                    let mut dx = Mat::zeros(dy.rows, cols);
                    let mut dxhat = vec![0.0; cols];
                    for r in 0..dy.rows {
                        let (dyr, xr) = (dy.row(r), xhat.row(r));
                        let mut s1 = 0.0;
                        let mut s2 = 0.0;
                        for c in 0..cols {
                            dg.data[c] += dyr[c] * xr[c];
                            db.data[c] += dyr[c];
                            dxhat[c] = dyr[c] * gv.data[c];
                            s1 += dxhat[c];
                            s2 += dxhat[c] * xr[c];
                        }
                        let inv = inv_std[r];
                        for (c, o) in dx.row_mut(r).iter_mut().enumerate() {
                            *o = inv / n * (n * dxhat[c] - s1 - xr[c] * s2);
                        }
                    }
                    acc(&mut g, *gain, dg);
                    acc(&mut g, *bias, db);
                    acc(&mut g, *a, dx);
                }
                Op::Softmax(a) => {
                    let y = &node.value;
                    let mut dx = Mat::zeros(y.rows, y.cols);
                    for r in 0..y.rows {
                        let (yr, dr) = (y.row(r), dy.row(r));
                        let dot: f64 = yr.iter().zip(dr).map(|(p, q)| p * q).sum();
                        for (c, o) in dx.row_mut(r).iter_mut().enumerate() {
                            *o = yr[c] * (dr[c] - dot);
                        }
                    }
                    acc(&mut g, *a, dx);
                }
                Op::SliceCols { a, start } => {
                    let x = val(*a);
                    acc_region(&mut g, *a, x.shape(), 0, *start, &dy);
                }
                Op::ConcatCols(parts) => {
                    let mut off = 0;
                    for &p in parts {
                        let w = val(p).cols;
                        let mut dp = Mat::zeros(dy.rows, w);
                        for r in 0..dy.rows {
                            dp.row_mut(r).copy_from_slice(&dy.row(r)[off..off + w]);
                        }
                        off += w;
                        acc(&mut g, p, dp);
                    }
                }
                Op::SliceRows { a, start } => {
                    let x = val(*a);
                    acc_region(&mut g, *a, x.shape(), *start, 0, &dy);
                }
                Op::StackRows(parts) => {
                    let mut off = 0;
                    for &p in parts {
                        let n = val(p).len();
                        let (rows, cols) = val(p).shape();
                        acc(&mut g, p, Mat::from_vec(rows, cols, dy.data[off..off + n].to_vec()));
                        off += n;
                    }
                }
                Op::Gather { table, ids } => {
                    let t = val(*table);
                    let mut dt = Mat::zeros(t.rows, t.cols);
                    for (r, &id) in ids.iter().enumerate() {
                        for (o, d) in dt.row_mut(id).iter_mut().zip(dy.row(r)) {
                            *o += d;
                        }
                    }
                    acc(&mut g, *table, dt);
                }
                Op::MeanRows(a) => {
                    let x = val(*a);
                    let mut dx = Mat::zeros(x.rows, x.cols);
                    if x.rows > 0 {
                        let s = 1.0 / x.rows as f64;
                        for r in 0..x.rows {
                            for (o, d) in dx.row_mut(r).iter_mut().zip(&dy.data) {
                                *o = d * s;
                            }
                        }
                    }
                    acc(&mut g, *a, dx);
                }
                Op::L2NormalizeRows { a, norms } => {
                    let y = &node.value;
                    let mut dx = Mat::zeros(y.rows, y.cols);
                    for r in 0..y.rows {
                        let (yr, dr) = (y.row(r), dy.row(r));
                        let dot: f64 = yr.iter().zip(dr).map(|(p, q)| p * q).sum();
                        for (c, o) in dx.row_mut(r).iter_mut().enumerate() {
                            *o = (dr[c] - yr[c] * dot) / norms[r];
                        }
                    }
                    acc(&mut g, *a, dx);
                }
                Op::Transpose(a) => acc(&mut g, *a, dy.transpose()),
                Op::CrossEntropy { logits, targets, probs } => {
                    let d = dy.data[0] / targets.len().max(1) as f64;
                    let mut dz = probs.clone();
                    for (r, &t) in targets.iter().enumerate() {
                        dz.data[r * dz.cols + t] -= 1.0;
                    }
                    dz.scale_assign(d);
                    acc(&mut g, *logits, dz);
                }
                Op::Mean(a) => {
                    let x = val(*a);
                    let d = dy.data[0] / x.len().max(1) as f64;
                    acc(&mut g, *a, Mat::filled(x.rows, x.cols, d));
                }
                Op::BceWithLogits { z, labels } => {
                    let d = dy.data[0] / labels.len().max(1) as f64;
                    let zv = val(*z);
                    let data = zv.data.iter().zip(labels).map(|(&x, &y)| d * (1.0 / (1.0 + (-x).exp()) - y)).collect();
                    acc(&mut g, *z, Mat::from_vec(zv.rows, zv.cols, data));
                }
            }
        }
        Grads { g }
    }
}

/// Adds `d` into the block of `v`'s gradient starting at (`row0`, `col0`).
fn acc_region(g: &mut [Option<Mat>], v: Var, shape: (usize, usize), row0: usize, col0: usize, d: &Mat) {
    let m = g[v.0].get_or_insert_with(|| Mat::zeros(shape.0, shape.1));
    for r in 0..d.rows {
        for (o, x) in m.row_mut(row0 + r)[col0..col0 + d.cols].iter_mut().zip(d.row(r)) {
            *o += x;
        }
    }
}

fn acc(g: &mut [Option<Mat>], v: Var, d: Mat) {
    match &mut g[v.0] {
        Some(m) => m.add_assign(&d),
        slot @ None => *slot = Some(d),
    }
}

/// Gradients produced by [`Tape::backward`]; only leaves keep theirs.
pub struct Grads {
    g: Vec<Option<Mat>>,
}

impl Grads {
    pub fn get(&self, v: Var) -> Option<&Mat> {
        self.g[v.0].as_ref()
    }

    pub fn take(&mut self, v: Var) -> Option<Mat> {
        self.g[v.0].take()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Central-difference check of d(loss)/d(leaf) for every leaf.
    fn check(leaves: Vec<Mat>, f: impl Fn(&mut Tape, &[Var]) -> Var) {
        let mut tape = Tape::new();
        let vars: Vec<Var> = leaves.iter().map(|m| tape.leaf(m.clone())).collect();
        let loss = f(&mut tape, &vars);
        let grads = tape.backward(loss);
        let eval = |ls: &[Mat]| {
            let mut t = Tape::new();
            let vs: Vec<Var> = ls.iter().map(|m| t.leaf(m.clone())).collect();
            let l = f(&mut t, &vs);
            t.scalar(l)
        };
        let h = 1e-5;
        for (k, leaf) in leaves.iter().enumerate() {
            let analytic = grads.get(vars[k]).cloned().unwrap_or_else(|| Mat::zeros(leaf.rows, leaf.cols));
            for j in 0..leaf.len() {
                let mut plus = leaves.clone();
                plus[k].data[j] += h;
                let mut minus = leaves.clone();
                minus[k].data[j] -= h;
                let fd = (eval(&plus) - eval(&minus)) / (2.0 * h);
                let a = analytic.data[j];
                assert!((fd - a).abs() <= 1e-6 * (1.0 + fd.abs().max(a.abs())), "leaf {k}[{j}]: fd {fd} vs {a}");
            }
        }
    }

    fn rand_mat(rows: usize, cols: usize, seed: u64) -> Mat {
        Mat::uniform(rows, cols, 1.0, &mut ChaCha8Rng::seed_from_u64(seed))
    }

    #[test]
    fn matmul_variants() {
        for (ta, tb) in [(false, false), (true, false), (false, true), (true, true)] {
            let a = if ta { rand_mat(4, 3, 1) } else { rand_mat(3, 4, 1) };
            let b = if tb { rand_mat(2, 4, 2) } else { rand_mat(4, 2, 2) };
            let w = rand_mat(3, 2, 3);
            check(vec![a, b, w], |t, v| {
                let c = t.matmul_t(v[0], ta, v[1], tb);
                let m = t.mul(c, v[2]);
                t.mean(m)
            });
        }
    }

    #[test]
    fn elementwise_and_rows() {
        check(vec![rand_mat(3, 4, 1), rand_mat(3, 4, 2), rand_mat(1, 4, 3), Mat::scalar(0.7)], |t, v| {
            let a = t.add(v[0], v[1]);
            let b = t.sub(a, v[1]);
            let c = t.add_row(b, v[2]);
            let d = t.gelu(c);
            let e = t.tanh(d);
            let s = t.exp(v[3]);
            let f = t.scale_by(e, s);
            let g = t.mul(f, v[1]);
            let h = t.scale(g, -1.5);
            let i = t.abs(h);
            t.mean(i)
        });
    }

    #[test]
    fn layer_norm_and_softmax() {
        check(vec![rand_mat(3, 5, 4), rand_mat(1, 5, 5), rand_mat(1, 5, 6), rand_mat(3, 5, 7)], |t, v| {
            let y = t.layer_norm(v[0], v[1], v[2]);
            let s = t.softmax(y);
            let m = t.mul(s, v[3]);
            t.mean(m)
        });
    }

    #[test]
    fn slicing_and_stacking() {
        check(vec![rand_mat(4, 6, 1), rand_mat(5, 3, 2), rand_mat(2, 5, 3)], |t, v| {
            let a = t.slice_cols(v[0], 1, 3);
            let b = t.slice_cols(v[0], 4, 2);
            let c = t.concat_cols(&[b, a]);
            let r = t.slice_rows(c, 1, 2);
            let e = t.gather(v[1], &[0, 3, 3, 1]);
            let e2 = t.slice_cols(e, 0, 3);
            let p = t.mean_rows(e2);
            let q = t.slice_cols(r, 0, 3);
            let st = t.stack_rows(&[q, p]);
            let tr = t.transpose(st);
            let w = t.slice_rows(v[1], 1, 3);
            let m = t.matmul(tr, w);
            let n = t.mul(m, m);
            t.mean(n)
        });
    }

    #[test]
    fn normalization_and_losses() {
        check(vec![rand_mat(3, 4, 8), rand_mat(3, 4, 9), rand_mat(3, 1, 10)], |t, v| {
            let u = t.l2_normalize_rows(v[0], 1e-12);
            let w = t.l2_normalize_rows(v[1], 1e-12);
            let s = t.matmul_t(u, false, w, true);
            let s = t.scale(s, 3.0);
            let l1 = t.cross_entropy(s, &[0, 1, 2]);
            let st = t.transpose(s);
            let l2 = t.cross_entropy(st, &[2, 0, 1]);
            let l3 = t.bce_with_logits(v[2], &[1.0, 0.0, 1.0]);
            let a = t.add(l1, l2);
            t.add(a, l3)
        });
    }

    #[test]
    fn cross_entropy_uniform_is_ln_n() {
        let mut t = Tape::new();
        let z = t.leaf(Mat::filled(5, 5, 0.3));
        let l = t.cross_entropy(z, &[0, 1, 2, 3, 4]);
        assert!((t.scalar(l) - 5f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn unused_leaf_has_no_gradient() {
        let mut t = Tape::new();
        let a = t.leaf(Mat::scalar(2.0));
        let b = t.leaf(Mat::scalar(3.0));
        let l = t.mean(a);
        let g = t.backward(l);
        assert!(g.get(b).is_none());
        assert_eq!(g.get(a).unwrap().data, vec![1.0]);
    }
}

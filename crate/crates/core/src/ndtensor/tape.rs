use ndarray::{s, Array2, Axis};

use super::{Tensor, TensorError};

type Shape = (usize, usize);

/// Handle to a value recorded on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(usize);

impl Var {
    pub fn id(self) -> usize {
        self.0
    }
}

#[derive(Debug)]
enum Op {
    Leaf,
    MatMul(Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Scale(Var, f64),
    Relu(Var),
    Sigmoid(Var),
    Softplus(Var),
    ConcatCols(Vec<Var>),
    GatherRows(Var, Vec<usize>),
    Take(Var, Vec<usize>),
    ScatterAdd(Var, Vec<usize>),
    EdgeAggregate {
        x: Var,
        edges: Vec<(usize, usize)>,
        weights: Option<Var>,
    },
    MaxPoolRows(Var, Vec<usize>),
    SumAll(Var),
    SoftmaxCrossEntropy {
        logits: Var,
        label: usize,
        probs: Vec<f64>,
    },
}

#[derive(Debug)]
struct Node {
    value: Array2<f64>,
    op: Op,
    requires_grad: bool,
}

/// Reverse-mode differentiation tape over dense matrices.
///
/// Nodes are appended in evaluation order, so the tape itself is a
/// topological order and `backward` walks it once in reverse.
#[derive(Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

/// Gradients produced by [`Tape::backward`], indexed by [`Var`].
#[derive(Debug)]
pub struct Gradients {
    grads: Vec<Option<Array2<f64>>>,
    shapes: Vec<Shape>,
}

impl Gradients {
    /// Gradient of the loss with respect to `var`; zeros if `var` did not
    /// influence the loss.
    pub fn get(&self, var: Var) -> Tensor {
        match &self.grads[var.0] {
            Some(g) => Tensor::from(g.clone()),
            None => {
                let (r, c) = self.shapes[var.0];
                Tensor::zeros(r, c)
            }
        }
    }

    pub fn contributed(&self, var: Var) -> bool {
        self.grads[var.0].is_some()
    }
}

fn check_finite(op: &'static str, value: &Array2<f64>) -> Result<(), TensorError> {
    if value.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(TensorError::NonFinite { op })
    }
}

fn broadcast_shape(op: &'static str, a: Shape, b: Shape) -> Result<Shape, TensorError> {
    let dim = |x: usize, y: usize| -> Option<usize> {
        if x == y {
            Some(x)
        } else if x == 1 {
            Some(y)
        } else if y == 1 {
            Some(x)
        } else {
            None
        }
    };
    match (dim(a.0, b.0), dim(a.1, b.1)) {
        (Some(r), Some(c)) => Ok((r, c)),
        _ => Err(TensorError::ShapeMismatch {
            op,
            left: a,
            right: b,
        }),
    }
}

/// Sum `grad` down to `shape`, undoing a broadcast.
fn reduce_to(grad: Array2<f64>, shape: Shape) -> Array2<f64> {
    let mut g = grad;
    if shape.0 == 1 && g.nrows() != 1 {
        g = g.sum_axis(Axis(0)).insert_axis(Axis(0));
    }
    if shape.1 == 1 && g.ncols() != 1 {
        g = g.sum_axis(Axis(1)).insert_axis(Axis(1));
    }
    g
}

pub(crate) fn sigmoid_scalar(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub(crate) fn softplus_scalar(x: f64) -> f64 {
    if x > 30.0 {
        x
    } else if x < -30.0 {
        x.exp()
    } else {
        x.exp().ln_1p()
    }
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

    fn push(&mut self, value: Array2<f64>, op: Op, requires_grad: bool) -> Var {
        self.nodes.push(Node {
            value,
            op,
            requires_grad,
        });
        Var(self.nodes.len() - 1)
    }

    fn needs(&self, vars: &[Var]) -> bool {
        vars.iter().any(|v| self.nodes[v.0].requires_grad)
    }

    fn shape(&self, v: Var) -> Shape {
        self.nodes[v.0].value.dim()
    }

    /// Records a leaf. Leaves with `requires_grad` are the parameters that
    /// `backward` differentiates with respect to.
    pub fn leaf(&mut self, tensor: Tensor, requires_grad: bool) -> Var {
        self.push(tensor.into_array(), Op::Leaf, requires_grad)
    }

    pub fn param(&mut self, tensor: Tensor) -> Var {
        self.leaf(tensor, true)
    }

    pub fn constant(&mut self, tensor: Tensor) -> Var {
        self.leaf(tensor, false)
    }

    pub fn value(&self, v: Var) -> &Array2<f64> {
        &self.nodes[v.0].value
    }

    pub fn tensor(&self, v: Var) -> Tensor {
        Tensor::from(self.nodes[v.0].value.clone())
    }

    pub fn scalar(&self, v: Var) -> f64 {
        self.nodes[v.0].value[[0, 0]]
    }

    pub fn requires_grad(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        let (sa, sb) = (self.shape(a), self.shape(b));
        if sa.1 != sb.0 {
            return Err(TensorError::ShapeMismatch {
                op: "matmul",
                left: sa,
                right: sb,
            });
        }
        let out = self.value(a).dot(self.value(b));
        check_finite("matmul", &out)?;
        let rg = self.needs(&[a, b]);
        Ok(self.push(out, Op::MatMul(a, b), rg))
    }

    fn binary(
        &mut self,
        op: &'static str,
        a: Var,
        b: Var,
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<Array2<f64>, TensorError> {
        let shape = broadcast_shape(op, self.shape(a), self.shape(b))?;
        let va = self.value(a).broadcast(shape).expect("checked broadcast");
        let vb = self.value(b).broadcast(shape).expect("checked broadcast");
        let mut out = Array2::zeros(shape);
        ndarray::Zip::from(&mut out)
            .and(&va)
            .and(&vb)
            .for_each(|o, &x, &y| *o = f(x, y));
        check_finite(op, &out)?;
        Ok(out)
    }

    /// Elementwise sum with row/column broadcasting of unit extents.
    pub fn add(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        let out = self.binary("add", a, b, |x, y| x + y)?;
        let rg = self.needs(&[a, b]);
        Ok(self.push(out, Op::Add(a, b), rg))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        let out = self.binary("sub", a, b, |x, y| x - y)?;
        let rg = self.needs(&[a, b]);
        Ok(self.push(out, Op::Sub(a, b), rg))
    }

    /// Elementwise (Hadamard) product with broadcasting.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        let out = self.binary("elementwise_mul", a, b, |x, y| x * y)?;
        let rg = self.needs(&[a, b]);
        Ok(self.push(out, Op::Mul(a, b), rg))
    }

    pub fn scale(&mut self, a: Var, factor: f64) -> Result<Var, TensorError> {
        let out = self.value(a) * factor;
        check_finite("scale", &out)?;
        let rg = self.needs(&[a]);
        Ok(self.push(out, Op::Scale(a, factor), rg))
    }

    pub fn relu(&mut self, a: Var) -> Result<Var, TensorError> {
        let out = self.value(a).mapv(|x| x.max(0.0));
        let rg = self.needs(&[a]);
        Ok(self.push(out, Op::Relu(a), rg))
    }

    pub fn sigmoid(&mut self, a: Var) -> Result<Var, TensorError> {
        let out = self.value(a).mapv(sigmoid_scalar);
        check_finite("sigmoid", &out)?;
        let rg = self.needs(&[a]);
        Ok(self.push(out, Op::Sigmoid(a), rg))
    }

    pub fn softplus(&mut self, a: Var) -> Result<Var, TensorError> {
        let out = self.value(a).mapv(softplus_scalar);
        check_finite("softplus", &out)?;
        let rg = self.needs(&[a]);
        Ok(self.push(out, Op::Softplus(a), rg))
    }

    pub fn concat_columns(&mut self, parts: &[Var]) -> Result<Var, TensorError> {
        let first = parts
            .first()
            .ok_or_else(|| TensorError::InvalidArgument("concat of zero tensors".into()))?;
        let rows = self.shape(*first).0;
        for p in parts {
            if self.shape(*p).0 != rows {
                return Err(TensorError::ShapeMismatch {
                    op: "concat_columns",
                    left: self.shape(*first),
                    right: self.shape(*p),
                });
            }
        }
        let views: Vec<_> = parts.iter().map(|p| self.value(*p).view()).collect();
        let out = ndarray::concatenate(Axis(1), &views)
            .map_err(|e| TensorError::InvalidArgument(e.to_string()))?;
        let rg = self.needs(parts);
        Ok(self.push(out, Op::ConcatCols(parts.to_vec()), rg))
    }

    /// Output row `i` is input row `indices[i]`.
    pub fn gather_rows(&mut self, a: Var, indices: &[usize]) -> Result<Var, TensorError> {
        let (rows, cols) = self.shape(a);
        if let Some(&bad) = indices.iter().find(|&&i| i >= rows) {
            return Err(TensorError::IndexOutOfRange {
                op: "gather_rows",
                index: bad,
                len: rows,
            });
        }
        let src = self.value(a);
        let mut out = Array2::zeros((indices.len(), cols));
        for (i, &r) in indices.iter().enumerate() {
            out.row_mut(i).assign(&src.row(r));
        }
        let rg = self.needs(&[a]);
        Ok(self.push(out, Op::GatherRows(a, indices.to_vec()), rg))
    }

    /// Gathers flat (row-major) positions of `a` into a tensor of `shape`.
    pub fn take(&mut self, a: Var, positions: &[usize], shape: Shape) -> Result<Var, TensorError> {
        if positions.len() != shape.0 * shape.1 {
            return Err(TensorError::InvalidArgument(format!(
                "take: {} positions for output shape {:?}",
                positions.len(),
                shape
            )));
        }
        let (rows, cols) = self.shape(a);
        let src = self.value(a);
        let mut flat = Vec::with_capacity(positions.len());
        for &p in positions {
            if p >= rows * cols {
                return Err(TensorError::IndexOutOfRange {
                    op: "take",
                    index: p,
                    len: rows * cols,
                });
            }
            flat.push(src[[p / cols, p % cols]]);
        }
        let out = Array2::from_shape_vec(shape, flat).expect("length checked");
        let rg = self.needs(&[a]);
        Ok(self.push(out, Op::Take(a, positions.to_vec()), rg))
    }

    /// Adds element `k` of `a` (row-major) into flat position `positions[k]`
    /// of a zero tensor of `shape`.
    pub fn scatter_add(
        &mut self,
        a: Var,
        positions: &[usize],
        shape: Shape,
    ) -> Result<Var, TensorError> {
        let src = self.value(a);
        if positions.len() != src.len() {
            return Err(TensorError::InvalidArgument(format!(
                "scatter_add: {} positions for {} values",
                positions.len(),
                src.len()
            )));
        }
        let mut out = Array2::zeros(shape);
        for (&p, &v) in positions.iter().zip(src.iter()) {
            if p >= shape.0 * shape.1 {
                return Err(TensorError::IndexOutOfRange {
                    op: "scatter_add",
                    index: p,
                    len: shape.0 * shape.1,
                });
            }
            out[[p / shape.1, p % shape.1]] += v;
        }
        let rg = self.needs(&[a]);
        Ok(self.push(out, Op::ScatterAdd(a, positions.to_vec()), rg))
    }

    /// Neighbour sum over an undirected edge list: row `u` of the output is
    /// `sum_e w_e * x[v]` over edges `e = {u, v}`. `weights` is `1 x E`;
    /// `None` means unit weights.
    pub fn edge_aggregate(
        &mut self,
        x: Var,
        edges: &[(usize, usize)],
        weights: Option<Var>,
    ) -> Result<Var, TensorError> {
        let (rows, cols) = self.shape(x);
        if let Some(w) = weights {
            let ws = self.shape(w);
            if ws != (1, edges.len()) {
                return Err(TensorError::ShapeMismatch {
                    op: "edge_aggregate",
                    left: (1, edges.len()),
                    right: ws,
                });
            }
        }
        let xv = self.value(x);
        let mut out = Array2::<f64>::zeros((rows, cols));
        for (e, &(u, v)) in edges.iter().enumerate() {
            if u >= rows || v >= rows {
                return Err(TensorError::IndexOutOfRange {
                    op: "edge_aggregate",
                    index: u.max(v),
                    len: rows,
                });
            }
            let w = weights.map_or(1.0, |w| self.nodes[w.0].value[[0, e]]);
            out.row_mut(u).scaled_add(w, &xv.row(v));
            out.row_mut(v).scaled_add(w, &xv.row(u));
        }
        check_finite("edge_aggregate", &out)?;
        let rg = match weights {
            Some(w) => self.needs(&[x, w]),
            None => self.needs(&[x]),
        };
        Ok(self.push(
            out,
            Op::EdgeAggregate {
                x,
                edges: edges.to_vec(),
                weights,
            },
            rg,
        ))
    }

    /// Column-wise maximum over rows, producing `1 x cols`. Ties go to the
    /// lowest row index, which is also where the gradient is routed.
    pub fn rowwise_max_pool(&mut self, a: Var) -> Result<Var, TensorError> {
        let (rows, cols) = self.shape(a);
        if rows == 0 {
            return Err(TensorError::InvalidArgument("max pool over zero rows".into()));
        }
        let v = self.value(a);
        let mut argmax = vec![0usize; cols];
        let mut out = Array2::zeros((1, cols));
        for c in 0..cols {
            let mut best = v[[0, c]];
            for r in 1..rows {
                if v[[r, c]] > best {
                    best = v[[r, c]];
                    argmax[c] = r;
                }
            }
            out[[0, c]] = best;
        }
        let rg = self.needs(&[a]);
        Ok(self.push(out, Op::MaxPoolRows(a, argmax), rg))
    }

    pub fn sum_all(&mut self, a: Var) -> Result<Var, TensorError> {
        let s = self.value(a).sum();
        let out = Array2::from_elem((1, 1), s);
        check_finite("sum_all", &out)?;
        let rg = self.needs(&[a]);
        Ok(self.push(out, Op::SumAll(a), rg))
    }

    /// Cross-entropy of `softmax(logits)` against `label`; `logits` is `1 x C`.
    pub fn softmax_cross_entropy(&mut self, logits: Var, label: usize) -> Result<Var, TensorError> {
        let (rows, cols) = self.shape(logits);
        if rows != 1 {
            return Err(TensorError::ShapeMismatch {
                op: "softmax_cross_entropy",
                left: (1, cols),
                right: (rows, cols),
            });
        }
        if label >= cols {
            return Err(TensorError::IndexOutOfRange {
                op: "softmax_cross_entropy",
                index: label,
                len: cols,
            });
        }
        let z: Vec<f64> = self.value(logits).iter().copied().collect();
        let probs = softmax(&z);
        let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + z.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
        let out = Array2::from_elem((1, 1), lse - z[label]);
        check_finite("softmax_cross_entropy", &out)?;
        let rg = self.needs(&[logits]);
        Ok(self.push(
            out,
            Op::SoftmaxCrossEntropy {
                logits,
                label,
                probs,
            },
            rg,
        ))
    }

    /// Reverse sweep from a scalar `loss`.
    pub fn backward(&self, loss: Var) -> Result<Gradients, TensorError> {
        let shape = self.shape(loss);
        if shape != (1, 1) {
            return Err(TensorError::NotScalar { shape });
        }
        let n = loss.0 + 1;
        let mut grads: Vec<Option<Array2<f64>>> = vec![None; self.nodes.len()];
        grads[loss.0] = Some(Array2::from_elem((1, 1), 1.0));

        for id in (0..n).rev() {
            let node = &self.nodes[id];
            if !node.requires_grad {
                continue;
            }
            let Some(g) = grads[id].take() else {
                continue;
            };
            if matches!(node.op, Op::Leaf) {
                grads[id] = Some(g);
                continue;
            }
            for (target, contribution) in self.adjoint(node, &g) {
                if !self.nodes[target.0].requires_grad {
                    continue;
                }
                match &mut grads[target.0] {
                    Some(acc) => *acc += &contribution,
                    slot @ None => *slot = Some(contribution),
                }
            }
            grads[id] = Some(g);
        }
        Ok(Gradients {
            grads,
            shapes: self.nodes.iter().map(|n| n.value.dim()).collect(),
        })
    }

    fn adjoint(&self, node: &Node, g: &Array2<f64>) -> Vec<(Var, Array2<f64>)> {
        match &node.op {
            Op::Leaf => Vec::new(),
            Op::MatMul(a, b) => vec![
                (*a, g.dot(&self.value(*b).t())),
                (*b, self.value(*a).t().dot(g)),
            ],
            Op::Add(a, b) => vec![
                (*a, reduce_to(g.clone(), self.shape(*a))),
                (*b, reduce_to(g.clone(), self.shape(*b))),
            ],
            Op::Sub(a, b) => vec![
                (*a, reduce_to(g.clone(), self.shape(*a))),
                (*b, reduce_to(-g, self.shape(*b))),
            ],
            Op::Mul(a, b) => {
                let va = self.value(*a).broadcast(g.dim()).expect("forward shape");
                let vb = self.value(*b).broadcast(g.dim()).expect("forward shape");
                vec![
                    (*a, reduce_to(g * &vb, self.shape(*a))),
                    (*b, reduce_to(g * &va, self.shape(*b))),
                ]
            }
            Op::Scale(a, f) => vec![(*a, g * *f)],
            Op::Relu(a) => {
                let mut out = g.clone();
                ndarray::Zip::from(&mut out)
                    .and(self.value(*a))
                    .for_each(|o, &x| {
                        if x <= 0.0 {
                            *o = 0.0
                        }
                    });
                vec![(*a, out)]
            }
            Op::Sigmoid(a) => {
                let mut out = g.clone();
                ndarray::Zip::from(&mut out)
                    .and(&node.value)
                    .for_each(|o, &y| *o *= y * (1.0 - y));
                vec![(*a, out)]
            }
            Op::Softplus(a) => {
                let mut out = g.clone();
                ndarray::Zip::from(&mut out)
                    .and(self.value(*a))
                    .for_each(|o, &x| *o *= sigmoid_scalar(x));
                vec![(*a, out)]
            }
            Op::ConcatCols(parts) => {
                let mut offset = 0;
                parts
                    .iter()
                    .map(|p| {
                        let c = self.shape(*p).1;
                        let slice = g.slice(s![.., offset..offset + c]).to_owned();
                        offset += c;
                        (*p, slice)
                    })
                    .collect()
            }
            Op::GatherRows(a, indices) => {
                let mut out = Array2::zeros(self.shape(*a));
                for (i, &r) in indices.iter().enumerate() {
                    let mut row = out.row_mut(r);
                    row += &g.row(i);
                }
                vec![(*a, out)]
            }
            Op::Take(a, positions) => {
                let (rows, cols) = self.shape(*a);
                let mut out = Array2::zeros((rows, cols));
                for (&p, &gv) in positions.iter().zip(g.iter()) {
                    out[[p / cols, p % cols]] += gv;
                }
                vec![(*a, out)]
            }
            Op::ScatterAdd(a, positions) => {
                let shape = self.shape(*a);
                let cols = g.ncols();
                let flat: Vec<f64> = positions.iter().map(|&p| g[[p / cols, p % cols]]).collect();
                vec![(*a, Array2::from_shape_vec(shape, flat).expect("same length"))]
            }
            Op::EdgeAggregate { x, edges, weights } => {
                let xv = self.value(*x);
                let mut gx = Array2::<f64>::zeros(xv.dim());
                let mut gw = weights.map(|_| Array2::<f64>::zeros((1, edges.len())));
                for (e, &(u, v)) in edges.iter().enumerate() {
                    let w = weights.map_or(1.0, |w| self.nodes[w.0].value[[0, e]]);
                    gx.row_mut(v).scaled_add(w, &g.row(u));
                    gx.row_mut(u).scaled_add(w, &g.row(v));
                    if let Some(gw) = gw.as_mut() {
                        gw[[0, e]] = g.row(u).dot(&xv.row(v)) + g.row(v).dot(&xv.row(u));
                    }
                }
                let mut out = vec![(*x, gx)];
                if let (Some(w), Some(gw)) = (weights, gw) {
                    out.push((*w, gw));
                }
                out
            }
            Op::MaxPoolRows(a, argmax) => {
                let mut out = Array2::zeros(self.shape(*a));
                for (c, &r) in argmax.iter().enumerate() {
                    out[[r, c]] = g[[0, c]];
                }
                vec![(*a, out)]
            }
            Op::SumAll(a) => vec![(*a, Array2::from_elem(self.shape(*a), g[[0, 0]]))],
            Op::SoftmaxCrossEntropy {
                logits,
                label,
                probs,
            } => {
                let scale = g[[0, 0]];
                let mut out = Array2::zeros((1, probs.len()));
                for (c, p) in probs.iter().enumerate() {
                    let target = if c == *label { 1.0 } else { 0.0 };
                    out[[0, c]] = scale * (p - target);
                }
                vec![(*logits, out)]
            }
        }
    }
}

/// Numerically stable softmax of a logit vector.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|v| (v - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

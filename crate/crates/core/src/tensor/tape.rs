use super::{Result, Scalar, Shape, SparseRows, Tensor, TensorError};
use std::fmt;

/// Values below this are clamped before taking a logarithm.
pub const LOG_CLAMP: f64 = 1e-30;
/// Added to L2 norms so that normalizing a zero row stays finite.
pub const NORM_EPS: f64 = 1e-12;

/// Handle to a value recorded on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Var {
    id: usize,
    shape: Shape,
}

impl Var {
    pub fn id(&self) -> usize {
        self.id
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum OpKind {
    Leaf,
    MatMul,
    Transpose,
    Concat,
    Add,
    Sub,
    Mul,
    AddRow,
    ScaleRows,
    Scale,
    ScaleBy,
    Sigmoid,
    Tanh,
    Exp,
    Log,
    Recip,
    Softmax,
    Sum,
    RowSum,
    Mean,
    Sparse,
    RowNorm,
    SumSquares,
    Pick,
}

impl fmt::Display for OpKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

enum Op<T> {
    Leaf,
    MatMul(Var, Var),
    Transpose(Var),
    Concat(Vec<Var>),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    AddRow(Var, Var),
    ScaleRows(Var, Var),
    Scale(Var, T),
    ScaleBy(Var, Var),
    Sigmoid(Var),
    Tanh(Var),
    Exp(Var),
    Log(Var),
    Recip(Var),
    Softmax(Var),
    Sum(Var),
    RowSum(Var),
    Mean(Var),
    Sparse(Var, SparseRows<T>),
    RowNorm(Var),
    SumSquares(Var),
    Pick(Var, Vec<usize>),
}

impl<T> Op<T> {
    fn kind(&self) -> OpKind {
        match self {
            Op::Leaf => OpKind::Leaf,
            Op::MatMul(..) => OpKind::MatMul,
            Op::Transpose(..) => OpKind::Transpose,
            Op::Concat(..) => OpKind::Concat,
            Op::Add(..) => OpKind::Add,
            Op::Sub(..) => OpKind::Sub,
            Op::Mul(..) => OpKind::Mul,
            Op::AddRow(..) => OpKind::AddRow,
            Op::ScaleRows(..) => OpKind::ScaleRows,
            Op::Scale(..) => OpKind::Scale,
            Op::ScaleBy(..) => OpKind::ScaleBy,
            Op::Sigmoid(..) => OpKind::Sigmoid,
            Op::Tanh(..) => OpKind::Tanh,
            Op::Exp(..) => OpKind::Exp,
            Op::Log(..) => OpKind::Log,
            Op::Recip(..) => OpKind::Recip,
            Op::Softmax(..) => OpKind::Softmax,
            Op::Sum(..) => OpKind::Sum,
            Op::RowSum(..) => OpKind::RowSum,
            Op::Mean(..) => OpKind::Mean,
            Op::Sparse(..) => OpKind::Sparse,
            Op::RowNorm(..) => OpKind::RowNorm,
            Op::SumSquares(..) => OpKind::SumSquares,
            Op::Pick(..) => OpKind::Pick,
        }
    }
}

struct Node<T> {
    shape: Shape,
    value: Vec<T>,
    op: Op<T>,
}

/// Append-only record of executed operations.
///
/// Nodes are stored in execution order, so every operation's inputs have
/// smaller ids than its output and a reverse sweep is a valid topological
/// order for backpropagation.
pub struct Tape<T> {
    nodes: Vec<Node<T>>,
    log_clamps: usize,
}

impl<T: Scalar> Default for Tape<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Scalar> Tape<T> {
    pub fn new() -> Self {
        Tape {
            nodes: Vec::new(),
            log_clamps: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Operation kinds in recording order.
    pub fn ops(&self) -> impl Iterator<Item = OpKind> + '_ {
        self.nodes.iter().map(|n| n.op.kind())
    }

    /// Number of log inputs clamped to the floor so far.
    pub fn log_clamps(&self) -> usize {
        self.log_clamps
    }

    fn push(&mut self, shape: Shape, value: Vec<T>, op: Op<T>) -> Var {
        debug_assert_eq!(shape.len(), value.len());
        let id = self.nodes.len();
        self.nodes.push(Node { shape, value, op });
        Var { id, shape }
    }

    pub fn leaf(&mut self, tensor: &Tensor<T>) -> Var {
        self.push(tensor.shape(), tensor.data().to_vec(), Op::Leaf)
    }

    pub fn leaf_from(&mut self, shape: Shape, data: Vec<T>) -> Result<Var> {
        if data.len() != shape.len() {
            return Err(TensorError::DataLength {
                len: data.len(),
                shape,
            });
        }
        Ok(self.push(shape, data, Op::Leaf))
    }

    pub fn value(&self, v: Var) -> &[T] {
        &self.nodes[v.id].value
    }

    pub fn tensor(&self, v: Var) -> Tensor<T> {
        Tensor::from_vec(v.shape, self.nodes[v.id].value.clone()).expect("shape checked on push")
    }

    pub fn scalar(&self, v: Var) -> T {
        self.nodes[v.id].value[0]
    }

    fn same_shape(op: OpKind, a: Var, b: Var) -> Result<()> {
        if a.shape != b.shape {
            return Err(TensorError::ShapeMismatch {
                op,
                lhs: a.shape,
                rhs: b.shape,
            });
        }
        Ok(())
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        if a.shape.cols != b.shape.rows {
            return Err(TensorError::ShapeMismatch {
                op: OpKind::MatMul,
                lhs: a.shape,
                rhs: b.shape,
            });
        }
        let shape = Shape::new(a.shape.rows, b.shape.cols);
        let out = matmul_nn(
            &self.nodes[a.id].value,
            &self.nodes[b.id].value,
            a.shape.rows,
            a.shape.cols,
            b.shape.cols,
        );
        Ok(self.push(shape, out, Op::MatMul(a, b)))
    }

    pub fn transpose(&mut self, a: Var) -> Var {
        let out = transpose(&self.nodes[a.id].value, a.shape.rows, a.shape.cols);
        self.push(a.shape.transposed(), out, Op::Transpose(a))
    }

    /// Concatenates along the last (column) axis.
    pub fn concat(&mut self, parts: &[Var]) -> Result<Var> {
        let first = *parts.first().ok_or(TensorError::InvalidShape {
            op: OpKind::Concat,
            shape: Shape::new(0, 0),
            reason: "no operands",
        })?;
        for p in &parts[1..] {
            if p.shape.rows != first.shape.rows {
                return Err(TensorError::ShapeMismatch {
                    op: OpKind::Concat,
                    lhs: first.shape,
                    rhs: p.shape,
                });
            }
        }
        let rows = first.shape.rows;
        let cols: usize = parts.iter().map(|p| p.shape.cols).sum();
        let mut out = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for p in parts {
                let c = p.shape.cols;
                out.extend_from_slice(&self.nodes[p.id].value[r * c..(r + 1) * c]);
            }
        }
        Ok(self.push(Shape::new(rows, cols), out, Op::Concat(parts.to_vec())))
    }

    fn zip_with(&self, a: Var, b: Var, f: impl Fn(T, T) -> T) -> Vec<T> {
        self.nodes[a.id]
            .value
            .iter()
            .zip(&self.nodes[b.id].value)
            .map(|(&x, &y)| f(x, y))
            .collect()
    }

    fn map(&self, a: Var, f: impl Fn(T) -> T) -> Vec<T> {
        self.nodes[a.id].value.iter().map(|&x| f(x)).collect()
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        Self::same_shape(OpKind::Add, a, b)?;
        let out = self.zip_with(a, b, |x, y| x + y);
        Ok(self.push(a.shape, out, Op::Add(a, b)))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        Self::same_shape(OpKind::Sub, a, b)?;
        let out = self.zip_with(a, b, |x, y| x - y);
        Ok(self.push(a.shape, out, Op::Sub(a, b)))
    }

    /// Elementwise product.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        Self::same_shape(OpKind::Mul, a, b)?;
        let out = self.zip_with(a, b, |x, y| x * y);
        Ok(self.push(a.shape, out, Op::Mul(a, b)))
    }

    /// Adds a `1 x cols` row vector to every row of `x`.
    pub fn add_row(&mut self, x: Var, row: Var) -> Result<Var> {
        if row.shape.rows != 1 || row.shape.cols != x.shape.cols {
            return Err(TensorError::ShapeMismatch {
                op: OpKind::AddRow,
                lhs: x.shape,
                rhs: row.shape,
            });
        }
        let c = x.shape.cols;
        let r = &self.nodes[row.id].value;
        let out = self.nodes[x.id]
            .value
            .iter()
            .enumerate()
            .map(|(i, &v)| v + r[i % c])
            .collect();
        Ok(self.push(x.shape, out, Op::AddRow(x, row)))
    }

    /// Multiplies row `i` of `x` by `s[i]`, where `s` is `rows x 1`.
    pub fn scale_rows(&mut self, x: Var, s: Var) -> Result<Var> {
        if s.shape.cols != 1 || s.shape.rows != x.shape.rows {
            return Err(TensorError::ShapeMismatch {
                op: OpKind::ScaleRows,
                lhs: x.shape,
                rhs: s.shape,
            });
        }
        let c = x.shape.cols;
        let sv = &self.nodes[s.id].value;
        let out = self.nodes[x.id]
            .value
            .iter()
            .enumerate()
            .map(|(i, &v)| v * sv[i / c])
            .collect();
        Ok(self.push(x.shape, out, Op::ScaleRows(x, s)))
    }

    /// Multiplies by a constant.
    pub fn scale(&mut self, x: Var, k: T) -> Var {
        let out = self.map(x, |v| v * k);
        self.push(x.shape, out, Op::Scale(x, k))
    }

    /// Multiplies by a `1 x 1` tensor.
    pub fn scale_by(&mut self, x: Var, s: Var) -> Result<Var> {
        if s.shape != Shape::SCALAR {
            return Err(TensorError::ShapeMismatch {
                op: OpKind::ScaleBy,
                lhs: x.shape,
                rhs: s.shape,
            });
        }
        let k = self.nodes[s.id].value[0];
        let out = self.map(x, |v| v * k);
        Ok(self.push(x.shape, out, Op::ScaleBy(x, s)))
    }

    pub fn sigmoid(&mut self, x: Var) -> Var {
        let out = self.map(x, sigmoid);
        self.push(x.shape, out, Op::Sigmoid(x))
    }

    pub fn tanh(&mut self, x: Var) -> Var {
        let out = self.map(x, |v| v.tanh());
        self.push(x.shape, out, Op::Tanh(x))
    }

    pub fn exp(&mut self, x: Var) -> Var {
        let out = self.map(x, |v| v.exp());
        self.push(x.shape, out, Op::Exp(x))
    }

    /// Natural log with inputs clamped below at [`LOG_CLAMP`].
    pub fn log(&mut self, x: Var) -> Var {
        let floor = T::lit(LOG_CLAMP);
        let mut clamped = 0;
        let out = self.nodes[x.id]
            .value
            .iter()
            .map(|&v| {
                if v < floor {
                    clamped += 1;
                    floor.ln()
                } else {
                    v.ln()
                }
            })
            .collect();
        if clamped > 0 {
            log::debug!("log: clamped {clamped} inputs below {LOG_CLAMP:e}");
            self.log_clamps += clamped;
        }
        self.push(x.shape, out, Op::Log(x))
    }

    pub fn recip(&mut self, x: Var) -> Var {
        let out = self.map(x, |v| v.recip());
        self.push(x.shape, out, Op::Recip(x))
    }

    /// Row-wise softmax over the last axis.
    pub fn softmax(&mut self, x: Var) -> Var {
        let c = x.shape.cols;
        let mut out = self.nodes[x.id].value.clone();
        for row in out.chunks_mut(c.max(1)) {
            softmax_in_place(row);
        }
        self.push(x.shape, out, Op::Softmax(x))
    }

    pub fn sum(&mut self, x: Var) -> Var {
        let s = self.nodes[x.id].value.iter().copied().sum();
        self.push(Shape::SCALAR, vec![s], Op::Sum(x))
    }

    /// Sums over the last axis, producing `rows x 1`.
    pub fn row_sum(&mut self, x: Var) -> Var {
        let c = x.shape.cols;
        let out = if c == 0 {
            vec![T::zero(); x.shape.rows]
        } else {
            self.nodes[x.id]
                .value
                .chunks(c)
                .map(|r| r.iter().copied().sum())
                .collect()
        };
        self.push(Shape::new(x.shape.rows, 1), out, Op::RowSum(x))
    }

    pub fn mean(&mut self, x: Var) -> Result<Var> {
        if x.shape.is_empty() {
            return Err(TensorError::InvalidShape {
                op: OpKind::Mean,
                shape: x.shape,
                reason: "mean of an empty tensor",
            });
        }
        let n = T::lit(x.shape.len() as f64);
        let s: T = self.nodes[x.id].value.iter().copied().sum();
        Ok(self.push(Shape::SCALAR, vec![s / n], Op::Mean(x)))
    }

    /// Applies a constant sparse row map (see [`SparseRows`]).
    pub fn sparse(&mut self, x: Var, map: SparseRows<T>) -> Result<Var> {
        if map.input_rows() != x.shape.rows {
            return Err(TensorError::ShapeMismatch {
                op: OpKind::Sparse,
                lhs: Shape::new(map.output_rows(), map.input_rows()),
                rhs: x.shape,
            });
        }
        let c = x.shape.cols;
        let xs = &self.nodes[x.id].value;
        let mut out = vec![T::zero(); map.output_rows() * c];
        for (r, orow) in out.chunks_mut(c.max(1)).enumerate().take(map.output_rows()) {
            for (src, w) in map.row(r) {
                for (o, &v) in orow.iter_mut().zip(&xs[src * c..(src + 1) * c]) {
                    *o += w * v;
                }
            }
        }
        Ok(self.push(Shape::new(map.output_rows(), c), out, Op::Sparse(x, map)))
    }

    /// Per-row L2 norm plus [`NORM_EPS`], producing `rows x 1`.
    pub fn row_norm(&mut self, x: Var) -> Var {
        let c = x.shape.cols.max(1);
        let eps = T::lit(NORM_EPS);
        let out = self.nodes[x.id]
            .value
            .chunks(c)
            .map(|r| r.iter().fold(T::zero(), |a, &v| a + v * v).sqrt() + eps)
            .collect();
        self.push(Shape::new(x.shape.rows, 1), out, Op::RowNorm(x))
    }

    pub fn sum_squares(&mut self, x: Var) -> Var {
        let s = self.nodes[x.id]
            .value
            .iter()
            .fold(T::zero(), |a, &v| a + v * v);
        self.push(Shape::SCALAR, vec![s], Op::SumSquares(x))
    }

    /// Selects `x[r, index[r]]` for every row, producing `rows x 1`.
    pub fn pick(&mut self, x: Var, index: &[usize]) -> Result<Var> {
        if index.len() != x.shape.rows || index.iter().any(|&i| i >= x.shape.cols) {
            return Err(TensorError::InvalidShape {
                op: OpKind::Pick,
                shape: x.shape,
                reason: "one in-range column index per row required",
            });
        }
        let c = x.shape.cols;
        let xs = &self.nodes[x.id].value;
        let out = index
            .iter()
            .enumerate()
            .map(|(r, &i)| xs[r * c + i])
            .collect();
        Ok(self.push(
            Shape::new(x.shape.rows, 1),
            out,
            Op::Pick(x, index.to_vec()),
        ))
    }

    /// Backpropagates from a `1 x 1` loss.
    pub fn backward(&self, loss: Var) -> Result<Gradients<T>> {
        if loss.shape != Shape::SCALAR {
            return Err(TensorError::NonScalarLoss(loss.shape));
        }
        let mut grads: Vec<Option<Vec<T>>> = Vec::new();
        grads.resize_with(loss.id + 1, || None);
        grads[loss.id] = Some(vec![T::one()]);

        for id in (0..=loss.id).rev() {
            let Some(g) = grads[id].take() else { continue };
            let node = &self.nodes[id];
            self.backprop_node(node, &g, &mut grads);
            grads[id] = Some(g);
        }
        let shapes = self.nodes[..=loss.id].iter().map(|n| n.shape).collect();
        Ok(Gradients { grads, shapes })
    }

    fn backprop_node(&self, node: &Node<T>, g: &[T], grads: &mut [Option<Vec<T>>]) {
        let val = |v: Var| -> &[T] { &self.nodes[v.id].value };
        match &node.op {
            Op::Leaf => {}
            Op::MatMul(a, b) => {
                let (r, k, c) = (a.shape.rows, a.shape.cols, b.shape.cols);
                let ga = matmul_nt(g, val(*b), r, c, k);
                add_into(acc(grads, *a), &ga);
                let gb = matmul_tn(val(*a), g, r, k, c);
                add_into(acc(grads, *b), &gb);
            }
            Op::Transpose(a) => {
                let gt = transpose(g, node.shape.rows, node.shape.cols);
                add_into(acc(grads, *a), &gt);
            }
            Op::Concat(parts) => {
                let cols = node.shape.cols;
                let mut offset = 0;
                for p in parts {
                    let pc = p.shape.cols;
                    let gp = acc(grads, *p);
                    for r in 0..node.shape.rows {
                        let src = &g[r * cols + offset..r * cols + offset + pc];
                        for (d, &s) in gp[r * pc..(r + 1) * pc].iter_mut().zip(src) {
                            *d += s;
                        }
                    }
                    offset += pc;
                }
            }
            Op::Add(a, b) => {
                add_into(acc(grads, *a), g);
                add_into(acc(grads, *b), g);
            }
            Op::Sub(a, b) => {
                add_into(acc(grads, *a), g);
                for (d, &s) in acc(grads, *b).iter_mut().zip(g) {
                    *d -= s;
                }
            }
            Op::Mul(a, b) => {
                let (av, bv) = (val(*a), val(*b));
                for ((d, &s), &y) in acc(grads, *a).iter_mut().zip(g).zip(bv) {
                    *d += s * y;
                }
                for ((d, &s), &x) in acc(grads, *b).iter_mut().zip(g).zip(av) {
                    *d += s * x;
                }
            }
            Op::AddRow(x, row) => {
                add_into(acc(grads, *x), g);
                let c = row.shape.cols;
                let gr = acc(grads, *row);
                for chunk in g.chunks(c.max(1)) {
                    add_into(gr, chunk);
                }
            }
            Op::ScaleRows(x, s) => {
                let c = x.shape.cols.max(1);
                let (xv, sv) = (val(*x), val(*s));
                let gx = acc(grads, *x);
                for (i, (d, &gi)) in gx.iter_mut().zip(g).enumerate() {
                    *d += gi * sv[i / c];
                }
                let gs = acc(grads, *s);
                for (r, (gc, xc)) in g.chunks(c).zip(xv.chunks(c)).enumerate() {
                    gs[r] += gc.iter().zip(xc).fold(T::zero(), |a, (&p, &q)| a + p * q);
                }
            }
            Op::Scale(x, k) => {
                for (d, &s) in acc(grads, *x).iter_mut().zip(g) {
                    *d += s * *k;
                }
            }
            Op::ScaleBy(x, s) => {
                let k = val(*s)[0];
                let dot = g
                    .iter()
                    .zip(val(*x))
                    .fold(T::zero(), |a, (&p, &q)| a + p * q);
                for (d, &gi) in acc(grads, *x).iter_mut().zip(g) {
                    *d += gi * k;
                }
                acc(grads, *s)[0] += dot;
            }
            Op::Sigmoid(x) => {
                let one = T::one();
                for ((d, &gi), &y) in acc(grads, *x).iter_mut().zip(g).zip(&node.value) {
                    *d += gi * y * (one - y);
                }
            }
            Op::Tanh(x) => {
                let one = T::one();
                for ((d, &gi), &y) in acc(grads, *x).iter_mut().zip(g).zip(&node.value) {
                    *d += gi * (one - y * y);
                }
            }
            Op::Exp(x) => {
                for ((d, &gi), &y) in acc(grads, *x).iter_mut().zip(g).zip(&node.value) {
                    *d += gi * y;
                }
            }
            Op::Log(x) => {
                let floor = T::lit(LOG_CLAMP);
                let xv = val(*x);
                for ((d, &gi), &v) in acc(grads, *x).iter_mut().zip(g).zip(xv) {
                    if v >= floor {
                        *d += gi / v;
                    }
                }
            }
            Op::Recip(x) => {
                for ((d, &gi), &y) in acc(grads, *x).iter_mut().zip(g).zip(&node.value) {
                    *d -= gi * y * y;
                }
            }
            Op::Softmax(x) => {
                let c = node.shape.cols.max(1);
                let gx = acc(grads, *x);
                for ((dr, gr), yr) in gx.chunks_mut(c).zip(g.chunks(c)).zip(node.value.chunks(c)) {
                    let dot = gr.iter().zip(yr).fold(T::zero(), |a, (&p, &q)| a + p * q);
                    for ((d, &gi), &y) in dr.iter_mut().zip(gr).zip(yr) {
                        *d += y * (gi - dot);
                    }
                }
            }
            Op::Sum(x) => {
                let g0 = g[0];
                for d in acc(grads, *x).iter_mut() {
                    *d += g0;
                }
            }
            Op::RowSum(x) => {
                let c = x.shape.cols.max(1);
                for (dr, &gi) in acc(grads, *x).chunks_mut(c).zip(g) {
                    for d in dr {
                        *d += gi;
                    }
                }
            }
            Op::Mean(x) => {
                let gi = g[0] / T::lit(x.shape.len() as f64);
                for d in acc(grads, *x).iter_mut() {
                    *d += gi;
                }
            }
            Op::Sparse(x, map) => {
                let c = x.shape.cols;
                let gx = acc(grads, *x);
                for r in 0..map.output_rows() {
                    let gr = &g[r * c..(r + 1) * c];
                    for (src, w) in map.row(r) {
                        for (d, &gi) in gx[src * c..(src + 1) * c].iter_mut().zip(gr) {
                            *d += w * gi;
                        }
                    }
                }
            }
            Op::RowNorm(x) => {
                let c = x.shape.cols.max(1);
                let eps = T::lit(NORM_EPS);
                let xv = val(*x);
                let gx = acc(grads, *x);
                for ((dr, xr), (&gi, &n)) in gx
                    .chunks_mut(c)
                    .zip(xv.chunks(c))
                    .zip(g.iter().zip(&node.value))
                {
                    let norm = n - eps;
                    if norm > T::zero() {
                        for (d, &v) in dr.iter_mut().zip(xr) {
                            *d += gi * v / norm;
                        }
                    }
                }
            }
            Op::SumSquares(x) => {
                let two_g = g[0] + g[0];
                for (d, &v) in acc(grads, *x).iter_mut().zip(val(*x)) {
                    *d += two_g * v;
                }
            }
            Op::Pick(x, index) => {
                let c = x.shape.cols;
                let gx = acc(grads, *x);
                for (r, (&i, &gi)) in index.iter().zip(g).enumerate() {
                    gx[r * c + i] += gi;
                }
            }
        }
    }
}

/// Gradients of a scalar loss with respect to every recorded value.
pub struct Gradients<T> {
    grads: Vec<Option<Vec<T>>>,
    shapes: Vec<Shape>,
}

impl<T: Scalar> Gradients<T> {
    /// Gradient of `v`, or `None` when the loss does not depend on it.
    pub fn get(&self, v: Var) -> Option<&[T]> {
        self.grads.get(v.id).and_then(|g| g.as_deref())
    }

    /// Gradient of `v`, zero-filled when the loss does not depend on it.
    pub fn wrt(&self, v: Var) -> Vec<T> {
        match self.get(v) {
            Some(g) => g.to_vec(),
            None => vec![T::zero(); v.shape.len()],
        }
    }

    pub fn shape(&self, v: Var) -> Option<Shape> {
        self.shapes.get(v.id).copied()
    }
}

fn acc<T: Scalar>(grads: &mut [Option<Vec<T>>], v: Var) -> &mut Vec<T> {
    grads[v.id].get_or_insert_with(|| vec![T::zero(); v.shape.len()])
}

fn add_into<T: Scalar>(dst: &mut [T], src: &[T]) {
    for (d, &s) in dst.iter_mut().zip(src) {
        *d += s;
    }
}

pub(crate) fn sigmoid<T: Scalar>(v: T) -> T {
    let one = T::one();
    if v >= T::zero() {
        one / (one + (-v).exp())
    } else {
        let e = v.exp();
        e / (one + e)
    }
}

pub(crate) fn softmax_in_place<T: Scalar>(row: &mut [T]) {
    let max = row.iter().copied().fold(T::neg_infinity(), T::max);
    let mut total = T::zero();
    for v in row.iter_mut() {
        *v = (*v - max).exp();
        total += *v;
    }
    for v in row.iter_mut() {
        *v /= total;
    }
}

/// `a[r x k] * b[k x c]`
fn matmul_nn<T: Scalar>(a: &[T], b: &[T], r: usize, k: usize, c: usize) -> Vec<T> {
    let mut out = vec![T::zero(); r * c];
    if c == 0 {
        return out;
    }
    for (orow, arow) in out.chunks_mut(c).zip(a.chunks(k.max(1))) {
        for (&aik, brow) in arow.iter().zip(b.chunks(c)) {
            for (o, &bv) in orow.iter_mut().zip(brow) {
                *o += aik * bv;
            }
        }
    }
    out
}

/// `g[r x c] * b[k x c]^T`
fn matmul_nt<T: Scalar>(g: &[T], b: &[T], r: usize, c: usize, k: usize) -> Vec<T> {
    let mut out = vec![T::zero(); r * k];
    if c == 0 {
        return out;
    }
    for (orow, grow) in out.chunks_mut(k.max(1)).zip(g.chunks(c)).take(r) {
        for (o, brow) in orow.iter_mut().zip(b.chunks(c)) {
            *o = grow
                .iter()
                .zip(brow)
                .fold(T::zero(), |s, (&x, &y)| s + x * y);
        }
    }
    out
}

/// `a[r x k]^T * g[r x c]`
fn matmul_tn<T: Scalar>(a: &[T], g: &[T], r: usize, k: usize, c: usize) -> Vec<T> {
    let mut out = vec![T::zero(); k * c];
    if c == 0 || k == 0 {
        return out;
    }
    for (arow, grow) in a.chunks(k).zip(g.chunks(c)).take(r) {
        for (&aik, orow) in arow.iter().zip(out.chunks_mut(c)) {
            if aik == T::zero() {
                continue;
            }
            for (o, &gv) in orow.iter_mut().zip(grow) {
                *o += aik * gv;
            }
        }
    }
    out
}

fn transpose<T: Scalar>(x: &[T], rows: usize, cols: usize) -> Vec<T> {
    let mut out = vec![T::zero(); rows * cols];
    for r in 0..rows {
        for c in 0..cols {
            out[c * rows + r] = x[r * cols + c];
        }
    }
    out
}

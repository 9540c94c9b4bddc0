use super::{OpKind, Result, Scalar, Shape, Tape, Tensor, TensorError, Var};

/// Weights of a gated recurrent unit with hidden size `d` and input size `2d`.
///
/// Row-vector convention: `x * W` with `W` stored as `input x hidden`.
#[derive(Clone, Debug, PartialEq)]
pub struct GruParams<T> {
    pub w_update: Tensor<T>,
    pub w_reset: Tensor<T>,
    pub w_candidate: Tensor<T>,
    pub u_update: Tensor<T>,
    pub u_reset: Tensor<T>,
    pub u_candidate: Tensor<T>,
    pub b_update: Tensor<T>,
    pub b_reset: Tensor<T>,
    pub b_candidate: Tensor<T>,
}

impl<T: Scalar> GruParams<T> {
    pub fn zeros(input: usize, hidden: usize) -> Self {
        let w = || Tensor::zeros(Shape::new(input, hidden));
        let u = || Tensor::zeros(Shape::new(hidden, hidden));
        let b = || Tensor::zeros(Shape::new(1, hidden));
        GruParams {
            w_update: w(),
            w_reset: w(),
            w_candidate: w(),
            u_update: u(),
            u_reset: u(),
            u_candidate: u(),
            b_update: b(),
            b_reset: b(),
            b_candidate: b(),
        }
    }

    pub fn hidden(&self) -> usize {
        self.u_update.shape().rows
    }

    pub fn input(&self) -> usize {
        self.w_update.shape().rows
    }

    pub fn named(&self) -> [(&'static str, &Tensor<T>); 9] {
        [
            ("w_update", &self.w_update),
            ("w_reset", &self.w_reset),
            ("w_candidate", &self.w_candidate),
            ("u_update", &self.u_update),
            ("u_reset", &self.u_reset),
            ("u_candidate", &self.u_candidate),
            ("b_update", &self.b_update),
            ("b_reset", &self.b_reset),
            ("b_candidate", &self.b_candidate),
        ]
    }

    pub fn named_mut(&mut self) -> [(&'static str, &mut Tensor<T>); 9] {
        [
            ("w_update", &mut self.w_update),
            ("w_reset", &mut self.w_reset),
            ("w_candidate", &mut self.w_candidate),
            ("u_update", &mut self.u_update),
            ("u_reset", &mut self.u_reset),
            ("u_candidate", &mut self.u_candidate),
            ("b_update", &mut self.b_update),
            ("b_reset", &mut self.b_reset),
            ("b_candidate", &mut self.b_candidate),
        ]
    }

    pub fn register(&self, tape: &mut Tape<T>) -> GruVars {
        GruVars {
            w_update: tape.leaf(&self.w_update),
            w_reset: tape.leaf(&self.w_reset),
            w_candidate: tape.leaf(&self.w_candidate),
            u_update: tape.leaf(&self.u_update),
            u_reset: tape.leaf(&self.u_reset),
            u_candidate: tape.leaf(&self.u_candidate),
            b_update: tape.leaf(&self.b_update),
            b_reset: tape.leaf(&self.b_reset),
            b_candidate: tape.leaf(&self.b_candidate),
        }
    }
}

/// [`GruParams`] recorded on a tape.
#[derive(Clone, Copy, Debug)]
pub struct GruVars {
    pub w_update: Var,
    pub w_reset: Var,
    pub w_candidate: Var,
    pub u_update: Var,
    pub u_reset: Var,
    pub u_candidate: Var,
    pub b_update: Var,
    pub b_reset: Var,
    pub b_candidate: Var,
}

impl GruVars {
    pub fn all(&self) -> [Var; 9] {
        [
            self.w_update,
            self.w_reset,
            self.w_candidate,
            self.u_update,
            self.u_reset,
            self.u_candidate,
            self.b_update,
            self.b_reset,
            self.b_candidate,
        ]
    }
}

/// One GRU step applied to every row of `h` (`rows x d`) with inputs `x` (`rows x 2d`).
///
/// ```text
/// u = sigmoid(x W_u + h U_u + b_u)
/// r = sigmoid(x W_r + h U_r + b_r)
/// c = tanh(x W_c + (r * h) U_c + b_c)
/// h' = (1 - u) * h + u * c
/// ```
pub fn gru_cell<T: Scalar>(tape: &mut Tape<T>, h: Var, x: Var, p: &GruVars) -> Result<Var> {
    let d = p.u_update.shape().rows;
    if h.shape().cols != d || x.shape().cols != p.w_update.shape().rows {
        return Err(TensorError::ShapeMismatch {
            op: OpKind::MatMul,
            lhs: h.shape(),
            rhs: x.shape(),
        });
    }
    if h.shape().rows != x.shape().rows {
        return Err(TensorError::ShapeMismatch {
            op: OpKind::Add,
            lhs: h.shape(),
            rhs: x.shape(),
        });
    }
    let gate = |tape: &mut Tape<T>, w: Var, u: Var, b: Var, hin: Var| -> Result<Var> {
        let xw = tape.matmul(x, w)?;
        let hu = tape.matmul(hin, u)?;
        let s = tape.add(xw, hu)?;
        tape.add_row(s, b)
    };
    let u_pre = gate(tape, p.w_update, p.u_update, p.b_update, h)?;
    let u = tape.sigmoid(u_pre);
    let r_pre = gate(tape, p.w_reset, p.u_reset, p.b_reset, h)?;
    let r = tape.sigmoid(r_pre);
    let rh = tape.mul(r, h)?;
    let c_pre = gate(tape, p.w_candidate, p.u_candidate, p.b_candidate, rh)?;
    let c = tape.tanh(c_pre);
    // (1 - u) h + u c == h + u (c - h)
    let diff = tape.sub(c, h)?;
    let step = tape.mul(u, diff)?;
    tape.add(h, step)
}

//! Dense 2-D tensors with a reverse-mode differentiation tape.
//!
//! Every value in the model is a row-major matrix; vectors are `1 x n` or
//! `n x 1` and scalars are `1 x 1`. Operations are recorded on a [`Tape`]
//! and differentiated with [`Tape::backward`].

mod gru;
mod scalar;
mod sparse;
mod tape;

pub use gru::{gru_cell, GruParams, GruVars};
pub use scalar::{Precision, Scalar};
pub use sparse::SparseRows;
pub use tape::{Gradients, OpKind, Tape, Var};

use serde::{Deserialize, Serialize};
use std::fmt;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum TensorError {
    #[error("{op}: incompatible shapes {lhs} and {rhs}")]
    ShapeMismatch { op: OpKind, lhs: Shape, rhs: Shape },
    #[error("{op}: invalid operand shape {shape}: {reason}")]
    InvalidShape {
        op: OpKind,
        shape: Shape,
        reason: &'static str,
    },
    #[error("backward requires a 1x1 loss, got {0}")]
    NonScalarLoss(Shape),
    #[error("tensor data length {len} does not match shape {shape}")]
    DataLength { len: usize, shape: Shape },
}

pub type Result<T, E = TensorError> = std::result::Result<T, E>;

/// Row/column extent of a matrix.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Shape {
    pub rows: usize,
    pub cols: usize,
}

impl Shape {
    pub const SCALAR: Shape = Shape { rows: 1, cols: 1 };

    pub fn new(rows: usize, cols: usize) -> Self {
        Shape { rows, cols }
    }

    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn transposed(&self) -> Shape {
        Shape::new(self.cols, self.rows)
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.rows, self.cols)
    }
}

/// A dense matrix with an optional gradient buffer of the same shape.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor<T> {
    shape: Shape,
    data: Vec<T>,
    grad: Option<Vec<T>>,
}

impl<T: Scalar> Tensor<T> {
    pub fn from_vec(shape: Shape, data: Vec<T>) -> Result<Self> {
        if data.len() != shape.len() {
            return Err(TensorError::DataLength {
                len: data.len(),
                shape,
            });
        }
        Ok(Tensor {
            shape,
            data,
            grad: None,
        })
    }

    pub fn zeros(shape: Shape) -> Self {
        Tensor {
            shape,
            data: vec![T::zero(); shape.len()],
            grad: None,
        }
    }

    pub fn from_rows(rows: &[&[T]]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            if r.len() != cols {
                return Err(TensorError::DataLength {
                    len: r.len(),
                    shape: Shape::new(rows.len(), cols),
                });
            }
            data.extend_from_slice(r);
        }
        Self::from_vec(Shape::new(rows.len(), cols), data)
    }

    pub fn row_vector(values: &[T]) -> Self {
        Tensor {
            shape: Shape::new(1, values.len()),
            data: values.to_vec(),
            grad: None,
        }
    }

    pub fn column_vector(values: &[T]) -> Self {
        Tensor {
            shape: Shape::new(values.len(), 1),
            data: values.to_vec(),
            grad: None,
        }
    }

    pub fn scalar(value: T) -> Self {
        Tensor {
            shape: Shape::SCALAR,
            data: vec![value],
            grad: None,
        }
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    pub fn row(&self, r: usize) -> &[T] {
        &self.data[r * self.shape.cols..(r + 1) * self.shape.cols]
    }

    pub fn get(&self, r: usize, c: usize) -> T {
        self.data[r * self.shape.cols + c]
    }

    pub fn grad(&self) -> Option<&[T]> {
        self.grad.as_deref()
    }

    pub fn set_grad(&mut self, grad: Vec<T>) -> Result<()> {
        if grad.len() != self.shape.len() {
            return Err(TensorError::DataLength {
                len: grad.len(),
                shape: self.shape,
            });
        }
        self.grad = Some(grad);
        Ok(())
    }

    pub fn clear_grad(&mut self) {
        self.grad = None;
    }

    pub fn take_grad(&mut self) -> Option<Vec<T>> {
        self.grad.take()
    }

    pub fn squared_norm(&self) -> T {
        self.data.iter().fold(T::zero(), |acc, &x| acc + x * x)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    /// Converts to another precision.
    pub fn cast<U: Scalar>(&self) -> Tensor<U> {
        Tensor {
            shape: self.shape,
            data: self.data.iter().map(|&x| U::lit(x.as_f64())).collect(),
            grad: self
                .grad
                .as_ref()
                .map(|g| g.iter().map(|&x| U::lit(x.as_f64())).collect()),
        }
    }
}

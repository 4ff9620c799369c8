//! Minimal dense row-major tensor.
//!
//! The pooling kernels index flat slices directly, so this stays deliberately
//! small: shape bookkeeping, zero/fill construction and scalar casting. The
//! last dimension is contiguous.

use crate::error::CoreError;
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor<T> {
    dims: Vec<usize>,
    data: Vec<T>,
}

impl<T: Real> Tensor<T> {
    pub fn zeros(dims: &[usize]) -> Self {
        let len = dims.iter().product();
        Tensor { dims: dims.to_vec(), data: vec![T::zero(); len] }
    }

    pub fn from_vec(dims: &[usize], data: Vec<T>) -> Result<Self, CoreError> {
        let len: usize = dims.iter().product();
        if len != data.len() {
            return Err(CoreError::Shape(format!(
                "tensor data length {} does not match dims {:?}",
                data.len(),
                dims
            )));
        }
        Ok(Tensor { dims: dims.to_vec(), data })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn rank(&self) -> usize {
        self.dims.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    /// Flat offset of a multi-index. Debug-asserts bounds per dimension.
    #[inline]
    pub fn offset(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.dims.len());
        let mut off = 0;
        for (i, (&ix, &d)) in idx.iter().zip(&self.dims).enumerate() {
            debug_assert!(ix < d, "index {ix} out of bounds for dim {i} of size {d}");
            off = off * d + ix;
        }
        off
    }

    #[inline]
    pub fn at(&self, idx: &[usize]) -> T {
        self.data[self.offset(idx)]
    }

    #[inline]
    pub fn at_mut(&mut self, idx: &[usize]) -> &mut T {
        let off = self.offset(idx);
        &mut self.data[off]
    }

    pub fn cast<U: Real>(&self) -> Tensor<U> {
        Tensor {
            dims: self.dims.clone(),
            data: self.data.iter().map(|&v| U::from_f64_c(v.to_f64_c())).collect(),
        }
    }
}

//! Dense order-d tensors and the index machinery built on them.
//!
//! Elements are stored with the first index varying fastest, so the linear
//! offset of the 1-based multi-index `(i_1, .., i_d)` is
//! `(i_1 - 1) + (i_2 - 1) I_1 + .. + (i_d - 1) I_1 .. I_{d-1}`. This is the
//! same map the mode-(r_1..r_L) matricization uses for its row and column
//! groups, which makes `vec(t)` a zero-cost view of the storage.
//!
//! Every index and mode number in the public API is 1-based.

mod csv_import;
mod io;
mod matricize;
mod pgm;

pub use csv_import::{parse_csv_slice, read_csv_slices};
pub use io::{decode_atd, encode_atd, read_tensor, write_tensor, ATD_MAGIC};
pub use matricize::{dematricize, matricize, MatricizationSpec};
pub use pgm::{encode_pgm, export_pgm, rescale_to_byte};

use rayon::prelude::*;
use thiserror::Error;

/// Highest tensor order accepted anywhere in the crate.
pub const MAX_ORDER: usize = 8;

#[derive(Debug, Error)]
pub enum TensorError {
    #[error("invalid dimensions {dims:?}: {reason}")]
    InvalidDims { dims: Vec<usize>, reason: String },
    #[error("data length {found} does not match product of dims {dims:?} ({expected})")]
    DataLength {
        dims: Vec<usize>,
        expected: usize,
        found: usize,
    },
    #[error("invalid mode list {modes:?} for order-{order} tensor: {reason}")]
    InvalidModes {
        modes: Vec<usize>,
        order: usize,
        reason: String,
    },
    #[error("index {index:?} out of range for dims {dims:?}")]
    IndexOutOfRange { index: Vec<usize>, dims: Vec<usize> },
    #[error("shape mismatch: expected {expected:?}, found {found:?}")]
    ShapeMismatch {
        expected: Vec<usize>,
        found: Vec<usize>,
    },
    #[error("bad magic: not an .atd tensor file")]
    BadMagic,
    #[error("truncated header: {0}")]
    TruncatedHeader(String),
    #[error("invalid header: {0}")]
    InvalidHeader(String),
    #[error("payload length mismatch: header declares {expected} values, payload holds {found_bytes} bytes")]
    PayloadLengthMismatch { expected: usize, found_bytes: usize },
    #[error("csv error in {source_name}: {reason}")]
    Csv { source_name: String, reason: String },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, TensorError>;

/// Checks a dimension vector and returns the element count.
pub(crate) fn checked_numel(dims: &[usize]) -> Result<usize> {
    if dims.is_empty() {
        return Err(TensorError::InvalidDims {
            dims: dims.to_vec(),
            reason: "order must be at least 1".into(),
        });
    }
    if dims.len() > MAX_ORDER {
        return Err(TensorError::InvalidDims {
            dims: dims.to_vec(),
            reason: format!("order exceeds {MAX_ORDER}"),
        });
    }
    let mut n: usize = 1;
    for &d in dims {
        if d == 0 {
            return Err(TensorError::InvalidDims {
                dims: dims.to_vec(),
                reason: "every extent must be at least 1".into(),
            });
        }
        n = n.checked_mul(d).ok_or_else(|| TensorError::InvalidDims {
            dims: dims.to_vec(),
            reason: "element count overflows".into(),
        })?;
    }
    Ok(n)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    dims: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    pub fn new(dims: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        let n = checked_numel(&dims)?;
        if n != data.len() {
            return Err(TensorError::DataLength {
                dims,
                expected: n,
                found: data.len(),
            });
        }
        Ok(Self { dims, data })
    }

    /// Zero tensor. Panics on invalid dims.
    pub fn zeros(dims: &[usize]) -> Self {
        Self::filled(dims, 0.0)
    }

    /// Constant tensor. Panics on invalid dims.
    pub fn filled(dims: &[usize], value: f64) -> Self {
        let n = checked_numel(dims).expect("invalid tensor dims");
        Self {
            dims: dims.to_vec(),
            data: vec![value; n],
        }
    }

    /// Builds a tensor from a function of the 1-based multi-index.
    pub fn from_fn(dims: &[usize], mut f: impl FnMut(&[usize]) -> f64) -> Result<Self> {
        let n = checked_numel(dims)?;
        let mut data = Vec::with_capacity(n);
        let mut idx = vec![1usize; dims.len()];
        for _ in 0..n {
            data.push(f(&idx));
            advance_index(&mut idx, dims);
        }
        Ok(Self {
            dims: dims.to_vec(),
            data,
        })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn order(&self) -> usize {
        self.dims.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Storage in first-index-fastest order, i.e. `vec(t)`.
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    /// Linear storage offset of a 1-based multi-index.
    pub fn offset(&self, index: &[usize]) -> Result<usize> {
        if index.len() != self.dims.len()
            || index
                .iter()
                .zip(&self.dims)
                .any(|(&i, &d)| i == 0 || i > d)
        {
            return Err(TensorError::IndexOutOfRange {
                index: index.to_vec(),
                dims: self.dims.clone(),
            });
        }
        let mut off = 0;
        let mut stride = 1;
        for (&i, &d) in index.iter().zip(&self.dims) {
            off += (i - 1) * stride;
            stride *= d;
        }
        Ok(off)
    }

    /// Element at a 1-based multi-index. Panics when out of range.
    pub fn get(&self, index: &[usize]) -> f64 {
        match self.offset(index) {
            Ok(o) => self.data[o],
            Err(e) => panic!("{e}"),
        }
    }

    /// Sets the element at a 1-based multi-index. Panics when out of range.
    pub fn set(&mut self, index: &[usize], value: f64) {
        match self.offset(index) {
            Ok(o) => self.data[o] = value,
            Err(e) => panic!("{e}"),
        }
    }

    pub fn norm_sq(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.data
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }

    pub fn ensure_same_shape(&self, other: &Tensor) -> Result<()> {
        if self.dims != other.dims {
            return Err(TensorError::ShapeMismatch {
                expected: self.dims.clone(),
                found: other.dims.clone(),
            });
        }
        Ok(())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Tensor {
        Tensor {
            dims: self.dims.clone(),
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Elementwise `self + other`. Panics on shape mismatch.
    pub fn add(&self, other: &Tensor) -> Tensor {
        self.zip_with(other, |a, b| a + b)
    }

    /// Elementwise `self - other`. Panics on shape mismatch.
    pub fn sub(&self, other: &Tensor) -> Tensor {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scale(&self, s: f64) -> Tensor {
        self.map(|v| v * s)
    }

    pub fn zip_with(&self, other: &Tensor, f: impl Fn(f64, f64) -> f64) -> Tensor {
        assert_eq!(self.dims, other.dims, "shape mismatch");
        Tensor {
            dims: self.dims.clone(),
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    pub fn distance(&self, other: &Tensor) -> f64 {
        assert_eq!(self.dims, other.dims, "shape mismatch");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    fn check_mode(&self, mode: usize) -> Result<()> {
        if mode == 0 || mode > self.order() {
            return Err(TensorError::InvalidModes {
                modes: vec![mode],
                order: self.order(),
                reason: "mode out of range".into(),
            });
        }
        Ok(())
    }

    /// Stride layout of the mode-k fibers: `(inner, len, outer)` where
    /// element `j` of fiber `(a, b)` lives at `a + inner * (j + len * b)`.
    pub fn fiber_layout(&self, mode: usize) -> Result<(usize, usize, usize)> {
        self.check_mode(mode)?;
        let k = mode - 1;
        let inner: usize = self.dims[..k].iter().product();
        let outer: usize = self.dims[k + 1..].iter().product();
        Ok((inner, self.dims[k], outer))
    }

    /// Iterates over the mode-k fibers in storage order.
    ///
    /// Each fiber's multi-index has the free mode reported as 0.
    pub fn fibers(&self, mode: usize) -> Result<Fibers<'_>> {
        let (inner, len, outer) = self.fiber_layout(mode)?;
        Ok(Fibers {
            tensor: self,
            mode,
            inner,
            len,
            count: inner * outer,
            next: 0,
        })
    }

    /// Overwrites the mode-k fiber at `index` (free mode entry ignored).
    pub fn set_fiber(&mut self, mode: usize, index: &[usize], values: &[f64]) -> Result<()> {
        let (inner, len, _) = self.fiber_layout(mode)?;
        if values.len() != len {
            return Err(TensorError::ShapeMismatch {
                expected: vec![len],
                found: vec![values.len()],
            });
        }
        let mut start = index.to_vec();
        if start.len() != self.order() {
            return Err(TensorError::IndexOutOfRange {
                index: index.to_vec(),
                dims: self.dims.clone(),
            });
        }
        start[mode - 1] = 1;
        let base = self.offset(&start)?;
        for (j, &v) in values.iter().enumerate() {
            self.data[base + inner * j] = v;
        }
        Ok(())
    }

    /// Applies `f` to every mode-k fiber in place. Fibers never overlap, so
    /// they are processed in parallel; the result does not depend on the
    /// worker count.
    pub fn par_map_fibers<F>(&mut self, mode: usize, f: F) -> Result<()>
    where
        F: Fn(&mut [f64]) + Sync + Send,
    {
        let (inner, len, outer) = self.fiber_layout(mode)?;
        if inner == 1 {
            self.data.par_chunks_mut(len).for_each(|fib| f(fib));
            return Ok(());
        }
        let mut buf = vec![0.0; self.data.len()];
        // Gather so that fiber (a, b) is contiguous at (a + inner * b) * len.
        for b in 0..outer {
            let block = &self.data[b * inner * len..(b + 1) * inner * len];
            let dst = &mut buf[b * inner * len..(b + 1) * inner * len];
            for j in 0..len {
                for a in 0..inner {
                    dst[a * len + j] = block[a + inner * j];
                }
            }
        }
        buf.par_chunks_mut(len).for_each(|fib| f(fib));
        for b in 0..outer {
            let src = &buf[b * inner * len..(b + 1) * inner * len];
            let block = &mut self.data[b * inner * len..(b + 1) * inner * len];
            for j in 0..len {
                for a in 0..inner {
                    block[a + inner * j] = src[a * len + j];
                }
            }
        }
        Ok(())
    }

    /// The slice `t(:, .., i_{d_1}, .., i_{d_k}, .., :)`: the listed modes
    /// are fixed at the given 1-based indices and the result keeps the
    /// remaining modes in their original order. Fixing every mode yields a
    /// one-element tensor of dims `[1]`.
    pub fn slice(&self, modes: &[usize], indices: &[usize]) -> Result<Tensor> {
        let plan = SlicePlan::new(&self.dims, modes, indices)?;
        let data = plan.offsets(&self.dims).map(|o| self.data[o]).collect();
        Tensor::new(plan.out_dims, data)
    }

    /// Writes `values` into the slice addressed as in [`Tensor::slice`].
    pub fn set_slice(&mut self, modes: &[usize], indices: &[usize], values: &Tensor) -> Result<()> {
        let plan = SlicePlan::new(&self.dims, modes, indices)?;
        if plan.out_dims != values.dims {
            return Err(TensorError::ShapeMismatch {
                expected: plan.out_dims,
                found: values.dims.clone(),
            });
        }
        let offsets: Vec<usize> = plan.offsets(&self.dims).collect();
        for (o, &v) in offsets.into_iter().zip(&values.data) {
            self.data[o] = v;
        }
        Ok(())
    }
}

/// Advances a 1-based multi-index in storage order; wraps to all ones.
pub(crate) fn advance_index(idx: &mut [usize], dims: &[usize]) {
    for (i, &d) in idx.iter_mut().zip(dims) {
        if *i < d {
            *i += 1;
            return;
        }
        *i = 1;
    }
}

/// Storage offsets of all elements enumerated with the modes of `mode_order`
/// as the index digits, first listed mode fastest. `mode_order` must be a
/// permutation of `1..=d`.
///
/// Placing a group of modes last makes every slice at those modes a
/// contiguous chunk of the result; placing row modes before column modes
/// reproduces a matricization in column-major order.
pub fn permuted_offsets(dims: &[usize], mode_order: &[usize]) -> Result<Vec<usize>> {
    check_modes(mode_order, dims.len())?;
    if mode_order.len() != dims.len() {
        return Err(TensorError::InvalidModes {
            modes: mode_order.to_vec(),
            order: dims.len(),
            reason: "mode order must list every mode".into(),
        });
    }
    let st = strides(dims);
    let pdims: Vec<usize> = mode_order.iter().map(|&m| dims[m - 1]).collect();
    let pstrides: Vec<usize> = mode_order.iter().map(|&m| st[m - 1]).collect();
    let n: usize = pdims.iter().product();
    let mut out = Vec::with_capacity(n);
    let mut idx = vec![0usize; dims.len()];
    let mut off = 0usize;
    for _ in 0..n {
        out.push(off);
        for k in 0..idx.len() {
            idx[k] += 1;
            off += pstrides[k];
            if idx[k] < pdims[k] {
                break;
            }
            off -= pstrides[k] * pdims[k];
            idx[k] = 0;
        }
    }
    Ok(out)
}

/// Validates a mode list (1-based, distinct, within order).
pub(crate) fn check_modes(modes: &[usize], order: usize) -> Result<()> {
    let mut seen = [false; MAX_ORDER + 1];
    for &m in modes {
        if m == 0 || m > order {
            return Err(TensorError::InvalidModes {
                modes: modes.to_vec(),
                order,
                reason: format!("mode {m} out of range"),
            });
        }
        if seen[m] {
            return Err(TensorError::InvalidModes {
                modes: modes.to_vec(),
                order,
                reason: format!("mode {m} listed twice"),
            });
        }
        seen[m] = true;
    }
    Ok(())
}

struct SlicePlan {
    fixed_offset: usize,
    free_modes: Vec<usize>,
    out_dims: Vec<usize>,
}

impl SlicePlan {
    fn new(dims: &[usize], modes: &[usize], indices: &[usize]) -> Result<Self> {
        check_modes(modes, dims.len())?;
        if modes.len() != indices.len() {
            return Err(TensorError::IndexOutOfRange {
                index: indices.to_vec(),
                dims: dims.to_vec(),
            });
        }
        let mut fixed_offset = 0;
        let mut stride = 1;
        let mut free_modes = Vec::new();
        for (k, &d) in dims.iter().enumerate() {
            match modes.iter().position(|&m| m == k + 1) {
                Some(p) => {
                    let i = indices[p];
                    if i == 0 || i > d {
                        return Err(TensorError::IndexOutOfRange {
                            index: indices.to_vec(),
                            dims: dims.to_vec(),
                        });
                    }
                    fixed_offset += (i - 1) * stride;
                }
                None => free_modes.push(k),
            }
            stride *= d;
        }
        let mut out_dims: Vec<usize> = free_modes.iter().map(|&k| dims[k]).collect();
        if out_dims.is_empty() {
            out_dims.push(1);
        }
        Ok(Self {
            fixed_offset,
            free_modes,
            out_dims,
        })
    }

    fn offsets<'a>(&'a self, dims: &'a [usize]) -> impl Iterator<Item = usize> + 'a {
        let strides = strides(dims);
        let free_strides: Vec<usize> = self.free_modes.iter().map(|&k| strides[k]).collect();
        let free_dims: Vec<usize> = self.free_modes.iter().map(|&k| dims[k]).collect();
        let n: usize = free_dims.iter().product();
        let mut idx = vec![0usize; free_dims.len()];
        let base = self.fixed_offset;
        (0..n).map(move |_| {
            let off = base
                + idx
                    .iter()
                    .zip(&free_strides)
                    .map(|(i, s)| i * s)
                    .sum::<usize>();
            for (i, &d) in idx.iter_mut().zip(&free_dims) {
                *i += 1;
                if *i < d {
                    break;
                }
                *i = 0;
            }
            off
        })
    }
}

pub(crate) fn strides(dims: &[usize]) -> Vec<usize> {
    let mut s = Vec::with_capacity(dims.len());
    let mut acc = 1;
    for &d in dims {
        s.push(acc);
        acc *= d;
    }
    s
}

/// One mode-k fiber: its multi-index (free mode reported as 0) and values.
#[derive(Debug, Clone, PartialEq)]
pub struct Fiber {
    pub index: Vec<usize>,
    pub values: Vec<f64>,
}

pub struct Fibers<'a> {
    tensor: &'a Tensor,
    mode: usize,
    inner: usize,
    len: usize,
    count: usize,
    next: usize,
}

impl Iterator for Fibers<'_> {
    type Item = Fiber;

    fn next(&mut self) -> Option<Fiber> {
        if self.next >= self.count {
            return None;
        }
        let id = self.next;
        self.next += 1;
        let (a, b) = (id % self.inner, id / self.inner);
        let base = a + self.inner * self.len * b;
        let values = (0..self.len)
            .map(|j| self.tensor.data[base + self.inner * j])
            .collect();
        let dims = &self.tensor.dims;
        let mut index = Vec::with_capacity(dims.len());
        let mut rem = base;
        for (k, &d) in dims.iter().enumerate() {
            if k + 1 == self.mode {
                index.push(0);
            } else {
                index.push(rem % d + 1);
            }
            rem /= d;
        }
        Some(Fiber { index, values })
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let r = self.count - self.next;
        (r, Some(r))
    }
}

impl ExactSizeIterator for Fibers<'_> {}

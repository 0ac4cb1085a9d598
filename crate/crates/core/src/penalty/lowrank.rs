use nalgebra::DMatrix;
use rayon::prelude::*;

use super::{mode_layout, Grouping, PenaltyError, ProxOperator, Result};
use crate::tensor::Tensor;

const SVD_MAX_ITERS: usize = 100_000;

struct Unfolding {
    grouping: Grouping,
    rows: usize,
    cols: usize,
}

fn unfolding(dims: &[usize], row_modes: &[usize], slice_modes: &[usize]) -> Result<Unfolding> {
    let order = mode_layout(dims.len(), row_modes, slice_modes);
    let rows: usize = row_modes.iter().map(|&m| dims[m - 1]).product();
    let cols: usize = order[row_modes.len()..order.len() - slice_modes.len()]
        .iter()
        .map(|&m| dims[m - 1])
        .product();
    Ok(Unfolding {
        grouping: Grouping::new(dims, &order, rows * cols)?,
        rows,
        cols,
    })
}

fn svd(m: DMatrix<f64>, vectors: bool) -> Result<nalgebra::SVD<f64, nalgebra::Dyn, nalgebra::Dyn>> {
    if m.iter().any(|v| !v.is_finite()) {
        return Err(PenaltyError::Numerical {
            context: "singular value decomposition".into(),
            detail: "non-finite entry in the unfolding".into(),
        });
    }
    let (r, c) = m.shape();
    m.try_svd(vectors, vectors, f64::EPSILON, SVD_MAX_ITERS)
        .ok_or_else(|| PenaltyError::Numerical {
            context: "singular value decomposition".into(),
            detail: format!("no convergence on a {r}x{c} unfolding"),
        })
}

/// Sum of nuclear norms of the row-mode unfolding of every slice.
pub(crate) fn evaluate(t: &Tensor, row_modes: &[usize], slice_modes: &[usize]) -> Result<f64> {
    let u = unfolding(t.dims(), row_modes, slice_modes)?;
    let buf = u.grouping.gather(t.data());
    let mut total = 0.0;
    for chunk in buf.chunks(u.grouping.chunk()) {
        let s = svd(DMatrix::from_column_slice(u.rows, u.cols, chunk), false)?;
        total += s.singular_values.iter().sum::<f64>();
    }
    Ok(total)
}

/// Singular value soft-thresholding per slice unfolding.
pub(crate) struct SvtProx {
    unfolding: Unfolding,
    thr: f64,
}

impl SvtProx {
    pub(crate) fn new(dims: &[usize], row_modes: &[usize], slice_modes: &[usize], thr: f64) -> Result<Self> {
        Ok(Self {
            unfolding: unfolding(dims, row_modes, slice_modes)?,
            thr,
        })
    }
}

pub fn singular_value_threshold(m: DMatrix<f64>, thr: f64) -> Result<DMatrix<f64>> {
    let (r, c) = m.shape();
    let s = svd(m, true)?;
    let u = s.u.as_ref().expect("left vectors requested");
    let vt = s.v_t.as_ref().expect("right vectors requested");
    let mut out = DMatrix::zeros(r, c);
    for (k, &sigma) in s.singular_values.iter().enumerate() {
        let shrunk = sigma - thr;
        if shrunk > 0.0 {
            out += u.column(k) * vt.row(k) * shrunk;
        }
    }
    Ok(out)
}

impl ProxOperator for SvtProx {
    fn apply(&mut self, x: &mut Tensor) -> Result<()> {
        if self.thr == 0.0 {
            return Ok(());
        }
        let (rows, cols, thr) = (self.unfolding.rows, self.unfolding.cols, self.thr);
        let mut buf = self.unfolding.grouping.gather(x.data());
        buf.par_chunks_mut(self.unfolding.grouping.chunk())
            .try_for_each(|chunk| -> Result<()> {
                let m = DMatrix::from_column_slice(rows, cols, chunk);
                chunk.copy_from_slice(singular_value_threshold(m, thr)?.as_slice());
                Ok(())
            })?;
        self.unfolding.grouping.scatter(&buf, x.data_mut());
        Ok(())
    }
}

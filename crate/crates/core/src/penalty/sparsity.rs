use rayon::prelude::*;

use super::{mode_layout, Grouping, ProxOperator, Result, ThresholdStyle};
use crate::tensor::Tensor;

fn group_len(dims: &[usize], group_modes: &[usize]) -> usize {
    dims.iter()
        .enumerate()
        .filter(|(k, _)| !group_modes.contains(&(k + 1)))
        .map(|(_, &d)| d)
        .product()
}

fn grouping(dims: &[usize], group_modes: &[usize]) -> Result<Grouping> {
    Grouping::new(
        dims,
        &mode_layout(dims.len(), &[], group_modes),
        group_len(dims, group_modes),
    )
}

/// Sum of the l2 norms of all slices at `group_modes`; the l1 norm when the
/// list is empty.
pub(crate) fn evaluate(t: &Tensor, group_modes: &[usize]) -> Result<f64> {
    if group_modes.is_empty() {
        return Ok(t.data().iter().map(|v| v.abs()).sum());
    }
    let g = grouping(t.dims(), group_modes)?;
    let buf = g.gather(t.data());
    Ok(buf
        .chunks(g.chunk())
        .map(|s| s.iter().map(|v| v * v).sum::<f64>().sqrt())
        .sum())
}

pub fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

pub(crate) struct ElementwiseProx {
    thr: f64,
    style: ThresholdStyle,
}

impl ElementwiseProx {
    pub(crate) fn new(thr: f64, style: ThresholdStyle) -> Self {
        Self { thr, style }
    }
}

impl ProxOperator for ElementwiseProx {
    fn apply(&mut self, x: &mut Tensor) -> Result<()> {
        let thr = self.thr;
        match self.style {
            ThresholdStyle::Signed => x
                .data_mut()
                .par_iter_mut()
                .for_each(|v| *v = soft_threshold(*v, thr)),
            ThresholdStyle::Nonnegative => x
                .data_mut()
                .par_iter_mut()
                .for_each(|v| *v = (*v - thr).max(0.0)),
        }
        Ok(())
    }
}

/// Block soft-threshold: each slice scaled by `(1 - thr / ||slice||)_+`.
pub(crate) struct GroupProx {
    grouping: Grouping,
    thr: f64,
}

impl GroupProx {
    pub(crate) fn new(dims: &[usize], group_modes: &[usize], thr: f64) -> Result<Self> {
        Ok(Self {
            grouping: grouping(dims, group_modes)?,
            thr,
        })
    }
}

impl ProxOperator for GroupProx {
    fn apply(&mut self, x: &mut Tensor) -> Result<()> {
        let thr = self.thr;
        let mut buf = self.grouping.gather(x.data());
        buf.par_chunks_mut(self.grouping.chunk()).for_each(|s| {
            let n = s.iter().map(|v| v * v).sum::<f64>().sqrt();
            let scale = if n > thr { 1.0 - thr / n } else { 0.0 };
            s.iter_mut().for_each(|v| *v *= scale);
        });
        self.grouping.scatter(&buf, x.data_mut());
        Ok(())
    }
}

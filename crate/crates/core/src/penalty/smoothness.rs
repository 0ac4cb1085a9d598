use super::difference::DifferenceMatrix;
use super::{mode_layout, BandedCholesky, Grouping, PenaltyError, ProxOperator, Result, SmoothMode};
use crate::tensor::Tensor;

fn difference(dims: &[usize], m: SmoothMode) -> Result<DifferenceMatrix> {
    DifferenceMatrix::new(m.order, dims[m.mode - 1], m.boundary).ok_or_else(|| {
        PenaltyError::Invalid(format!("difference order {} unsupported", m.order))
    })
}

/// `sum_s ||D^l X_(d_s)||_F^2`, i.e. the squared differences of every
/// mode-`d_s` fiber.
pub(crate) fn evaluate(t: &Tensor, modes: &[SmoothMode]) -> Result<f64> {
    let mut total = 0.0;
    for &m in modes {
        let d = difference(t.dims(), m)?;
        let len = t.dims()[m.mode - 1];
        let g = Grouping::new(t.dims(), &mode_layout(t.order(), &[m.mode], &[]), len)?;
        let buf = g.gather(t.data());
        total += buf.chunks(g.chunk()).map(|f| d.norm_sq(f)).sum::<f64>();
    }
    Ok(total)
}

/// Every mode fiber `x` becomes `(2 w D^T D + I)^{-1} x`, using one banded
/// factorization shared by all fibers.
pub(crate) struct SmoothProx {
    mode: usize,
    factor: Option<BandedCholesky>,
}

impl SmoothProx {
    pub(crate) fn new(dims: &[usize], m: SmoothMode, w: f64) -> Self {
        let d = DifferenceMatrix::new(m.order, dims[m.mode - 1], m.boundary)
            .expect("validated difference order");
        let factor = (w > 0.0 && d.nrows() > 0).then(|| d.factor_shifted_gram(2.0 * w));
        Self { mode: m.mode, factor }
    }
}

impl ProxOperator for SmoothProx {
    fn apply(&mut self, x: &mut Tensor) -> Result<()> {
        if let Some(f) = &self.factor {
            x.par_map_fibers(self.mode, |fib| f.solve_in_place(fib))?;
        }
        Ok(())
    }
}

use super::{ProxOperator, Result};
use crate::tensor::Tensor;

/// `t / (1 + 2 w)`, the prox of `w ||.||_F^2`.
pub(crate) struct FrobProx {
    scale: f64,
}

impl FrobProx {
    pub(crate) fn new(w: f64) -> Self {
        Self {
            scale: 1.0 / (1.0 + 2.0 * w),
        }
    }
}

impl ProxOperator for FrobProx {
    fn apply(&mut self, x: &mut Tensor) -> Result<()> {
        for v in x.data_mut() {
            *v *= self.scale;
        }
        Ok(())
    }
}

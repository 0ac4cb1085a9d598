//! Structural penalties: evaluation of `p(X)` and the proximal map of
//! `eta * lambda * p` at a point.
//!
//! `evaluate` returns the unweighted value; the engine multiplies by
//! `lambda` when it assembles the objective.

mod banded;
mod difference;
mod frobenius;
mod lowrank;
mod piecewise;
mod smoothness;
mod sparsity;

pub use banded::BandedCholesky;
pub use difference::{Boundary, DifferenceMatrix};
pub use lowrank::singular_value_threshold;
pub use piecewise::{tv1d_denoise, DUAL_TOL};
pub use sparsity::soft_threshold;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tensor::{permuted_offsets, Tensor, TensorError};

#[derive(Debug, Error)]
pub enum PenaltyError {
    #[error("invalid penalty term: {0}")]
    Invalid(String),
    #[error("no proximal operator: {0}")]
    NoProx(String),
    #[error("numerical failure in {context}: {detail}")]
    Numerical { context: String, detail: String },
    #[error(transparent)]
    Tensor(#[from] TensorError),
}

pub type Result<T> = std::result::Result<T, PenaltyError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdStyle {
    /// `sign(x) (|x| - t)_+`
    #[default]
    Signed,
    /// `(x - t)_+`, the prox of the l1 norm restricted to `x >= 0`.
    Nonnegative,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Neighborhood {
    Rook,
    Queen,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SmoothMode {
    pub mode: usize,
    pub order: u8,
    pub boundary: Boundary,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PiecewiseForm {
    /// Differences between consecutive slices along `chain_mode`, within
    /// every slice at `slice_modes`.
    Chain {
        chain_mode: usize,
        slice_modes: Vec<usize>,
    },
    /// Differences between neighboring grid points. Each grid point carries
    /// the sub-tensor over `sub_modes`; the grid is spanned by the modes in
    /// neither list.
    Graph {
        sub_modes: Vec<usize>,
        slice_modes: Vec<usize>,
        neighborhood: Neighborhood,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub enum PenaltyKind {
    Smoothness { modes: Vec<SmoothMode> },
    /// Empty `group_modes` is the elementwise l1 norm.
    Sparsity {
        group_modes: Vec<usize>,
        style: ThresholdStyle,
    },
    /// Empty `slice_modes` is one nuclear norm of the whole-tensor unfolding.
    LowRank {
        row_modes: Vec<usize>,
        slice_modes: Vec<usize>,
    },
    PiecewiseConstancy(PiecewiseForm),
    SquaredFrobenius,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PenaltyTerm {
    pub kind: PenaltyKind,
    pub lambda: f64,
}

/// A prox map prepared for a fixed shape, `eta` and `lambda`.
///
/// Iterative operators keep warm-start state between calls, hence `&mut`.
pub trait ProxOperator: Send {
    /// Overwrites `x` with `prox_{eta lambda p}(x)`.
    fn apply(&mut self, x: &mut Tensor) -> Result<()>;
}

impl PenaltyTerm {
    pub fn smoothness(mode: usize, order: u8, boundary: Boundary, lambda: f64) -> Self {
        Self {
            kind: PenaltyKind::Smoothness {
                modes: vec![SmoothMode {
                    mode,
                    order,
                    boundary,
                }],
            },
            lambda,
        }
    }

    pub fn l1(lambda: f64) -> Self {
        Self::sparsity(Vec::new(), ThresholdStyle::Signed, lambda)
    }

    pub fn l1_nonnegative(lambda: f64) -> Self {
        Self::sparsity(Vec::new(), ThresholdStyle::Nonnegative, lambda)
    }

    pub fn group_lasso(group_modes: Vec<usize>, lambda: f64) -> Self {
        Self::sparsity(group_modes, ThresholdStyle::Signed, lambda)
    }

    pub fn sparsity(group_modes: Vec<usize>, style: ThresholdStyle, lambda: f64) -> Self {
        Self {
            kind: PenaltyKind::Sparsity { group_modes, style },
            lambda,
        }
    }

    pub fn nuclear(row_modes: Vec<usize>, slice_modes: Vec<usize>, lambda: f64) -> Self {
        Self {
            kind: PenaltyKind::LowRank {
                row_modes,
                slice_modes,
            },
            lambda,
        }
    }

    pub fn chain_tv(chain_mode: usize, slice_modes: Vec<usize>, lambda: f64) -> Self {
        Self {
            kind: PenaltyKind::PiecewiseConstancy(PiecewiseForm::Chain {
                chain_mode,
                slice_modes,
            }),
            lambda,
        }
    }

    pub fn graph_tv(
        sub_modes: Vec<usize>,
        slice_modes: Vec<usize>,
        neighborhood: Neighborhood,
        lambda: f64,
    ) -> Self {
        Self {
            kind: PenaltyKind::PiecewiseConstancy(PiecewiseForm::Graph {
                sub_modes,
                slice_modes,
                neighborhood,
            }),
            lambda,
        }
    }

    pub fn squared_frobenius(lambda: f64) -> Self {
        Self {
            kind: PenaltyKind::SquaredFrobenius,
            lambda,
        }
    }

    /// Config-file name of the kind.
    pub fn kind_name(&self) -> &'static str {
        match self.kind {
            PenaltyKind::Smoothness { .. } => "smoothness",
            PenaltyKind::Sparsity { .. } => "sparsity",
            PenaltyKind::LowRank { .. } => "low_rank",
            PenaltyKind::PiecewiseConstancy(_) => "piecewise_constancy",
            PenaltyKind::SquaredFrobenius => "squared_frobenius",
        }
    }

    /// Whether a prox exists once the term is normalized.
    pub fn prox_capable(&self) -> bool {
        !matches!(
            self.kind,
            PenaltyKind::PiecewiseConstancy(PiecewiseForm::Graph { .. })
        )
    }

    /// Splits a multi-mode smoothness term into one term per mode, all with
    /// the same weight. Other kinds come back unchanged.
    pub fn split_modes(&self) -> Vec<PenaltyTerm> {
        match &self.kind {
            PenaltyKind::Smoothness { modes } if modes.len() > 1 => modes
                .iter()
                .map(|&m| PenaltyTerm {
                    kind: PenaltyKind::Smoothness { modes: vec![m] },
                    lambda: self.lambda,
                })
                .collect(),
            _ => vec![self.clone()],
        }
    }

    /// Checks weight and mode lists against a tensor shape.
    pub fn validate_for(&self, dims: &[usize]) -> Result<()> {
        let d = dims.len();
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(PenaltyError::Invalid(format!(
                "lambda must be finite and nonnegative, got {}",
                self.lambda
            )));
        }
        match &self.kind {
            PenaltyKind::Smoothness { modes } => {
                if modes.is_empty() {
                    return Err(invalid("smoothness needs at least one mode"));
                }
                let ms: Vec<usize> = modes.iter().map(|m| m.mode).collect();
                check_list("smoothness modes", &ms, d)?;
                for m in modes {
                    if !(1..=2).contains(&m.order) {
                        return Err(invalid(format!(
                            "difference order {} unsupported on mode {} (use 1 or 2)",
                            m.order, m.mode
                        )));
                    }
                }
            }
            PenaltyKind::Sparsity { group_modes, style } => {
                check_list("group modes", group_modes, d)?;
                if *style == ThresholdStyle::Nonnegative && !group_modes.is_empty() {
                    return Err(invalid(
                        "nonnegative threshold style applies to elementwise sparsity only",
                    ));
                }
            }
            PenaltyKind::LowRank {
                row_modes,
                slice_modes,
            } => {
                if row_modes.is_empty() {
                    return Err(invalid("low-rank term needs at least one row mode"));
                }
                check_list("row modes", row_modes, d)?;
                check_list("slice modes", slice_modes, d)?;
                check_disjoint("row modes", row_modes, "slice modes", slice_modes)?;
            }
            PenaltyKind::PiecewiseConstancy(PiecewiseForm::Chain {
                chain_mode,
                slice_modes,
            }) => {
                check_list("chain mode", &[*chain_mode], d)?;
                check_list("slice modes", slice_modes, d)?;
                check_disjoint("chain mode", &[*chain_mode], "slice modes", slice_modes)?;
            }
            PenaltyKind::PiecewiseConstancy(PiecewiseForm::Graph {
                sub_modes,
                slice_modes,
                ..
            }) => {
                check_list("sub-tensor modes", sub_modes, d)?;
                check_list("slice modes", slice_modes, d)?;
                check_disjoint("sub-tensor modes", sub_modes, "slice modes", slice_modes)?;
                if sub_modes.len() + slice_modes.len() == d {
                    return Err(invalid("neighborhood grid is empty: no modes left to span it"));
                }
            }
            PenaltyKind::SquaredFrobenius => {}
        }
        Ok(())
    }

    /// Unweighted penalty value `p(t)`.
    pub fn evaluate(&self, t: &Tensor) -> Result<f64> {
        self.validate_for(t.dims())?;
        match &self.kind {
            PenaltyKind::Smoothness { modes } => smoothness::evaluate(t, modes),
            PenaltyKind::Sparsity { group_modes, .. } => Ok(sparsity::evaluate(t, group_modes)?),
            PenaltyKind::LowRank {
                row_modes,
                slice_modes,
            } => lowrank::evaluate(t, row_modes, slice_modes),
            PenaltyKind::PiecewiseConstancy(form) => piecewise::evaluate(t, form),
            PenaltyKind::SquaredFrobenius => Ok(t.norm_sq()),
        }
    }

    /// False when `t` lies outside the penalty's domain, where it is `+inf`
    /// (only the nonnegative l1 style has a restricted domain).
    pub fn in_domain(&self, t: &Tensor) -> bool {
        match &self.kind {
            PenaltyKind::Sparsity {
                style: ThresholdStyle::Nonnegative,
                ..
            } => t.data().iter().all(|&v| v >= 0.0),
            _ => true,
        }
    }

    /// Builds the prox of `eta * lambda * p` for tensors of shape `dims`.
    pub fn prepare(&self, dims: &[usize], eta: f64) -> Result<Box<dyn ProxOperator>> {
        self.validate_for(dims)?;
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(invalid(format!("step size must be positive, got {eta}")));
        }
        let w = eta * self.lambda;
        Ok(match &self.kind {
            PenaltyKind::Smoothness { modes } => {
                if modes.len() != 1 {
                    return Err(PenaltyError::NoProx(
                        "multi-mode smoothness must be split into single-mode terms first".into(),
                    ));
                }
                Box::new(smoothness::SmoothProx::new(dims, modes[0], w))
            }
            PenaltyKind::Sparsity { group_modes, style } => {
                if group_modes.is_empty() {
                    Box::new(sparsity::ElementwiseProx::new(w, *style))
                } else {
                    Box::new(sparsity::GroupProx::new(dims, group_modes, w)?)
                }
            }
            PenaltyKind::LowRank {
                row_modes,
                slice_modes,
            } => Box::new(lowrank::SvtProx::new(dims, row_modes, slice_modes, w)?),
            PenaltyKind::PiecewiseConstancy(PiecewiseForm::Chain {
                chain_mode,
                slice_modes,
            }) => piecewise::chain_prox(dims, *chain_mode, slice_modes, w)?,
            PenaltyKind::PiecewiseConstancy(PiecewiseForm::Graph { .. }) => {
                return Err(PenaltyError::NoProx(
                    "no prox available for graph TV (rook/queen neighborhoods); use the chain form"
                        .into(),
                ))
            }
            PenaltyKind::SquaredFrobenius => Box::new(frobenius::FrobProx::new(w)),
        })
    }

    /// One-shot `prox_{eta lambda p}(t)`.
    pub fn prox(&self, t: &Tensor, eta: f64) -> Result<Tensor> {
        let mut op = self.prepare(t.dims(), eta)?;
        let mut out = t.clone();
        op.apply(&mut out)?;
        Ok(out)
    }
}

fn invalid(msg: impl Into<String>) -> PenaltyError {
    PenaltyError::Invalid(msg.into())
}

fn check_list(what: &str, modes: &[usize], order: usize) -> Result<()> {
    for (k, &m) in modes.iter().enumerate() {
        if m == 0 || m > order {
            return Err(invalid(format!(
                "{what}: mode {m} out of range for an order-{order} tensor"
            )));
        }
        if modes[..k].contains(&m) {
            return Err(invalid(format!("{what}: mode {m} listed twice")));
        }
    }
    Ok(())
}

fn check_disjoint(a_name: &str, a: &[usize], b_name: &str, b: &[usize]) -> Result<()> {
    if let Some(m) = a.iter().find(|m| b.contains(m)) {
        return Err(invalid(format!(
            "{a_name} and {b_name} must be disjoint, mode {m} is in both"
        )));
    }
    Ok(())
}

/// `leading ++ (ascending complement) ++ trailing`.
pub(crate) fn mode_layout(order: usize, leading: &[usize], trailing: &[usize]) -> Vec<usize> {
    let mut out = leading.to_vec();
    out.extend((1..=order).filter(|m| !leading.contains(m) && !trailing.contains(m)));
    out.extend_from_slice(trailing);
    out
}

/// Storage offsets arranged so that each work item (slice, chain, unfolding)
/// is a contiguous chunk of `chunk` entries.
#[derive(Debug, Clone)]
pub(crate) struct Grouping {
    offs: Vec<usize>,
    chunk: usize,
}

impl Grouping {
    pub(crate) fn new(dims: &[usize], mode_order: &[usize], chunk: usize) -> Result<Self> {
        let offs = permuted_offsets(dims, mode_order)?;
        debug_assert!(chunk > 0 && offs.len() % chunk == 0);
        Ok(Self { offs, chunk })
    }

    pub(crate) fn chunk(&self) -> usize {
        self.chunk
    }

    pub(crate) fn gather(&self, x: &[f64]) -> Vec<f64> {
        self.offs.iter().map(|&o| x[o]).collect()
    }

    pub(crate) fn scatter(&self, buf: &[f64], x: &mut [f64]) {
        for (&o, &v) in self.offs.iter().zip(buf) {
            x[o] = v;
        }
    }
}

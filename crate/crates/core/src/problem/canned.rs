//! Ready-made problems. Components are always listed background first.

use super::{ComponentSpec, ProblemError, ProblemSpec, Violation};
use crate::admm::AdmmOptions;
use crate::penalty::{Boundary, PenaltyTerm};
use crate::tensor::Tensor;

const DEFAULT_ETA: f64 = 0.01;

fn require_order3(data: &Tensor) -> Result<(), ProblemError> {
    if data.order() == 3 {
        Ok(())
    } else {
        Err(ProblemError::Invalid(vec![Violation {
            path: "data".into(),
            message: format!("expected an order-3 tensor, got order {}", data.order()),
        }]))
    }
}

fn spec(data: Tensor, components: Vec<ComponentSpec>) -> ProblemSpec {
    ProblemSpec {
        data,
        components,
        ridge_eps: 0.0,
        options: AdmmOptions {
            eta: DEFAULT_ETA,
            ..AdmmOptions::default()
        },
    }
}

fn spatial_smoothness(l_mode2: f64, l_mode3: f64) -> Vec<PenaltyTerm> {
    vec![
        PenaltyTerm::smoothness(2, 1, Boundary::Plain, l_mode2),
        PenaltyTerm::smoothness(3, 1, Boundary::Plain, l_mode3),
    ]
}

/// Smooth background plus a crack that is sparse and changes smoothly
/// over time (mode 1).
pub fn crack_problem(data: Tensor, l11: f64, l12: f64, l21: f64, l22: f64) -> Result<ProblemSpec, ProblemError> {
    require_order3(&data)?;
    Ok(spec(
        data,
        vec![
            ComponentSpec::new("background", spatial_smoothness(l11, l12)),
            ComponentSpec::new(
                "crack",
                vec![
                    PenaltyTerm::smoothness(1, 2, Boundary::Neumann, l21),
                    PenaltyTerm::l1(l22),
                ],
            ),
        ],
    ))
}

/// Smooth low-rank background, a static low-rank sparse hotspot and a
/// moving sparse hotspot.
pub fn hotspot_problem(
    data: Tensor,
    l11: f64,
    l12: f64,
    l13: f64,
    l21: f64,
    l22: f64,
    l31: f64,
) -> Result<ProblemSpec, ProblemError> {
    require_order3(&data)?;
    let mut bg = spatial_smoothness(l11, l12);
    bg.push(PenaltyTerm::nuclear(vec![1], vec![], l13));
    Ok(spec(
        data,
        vec![
            ComponentSpec::new("background", bg),
            ComponentSpec::new(
                "static_hotspot",
                vec![PenaltyTerm::nuclear(vec![1], vec![], l21), PenaltyTerm::l1(l22)],
            ),
            ComponentSpec::new("moving_hotspot", vec![PenaltyTerm::l1(l31)]),
        ],
    ))
}

/// Smooth background with one weight shared by both spatial modes, a
/// temporally smooth sparse anomaly and a ridge-penalized noise component.
pub fn avc_problem(data: Tensor, l11: f64, l21: f64, l22: f64, l31: f64) -> Result<ProblemSpec, ProblemError> {
    require_order3(&data)?;
    Ok(spec(
        data,
        vec![
            ComponentSpec::new("background", spatial_smoothness(l11, l11)),
            ComponentSpec::new(
                "anomaly",
                vec![PenaltyTerm::smoothness(1, 1, Boundary::Plain, l21), PenaltyTerm::l1(l22)],
            ),
            ComponentSpec::new("noise", vec![PenaltyTerm::squared_frobenius(l31)]),
        ],
    ))
}

/// Smooth-sparse decomposition: the crack problem without the temporal
/// term.
pub fn ssd_config(data: Tensor, l11: f64, l12: f64, l22: f64) -> Result<ProblemSpec, ProblemError> {
    require_order3(&data)?;
    Ok(spec(
        data,
        vec![
            ComponentSpec::new("background", spatial_smoothness(l11, l12)),
            ComponentSpec::new("sparse", vec![PenaltyTerm::l1(l22)]),
        ],
    ))
}

/// Low-rank plus sparse on the mode-1 unfolding.
pub fn rpca_config(data: Tensor, l_low: f64, l_sparse: f64) -> Result<ProblemSpec, ProblemError> {
    require_order3(&data)?;
    Ok(spec(
        data,
        vec![
            ComponentSpec::new("low_rank", vec![PenaltyTerm::nuclear(vec![1], vec![], l_low)]),
            ComponentSpec::new("sparse", vec![PenaltyTerm::l1(l_sparse)]),
        ],
    ))
}

/// `(1, 1 / sqrt(max(rows, cols)))` for the mode-1 unfolding of `dims`.
pub fn rpca_default_lambdas(dims: &[usize]) -> (f64, f64) {
    let rows = dims.first().copied().unwrap_or(1);
    let cols: usize = dims.iter().skip(1).product();
    (1.0, 1.0 / (rows.max(cols) as f64).sqrt())
}

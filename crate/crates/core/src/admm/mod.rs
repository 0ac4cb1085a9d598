//! Consensus ADMM over penalty copies.
//!
//! Every penalty term of every component owns one copy of that component.
//! One iteration is
//!
//! ```text
//! X = prox_{eta f}(Z - U)        separable over copies
//! Z = proj_C(X + U)              per element, P x + q m
//! U = U + X - Z
//! ```
//!
//! where `C` ties the copies of each component together and makes the
//! first copies sum to the data. `Step3Variant::Literal` feeds
//! `X - U` into the projection instead.

mod projector;

pub use projector::{ConsensusProjector, CopyLayout};

use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::penalty::{PenaltyError, PenaltyTerm, ProxOperator};
use crate::tensor::Tensor;

/// Upper bound on the total number of penalty terms in one problem.
pub const MAX_COPIES: usize = 64;

#[derive(Debug, Error)]
pub enum AdmmError {
    #[error("invalid solver input: {0}")]
    Invalid(String),
    #[error("non-finite value at iteration {iteration}: {detail}")]
    Diverged { iteration: usize, detail: String },
    #[error("penalty failure at iteration {iteration}, copy {copy}: {source}")]
    Penalty {
        iteration: usize,
        copy: usize,
        source: PenaltyError,
    },
    #[error(transparent)]
    Setup(#[from] PenaltyError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Step3Variant {
    #[default]
    Standard,
    #[serde(rename = "paper_literal")]
    Literal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdmmOptions {
    pub eta: f64,
    /// Absolute bound on the Frobenius norms of the U and Z changes over
    /// all copies.
    pub stop_tol: f64,
    pub max_iters: usize,
    pub step3_variant: Step3Variant,
    /// Evaluate the objective every iteration (costly with low-rank terms).
    pub record_objective: bool,
}

impl Default for AdmmOptions {
    fn default() -> Self {
        Self {
            eta: 1.0,
            stop_tol: 1e-6,
            max_iters: 5000,
            step3_variant: Step3Variant::Standard,
            record_objective: false,
        }
    }
}

impl AdmmOptions {
    pub fn validate(&self) -> Result<(), String> {
        let mut errs = Vec::new();
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            errs.push(format!("eta must be positive, got {}", self.eta));
        }
        if !(self.stop_tol > 0.0 && self.stop_tol.is_finite()) {
            errs.push(format!("stop_tol must be positive, got {}", self.stop_tol));
        }
        if self.max_iters == 0 {
            errs.push("max_iters must be at least 1".into());
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(errs.join("; "))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    pub u_residual: f64,
    pub z_residual: f64,
    pub objective: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub components: Vec<Tensor>,
    pub iterations: usize,
    pub history: Vec<IterationRecord>,
    pub objective: f64,
    pub converged: bool,
    pub elapsed_secs: f64,
}

impl Solution {
    /// `||sum_i X_i - M||_F / max(||M||_F, 1e-300)`.
    pub fn feasibility_gap(&self, data: &Tensor) -> f64 {
        let mut sum = Tensor::zeros(data.dims());
        for c in &self.components {
            sum = sum.add(c);
        }
        sum.distance(data) / data.frobenius_norm().max(1e-300)
    }

    pub fn write_diagnostics_csv<W: Write>(&self, w: W) -> csv::Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["iteration", "u_residual", "z_residual", "objective"])?;
        for r in &self.history {
            out.write_record([
                r.iteration.to_string(),
                format!("{:e}", r.u_residual),
                format!("{:e}", r.z_residual),
                r.objective.map(|o| format!("{o:e}")).unwrap_or_default(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Starting copies for `Z` and `U`, both in copy order. The default start
/// is all zeros.
#[derive(Debug, Clone)]
pub struct InitState {
    pub z: Vec<Tensor>,
    pub u: Vec<Tensor>,
}

/// `sum_i sum_j lambda_ij p_ij(X_i)`.
pub fn objective(terms: &[Vec<PenaltyTerm>], components: &[Tensor]) -> Result<f64, PenaltyError> {
    if terms.len() != components.len() {
        return Err(PenaltyError::Invalid(format!(
            "{} term lists for {} components",
            terms.len(),
            components.len()
        )));
    }
    let mut total = 0.0;
    for (ts, x) in terms.iter().zip(components) {
        for t in ts {
            if t.lambda != 0.0 {
                total += t.lambda * t.evaluate(x)?;
            }
        }
    }
    Ok(total)
}

pub fn solve(data: &Tensor, terms: &[Vec<PenaltyTerm>], opts: &AdmmOptions) -> Result<Solution, AdmmError> {
    solve_with_init(data, terms, opts, None)
}

pub fn solve_with_init(
    data: &Tensor,
    terms: &[Vec<PenaltyTerm>],
    opts: &AdmmOptions,
    init: Option<&InitState>,
) -> Result<Solution, AdmmError> {
    let started = Instant::now();
    opts.validate().map_err(AdmmError::Invalid)?;
    let counts: Vec<usize> = terms.iter().map(Vec::len).collect();
    let layout = CopyLayout::new(&counts)?;
    let proj = ConsensusProjector::build(&layout);
    let n = layout.total();
    if n > MAX_COPIES {
        return Err(AdmmError::Invalid(format!(
            "{n} penalty copies exceed the supported {MAX_COPIES}"
        )));
    }
    let dims = data.dims().to_vec();

    let mut ops: Vec<Box<dyn ProxOperator>> = Vec::with_capacity(n);
    for ts in terms {
        for t in ts {
            ops.push(t.prepare(&dims, opts.eta)?);
        }
    }

    let (mut z, mut u) = match init {
        Some(s) => {
            if s.z.len() != n || s.u.len() != n {
                return Err(AdmmError::Invalid(format!(
                    "initial state has {} / {} copies, layout needs {n}",
                    s.z.len(),
                    s.u.len()
                )));
            }
            for t in s.z.iter().chain(&s.u) {
                if t.dims() != dims.as_slice() {
                    return Err(AdmmError::Invalid("initial copy has the wrong shape".into()));
                }
            }
            (s.z.clone(), s.u.clone())
        }
        None => (vec![Tensor::zeros(&dims); n], vec![Tensor::zeros(&dims); n]),
    };
    let mut x: Vec<Tensor> = vec![Tensor::zeros(&dims); n];
    let numel = data.len();
    let mut stacked = vec![0.0; numel * n];
    let mut history = Vec::new();
    let mut converged = false;
    let mut iterations = 0;

    for it in 1..=opts.max_iters {
        iterations = it;
        // X step
        for k in 0..n {
            let (xk, zk, uk) = (&mut x[k], &z[k], &u[k]);
            xk.data_mut()
                .iter_mut()
                .zip(zk.data().iter().zip(uk.data()))
                .for_each(|(x, (z, u))| *x = z - u);
        }
        x.par_iter_mut()
            .zip(ops.par_iter_mut())
            .enumerate()
            .try_for_each(|(copy, (xk, op))| {
                op.apply(xk).map_err(|source| AdmmError::Penalty {
                    iteration: it,
                    copy: copy + 1,
                    source,
                })
            })?;

        // Z step, element-major so each element's copy vector is contiguous
        let sign = match opts.step3_variant {
            Step3Variant::Standard => 1.0,
            Step3Variant::Literal => -1.0,
        };
        let md = data.data();
        {
            let (xs, us) = (&x, &u);
            stacked.par_chunks_mut(n).enumerate().for_each(|(e, out)| {
                let mut v = [0.0f64; MAX_COPIES];
                let v = &mut v[..n];
                for k in 0..n {
                    v[k] = xs[k].data()[e] + sign * us[k].data()[e];
                }
                proj.project_into(v, md[e], out);
            });
        }
        let mut z_res = 0.0;
        let mut u_res = 0.0;
        for k in 0..n {
            let zk = z[k].data_mut();
            let xk = x[k].data();
            let uk = u[k].data_mut();
            for e in 0..numel {
                let zn = stacked[e * n + k];
                let dz = zn - zk[e];
                z_res += dz * dz;
                zk[e] = zn;
                let du = xk[e] - zn;
                u_res += du * du;
                uk[e] += du;
            }
        }
        let (u_res, z_res) = (u_res.sqrt(), z_res.sqrt());
        if !(u_res.is_finite() && z_res.is_finite()) {
            return Err(AdmmError::Diverged {
                iteration: it,
                detail: format!("residuals u = {u_res}, z = {z_res}"),
            });
        }
        let obj = if opts.record_objective {
            let comps = leaders(&layout, &z);
            Some(objective(terms, &comps).map_err(|source| AdmmError::Penalty {
                iteration: it,
                copy: 0,
                source,
            })?)
        } else {
            None
        };
        history.push(IterationRecord {
            iteration: it,
            u_residual: u_res,
            z_residual: z_res,
            objective: obj,
        });
        if u_res < opts.stop_tol && z_res < opts.stop_tol {
            converged = true;
            break;
        }
    }

    let components = leaders(&layout, &z);
    let objective = objective(terms, &components)?;
    Ok(Solution {
        components,
        iterations,
        history,
        objective,
        converged,
        elapsed_secs: started.elapsed().as_secs_f64(),
    })
}

fn leaders(layout: &CopyLayout, z: &[Tensor]) -> Vec<Tensor> {
    layout.leaders().iter().map(|&k| z[k].clone()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::penalty::Boundary;

    #[test]
    fn zero_data_is_a_fixed_point() {
        let m = Tensor::zeros(&[3, 4, 4]);
        let terms = vec![
            vec![
                PenaltyTerm::smoothness(2, 1, Boundary::Plain, 1.0),
                PenaltyTerm::smoothness(3, 1, Boundary::Plain, 1.0),
            ],
            vec![PenaltyTerm::l1(0.1)],
        ];
        let s = solve(&m, &terms, &AdmmOptions::default()).unwrap();
        assert!(s.converged);
        assert!(s.iterations <= 2);
        assert!(s.components.iter().all(|c| c.data().iter().all(|&v| v == 0.0)));
    }

    #[test]
    fn single_component_returns_data() {
        let m = Tensor::from_fn(&[3, 2], |i| (i[0] * 2 + i[1]) as f64).unwrap();
        let terms = vec![vec![PenaltyTerm::l1(1.0)]];
        let s = solve(&m, &terms, &AdmmOptions::default()).unwrap();
        assert!(s.components[0].distance(&m) < 1e-12);
    }

    #[test]
    fn max_iters_cap_reports_not_converged() {
        let m = Tensor::from_fn(&[4, 5], |i| ((i[0] * 3 + i[1]) % 4) as f64).unwrap();
        let terms = vec![
            vec![PenaltyTerm::smoothness(1, 1, Boundary::Plain, 1.0)],
            vec![PenaltyTerm::l1(0.5)],
        ];
        let opts = AdmmOptions {
            max_iters: 1,
            ..Default::default()
        };
        let s = solve(&m, &terms, &opts).unwrap();
        assert!(!s.converged);
        assert_eq!(s.iterations, 1);
        assert!(s.feasibility_gap(&m) < 1e-12);
    }

    #[test]
    fn diagnostics_csv_has_one_row_per_iteration() {
        let m = Tensor::from_fn(&[4, 5], |i| ((i[0] * 3 + i[1]) % 4) as f64).unwrap();
        let terms = vec![
            vec![PenaltyTerm::smoothness(1, 1, Boundary::Plain, 1.0)],
            vec![PenaltyTerm::l1(0.5)],
        ];
        let opts = AdmmOptions {
            max_iters: 7,
            record_objective: true,
            ..Default::default()
        };
        let s = solve(&m, &terms, &opts).unwrap();
        let mut buf = Vec::new();
        s.write_diagnostics_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 8);
        assert!(text.starts_with("iteration,u_residual,z_residual,objective"));
    }

    #[test]
    fn bad_options_rejected() {
        let m = Tensor::zeros(&[2]);
        let terms = vec![vec![PenaltyTerm::l1(1.0)]];
        for opts in [
            AdmmOptions { eta: 0.0, ..Default::default() },
            AdmmOptions { stop_tol: -1.0, ..Default::default() },
            AdmmOptions { max_iters: 0, ..Default::default() },
        ] {
            assert!(matches!(solve(&m, &terms, &opts), Err(AdmmError::Invalid(_))));
        }
        assert!(solve(&m, &[], &AdmmOptions::default()).is_err());
    }
}

//! Declarative decomposition problems: data, components with penalty
//! terms, ridge weight and solver options.

mod canned;
mod config;

pub use canned::{avc_problem, crack_problem, hotspot_problem, rpca_config, rpca_default_lambdas, ssd_config};
pub use config::{parse_config, ConfigError, DataSection, ProblemConfig, CONFIG_VERSION};

use std::fmt;

use thiserror::Error;

use crate::admm::{self, AdmmError, AdmmOptions, CopyLayout, InitState, Solution, MAX_COPIES};
use crate::penalty::{PenaltyError, PenaltyTerm};
use crate::tensor::Tensor;

#[derive(Debug, Clone, PartialEq)]
pub struct ComponentSpec {
    pub name: String,
    pub terms: Vec<PenaltyTerm>,
}

impl ComponentSpec {
    pub fn new(name: impl Into<String>, terms: Vec<PenaltyTerm>) -> Self {
        Self {
            name: name.into(),
            terms,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    pub data: Tensor,
    pub components: Vec<ComponentSpec>,
    /// When positive, every component gets a squared-Frobenius term of
    /// this weight.
    pub ridge_eps: f64,
    pub options: AdmmOptions,
}

/// One validation failure, tagged with where it occurred.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub path: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.path.is_empty() {
            write!(f, "{}", self.message)
        } else {
            write!(f, "{}: {}", self.path, self.message)
        }
    }
}

#[derive(Debug, Error)]
pub enum ProblemError {
    #[error("problem is invalid:\n{}", format_violations(.0))]
    Invalid(Vec<Violation>),
    #[error(transparent)]
    Solver(#[from] AdmmError),
    #[error(transparent)]
    Penalty(#[from] PenaltyError),
}

fn format_violations(v: &[Violation]) -> String {
    v.iter().map(|x| format!("  - {x}")).collect::<Vec<_>>().join("\n")
}

fn term_path(ci: usize, name: &str, ti: usize, kind: &str) -> String {
    format!("components[{ci}] ({name}).terms[{ti}] ({kind})")
}

/// Checks `spec` and returns it normalized: multi-mode smoothness terms
/// split per mode and the ridge folded into explicit terms (with
/// `ridge_eps` reset to 0). Normalizing twice changes nothing.
pub fn validate(spec: &ProblemSpec) -> Result<Problem, Vec<Violation>> {
    let mut v = Vec::new();
    let dims = spec.data.dims();
    let push = |v: &mut Vec<Violation>, path: String, message: String| v.push(Violation { path, message });

    if let Err(e) = spec.options.validate() {
        push(&mut v, "admm".into(), e);
    }
    if !(spec.ridge_eps >= 0.0 && spec.ridge_eps.is_finite()) {
        push(&mut v, "ridge_eps".into(), format!("must be finite and nonnegative, got {}", spec.ridge_eps));
    }
    if spec.components.is_empty() {
        push(&mut v, "components".into(), "problem has no components".into());
    }
    if spec.data.data().iter().any(|x| !x.is_finite()) {
        push(&mut v, "data".into(), "data tensor contains non-finite values".into());
    }

    let ridge = spec.ridge_eps > 0.0 && spec.ridge_eps.is_finite();
    let mut components = Vec::with_capacity(spec.components.len());
    let mut any_positive = false;
    for (ci, c) in spec.components.iter().enumerate() {
        let mut terms = Vec::new();
        for (ti, t) in c.terms.iter().enumerate() {
            let path = term_path(ci, &c.name, ti, t.kind_name());
            if let Err(e) = t.validate_for(dims) {
                push(&mut v, path, e.to_string());
                continue;
            }
            if !t.prox_capable() {
                push(
                    &mut v,
                    path,
                    "no prox available for graph TV (rook/queen neighborhoods); declare the chain form instead".into(),
                );
                continue;
            }
            any_positive |= t.lambda > 0.0;
            terms.extend(t.split_modes());
        }
        if ridge {
            terms.push(PenaltyTerm::squared_frobenius(spec.ridge_eps));
            any_positive = true;
        }
        if terms.is_empty() && c.terms.is_empty() {
            push(&mut v, format!("components[{ci}] ({})", c.name), "component has no penalty".into());
        }
        components.push(ComponentSpec {
            name: c.name.clone(),
            terms,
        });
    }
    if !spec.components.is_empty() && !any_positive && v.is_empty() {
        push(&mut v, "components".into(), "at least one lambda must be positive".into());
    }
    let copies: usize = components.iter().map(|c| c.terms.len()).sum();
    if copies > MAX_COPIES {
        push(&mut v, "components".into(), format!("{copies} penalty terms exceed the supported {MAX_COPIES}"));
    }
    if !v.is_empty() {
        return Err(v);
    }
    Ok(Problem {
        spec: ProblemSpec {
            data: spec.data.clone(),
            components,
            ridge_eps: 0.0,
            options: spec.options.clone(),
        },
    })
}

/// A validated, normalized problem.
#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    spec: ProblemSpec,
}

impl Problem {
    pub fn spec(&self) -> &ProblemSpec {
        &self.spec
    }

    pub fn into_spec(self) -> ProblemSpec {
        self.spec
    }

    pub fn data(&self) -> &Tensor {
        &self.spec.data
    }

    pub fn options(&self) -> &AdmmOptions {
        &self.spec.options
    }

    pub fn options_mut(&mut self) -> &mut AdmmOptions {
        &mut self.spec.options
    }

    pub fn component_names(&self) -> Vec<&str> {
        self.spec.components.iter().map(|c| c.name.as_str()).collect()
    }

    pub fn term_lists(&self) -> Vec<Vec<PenaltyTerm>> {
        self.spec.components.iter().map(|c| c.terms.clone()).collect()
    }

    pub fn layout(&self) -> CopyLayout {
        let counts: Vec<usize> = self.spec.components.iter().map(|c| c.terms.len()).collect();
        CopyLayout::new(&counts).expect("validated problems have terms on every component")
    }

    pub fn objective(&self, components: &[Tensor]) -> Result<f64, PenaltyError> {
        admm::objective(&self.term_lists(), components)
    }

    pub fn solve(&self) -> Result<Solution, AdmmError> {
        admm::solve(&self.spec.data, &self.term_lists(), &self.spec.options)
    }

    pub fn solve_with_init(&self, init: &InitState) -> Result<Solution, AdmmError> {
        admm::solve_with_init(&self.spec.data, &self.term_lists(), &self.spec.options, Some(init))
    }
}

impl ProblemSpec {
    pub fn validate(&self) -> Result<Problem, ProblemError> {
        validate(self).map_err(ProblemError::Invalid)
    }
}

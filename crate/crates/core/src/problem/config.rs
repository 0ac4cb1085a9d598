//! TOML problem configuration, version 1.
//!
//! ```toml
//! atd_config_version = 1
//! ridge_eps = 0.0
//!
//! [data]
//! path = "scene/m.atd"
//!
//! [admm]
//! eta = 0.01
//! stop_tol = 1e-6
//! max_iters = 5000
//! step3_variant = "standard"
//!
//! [[components]]
//! name = "background"
//!
//! [[components.terms]]
//! kind = "smoothness"
//! modes = [2]
//! lambda = 1.0
//! options = { order = 1, boundary = "plain" }
//! ```
//!
//! Term options per kind:
//!
//! * `smoothness`: `order` (1 or 2, default 1) and `boundary` (`plain` or
//!   `neumann`), each a scalar or one entry per listed mode.
//! * `sparsity`: `modes` are the group modes (empty = elementwise);
//!   `style` is `signed` or `nonnegative`.
//! * `low_rank`: `modes` are the row modes; `slice_modes` (default empty).
//! * `piecewise_constancy`: `form` is `chain` (default, `modes = [chain]`)
//!   or `graph` (`modes` = sub-tensor modes, plus `neighborhood`);
//!   `slice_modes` for both.
//! * `squared_frobenius`: no modes, no options.

use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use toml::{Table, Value};

use super::{ComponentSpec, ProblemSpec};
use crate::admm::AdmmOptions;
use crate::penalty::{
    Boundary, Neighborhood, PenaltyKind, PenaltyTerm, PiecewiseForm, SmoothMode, ThresholdStyle,
};
use crate::tensor::Tensor;

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

impl ConfigError {
    fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            path: path.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.path.is_empty() {
            write!(f, "{}", self.message)
        } else {
            write!(f, "{}: {}", self.path, self.message)
        }
    }
}

impl std::error::Error for ConfigError {}

/// Where the data tensor comes from. `path` is resolved relative to the
/// config file; a command-line input overrides it.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    /// Expected dimensions, checked against the loaded tensor.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dims: Option<Vec<usize>>,
}

/// A parsed config: everything of a [`ProblemSpec`] except the data.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemConfig {
    pub data: DataSection,
    pub components: Vec<ComponentSpec>,
    pub ridge_eps: f64,
    pub admm: AdmmOptions,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    atd_config_version: i64,
    #[serde(default)]
    ridge_eps: f64,
    #[serde(default)]
    data: DataSection,
    #[serde(default)]
    admm: AdmmOptions,
    #[serde(default)]
    components: Vec<RawComponent>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawComponent {
    name: String,
    #[serde(default)]
    terms: Vec<RawTerm>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTerm {
    kind: String,
    #[serde(default)]
    modes: Vec<i64>,
    lambda: f64,
    #[serde(default, skip_serializing_if = "Table::is_empty")]
    options: Table,
}

pub fn parse_config(text: &str) -> Result<ProblemConfig, ConfigError> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| ConfigError::new("", e.message().to_string()))?;
    if raw.atd_config_version != CONFIG_VERSION as i64 {
        return Err(ConfigError::new(
            "atd_config_version",
            format!("unsupported version {} (expected {CONFIG_VERSION})", raw.atd_config_version),
        ));
    }
    let mut components = Vec::with_capacity(raw.components.len());
    for (ci, c) in raw.components.into_iter().enumerate() {
        let mut terms = Vec::with_capacity(c.terms.len());
        for (ti, t) in c.terms.into_iter().enumerate() {
            let path = format!("components[{ci}].terms[{ti}]");
            terms.push(decode_term(t, &path)?);
        }
        components.push(ComponentSpec { name: c.name, terms });
    }
    Ok(ProblemConfig {
        data: raw.data,
        components,
        ridge_eps: raw.ridge_eps,
        admm: raw.admm,
    })
}

impl ProblemConfig {
    pub fn from_spec(spec: &ProblemSpec) -> Self {
        Self {
            data: DataSection {
                path: None,
                dims: Some(spec.data.dims().to_vec()),
            },
            components: spec.components.clone(),
            ridge_eps: spec.ridge_eps,
            admm: spec.options.clone(),
        }
    }

    pub fn into_spec(self, data: Tensor) -> ProblemSpec {
        ProblemSpec {
            data,
            components: self.components,
            ridge_eps: self.ridge_eps,
            options: self.admm,
        }
    }

    /// Compares `dims` with the declared ones, if any.
    pub fn check_dims(&self, dims: &[usize]) -> Result<(), ConfigError> {
        match &self.data.dims {
            Some(d) if d != dims => Err(ConfigError::new(
                "data.dims",
                format!("config declares dims {d:?} but the input tensor has {dims:?}"),
            )),
            _ => Ok(()),
        }
    }

    pub fn to_toml(&self) -> String {
        let raw = RawConfig {
            atd_config_version: CONFIG_VERSION as i64,
            ridge_eps: self.ridge_eps,
            data: self.data.clone(),
            admm: self.admm.clone(),
            components: self
                .components
                .iter()
                .map(|c| RawComponent {
                    name: c.name.clone(),
                    terms: c.terms.iter().map(encode_term).collect(),
                })
                .collect(),
        };
        toml::to_string(&raw).expect("config values are all representable in TOML")
    }
}

fn modes_value(m: &[usize]) -> Value {
    Value::Array(m.iter().map(|&x| Value::Integer(x as i64)).collect())
}

fn encode_term(t: &PenaltyTerm) -> RawTerm {
    let mut options = Table::new();
    let (kind, modes) = match &t.kind {
        PenaltyKind::Smoothness { modes } => {
            let orders: Vec<Value> = modes.iter().map(|m| Value::Integer(m.order as i64)).collect();
            let bounds: Vec<Value> = modes.iter().map(|m| Value::String(boundary_name(m.boundary).into())).collect();
            options.insert("order".into(), collapse(orders));
            options.insert("boundary".into(), collapse(bounds));
            ("smoothness", modes.iter().map(|m| m.mode).collect())
        }
        PenaltyKind::Sparsity { group_modes, style } => {
            let s = match style {
                ThresholdStyle::Signed => "signed",
                ThresholdStyle::Nonnegative => "nonnegative",
            };
            options.insert("style".into(), Value::String(s.into()));
            ("sparsity", group_modes.clone())
        }
        PenaltyKind::LowRank { row_modes, slice_modes } => {
            if !slice_modes.is_empty() {
                options.insert("slice_modes".into(), modes_value(slice_modes));
            }
            ("low_rank", row_modes.clone())
        }
        PenaltyKind::PiecewiseConstancy(PiecewiseForm::Chain { chain_mode, slice_modes }) => {
            options.insert("form".into(), Value::String("chain".into()));
            if !slice_modes.is_empty() {
                options.insert("slice_modes".into(), modes_value(slice_modes));
            }
            ("piecewise_constancy", vec![*chain_mode])
        }
        PenaltyKind::PiecewiseConstancy(PiecewiseForm::Graph {
            sub_modes,
            slice_modes,
            neighborhood,
        }) => {
            options.insert("form".into(), Value::String("graph".into()));
            let nb = match neighborhood {
                Neighborhood::Rook => "rook",
                Neighborhood::Queen => "queen",
            };
            options.insert("neighborhood".into(), Value::String(nb.into()));
            if !slice_modes.is_empty() {
                options.insert("slice_modes".into(), modes_value(slice_modes));
            }
            ("piecewise_constancy", sub_modes.clone())
        }
        PenaltyKind::SquaredFrobenius => ("squared_frobenius", Vec::new()),
    };
    RawTerm {
        kind: kind.into(),
        modes: modes.into_iter().map(|m| m as i64).collect(),
        lambda: t.lambda,
        options,
    }
}

/// One value stands for all modes when they agree.
fn collapse(v: Vec<Value>) -> Value {
    if !v.is_empty() && v.iter().all(|x| x == &v[0]) {
        v[0].clone()
    } else {
        Value::Array(v)
    }
}

fn boundary_name(b: Boundary) -> &'static str {
    match b {
        Boundary::Plain => "plain",
        Boundary::Neumann => "neumann",
    }
}

struct Opts<'a> {
    table: Table,
    path: &'a str,
}

impl<'a> Opts<'a> {
    fn err(&self, key: &str, msg: impl Into<String>) -> ConfigError {
        ConfigError::new(format!("{}.options.{key}", self.path), msg)
    }

    fn take(&mut self, key: &str) -> Option<Value> {
        self.table.remove(key)
    }

    fn take_str(&mut self, key: &str, allowed: &[&str]) -> Result<Option<String>, ConfigError> {
        match self.take(key) {
            None => Ok(None),
            Some(Value::String(s)) if allowed.contains(&s.as_str()) => Ok(Some(s)),
            Some(v) => Err(self.err(key, format!("expected one of {allowed:?}, got {v}"))),
        }
    }

    fn take_modes(&mut self, key: &str) -> Result<Vec<usize>, ConfigError> {
        match self.take(key) {
            None => Ok(Vec::new()),
            Some(Value::Array(a)) => a
                .iter()
                .map(|v| match v {
                    Value::Integer(i) if *i >= 1 => Ok(*i as usize),
                    _ => Err(self.err(key, format!("mode must be a positive integer, got {v}"))),
                })
                .collect(),
            Some(v) => Err(self.err(key, format!("expected a list of modes, got {v}"))),
        }
    }

    /// A scalar, or one entry per mode.
    fn take_per_mode(&mut self, key: &str, n: usize) -> Result<Option<Vec<Value>>, ConfigError> {
        match self.take(key) {
            None => Ok(None),
            Some(Value::Array(a)) => {
                if a.len() != n {
                    Err(self.err(key, format!("{} entries for {n} modes", a.len())))
                } else {
                    Ok(Some(a))
                }
            }
            Some(v) => Ok(Some(vec![v; n])),
        }
    }

    fn finish(self) -> Result<(), ConfigError> {
        match self.table.keys().next() {
            Some(k) => Err(self.err(k, "unknown option for this kind")),
            None => Ok(()),
        }
    }
}

fn decode_term(t: RawTerm, path: &str) -> Result<PenaltyTerm, ConfigError> {
    let mut modes = Vec::with_capacity(t.modes.len());
    for &m in &t.modes {
        if m < 1 {
            return Err(ConfigError::new(format!("{path}.modes"), format!("modes are 1-based, got {m}")));
        }
        modes.push(m as usize);
    }
    let mut o = Opts { table: t.options, path };
    let kind = match t.kind.as_str() {
        "smoothness" => {
            if modes.is_empty() {
                return Err(ConfigError::new(format!("{path}.modes"), "smoothness needs at least one mode"));
            }
            let n = modes.len();
            let orders = match o.take_per_mode("order", n)? {
                None => vec![1u8; n],
                Some(v) => v
                    .iter()
                    .map(|x| match x {
                        Value::Integer(1) => Ok(1u8),
                        Value::Integer(2) => Ok(2u8),
                        _ => Err(o.err("order", format!("order must be 1 or 2, got {x}"))),
                    })
                    .collect::<Result<_, _>>()?,
            };
            let bounds = match o.take_per_mode("boundary", n)? {
                None => vec![Boundary::Plain; n],
                Some(v) => v
                    .iter()
                    .map(|x| match x.as_str() {
                        Some("plain") => Ok(Boundary::Plain),
                        Some("neumann") => Ok(Boundary::Neumann),
                        _ => Err(o.err("boundary", format!("boundary must be \"plain\" or \"neumann\", got {x}"))),
                    })
                    .collect::<Result<_, _>>()?,
            };
            PenaltyKind::Smoothness {
                modes: modes
                    .iter()
                    .zip(orders.iter().zip(&bounds))
                    .map(|(&mode, (&order, &boundary))| SmoothMode { mode, order, boundary })
                    .collect(),
            }
        }
        "sparsity" => {
            let style = match o.take_str("style", &["signed", "nonnegative"])?.as_deref() {
                Some("nonnegative") => ThresholdStyle::Nonnegative,
                _ => ThresholdStyle::Signed,
            };
            PenaltyKind::Sparsity {
                group_modes: modes,
                style,
            }
        }
        "low_rank" => PenaltyKind::LowRank {
            row_modes: modes,
            slice_modes: o.take_modes("slice_modes")?,
        },
        "piecewise_constancy" => {
            let form = o.take_str("form", &["chain", "graph"])?;
            let slice_modes = o.take_modes("slice_modes")?;
            if form.as_deref() == Some("graph") {
                let neighborhood = match o.take_str("neighborhood", &["rook", "queen"])?.as_deref() {
                    Some("queen") => Neighborhood::Queen,
                    _ => Neighborhood::Rook,
                };
                PenaltyKind::PiecewiseConstancy(PiecewiseForm::Graph {
                    sub_modes: modes,
                    slice_modes,
                    neighborhood,
                })
            } else {
                if modes.len() != 1 {
                    return Err(ConfigError::new(
                        format!("{path}.modes"),
                        format!("chain form takes exactly one chain mode, got {}", modes.len()),
                    ));
                }
                PenaltyKind::PiecewiseConstancy(PiecewiseForm::Chain {
                    chain_mode: modes[0],
                    slice_modes,
                })
            }
        }
        "squared_frobenius" => {
            if !modes.is_empty() {
                return Err(ConfigError::new(format!("{path}.modes"), "squared_frobenius takes no modes"));
            }
            PenaltyKind::SquaredFrobenius
        }
        other => {
            return Err(ConfigError::new(
                format!("{path}.kind"),
                format!(
                    "unknown kind \"{other}\" (expected smoothness, sparsity, low_rank, piecewise_constancy or squared_frobenius)"
                ),
            ))
        }
    };
    o.finish()?;
    Ok(PenaltyTerm { kind, lambda: t.lambda })
}

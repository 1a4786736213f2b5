//! Per-node access latency models.
//!
//! A [`Distribution`] is a scalar law with a sampler and exact CDF/PDF. A
//! [`LatencyModel`] assigns a distribution to each node: i.i.d. across all
//! nodes, fixed per-node values, or one constant node against an i.i.d.
//! background. Latencies are in abstract time units.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::SeededRng;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("invalid model: {0}")]
    Invalid(String),
    #[error("cannot parse model spec {spec:?}: {reason}")]
    Parse { spec: String, reason: String },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FitError {
    #[error("need at least 2 samples, got {0}")]
    TooFew(usize),
    #[error("samples have zero spread")]
    Degenerate,
    #[error("samples must be finite")]
    NonFinite,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Distribution {
    /// U[0, upper].
    Uniform { upper: f64 },
    /// Exponential with `rate`, shifted right by `shift`.
    ShiftedExp { rate: f64, shift: f64 },
    /// Point mass at `value`. Has no density; `pdf` is 0.
    Constant { value: f64 },
}

impl Distribution {
    pub fn uniform(upper: f64) -> Result<Self, ModelError> {
        let d = Distribution::Uniform { upper };
        d.validate()?;
        Ok(d)
    }

    pub fn shifted_exp(rate: f64, shift: f64) -> Result<Self, ModelError> {
        let d = Distribution::ShiftedExp { rate, shift };
        d.validate()?;
        Ok(d)
    }

    pub fn constant(value: f64) -> Result<Self, ModelError> {
        let d = Distribution::Constant { value };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        match *self {
            Distribution::Uniform { upper } if !(upper.is_finite() && upper > 0.0) => {
                Err(ModelError::Invalid(format!("uniform bound must be > 0, got {upper}")))
            }
            Distribution::ShiftedExp { rate, .. } if !(rate.is_finite() && rate > 0.0) => {
                Err(ModelError::Invalid(format!("rate must be > 0, got {rate}")))
            }
            Distribution::ShiftedExp { shift, .. } if !(shift.is_finite() && shift >= 0.0) => {
                Err(ModelError::Invalid(format!("shift must be >= 0, got {shift}")))
            }
            Distribution::Constant { value } if !(value.is_finite() && value >= 0.0) => {
                Err(ModelError::Invalid(format!("constant must be >= 0, got {value}")))
            }
            _ => Ok(()),
        }
    }

    /// Inverse-CDF draw from one unit variate.
    pub fn sample(&self, rng: &mut SeededRng) -> f64 {
        match *self {
            Distribution::Uniform { upper } => upper * rng.next_unit(),
            Distribution::ShiftedExp { rate, shift } => shift - (1.0 - rng.next_unit()).ln() / rate,
            Distribution::Constant { value } => value,
        }
    }

    pub fn cdf(&self, y: f64) -> f64 {
        match *self {
            Distribution::Uniform { upper } => (y / upper).clamp(0.0, 1.0),
            Distribution::ShiftedExp { rate, shift } => {
                if y < shift {
                    0.0
                } else {
                    -(-rate * (y - shift)).exp_m1()
                }
            }
            Distribution::Constant { value } => {
                if y >= value {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    pub fn pdf(&self, y: f64) -> f64 {
        match *self {
            Distribution::Uniform { upper } => {
                if (0.0..=upper).contains(&y) {
                    1.0 / upper
                } else {
                    0.0
                }
            }
            Distribution::ShiftedExp { rate, shift } => {
                if y < shift {
                    0.0
                } else {
                    rate * (-rate * (y - shift)).exp()
                }
            }
            Distribution::Constant { .. } => 0.0,
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            Distribution::Uniform { upper } => upper / 2.0,
            Distribution::ShiftedExp { rate, shift } => shift + 1.0 / rate,
            Distribution::Constant { value } => value,
        }
    }

    /// Smallest point of the support.
    pub fn lower(&self) -> f64 {
        match *self {
            Distribution::Uniform { .. } => 0.0,
            Distribution::ShiftedExp { shift, .. } => shift,
            Distribution::Constant { value } => value,
        }
    }

    /// Point beyond which the remaining mass is negligible (< 1e-17 for the
    /// exponential tail).
    pub fn effective_upper(&self) -> f64 {
        match *self {
            Distribution::Uniform { upper } => upper,
            Distribution::ShiftedExp { rate, shift } => shift + 40.0 / rate,
            Distribution::Constant { value } => value,
        }
    }
}

impl fmt::Display for Distribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Distribution::Uniform { upper } => write!(f, "uniform:T={upper}"),
            Distribution::ShiftedExp { rate, shift } => write!(f, "sexp:lambda={rate},s={shift}"),
            Distribution::Constant { value } => write!(f, "const:v={value}"),
        }
    }
}

/// How latencies are assigned to the `n` nodes of a deployment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LatencyModel {
    Iid(Distribution),
    /// Fixed latency per node, indexed by node id - 1.
    PerNode { values: Vec<f64> },
    /// Node `node` (1-based) always takes `value`; every other node draws
    /// from `background`.
    Adversarial { node: usize, value: f64, background: Distribution },
}

impl LatencyModel {
    pub fn validate(&self, n: usize) -> Result<(), ModelError> {
        match self {
            LatencyModel::Iid(d) => d.validate(),
            LatencyModel::PerNode { values } => {
                if values.len() != n {
                    return Err(ModelError::Invalid(format!(
                        "per-node model lists {} latencies for {n} nodes",
                        values.len()
                    )));
                }
                if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
                    return Err(ModelError::Invalid(format!("per-node latency {v} must be >= 0")));
                }
                Ok(())
            }
            LatencyModel::Adversarial { node, value, background } => {
                if *node == 0 || *node > n {
                    return Err(ModelError::Invalid(format!("adversarial node {node} outside 1..={n}")));
                }
                Distribution::constant(*value)?;
                background.validate()
            }
        }
    }

    /// Distribution of node `id` (1-based).
    pub fn node(&self, id: usize) -> Distribution {
        match self {
            LatencyModel::Iid(d) => *d,
            LatencyModel::PerNode { values } => Distribution::Constant { value: values[id - 1] },
            LatencyModel::Adversarial { node, value, background } => {
                if id == *node {
                    Distribution::Constant { value: *value }
                } else {
                    *background
                }
            }
        }
    }

    pub fn as_iid(&self) -> Option<&Distribution> {
        match self {
            LatencyModel::Iid(d) => Some(d),
            _ => None,
        }
    }

    /// Draw `x_1..x_n` in node order.
    pub fn draw(&self, n: usize, rng: &mut SeededRng) -> Vec<f64> {
        (1..=n).map(|id| self.node(id).sample(rng)).collect()
    }
}

impl From<Distribution> for LatencyModel {
    fn from(d: Distribution) -> Self {
        LatencyModel::Iid(d)
    }
}

impl fmt::Display for LatencyModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LatencyModel::Iid(d) => d.fmt(f),
            LatencyModel::PerNode { values } => {
                f.write_str("pernode:")?;
                for (i, v) in values.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{v}")?;
                }
                Ok(())
            }
            LatencyModel::Adversarial { node, value, background } => {
                write!(f, "adv:node={node},v={value},bg={background}")
            }
        }
    }
}

fn parse_err(spec: &str, reason: impl Into<String>) -> ModelError {
    ModelError::Parse { spec: spec.to_string(), reason: reason.into() }
}

fn parse_num(spec: &str, key: &str, raw: &str) -> Result<f64, ModelError> {
    raw.trim()
        .parse::<f64>()
        .map_err(|_| parse_err(spec, format!("{key}: {raw:?} is not a number")))
}

/// Parse `key=value` pairs, requiring exactly the given keys.
fn parse_pairs(spec: &str, body: &str, keys: &[&str]) -> Result<Vec<f64>, ModelError> {
    let mut out = vec![None; keys.len()];
    for part in body.split(',').filter(|p| !p.trim().is_empty()) {
        let (k, v) = part
            .split_once('=')
            .ok_or_else(|| parse_err(spec, format!("expected key=value, got {part:?}")))?;
        let k = k.trim();
        let idx = keys
            .iter()
            .position(|want| want.eq_ignore_ascii_case(k))
            .ok_or_else(|| parse_err(spec, format!("unknown key {k:?}")))?;
        out[idx] = Some(parse_num(spec, k, v)?);
    }
    out.into_iter()
        .zip(keys)
        .map(|(v, k)| v.ok_or_else(|| parse_err(spec, format!("missing {k}"))))
        .collect()
}

impl FromStr for Distribution {
    type Err = ModelError;

    /// `uniform:T=100`, `sexp:lambda=0.02,s=1`, `const:v=100`.
    fn from_str(spec: &str) -> Result<Self, ModelError> {
        let (family, body) = spec
            .split_once(':')
            .ok_or_else(|| parse_err(spec, "expected family:params"))?;
        let d = match family.trim() {
            "uniform" => Distribution::Uniform { upper: parse_pairs(spec, body, &["T"])?[0] },
            "sexp" => {
                let v = parse_pairs(spec, body, &["lambda", "s"])?;
                Distribution::ShiftedExp { rate: v[0], shift: v[1] }
            }
            "const" => Distribution::Constant { value: parse_pairs(spec, body, &["v"])?[0] },
            other => return Err(parse_err(spec, format!("unknown family {other:?}"))),
        };
        d.validate()?;
        Ok(d)
    }
}

impl FromStr for LatencyModel {
    type Err = ModelError;

    /// Scalar specs as for [`Distribution`], plus `pernode:50,100,50` and
    /// `adv:node=2,v=100,bg=uniform:T=100` (`bg` must come last).
    fn from_str(spec: &str) -> Result<Self, ModelError> {
        let (family, body) = spec
            .split_once(':')
            .ok_or_else(|| parse_err(spec, "expected family:params"))?;
        match family.trim() {
            "pernode" => {
                let values = body
                    .split(',')
                    .map(|v| parse_num(spec, "pernode", v))
                    .collect::<Result<Vec<_>, _>>()?;
                if values.is_empty() {
                    return Err(parse_err(spec, "no latencies given"));
                }
                if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
                    return Err(ModelError::Invalid(format!("per-node latency {v} must be >= 0")));
                }
                Ok(LatencyModel::PerNode { values })
            }
            "adv" => {
                let (head, bg) = body
                    .split_once("bg=")
                    .ok_or_else(|| parse_err(spec, "missing bg=<model>"))?;
                let v = parse_pairs(spec, head, &["node", "v"])?;
                if v[0] < 1.0 || v[0].fract() != 0.0 {
                    return Err(parse_err(spec, "node must be a positive integer"));
                }
                let background: Distribution = bg.parse()?;
                Distribution::constant(v[1])?;
                Ok(LatencyModel::Adversarial { node: v[0] as usize, value: v[1], background })
            }
            _ => Ok(LatencyModel::Iid(spec.parse()?)),
        }
    }
}

/// Fit `Shifted-Exp(rate, shift)` to observed latencies.
///
/// The shift is the sample minimum. The rate is `(N - 1) / sum(x_i - min)`,
/// i.e. one over the mean excess of the `N - 1` samples that did not set the
/// shift, which removes the small-sample bias of the plain moment estimate.
pub fn fit_shifted_exp(samples: &[f64]) -> Result<(f64, f64), FitError> {
    if samples.len() < 2 {
        return Err(FitError::TooFew(samples.len()));
    }
    if samples.iter().any(|x| !x.is_finite()) {
        return Err(FitError::NonFinite);
    }
    let shift = samples.iter().copied().fold(f64::INFINITY, f64::min);
    let excess: f64 = samples.iter().map(|x| x - shift).sum();
    if excess <= 0.0 {
        return Err(FitError::Degenerate);
    }
    Ok(((samples.len() - 1) as f64 / excess, shift))
}

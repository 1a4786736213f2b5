//! The three single-node access strategies as pure functions of the node
//! latencies `x_1..x_n`.
//!
//! * DA: read the target node; latency `x_t`.
//! * AAKL: latencies known up front; read the `k` fastest nodes and decode
//!   unless the target is among them.
//! * AAUL: latencies unknown; start all `n` reads and stop at whichever comes
//!   first, the target's completion or the `k`-th completion of another node.
//!
//! Ties are ordered by lower node id.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::codec::CodeParams;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RequestError {
    #[error("target node {t} is not a data node (1..={k})")]
    Target { t: usize, k: usize },
    #[error("expected {expected} latencies, got {got}")]
    Length { expected: usize, got: usize },
    #[error("latency of node {node} is {value}; must be finite and >= 0")]
    Latency { node: usize, value: f64 },
}

/// A request for the data held by data node `t`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AccessRequest {
    t: usize,
}

impl AccessRequest {
    pub fn new(params: &CodeParams, t: usize) -> Result<Self, RequestError> {
        if t == 0 || t > params.k() {
            return Err(RequestError::Target { t, k: params.k() });
        }
        Ok(Self { t })
    }

    pub fn target(&self) -> usize {
        self.t
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AccessPath {
    Direct,
    Decoded,
}

impl AccessPath {
    pub fn as_str(&self) -> &'static str {
        match self {
            AccessPath::Direct => "direct",
            AccessPath::Decoded => "decoded",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccessOutcome {
    pub time: f64,
    pub path: AccessPath,
    /// 1-based ids of the nodes whose data produced the result, ascending.
    pub nodes_used: Vec<usize>,
}

fn check(latencies: &[f64], params: &CodeParams, t: usize) -> Result<AccessRequest, RequestError> {
    if latencies.len() != params.n() {
        return Err(RequestError::Length { expected: params.n(), got: latencies.len() });
    }
    if let Some((i, &v)) = latencies.iter().enumerate().find(|(_, v)| !(v.is_finite() && **v >= 0.0)) {
        return Err(RequestError::Latency { node: i + 1, value: v });
    }
    AccessRequest::new(params, t)
}

/// Node ids ordered by (latency, id).
fn completion_order(latencies: &[f64]) -> Vec<usize> {
    let mut ids: Vec<usize> = (1..=latencies.len()).collect();
    ids.sort_by(|&a, &b| {
        latencies[a - 1]
            .partial_cmp(&latencies[b - 1])
            .unwrap_or(Ordering::Equal)
            .then(a.cmp(&b))
    });
    ids
}

pub fn run_da(latencies: &[f64], params: &CodeParams, t: usize) -> Result<f64, RequestError> {
    let req = check(latencies, params, t)?;
    Ok(latencies[req.target() - 1])
}

/// Accelerated access with known latencies.
pub fn run_aakl(latencies: &[f64], params: &CodeParams, t: usize) -> Result<AccessOutcome, RequestError> {
    let t = check(latencies, params, t)?.target();
    let mut fastest: Vec<usize> = completion_order(latencies).into_iter().take(params.k()).collect();
    if fastest.contains(&t) {
        return Ok(AccessOutcome { time: latencies[t - 1], path: AccessPath::Direct, nodes_used: vec![t] });
    }
    let time = fastest.iter().map(|&id| latencies[id - 1]).fold(f64::NEG_INFINITY, f64::max);
    fastest.sort_unstable();
    Ok(AccessOutcome { time, path: AccessPath::Decoded, nodes_used: fastest })
}

/// Accelerated access with unknown latencies, replayed as a completion-event
/// sequence.
pub fn run_aaul(latencies: &[f64], params: &CodeParams, t: usize) -> Result<AccessOutcome, RequestError> {
    let t = check(latencies, params, t)?.target();
    let mut finished = Vec::with_capacity(params.k());
    for id in completion_order(latencies) {
        let at = latencies[id - 1];
        if id == t {
            return Ok(AccessOutcome { time: at, path: AccessPath::Direct, nodes_used: vec![t] });
        }
        finished.push(id);
        if finished.len() == params.k() {
            finished.sort_unstable();
            return Ok(AccessOutcome { time: at, path: AccessPath::Decoded, nodes_used: finished });
        }
    }
    unreachable!("node t completes before the loop ends")
}

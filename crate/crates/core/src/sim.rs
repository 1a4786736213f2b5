//! Seeded Monte Carlo comparison of direct and accelerated access.
//!
//! Trial `i` draws everything from its own stream seeded with `seed ^ i`, and
//! trials are folded into the summary in index order. The summary and the
//! per-trial log are therefore identical whether trials run on one thread or
//! many.

use std::io::{self, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::codec::CodeParams;
use crate::latency::{LatencyModel, ModelError};
use crate::rng::SeededRng;
use crate::strategy::{run_aaul, run_da, AccessPath, AccessRequest, RequestError};

/// Trials computed per parallel batch before they are folded in order.
const BATCH: u64 = 8192;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("trials must be at least 1")]
    NoTrials,
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Request(#[from] RequestError),
    #[error("writing trial output: {0}")]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetPolicy {
    Fixed(usize),
    UniformOverDataNodes,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub params: CodeParams,
    pub model: LatencyModel,
    pub trials: u64,
    pub seed: u64,
    pub target_policy: TargetPolicy,
}

impl SimConfig {
    pub fn new(params: CodeParams, model: LatencyModel, trials: u64, seed: u64) -> Self {
        Self { params, model, trials, seed, target_policy: TargetPolicy::UniformOverDataNodes }
    }

    pub fn with_target(mut self, policy: TargetPolicy) -> Self {
        self.target_policy = policy;
        self
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if self.trials == 0 {
            return Err(SimError::NoTrials);
        }
        self.model.validate(self.params.n())?;
        if let TargetPolicy::Fixed(t) = self.target_policy {
            AccessRequest::new(&self.params, t)?;
        }
        Ok(())
    }
}

/// One simulated request. Field names are the trial-log JSON keys.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: u64,
    pub t: usize,
    pub x: Vec<f64>,
    pub y1: f64,
    pub y2: f64,
    pub path: AccessPath,
    pub nodes: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimSummary {
    pub n: usize,
    pub k: usize,
    pub model: String,
    pub trials: u64,
    pub seed: u64,
    pub mean_da: f64,
    pub mean_accel: f64,
    pub reduction_ratio: f64,
    pub sample_std_da: f64,
    pub sample_std_accel: f64,
    pub fraction_direct_path: f64,
    pub trial_log: Option<String>,
}

/// Draw and evaluate trial `index` of `config`.
///
/// Latencies `x_1..x_n` are drawn first, then the target (if random).
pub fn simulate_trial(config: &SimConfig, index: u64) -> TrialRecord {
    let mut rng = SeededRng::for_stream(config.seed, index);
    let n = config.params.n();
    let x = config.model.draw(n, &mut rng);
    let t = match config.target_policy {
        TargetPolicy::Fixed(t) => t,
        TargetPolicy::UniformOverDataNodes => 1 + rng.next_below(config.params.k() as u64) as usize,
    };
    let y1 = run_da(&x, &config.params, t).expect("validated config");
    let out = run_aaul(&x, &config.params, t).expect("validated config");
    assert!(out.time <= y1, "accelerated latency {} exceeds direct {y1} in trial {index}", out.time);
    TrialRecord { trial: index, t, x, y1, y2: out.time, path: out.path, nodes: out.nodes_used }
}

/// Welford running mean and variance.
#[derive(Debug, Default, Clone, Copy)]
struct Moments {
    count: u64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, v: f64) {
        self.count += 1;
        let delta = v - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (v - self.mean);
    }

    fn sample_std(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            (self.m2 / (self.count - 1) as f64).sqrt()
        }
    }
}

/// Run every trial, handing each record to `sink` in trial order.
pub fn run_monte_carlo<F>(config: &SimConfig, exec: Execution, mut sink: F) -> Result<SimSummary, SimError>
where
    F: FnMut(&TrialRecord) -> io::Result<()>,
{
    config.validate()?;
    let (mut da, mut accel) = (Moments::default(), Moments::default());
    let mut direct = 0u64;

    let mut start = 0u64;
    while start < config.trials {
        let end = (start + BATCH).min(config.trials);
        let batch: Vec<TrialRecord> = match exec {
            Execution::Sequential => (start..end).map(|i| simulate_trial(config, i)).collect(),
            Execution::Parallel => (start..end).into_par_iter().map(|i| simulate_trial(config, i)).collect(),
        };
        for rec in &batch {
            da.push(rec.y1);
            accel.push(rec.y2);
            if rec.path == AccessPath::Direct {
                direct += 1;
            }
            sink(rec)?;
        }
        start = end;
    }

    let reduction_ratio = if da.mean > 0.0 { (da.mean - accel.mean) / da.mean } else { 0.0 };
    Ok(SimSummary {
        n: config.params.n(),
        k: config.params.k(),
        model: config.model.to_string(),
        trials: config.trials,
        seed: config.seed,
        mean_da: da.mean,
        mean_accel: accel.mean,
        reduction_ratio,
        sample_std_da: da.sample_std(),
        sample_std_accel: accel.sample_std(),
        fraction_direct_path: direct as f64 / config.trials as f64,
        trial_log: None,
    })
}

pub fn monte_carlo(config: &SimConfig) -> Result<SimSummary, SimError> {
    run_monte_carlo(config, Execution::Parallel, |_| Ok(()))
}

/// Writes the JSON-lines trial log and the `trial,y1,y2,mean_y1,mean_y2` CSV.
pub struct TrialWriter<J: Write, C: Write> {
    jsonl: Option<J>,
    csv: Option<C>,
    sum_y1: f64,
    sum_y2: f64,
    rows: u64,
}

impl<J: Write, C: Write> TrialWriter<J, C> {
    pub fn new(jsonl: Option<J>, mut csv: Option<C>) -> io::Result<Self> {
        if let Some(c) = csv.as_mut() {
            writeln!(c, "trial,y1,y2,mean_y1,mean_y2")?;
        }
        Ok(Self { jsonl, csv, sum_y1: 0.0, sum_y2: 0.0, rows: 0 })
    }

    pub fn write(&mut self, rec: &TrialRecord) -> io::Result<()> {
        if let Some(j) = self.jsonl.as_mut() {
            serde_json::to_writer(&mut *j, rec)?;
            j.write_all(b"\n")?;
        }
        self.rows += 1;
        self.sum_y1 += rec.y1;
        self.sum_y2 += rec.y2;
        if let Some(c) = self.csv.as_mut() {
            let n = self.rows as f64;
            writeln!(c, "{},{},{},{},{}", rec.trial, rec.y1, rec.y2, self.sum_y1 / n, self.sum_y2 / n)?;
        }
        Ok(())
    }

    pub fn finish(mut self) -> io::Result<()> {
        if let Some(j) = self.jsonl.as_mut() {
            j.flush()?;
        }
        if let Some(c) = self.csv.as_mut() {
            c.flush()?;
        }
        Ok(())
    }
}

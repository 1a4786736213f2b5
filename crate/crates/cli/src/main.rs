//! `mdsaccel`: shard files, Monte Carlo runs, closed-form analytics and the
//! loopback node harness behind one binary.
//!
//! Exit status is 0 on success, 1 for bad invocations and 2 for failures
//! while running.

mod manifest;

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use mdsaccel_core::analytics::{analytic_summary, worst_case_shifted_exp, worst_case_sweep, worst_case_uniform};
use mdsaccel_core::shard::Shard;
use mdsaccel_core::sim::{run_monte_carlo, Execution, SimConfig, TargetPolicy, TrialWriter};
use mdsaccel_core::{CodeParams, Distribution, LatencyModel, MdsCodec};
use mdsaccel_net::{fetch_aaul, fetch_da, serve_node, shard_file_name, DelaySource, NodeServerConfig};
use serde::Serialize;
use thiserror::Error;

use crate::manifest::{sha256_hex, Manifest, MANIFEST_NAME};

#[derive(Debug, Error)]
#[error("{0}")]
struct UsageError(String);

fn usage<T>(msg: impl Into<String>) -> anyhow::Result<T> {
    Err(UsageError(msg.into()).into())
}

#[derive(Debug, Parser)]
#[command(name = "mdsaccel", version, about = "MDS-coded single-node access acceleration")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Split a file into k data shards plus n - k parity shards.
    Encode(EncodeArgs),
    /// Rebuild the original file from any k shards.
    Decode(DecodeArgs),
    /// Monte Carlo comparison of direct and accelerated access.
    Simulate(SimulateArgs),
    /// Expected latencies and reduction ratio for i.i.d. node latencies.
    Analytic(AnalyticArgs),
    /// The (3, 2) configuration with the target node pinned at a constant latency.
    WorstCase(WorstCaseArgs),
    /// Serve one shard over TCP with an injected response delay.
    ServeNode(ServeArgs),
    /// Read one node's symbols from running servers.
    Fetch(FetchArgs),
}

#[derive(Debug, Args)]
struct EncodeArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(short, value_parser = clap::value_parser!(u8).range(2..))]
    n: u8,
    #[arg(short, value_parser = clap::value_parser!(u8).range(1..))]
    k: u8,
    /// Symbols (bytes) per node. Derived from the input size when omitted.
    #[arg(short)]
    m: Option<usize>,
    /// Zero-pad the input up to k * m bytes.
    #[arg(long)]
    pad: bool,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Debug, Args)]
struct DecodeArgs {
    /// Directory holding manifest.json and the shard files.
    #[arg(long)]
    dir: PathBuf,
    /// Restrict decoding to these node ids (comma separated).
    #[arg(long, value_delimiter = ',')]
    nodes: Vec<usize>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy)]
enum TargetArg {
    Uniform,
    Fixed(usize),
}

fn parse_target(s: &str) -> Result<TargetArg, String> {
    match s {
        "uniform" => Ok(TargetArg::Uniform),
        _ => s.parse().map(TargetArg::Fixed).map_err(|_| format!("expected a node id or `uniform`, got `{s}`")),
    }
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[arg(short)]
    n: usize,
    #[arg(short)]
    k: usize,
    /// e.g. `uniform:T=100`, `sexp:lambda=0.02,s=1`, `const:v=7`, `pernode:50,100,50`.
    #[arg(long)]
    model: LatencyModel,
    #[arg(long, default_value_t = 10_000)]
    trials: u64,
    #[arg(long, env = "MDSF_SEED", default_value_t = 1)]
    seed: u64,
    /// Target node id, or `uniform` to draw it from the data nodes per trial.
    #[arg(short = 't', long, default_value = "uniform", value_parser = parse_target)]
    target: TargetArg,
    /// JSON-lines trial log.
    #[arg(long)]
    log: Option<PathBuf>,
    /// CSV of per-trial and running-mean latencies.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Also write the summary JSON here.
    #[arg(long)]
    summary: Option<PathBuf>,
    /// Run trials on one thread. Output is identical either way.
    #[arg(long)]
    sequential: bool,
}

#[derive(Debug, Args)]
struct AnalyticArgs {
    #[arg(short)]
    n: usize,
    #[arg(short)]
    k: usize,
    /// `uniform:T=..`, `sexp:lambda=..,s=..` or `const:v=..`.
    #[arg(long)]
    model: Distribution,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Family {
    Uniform,
    Sexp,
}

#[derive(Debug, Args)]
struct WorstCaseArgs {
    #[arg(long, value_enum)]
    family: Family,
    /// Uniform upper bound T (uniform family; the target is pinned at T).
    #[arg(long, alias = "T", default_value_t = 100.0)]
    upper: f64,
    /// Rate(s) of the other nodes (sexp family).
    #[arg(long, value_delimiter = ',', default_value = "0.02")]
    lambda: Vec<f64>,
    /// Shift(s) of the other nodes (sexp family).
    #[arg(long, alias = "s", value_delimiter = ',', default_value = "0")]
    shift: Vec<f64>,
    /// Constant latency(ies) of the target node (sexp family).
    #[arg(long = "vt", alias = "v-t", value_delimiter = ',', default_value = "100")]
    v_t: Vec<f64>,
    /// Emit one row per (lambda, s, v_t) combination.
    #[arg(long)]
    sweep: bool,
}

#[derive(Debug, Args)]
struct ServeArgs {
    #[arg(long)]
    node_id: u8,
    #[arg(long, default_value = "127.0.0.1:0")]
    listen: SocketAddr,
    #[arg(long)]
    shard: PathBuf,
    /// Fixed delay before every reply, in milliseconds.
    #[arg(long, conflicts_with = "delay_model")]
    delay_ms: Option<f64>,
    /// Draw each delay (1 unit = 1 ms) from this latency model.
    #[arg(long)]
    delay_model: Option<LatencyModel>,
    #[arg(long, env = "MDSF_SEED", default_value_t = 1)]
    seed: u64,
    /// Append request log entries as JSON lines.
    #[arg(long)]
    log: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Strategy {
    Da,
    Aaul,
}

#[derive(Debug, Args)]
struct FetchArgs {
    /// Node addresses in node-id order.
    #[arg(long, value_delimiter = ',', required = true, num_args = 0..)]
    endpoints: Vec<SocketAddr>,
    #[arg(long, value_enum, default_value = "aaul")]
    strategy: Strategy,
    #[arg(short)]
    t: usize,
    /// Code parameters and checksums; the fetched bytes are verified against it.
    #[arg(long)]
    manifest: Option<PathBuf>,
    #[arg(short)]
    n: Option<usize>,
    #[arg(short)]
    k: Option<usize>,
    #[arg(short)]
    m: Option<usize>,
    #[arg(long, default_value_t = 5_000)]
    timeout_ms: u64,
    /// Write the fetched symbols here.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.is::<UsageError>() {
                ExitCode::from(1)
            } else {
                ExitCode::from(2)
            }
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Encode(a) => encode(a),
        Command::Decode(a) => decode(a),
        Command::Simulate(a) => simulate(a),
        Command::Analytic(a) => {
            let params = code_params(a.n, a.k, 1)?;
            print_json(&analytic_summary(params.n(), params.k(), a.model)?)
        }
        Command::WorstCase(a) => worst_case(a),
        Command::ServeNode(a) => serve(a),
        Command::Fetch(a) => fetch(a),
    }
}

fn code_params(n: usize, k: usize, m: usize) -> anyhow::Result<CodeParams> {
    CodeParams::new(n, k, m).or_else(|e| usage(e.to_string()))
}

fn print_json<T: Serialize>(value: &T) -> anyhow::Result<()> {
    let mut out = io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

fn encode(a: EncodeArgs) -> anyhow::Result<()> {
    let (n, k) = (a.n as usize, a.k as usize);
    if let Some(m) = a.m {
        code_params(n, k, m)?;
    } else {
        code_params(n, k, 1)?;
    }
    let mut bytes = fs::read(&a.input).with_context(|| format!("reading {}", a.input.display()))?;
    let len = bytes.len();
    let m = match (a.m, a.pad) {
        (Some(m), false) if len != k * m => return usage(format!("input is {len} bytes, expected k * m = {}; pass --pad", k * m)),
        (Some(m), true) if len > k * m => return usage(format!("input is {len} bytes, more than k * m = {}", k * m)),
        (Some(m), _) => m,
        (None, false) if len == 0 || len % k != 0 => {
            return usage(format!("input is {len} bytes, not a positive multiple of k = {k}; pass -m or --pad"))
        }
        (None, false) => len / k,
        (None, true) => len.div_ceil(k).max(1),
    };
    let params = code_params(n, k, m)?;
    bytes.resize(k * m, 0);
    let data: Vec<&[u8]> = bytes.chunks(m).collect();
    let arr = MdsCodec::new(params).encode(&data)?;

    fs::create_dir_all(&a.out_dir).with_context(|| format!("creating {}", a.out_dir.display()))?;
    let mut manifest = Manifest { n, k, m, original_len: len as u64, checksums: vec![], shards: vec![] };
    for id in 1..=n {
        let name = shard_file_name(id);
        Shard::new(params, id as u8, arr.node(id).to_vec())?.write(a.out_dir.join(&name))?;
        manifest.checksums.push(sha256_hex(arr.node(id)));
        manifest.shards.push(name);
    }
    let text = serde_json::to_string_pretty(&manifest)? + "\n";
    fs::write(a.out_dir.join(MANIFEST_NAME), &text)?;
    io::stdout().write_all(text.as_bytes())?;
    Ok(())
}

fn decode(a: DecodeArgs) -> anyhow::Result<()> {
    if a.nodes.contains(&0) {
        return usage("node ids start at 1");
    }
    let manifest = Manifest::load(&a.dir.join(MANIFEST_NAME))?;
    let params = manifest.params()?;
    let candidates: Vec<usize> = if a.nodes.is_empty() { (1..=params.n()).collect() } else { a.nodes.clone() };

    let mut ids = Vec::new();
    let mut cols = Vec::new();
    for id in candidates {
        if ids.len() == params.k() {
            break;
        }
        let Some(name) = manifest.shards.get(id - 1) else {
            return usage(format!("node {id} is outside 1..={}", params.n()));
        };
        let shard = match Shard::read(a.dir.join(name)) {
            Ok(s) => s,
            Err(e) => {
                eprintln!("skipping node {id}: {e}");
                continue;
            }
        };
        if shard.params != params || shard.node_id as usize != id || !manifest.verify(id, &shard.symbols) {
            eprintln!("skipping node {id}: does not match the manifest");
            continue;
        }
        ids.push(id);
        cols.push(shard.symbols);
    }
    if ids.len() < params.k() {
        bail!("only {} intact shards, need {}", ids.len(), params.k());
    }
    let data = MdsCodec::new(params).decode_from(&ids, &cols)?;
    let mut bytes = data.concat();
    bytes.truncate(manifest.original_len as usize);
    fs::write(&a.out, &bytes).with_context(|| format!("writing {}", a.out.display()))?;
    Ok(())
}

fn create(path: &Path) -> anyhow::Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

fn simulate(a: SimulateArgs) -> anyhow::Result<()> {
    let params = code_params(a.n, a.k, 1)?;
    let policy = match a.target {
        TargetArg::Uniform => TargetPolicy::UniformOverDataNodes,
        TargetArg::Fixed(t) => TargetPolicy::Fixed(t),
    };
    let config = SimConfig::new(params, a.model, a.trials, a.seed).with_target(policy);
    if let Err(e) = config.validate() {
        return usage(e.to_string());
    }

    let jsonl = a.log.as_deref().map(create).transpose()?;
    let csv = a.csv.as_deref().map(create).transpose()?;
    let mut writer = TrialWriter::new(jsonl, csv)?;
    let exec = if a.sequential { Execution::Sequential } else { Execution::Parallel };
    let mut summary = run_monte_carlo(&config, exec, |rec| writer.write(rec))?;
    writer.finish()?;
    summary.trial_log = a.log.as_ref().map(|p| p.display().to_string());

    if let Some(path) = &a.summary {
        fs::write(path, serde_json::to_string_pretty(&summary)? + "\n")
            .with_context(|| format!("writing {}", path.display()))?;
    }
    print_json(&summary)
}

fn worst_case(a: WorstCaseArgs) -> anyhow::Result<()> {
    match a.family {
        Family::Uniform => {
            if !(a.upper.is_finite() && a.upper > 0.0) {
                return usage("T must be positive");
            }
            print_json(&worst_case_uniform(a.upper))
        }
        Family::Sexp => {
            let valid = a.lambda.iter().all(|&l| l.is_finite() && l > 0.0)
                && a.shift.iter().all(|&s| s.is_finite() && s >= 0.0)
                && a.v_t.iter().all(|&v| v.is_finite() && v >= 0.0);
            if !valid {
                return usage("lambda must be positive; s and v-t must be non-negative");
            }
            if a.sweep {
                print_json(&worst_case_sweep(&a.lambda, &a.shift, &a.v_t)?)
            } else {
                if a.lambda.len() != 1 || a.shift.len() != 1 || a.v_t.len() != 1 {
                    return usage("lists of values need --sweep");
                }
                print_json(&worst_case_shifted_exp(a.lambda[0], a.shift[0], a.v_t[0])?)
            }
        }
    }
}

fn runtime() -> anyhow::Result<tokio::runtime::Runtime> {
    Ok(tokio::runtime::Builder::new_multi_thread().enable_all().build()?)
}

fn serve(a: ServeArgs) -> anyhow::Result<()> {
    if a.node_id == 0 {
        return usage("node ids start at 1");
    }
    let delay = match (a.delay_ms, a.delay_model) {
        (Some(ms), _) if !(ms.is_finite() && ms >= 0.0) => return usage("--delay-ms must be non-negative"),
        (Some(ms), _) => DelaySource::Fixed(Duration::from_secs_f64(ms / 1e3)),
        (None, Some(model)) => DelaySource::Model { model, seed: a.seed },
        (None, None) => DelaySource::Fixed(Duration::ZERO),
    };
    let config = NodeServerConfig { node_id: a.node_id, listen: a.listen, shard_path: a.shard, delay, log_path: a.log };
    runtime()?.block_on(async move {
        let handle = serve_node(config).await?;
        // scripts read the bound port from this line
        println!("{}", serde_json::json!({ "node": handle.node_id(), "listen": handle.addr().to_string() }));
        io::stdout().flush()?;
        tokio::select! {
            r = tokio::signal::ctrl_c() => r?,
            _ = handle.join() => bail!("listener stopped"),
        }
        Ok(())
    })
}

#[derive(Serialize)]
struct FetchReport {
    strategy: &'static str,
    t: usize,
    path: &'static str,
    nodes_used: Vec<usize>,
    wall_latency_ms: f64,
    len: usize,
    sha256: String,
    verified: Option<bool>,
}

fn fetch(a: FetchArgs) -> anyhow::Result<()> {
    if a.t == 0 {
        return usage("node ids start at 1");
    }
    let manifest = a.manifest.as_deref().map(Manifest::load).transpose()?;
    let params = match (&manifest, a.strategy) {
        (Some(man), _) => Some(man.params()?),
        (None, Strategy::Da) => None,
        (None, Strategy::Aaul) => match (a.k, a.m) {
            (Some(k), Some(m)) => Some(code_params(a.n.unwrap_or(a.endpoints.len()), k, m)?),
            _ => return usage("aaul needs --manifest or both -k and -m"),
        },
    };
    if let (Some(p), Strategy::Aaul) = (&params, a.strategy) {
        if a.t > p.k() {
            return usage(format!("target {} is not a data node (k = {})", a.t, p.k()));
        }
    }
    let timeout = Duration::from_millis(a.timeout_ms);
    let result = runtime()?.block_on(async {
        match a.strategy {
            Strategy::Da => fetch_da(&a.endpoints, a.t, timeout).await,
            Strategy::Aaul => fetch_aaul(&a.endpoints, params.as_ref().expect("checked above"), a.t, timeout).await,
        }
    })?;

    let verified = manifest.as_ref().map(|man| man.verify(a.t, &result.data));
    if let Some(path) = &a.out {
        fs::write(path, &result.data).with_context(|| format!("writing {}", path.display()))?;
    }
    print_json(&FetchReport {
        strategy: match a.strategy {
            Strategy::Da => "da",
            Strategy::Aaul => "aaul",
        },
        t: a.t,
        path: result.path.as_str(),
        nodes_used: result.nodes_used,
        wall_latency_ms: result.wall_latency.as_secs_f64() * 1e3,
        len: result.data.len(),
        sha256: sha256_hex(&result.data),
        verified,
    })?;
    if verified == Some(false) {
        bail!("node {} data does not match the manifest checksum", a.t);
    }
    Ok(())
}

#![allow(dead_code)]

use std::io::{BufRead, BufReader};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::{Child, Command, Output, Stdio};

use serde_json::Value;

pub fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_mdsaccel"));
    c.env_remove("MDSF_SEED");
    c
}

pub fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn mdsaccel")
}

pub fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

pub fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("{e}: stdout {:?}, stderr {:?}", String::from_utf8_lossy(&out.stdout), String::from_utf8_lossy(&out.stderr))
    })
}

fn schema_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../docs/schemas")
}

/// Validate against `docs/schemas/<name>.schema.json`, returning the errors.
pub fn schema_errors(name: &str, value: &Value) -> Vec<String> {
    let path = schema_dir().join(format!("{name}.schema.json"));
    let schema: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    let validator = jsonschema::validator_for(&schema).expect("schema compiles");
    validator.iter_errors(value).map(|e| format!("{} at {}", e, e.instance_path)).collect()
}

pub fn assert_schema(name: &str, value: &Value) {
    let errs = schema_errors(name, value);
    assert!(errs.is_empty(), "{name}: {errs:?}\n{value:#}");
}

/// A `serve-node` child process, killed on drop.
pub struct NodeProcess {
    pub child: Child,
    pub addr: SocketAddr,
}

impl NodeProcess {
    pub fn start(node_id: usize, shard: &Path, delay_ms: u64, log: Option<&Path>) -> Self {
        let mut cmd = bin();
        cmd.args(["serve-node", "--node-id", &node_id.to_string(), "--listen", "127.0.0.1:0"])
            .arg("--shard")
            .arg(shard)
            .args(["--delay-ms", &delay_ms.to_string()])
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit());
        if let Some(l) = log {
            cmd.arg("--log").arg(l);
        }
        let mut child = cmd.spawn().expect("spawn serve-node");
        let mut line = String::new();
        BufReader::new(child.stdout.take().unwrap()).read_line(&mut line).unwrap();
        let v: Value = serde_json::from_str(&line).unwrap_or_else(|e| panic!("{e}: {line:?}"));
        let addr = v["listen"].as_str().unwrap().parse().unwrap();
        Self { child, addr }
    }
}

impl Drop for NodeProcess {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

/// Encode `data` with `encode` into `dir`; returns the manifest JSON.
pub fn encode_into(dir: &Path, data: &[u8], n: usize, k: usize, m: usize) -> Value {
    let input = dir.join("input.bin");
    std::fs::write(&input, data).unwrap();
    let out = bin()
        .args(["encode", "-n", &n.to_string(), "-k", &k.to_string(), "-m", &m.to_string(), "--input"])
        .arg(&input)
        .arg("--out-dir")
        .arg(dir.join("shards"))
        .output()
        .unwrap();
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    stdout_json(&out)
}

//! A storage node: serves one shard over TCP after an injected delay.

use std::fs::{File, OpenOptions};
use std::io::Write;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use mdsaccel_core::shard::{Shard, ShardError};
use mdsaccel_core::{LatencyModel, SeededRng};
use serde::{Deserialize, Serialize};
use thiserror::Error;
use tokio::io::{AsyncReadExt, AsyncWriteExt};
use tokio::net::{TcpListener, TcpStream};
use tokio::task::{JoinHandle, JoinSet};

use crate::protocol::{self, REQUEST_LEN, STATUS_ERROR, STATUS_OK};

/// One latency unit of the models, in wall-clock time.
pub const UNIT: Duration = Duration::from_millis(1);

#[derive(Debug, Clone, PartialEq)]
pub enum DelaySource {
    Fixed(Duration),
    /// Request `i` sleeps `model.node(node_id)` drawn from stream `seed ^ i`,
    /// in units of [`UNIT`].
    Model { model: LatencyModel, seed: u64 },
}

impl DelaySource {
    fn delay(&self, node_id: u8, request: u64) -> Duration {
        match self {
            DelaySource::Fixed(d) => *d,
            DelaySource::Model { model, seed } => {
                let mut rng = SeededRng::for_stream(*seed, request);
                UNIT.mul_f64(model.node(node_id as usize).sample(&mut rng).max(0.0))
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct NodeServerConfig {
    pub node_id: u8,
    pub listen: SocketAddr,
    pub shard_path: PathBuf,
    pub delay: DelaySource,
    /// Also append each log entry as a JSON line to this file.
    pub log_path: Option<PathBuf>,
}

#[derive(Debug, Error)]
pub enum ServerError {
    #[error("loading shard: {0}")]
    Shard(#[from] ShardError),
    #[error("shard holds node {found}, server configured for node {expected}")]
    NodeMismatch { expected: u8, found: u8 },
    #[error("latency model: {0}")]
    Model(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A served request. `replied` is false when the client hung up first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RequestLogEntry {
    pub node: u8,
    /// Milliseconds since the Unix epoch.
    pub recv_at: f64,
    pub replied: bool,
}

#[derive(Debug, Default)]
struct RequestLog {
    entries: Mutex<Vec<RequestLogEntry>>,
    file: Option<Mutex<File>>,
}

impl RequestLog {
    fn push(&self, e: RequestLogEntry) {
        if let Some(f) = &self.file {
            let mut line = serde_json::to_vec(&e).expect("log entry serializes");
            line.push(b'\n');
            // the in-memory log stays authoritative if the file write fails
            let _ = f.lock().unwrap().write_all(&line);
        }
        self.entries.lock().unwrap().push(e);
    }
}

struct Node {
    id: u8,
    symbols: Vec<u8>,
    delay: DelaySource,
    requests: AtomicU64,
    log: RequestLog,
}

pub struct NodeHandle {
    addr: SocketAddr,
    node: Arc<Node>,
    task: Option<JoinHandle<()>>,
}

impl NodeHandle {
    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn node_id(&self) -> u8 {
        self.node.id
    }

    pub fn log(&self) -> Vec<RequestLogEntry> {
        self.node.log.entries.lock().unwrap().clone()
    }

    /// Stop accepting and drop every open connection.
    pub async fn shutdown(mut self) {
        if let Some(task) = self.task.take() {
            task.abort();
            let _ = task.await;
        }
    }

    /// Resolves when the accept loop ends, which only happens on a listener error.
    pub async fn join(mut self) {
        if let Some(task) = self.task.take() {
            let _ = task.await;
        }
    }
}

impl Drop for NodeHandle {
    fn drop(&mut self) {
        if let Some(task) = &self.task {
            task.abort();
        }
    }
}

fn now_ms() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64() * 1e3).unwrap_or(0.0)
}

/// Load the shard, bind, and start serving on the current runtime.
pub async fn serve_node(config: NodeServerConfig) -> Result<NodeHandle, ServerError> {
    let shard = Shard::read(&config.shard_path)?;
    if shard.node_id != config.node_id {
        return Err(ServerError::NodeMismatch { expected: config.node_id, found: shard.node_id });
    }
    if let DelaySource::Model { model, .. } = &config.delay {
        model.validate(shard.params.n()).map_err(|e| ServerError::Model(e.to_string()))?;
    }
    let file = match &config.log_path {
        Some(p) => Some(Mutex::new(OpenOptions::new().create(true).append(true).open(p)?)),
        None => None,
    };
    let listener = TcpListener::bind(config.listen).await?;
    let addr = listener.local_addr()?;
    let node = Arc::new(Node {
        id: config.node_id,
        symbols: shard.symbols,
        delay: config.delay,
        requests: AtomicU64::new(0),
        log: RequestLog { entries: Mutex::default(), file },
    });
    let task = tokio::spawn(accept_loop(listener, node.clone()));
    Ok(NodeHandle { addr, node, task: Some(task) })
}

async fn accept_loop(listener: TcpListener, node: Arc<Node>) {
    // owning the connections here means aborting this task closes them all
    let mut conns = JoinSet::new();
    loop {
        tokio::select! {
            accepted = listener.accept() => match accepted {
                Ok((stream, _)) => {
                    let _ = stream.set_nodelay(true);
                    conns.spawn(handle(stream, node.clone()));
                }
                Err(_) => return,
            },
            Some(_) = conns.join_next(), if !conns.is_empty() => {}
        }
    }
}

async fn handle(mut stream: TcpStream, node: Arc<Node>) {
    let mut req = [0u8; REQUEST_LEN];
    if stream.read_exact(&mut req).await.is_err() {
        return;
    }
    let recv_at = now_ms();
    let wanted = match protocol::parse_request(&req) {
        Ok(id) => id,
        Err(e) => {
            let _ = protocol::write_response(&mut stream, STATUS_ERROR, e.to_string().as_bytes()).await;
            return;
        }
    };
    if wanted != node.id {
        let msg = format!("this is node {}, not node {wanted}", node.id);
        let _ = protocol::write_response(&mut stream, STATUS_ERROR, msg.as_bytes()).await;
        node.log.push(RequestLogEntry { node: node.id, recv_at, replied: false });
        return;
    }

    let index = node.requests.fetch_add(1, Ordering::Relaxed);
    let sleep = tokio::time::sleep(node.delay.delay(node.id, index));
    tokio::pin!(sleep);
    let mut scratch = [0u8; 64];
    let hung_up = loop {
        tokio::select! {
            _ = &mut sleep => break false,
            r = stream.read(&mut scratch) => match r {
                Ok(0) | Err(_) => break true,
                Ok(_) => continue,
            },
        }
    };
    let replied = !hung_up && protocol::write_response(&mut stream, STATUS_OK, &node.symbols).await.is_ok();
    if replied {
        let _ = stream.shutdown().await;
    }
    node.log.push(RequestLogEntry { node: node.id, recv_at, replied });
}

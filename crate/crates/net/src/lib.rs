//! Loopback deployment of coded storage nodes and the clients that read them.
//!
//! Each node serves its shard over a tiny TCP protocol (see [`protocol`]),
//! sleeping an injected delay before it answers. [`fetch_da`] reads the target
//! node only; [`fetch_aaul`] asks all nodes and stops at whichever of the target
//! or `k` other nodes answers first.

pub mod client;
pub mod protocol;
pub mod server;

use std::net::{Ipv4Addr, SocketAddr};
use std::path::{Path, PathBuf};

use mdsaccel_core::shard::Shard;
use mdsaccel_core::CodeArray;

pub use client::{fetch_aaul, fetch_da, FetchError, FetchResult};
pub use server::{serve_node, DelaySource, NodeHandle, NodeServerConfig, RequestLogEntry, ServerError};

pub fn shard_file_name(node_id: usize) -> String {
    format!("shard_{node_id}.mdsf")
}

/// All `n` nodes of one code array, each on its own loopback port.
pub struct LocalCluster {
    nodes: Vec<Option<NodeHandle>>,
    endpoints: Vec<SocketAddr>,
    dir: PathBuf,
}

impl LocalCluster {
    /// Write every column of `array` as a shard under `dir` and serve node
    /// `i` with `delays[i - 1]`.
    pub async fn start(dir: &Path, array: &CodeArray, delays: &[DelaySource]) -> Result<Self, ServerError> {
        let n = array.params.n();
        assert_eq!(delays.len(), n, "one delay source per node");
        let mut nodes = Vec::with_capacity(n);
        for id in 1..=n {
            let path = dir.join(shard_file_name(id));
            Shard::new(array.params, id as u8, array.node(id).to_vec())?.write(&path)?;
            let cfg = NodeServerConfig {
                node_id: id as u8,
                listen: SocketAddr::from((Ipv4Addr::LOCALHOST, 0)),
                shard_path: path,
                delay: delays[id - 1].clone(),
                log_path: None,
            };
            nodes.push(Some(serve_node(cfg).await?));
        }
        let endpoints = nodes.iter().map(|h| h.as_ref().unwrap().addr()).collect();
        Ok(Self { nodes, endpoints, dir: dir.to_path_buf() })
    }

    /// Node `i` is at index `i - 1`. Stopped nodes keep their (now dead) address.
    pub fn endpoints(&self) -> &[SocketAddr] {
        &self.endpoints
    }

    pub fn node(&self, id: usize) -> Option<&NodeHandle> {
        self.nodes.get(id - 1).and_then(Option::as_ref)
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Take node `id` offline; connections to it are refused afterwards.
    pub async fn stop(&mut self, id: usize) {
        if let Some(h) = self.nodes.get_mut(id - 1).and_then(Option::take) {
            h.shutdown().await;
        }
    }
}

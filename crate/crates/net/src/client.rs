//! Fetch clients for direct access and for the all-nodes accelerated read.

use std::net::SocketAddr;
use std::time::Duration;

use mdsaccel_core::strategy::{AccessPath, AccessRequest, RequestError};
use mdsaccel_core::{CodeParams, CodecError, MdsCodec};
use thiserror::Error;
use tokio::io::AsyncWriteExt;
use tokio::net::TcpStream;
use tokio::task::JoinSet;
use tokio::time::Instant;

use crate::protocol::{self, ReadError, Response};

#[derive(Debug, Error)]
pub enum FetchError {
    #[error("no endpoint for node {0}")]
    NoEndpoint(usize),
    #[error("node {node}: {error}")]
    Io { node: usize, error: std::io::Error },
    #[error("node {node}: {error}")]
    Protocol { node: usize, error: protocol::ProtocolError },
    #[error("node {node} refused: {message}")]
    Remote { node: usize, message: String },
    #[error("node {node} sent {got} symbols, expected {expected}")]
    Length { node: usize, expected: usize, got: usize },
    #[error("node {node} did not answer within {after:?}")]
    Timeout { node: usize, after: Duration },
    #[error("only {got} usable responses before the deadline, need {needed}")]
    Insufficient { got: usize, needed: usize },
    #[error(transparent)]
    Request(#[from] RequestError),
    #[error(transparent)]
    Codec(#[from] CodecError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FetchResult {
    pub data: Vec<u8>,
    pub wall_latency: Duration,
    pub path: AccessPath,
    /// 1-based ids whose responses produced `data`, ascending.
    pub nodes_used: Vec<usize>,
}

fn endpoint(endpoints: &[SocketAddr], id: usize) -> Result<SocketAddr, FetchError> {
    endpoints.get(id.wrapping_sub(1)).copied().ok_or(FetchError::NoEndpoint(id))
}

/// One GET against node `id`.
pub async fn get(addr: SocketAddr, id: usize) -> Result<Vec<u8>, FetchError> {
    let io = |error| FetchError::Io { node: id, error };
    let node_byte = u8::try_from(id).map_err(|_| FetchError::NoEndpoint(id))?;
    let mut stream = TcpStream::connect(addr).await.map_err(io)?;
    let _ = stream.set_nodelay(true);
    stream.write_all(&protocol::encode_request(node_byte)).await.map_err(io)?;
    match protocol::read_response(&mut stream).await {
        Ok(Response::Ok(data)) => Ok(data),
        Ok(Response::Error(message)) => Err(FetchError::Remote { node: id, message }),
        Err(ReadError::Io(e)) => Err(io(e)),
        Err(ReadError::Protocol(error)) => Err(FetchError::Protocol { node: id, error }),
    }
}

/// Read node `t` and nothing else.
pub async fn fetch_da(endpoints: &[SocketAddr], t: usize, timeout: Duration) -> Result<FetchResult, FetchError> {
    let addr = endpoint(endpoints, t)?;
    let start = Instant::now();
    let data = tokio::time::timeout(timeout, get(addr, t))
        .await
        .map_err(|_| FetchError::Timeout { node: t, after: timeout })??;
    Ok(FetchResult { data, wall_latency: start.elapsed(), path: AccessPath::Direct, nodes_used: vec![t] })
}

/// Request every node at once. Finish on node `t`'s reply or on the `k`-th
/// reply from another node, whichever comes first, then drop the rest.
///
/// Partial responses from dropped connections are discarded. Node `i` is
/// reached at `endpoints[i - 1]`.
pub async fn fetch_aaul(
    endpoints: &[SocketAddr],
    params: &CodeParams,
    t: usize,
    deadline: Duration,
) -> Result<FetchResult, FetchError> {
    AccessRequest::new(params, t)?;
    let (n, k, m) = (params.n(), params.k(), params.m());
    let addrs: Vec<SocketAddr> = (1..=n).map(|id| endpoint(endpoints, id)).collect::<Result<_, _>>()?;

    let start = Instant::now();
    let mut inflight = JoinSet::new();
    for (i, addr) in addrs.into_iter().enumerate() {
        inflight.spawn(async move { (i + 1, get(addr, i + 1).await) });
    }

    let mut others: Vec<(usize, Vec<u8>)> = Vec::with_capacity(k);
    let mut others_pending = n - 1;
    let mut target_failed = false;
    let until = start + deadline;
    let outcome = loop {
        let insufficient = FetchError::Insufficient { got: others.len(), needed: k };
        if target_failed && others.len() + others_pending < k {
            break Err(insufficient);
        }
        let (id, res) = match tokio::time::timeout_at(until, inflight.join_next()).await {
            Ok(Some(Ok(done))) => done,
            Ok(Some(Err(join))) => std::panic::resume_unwind(join.into_panic()),
            Ok(None) | Err(_) => break Err(insufficient),
        };
        let res = res.and_then(|d| match d.len() == m {
            true => Ok(d),
            false => Err(FetchError::Length { node: id, expected: m, got: d.len() }),
        });
        match (id == t, res) {
            (true, Ok(data)) => break Ok((data, AccessPath::Direct, vec![t])),
            (true, Err(_)) => target_failed = true,
            (false, Ok(data)) => {
                others_pending -= 1;
                others.push((id, data));
                if others.len() == k {
                    others.sort_by_key(|(id, _)| *id);
                    let ids: Vec<usize> = others.iter().map(|(id, _)| *id).collect();
                    let cols: Vec<&[u8]> = others.iter().map(|(_, d)| d.as_slice()).collect();
                    let data = MdsCodec::new(*params).recover_node(&ids, &cols, t).map_err(FetchError::from);
                    break data.map(|d| (d, AccessPath::Decoded, ids));
                }
            }
            (false, Err(_)) => others_pending -= 1,
        }
    };
    let wall_latency = start.elapsed();
    // closes the remaining connections
    inflight.abort_all();
    let (data, path, nodes_used) = outcome?;
    Ok(FetchResult { data, wall_latency, path, nodes_used })
}

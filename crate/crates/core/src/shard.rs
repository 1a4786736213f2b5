//! On-disk shard files.
//!
//! ```text
//! offset  size  field
//! 0       4     magic "MDSF"
//! 4       1     version (1)
//! 5       1     n
//! 6       1     k
//! 7       4     m, big-endian u32
//! 11      1     node_id (1-based)
//! 12      m     symbols
//! ```

use std::fs;
use std::io;
use std::path::Path;

use thiserror::Error;

use crate::codec::CodeParams;

pub const SHARD_MAGIC: &[u8; 4] = b"MDSF";
pub const SHARD_VERSION: u8 = 1;
pub const SHARD_HEADER_LEN: usize = 12;

#[derive(Debug, Error)]
pub enum ShardError {
    #[error("shard io: {0}")]
    Io(#[from] io::Error),
    #[error("bad magic, not a shard file")]
    BadMagic,
    #[error("unsupported shard version {0}")]
    Version(u8),
    #[error("truncated shard: {0}")]
    Truncated(String),
    #[error("invalid shard header: {0}")]
    Header(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Shard {
    pub params: CodeParams,
    pub node_id: u8,
    pub symbols: Vec<u8>,
}

impl Shard {
    pub fn new(params: CodeParams, node_id: u8, symbols: Vec<u8>) -> Result<Self, ShardError> {
        if node_id == 0 || node_id as usize > params.n() {
            return Err(ShardError::Header(format!("node id {node_id} outside 1..={}", params.n())));
        }
        if symbols.len() != params.m() {
            return Err(ShardError::Header(format!(
                "{} symbols for m={}",
                symbols.len(),
                params.m()
            )));
        }
        if params.m() > u32::MAX as usize {
            return Err(ShardError::Header("m does not fit in u32".into()));
        }
        Ok(Self { params, node_id, symbols })
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(SHARD_HEADER_LEN + self.symbols.len());
        out.extend_from_slice(SHARD_MAGIC);
        out.push(SHARD_VERSION);
        out.push(self.params.n() as u8);
        out.push(self.params.k() as u8);
        out.extend_from_slice(&(self.params.m() as u32).to_be_bytes());
        out.push(self.node_id);
        out.extend_from_slice(&self.symbols);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, ShardError> {
        if bytes.len() < SHARD_HEADER_LEN {
            return Err(ShardError::Truncated(format!("{} bytes, header needs {SHARD_HEADER_LEN}", bytes.len())));
        }
        if &bytes[..4] != SHARD_MAGIC {
            return Err(ShardError::BadMagic);
        }
        if bytes[4] != SHARD_VERSION {
            return Err(ShardError::Version(bytes[4]));
        }
        let (n, k) = (bytes[5] as usize, bytes[6] as usize);
        let m = u32::from_be_bytes(bytes[7..11].try_into().expect("4 bytes")) as usize;
        let node_id = bytes[11];
        let params = CodeParams::new(n, k, m).map_err(|e| ShardError::Header(e.to_string()))?;
        let payload = &bytes[SHARD_HEADER_LEN..];
        if payload.len() != m {
            return Err(ShardError::Truncated(format!("payload has {} bytes, header says {m}", payload.len())));
        }
        Self::new(params, node_id, payload.to_vec())
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self, ShardError> {
        Self::from_bytes(&fs::read(path)?)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<(), ShardError> {
        fs::write(path, self.to_bytes())?;
        Ok(())
    }
}

//! Single-node data access over systematic MDS array codes.
//!
//! A read of one data node can either go straight to that node or race it
//! against any `k` other nodes and decode. This crate provides the codec, the
//! latency models, the exact latency distributions of both strategies, and a
//! seeded Monte Carlo harness.

pub mod analytics;
pub mod codec;
pub mod gf;
pub mod latency;
pub mod quad;
pub mod rng;
pub mod shard;
pub mod sim;
pub mod strategy;

pub use codec::{CodeArray, CodeParams, CodecError, Generator, MdsCodec};
pub use latency::{Distribution, LatencyModel};
pub use rng::SeededRng;

//! Distributed partial distance estimation and the routing schemes built on it,
//! simulated in a synchronous message-passing model.

pub mod apsp;
pub mod compact;
pub mod detect;
pub mod dist;
pub mod engine;
pub mod error;
pub mod graph;
pub mod harness;
pub mod monitor;
pub mod oracle;
pub mod pde;
pub mod rng;
pub mod rtc;
pub mod spanner;
pub mod tree;

pub use dist::{Dist, Eps};
pub use error::{Error, Result};
pub use graph::{NodeId, Topology, WeightedGraph};

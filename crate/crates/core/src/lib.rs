//! Decentralized virtual network embedding.
//!
//! A primary server receiving a virtual network request picks `L` random
//! leaders; each runs a bounded BFS embedding from itself, and a ring
//! election circulates the candidates to agree on the one with the best
//! `X * revenue - Y * cost`. The crate also carries centralized baselines
//! (FirstFit, BestFit, GRC) and a discrete-event simulator to compare them.

// `!(x > 0.0)` is used on purpose so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod embedding;
pub mod error;
pub mod generate;
pub mod local;
pub mod network;
pub mod protocol;
pub mod resources;
pub mod rng;
pub mod sim;

pub use embedding::{
    allocate, cost_of, metric_of, release, revenue_of, verify_solution, AllocationLedger, EmbeddingSolution,
};
pub use error::{ConfigError, GenerateError, LedgerError, ProtocolError, RankError, SimError, Violation};
pub use generate::{generate_physical_network, generate_vnr, GeneratorConfig};
pub use local::{embed, map_link, LocalEmbedOutcome, LocalEmbedParams, Scratch};
pub use network::{NodeId, PhysicalNetwork, RequestId, Vnr};
pub use resources::{Quantity, ResourceVector};

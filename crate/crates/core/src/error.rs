use thiserror::Error;

use crate::network::{LinkId, NodeId, RequestId};
use crate::resources::{Quantity, Resource};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ResourceError {
    #[error("invalid quantity {0}: must be finite and nonnegative")]
    InvalidQuantity(f64),
    #[error("{resource} underflow: {requested} requested, {available} available")]
    Underflow { resource: Resource, available: Quantity, requested: Quantity },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("graph has no nodes")]
    Empty,
    #[error("link endpoint {0} does not exist")]
    UnknownNode(usize),
    #[error("self-loop on node {0}")]
    SelfLoop(usize),
    #[error("duplicate link between {0} and {1}")]
    DuplicateLink(usize, usize),
    #[error("residual exceeds capacity on {0}")]
    ResidualAboveCapacity(String),
    #[error("lifetime must be positive, got {0}")]
    NonPositiveLifetime(f64),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("{field}: {reason}")]
    Invalid { field: &'static str, reason: String },
}

impl ConfigError {
    pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        ConfigError::Invalid { field, reason: reason.into() }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GenerateError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("no connected {kind} graph after {attempts} attempts")]
    Disconnected { kind: &'static str, attempts: u32 },
    #[error("distribution with mean {mean} never produced a draw above the floor {floor}")]
    TruncationExhausted { mean: f64, floor: f64 },
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// First constraint a candidate embedding breaks, with the offending ids.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Violation {
    #[error("solution is for request {found}, expected {expected}")]
    RequestMismatch { expected: RequestId, found: RequestId },
    #[error("node mapping covers {mapped} of {expected} virtual nodes")]
    NodeMappingSize { expected: usize, mapped: usize },
    #[error("path mapping covers {mapped} of {expected} virtual links")]
    PathMappingSize { expected: usize, mapped: usize },
    #[error("virtual node {virtual_node} mapped to unknown physical node {physical}")]
    UnknownPhysicalNode { virtual_node: usize, physical: NodeId },
    #[error("virtual nodes {first} and {second} share physical node {physical} under injective mapping")]
    NotInjective { first: usize, second: usize, physical: NodeId },
    #[error("physical node {physical} short on {resource}: demand {demand}, residual {residual}")]
    NodeCapacity { physical: NodeId, resource: Resource, demand: Quantity, residual: Quantity },
    #[error("virtual link {virtual_link} path does not join its mapped endpoints")]
    PathEndpoints { virtual_link: usize },
    #[error("virtual link {virtual_link} path hops between non-adjacent nodes {from} and {to}")]
    PathNotAdjacent { virtual_link: usize, from: NodeId, to: NodeId },
    #[error("virtual link {virtual_link} path revisits physical node {physical}")]
    PathNotSimple { virtual_link: usize, physical: NodeId },
    #[error("physical link {link} short on bandwidth: demand {demand}, residual {residual}")]
    LinkCapacity { link: LinkId, demand: Quantity, residual: Quantity },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LedgerError {
    #[error("solution rejected: {0}")]
    Invalid(#[from] Violation),
    #[error("request {0} is already allocated")]
    AlreadyAllocated(RequestId),
    #[error("request {0} holds no allocation")]
    UnknownRequest(RequestId),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProtocolError {
    #[error("leader count {requested} outside 1..={available}")]
    LeaderCount { requested: usize, available: usize },
    #[error("primary {0} is not a physical node")]
    UnknownPrimary(NodeId),
    #[error("ring members must be distinct, {0} repeats")]
    DuplicateLeader(NodeId),
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("election for request {0} ended without a decision")]
    NoDecision(RequestId),
    #[error("election exceeded {0} deliveries")]
    Runaway(usize),
    #[error(transparent)]
    Ledger(#[from] LedgerError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RankError {
    #[error("rank iteration did not converge within {iterations} iterations (last change {last_change:e})")]
    NotConverged { iterations: u32, last_change: f64 },
    #[error("graph has no nodes")]
    Empty,
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Generate(#[from] GenerateError),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Ledger(#[from] LedgerError),
    #[error(transparent)]
    Rank(#[from] RankError),
    #[error("conservation broken on {0}")]
    Conservation(String),
}

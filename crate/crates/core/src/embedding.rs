//! Embedding solutions, their revenue and cost, and the allocation ledger.
//!
//! Revenue is the demanded CPU plus demanded bandwidth of a request. Cost
//! is the demanded CPU plus, for each virtual link, its bandwidth times the
//! hop length of the physical path it was mapped to. Memory and GPU are
//! feasibility constraints only and do not enter either figure.

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{LedgerError, Violation};
use crate::network::{LinkId, NodeId, PhysicalNetwork, RequestId, Vnr};
use crate::resources::{Quantity, ResourceVector};

/// Virtual node id (index) → physical node id.
pub type NodeMapping = Vec<NodeId>;
/// Virtual link id (index) → physical path as node ids. Co-located
/// endpoints map to a single-node path.
pub type PathMapping = Vec<Vec<NodeId>>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingSolution {
    pub request_id: RequestId,
    #[serde(rename = "node_map")]
    pub node_mapping: NodeMapping,
    #[serde(rename = "paths")]
    pub path_mapping: PathMapping,
    pub revenue: f64,
    pub cost: f64,
    pub metric: f64,
}

impl EmbeddingSolution {
    /// Builds a solution and fills in revenue, cost and metric.
    pub fn new(
        vnr: &Vnr,
        node_mapping: NodeMapping,
        path_mapping: PathMapping,
        x: f64,
        y: f64,
    ) -> Result<Self, Violation> {
        let mut sol = EmbeddingSolution {
            request_id: vnr.request_id,
            node_mapping,
            path_mapping,
            revenue: 0.0,
            cost: 0.0,
            metric: 0.0,
        };
        sol.revenue = revenue_of(vnr);
        sol.cost = cost_of(vnr, &sol)?;
        sol.metric = metric_of(sol.revenue, sol.cost, x, y);
        Ok(sol)
    }

    pub fn hops(&self, virtual_link: usize) -> usize {
        self.path_mapping[virtual_link].len().saturating_sub(1)
    }
}

fn revenue_exact(vnr: &Vnr) -> Quantity {
    vnr.nodes.iter().map(|n| n.demand.cpu).sum::<Quantity>() + vnr.links.iter().map(|l| l.bandwidth).sum::<Quantity>()
}

pub fn revenue_of(vnr: &Vnr) -> f64 {
    revenue_exact(vnr).units()
}

/// Cost of `sol` for `vnr`. Only the shape of the mapping is checked
/// here; capacity checks belong to [`verify_solution`].
pub fn cost_of(vnr: &Vnr, sol: &EmbeddingSolution) -> Result<f64, Violation> {
    check_shape(vnr, sol)?;
    let node_cost: Quantity = vnr.nodes.iter().map(|n| n.demand.cpu).sum();
    let link_cost: Quantity = vnr.links.iter().enumerate().map(|(i, l)| l.bandwidth.times(sol.hops(i))).sum();
    Ok((node_cost + link_cost).units())
}

pub fn metric_of(revenue: f64, cost: f64, x: f64, y: f64) -> f64 {
    x * revenue - y * cost
}

fn check_shape(vnr: &Vnr, sol: &EmbeddingSolution) -> Result<(), Violation> {
    if sol.request_id != vnr.request_id {
        return Err(Violation::RequestMismatch { expected: vnr.request_id, found: sol.request_id });
    }
    if sol.node_mapping.len() != vnr.nodes.len() {
        return Err(Violation::NodeMappingSize { expected: vnr.nodes.len(), mapped: sol.node_mapping.len() });
    }
    if sol.path_mapping.len() != vnr.links.len() {
        return Err(Violation::PathMappingSize { expected: vnr.links.len(), mapped: sol.path_mapping.len() });
    }
    for (i, link) in vnr.links.iter().enumerate() {
        let path = &sol.path_mapping[i];
        let (a, b) = link.endpoints;
        if path.first() != Some(&sol.node_mapping[a]) || path.last() != Some(&sol.node_mapping[b]) {
            return Err(Violation::PathEndpoints { virtual_link: i });
        }
    }
    Ok(())
}

/// Exact resource deltas one accepted request holds.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Allocation {
    pub nodes: Vec<(NodeId, ResourceVector)>,
    pub links: Vec<(LinkId, Quantity)>,
}

/// Aggregates a solution into per-node and per-link demand, after
/// checking every structural constraint. Capacity is not checked.
fn aggregate(
    net: &PhysicalNetwork,
    vnr: &Vnr,
    sol: &EmbeddingSolution,
    injective: bool,
) -> Result<Allocation, Violation> {
    if sol.request_id != vnr.request_id {
        return Err(Violation::RequestMismatch { expected: vnr.request_id, found: sol.request_id });
    }
    if sol.node_mapping.len() != vnr.nodes.len() {
        return Err(Violation::NodeMappingSize { expected: vnr.nodes.len(), mapped: sol.node_mapping.len() });
    }
    let mut node_demand: BTreeMap<NodeId, ResourceVector> = BTreeMap::new();
    let mut hosted_by: HashMap<NodeId, usize> = HashMap::new();
    for (v, &p) in sol.node_mapping.iter().enumerate() {
        if !net.contains(p) {
            return Err(Violation::UnknownPhysicalNode { virtual_node: v, physical: p });
        }
        if injective {
            if let Some(&first) = hosted_by.get(&p) {
                return Err(Violation::NotInjective { first, second: v, physical: p });
            }
            hosted_by.insert(p, v);
        }
        *node_demand.entry(p).or_default() += vnr.nodes[v].demand;
    }
    if sol.path_mapping.len() != vnr.links.len() {
        return Err(Violation::PathMappingSize { expected: vnr.links.len(), mapped: sol.path_mapping.len() });
    }
    let mut link_demand: BTreeMap<LinkId, Quantity> = BTreeMap::new();
    for (i, vlink) in vnr.links.iter().enumerate() {
        let path = &sol.path_mapping[i];
        let (a, b) = vlink.endpoints;
        if path.first() != Some(&sol.node_mapping[a]) || path.last() != Some(&sol.node_mapping[b]) {
            return Err(Violation::PathEndpoints { virtual_link: i });
        }
        let mut seen = HashSet::with_capacity(path.len());
        for &p in path {
            if !net.contains(p) || !seen.insert(p) {
                return Err(Violation::PathNotSimple { virtual_link: i, physical: p });
            }
        }
        for hop in path.windows(2) {
            let link = net.link_between(hop[0], hop[1]).ok_or(Violation::PathNotAdjacent {
                virtual_link: i,
                from: hop[0],
                to: hop[1],
            })?;
            *link_demand.entry(link).or_default() += vlink.bandwidth;
        }
    }
    Ok(Allocation {
        nodes: node_demand.into_iter().collect(),
        links: link_demand.into_iter().filter(|(_, q)| !q.is_zero()).collect(),
    })
}

fn check_capacity(net: &PhysicalNetwork, alloc: &Allocation) -> Result<(), Violation> {
    for &(p, demand) in &alloc.nodes {
        let residual = net.node(p).residual;
        if let Some(resource) = demand.first_excess(&residual) {
            return Err(Violation::NodeCapacity {
                physical: p,
                resource,
                demand: demand.get(resource),
                residual: residual.get(resource),
            });
        }
    }
    for &(l, demand) in &alloc.links {
        let residual = net.link(l).bandwidth_residual;
        if demand > residual {
            return Err(Violation::LinkCapacity { link: l, demand, residual });
        }
    }
    Ok(())
}

/// Checks a solution against the network's current residuals.
///
/// Node demands are summed per physical node and link bandwidth per
/// physical link before comparing, so co-located virtual nodes and paths
/// sharing a link are judged on their aggregate.
pub fn verify_solution(
    net: &PhysicalNetwork,
    vnr: &Vnr,
    sol: &EmbeddingSolution,
    injective: bool,
) -> Result<(), Violation> {
    let alloc = aggregate(net, vnr, sol, injective)?;
    check_capacity(net, &alloc)
}

/// Resources held by every accepted request, keyed by request id.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AllocationLedger {
    held: BTreeMap<RequestId, Allocation>,
}

impl AllocationLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.held.len()
    }

    pub fn is_empty(&self) -> bool {
        self.held.is_empty()
    }

    pub fn contains(&self, request_id: RequestId) -> bool {
        self.held.contains_key(&request_id)
    }

    pub fn get(&self, request_id: RequestId) -> Option<&Allocation> {
        self.held.get(&request_id)
    }

    pub fn request_ids(&self) -> impl Iterator<Item = RequestId> + '_ {
        self.held.keys().copied()
    }

    /// Verifies that every residual equals capacity minus what the ledger
    /// holds. Returns a description of the first mismatch.
    pub fn check_conservation(&self, net: &PhysicalNetwork) -> Result<(), String> {
        let mut node_held = vec![ResourceVector::ZERO; net.node_count()];
        let mut link_held = vec![Quantity::ZERO; net.link_count()];
        for alloc in self.held.values() {
            for &(p, d) in &alloc.nodes {
                node_held[p] += d;
            }
            for &(l, d) in &alloc.links {
                link_held[l] += d;
            }
        }
        for (node, held) in net.nodes().iter().zip(&node_held) {
            if node.residual + *held != node.capacity {
                return Err(format!("node {}", node.id));
            }
        }
        for (id, (link, held)) in net.links().iter().zip(&link_held).enumerate() {
            if link.bandwidth_residual + *held != link.bandwidth_capacity {
                return Err(format!("link {id}"));
            }
        }
        Ok(())
    }
}

/// Applies `sol` to `net`'s residuals and records the deltas. Nothing is
/// mutated unless verification passes.
pub fn allocate(
    net: &mut PhysicalNetwork,
    vnr: &Vnr,
    sol: &EmbeddingSolution,
    ledger: &mut AllocationLedger,
    injective: bool,
) -> Result<(), LedgerError> {
    if ledger.contains(vnr.request_id) {
        return Err(LedgerError::AlreadyAllocated(vnr.request_id));
    }
    let alloc = aggregate(net, vnr, sol, injective)?;
    check_capacity(net, &alloc)?;
    for &(p, d) in &alloc.nodes {
        let node = net.node_mut(p);
        node.residual = node.residual.checked_sub(&d).expect("capacity checked");
    }
    for &(l, d) in &alloc.links {
        let link = net.link_mut(l);
        link.bandwidth_residual = link.bandwidth_residual.checked_sub(d).expect("capacity checked");
    }
    ledger.held.insert(vnr.request_id, alloc);
    Ok(())
}

/// Returns everything `request_id` holds.
pub fn release(
    net: &mut PhysicalNetwork,
    request_id: RequestId,
    ledger: &mut AllocationLedger,
) -> Result<(), LedgerError> {
    let alloc = ledger.held.remove(&request_id).ok_or(LedgerError::UnknownRequest(request_id))?;
    for (p, d) in alloc.nodes {
        net.node_mut(p).residual += d;
    }
    for (l, d) in alloc.links {
        net.link_mut(l).bandwidth_residual += d;
    }
    Ok(())
}

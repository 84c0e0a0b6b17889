//! Bounded breadth-first local embedding.
//!
//! A leader searches outward from itself, placing virtual nodes (highest
//! demand first) greedily on each physical node it visits. Each virtual
//! link is routed as soon as both of its endpoints are placed. The search
//! inspects at most `ceil(alpha * |V_v|)` servers and never goes deeper
//! than `beta` hops.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::embedding::{EmbeddingSolution, PathMapping};
use crate::error::ConfigError;
use crate::network::{LinkId, NodeId, PhysicalNetwork, Vnr};
use crate::resources::{Quantity, ResourceVector};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LocalEmbedParams {
    /// Inspected-server budget multiplier.
    pub alpha: f64,
    /// Maximum BFS depth from the root.
    pub beta: u32,
    /// Revenue weight in the metric.
    pub x: f64,
    /// Cost weight in the metric.
    pub y: f64,
    /// Longest physical path a virtual link may take; `None` means `2 * beta`.
    pub path_hop_cap: Option<u32>,
    /// Forbid two virtual nodes of one request on the same server.
    pub injective: bool,
}

impl Default for LocalEmbedParams {
    fn default() -> Self {
        LocalEmbedParams { alpha: 30.0, beta: 3, x: 1.0, y: 1.0, path_hop_cap: None, injective: false }
    }
}

impl LocalEmbedParams {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(ConfigError::invalid("alpha", format!("must be positive, got {}", self.alpha)));
        }
        if !self.x.is_finite() || !self.y.is_finite() {
            return Err(ConfigError::invalid("x", "metric weights must be finite"));
        }
        Ok(())
    }

    pub fn max_path_hops(&self) -> usize {
        self.path_hop_cap.unwrap_or(2 * self.beta) as usize
    }

    /// `ceil(alpha * |V_v|)`.
    pub fn inspection_budget(&self, vnr_size: usize) -> usize {
        (self.alpha * vnr_size as f64).ceil() as usize
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalEmbedOutcome {
    pub feasible: bool,
    pub solution: Option<EmbeddingSolution>,
    pub inspected_count: usize,
    pub max_depth_reached: u32,
}

impl LocalEmbedOutcome {
    pub fn metric(&self) -> Option<f64> {
        self.solution.as_ref().map(|s| s.metric)
    }

    pub(crate) fn infeasible(inspected_count: usize, max_depth_reached: u32) -> Self {
        LocalEmbedOutcome { feasible: false, solution: None, inspected_count, max_depth_reached }
    }
}

/// A read-only network plus tentative reservations that have not been
/// committed to it.
#[derive(Clone, Debug)]
pub struct Scratch<'a> {
    net: &'a PhysicalNetwork,
    node_reserved: Vec<ResourceVector>,
    link_reserved: Vec<Quantity>,
}

impl<'a> Scratch<'a> {
    pub fn new(net: &'a PhysicalNetwork) -> Self {
        Scratch {
            net,
            node_reserved: vec![ResourceVector::ZERO; net.node_count()],
            link_reserved: vec![Quantity::ZERO; net.link_count()],
        }
    }

    pub fn network(&self) -> &'a PhysicalNetwork {
        self.net
    }

    pub fn node_available(&self, node: NodeId) -> ResourceVector {
        self.net.node(node).residual.checked_sub(&self.node_reserved[node]).expect("reservations never exceed residual")
    }

    pub fn link_available(&self, link: LinkId) -> Quantity {
        self.net
            .link(link)
            .bandwidth_residual
            .checked_sub(self.link_reserved[link])
            .expect("reservations never exceed residual")
    }

    pub fn fits(&self, node: NodeId, demand: &ResourceVector) -> bool {
        demand.fits_within(&self.node_available(node))
    }

    pub fn reserve_node(&mut self, node: NodeId, demand: ResourceVector) {
        assert!(self.fits(node, &demand), "reservation exceeds residual on node {node}");
        self.node_reserved[node] += demand;
    }

    /// Reserves `bandwidth` on every hop of `path`.
    pub fn reserve_path(&mut self, path: &[NodeId], bandwidth: Quantity) {
        for hop in path.windows(2) {
            let link = self.net.link_between(hop[0], hop[1]).expect("path hops are adjacent");
            assert!(self.link_available(link) >= bandwidth, "reservation exceeds residual on link {link}");
            self.link_reserved[link] += bandwidth;
        }
    }

    fn unreserve_path(&mut self, path: &[NodeId], bandwidth: Quantity) {
        for hop in path.windows(2) {
            let link = self.net.link_between(hop[0], hop[1]).expect("path hops are adjacent");
            self.link_reserved[link] = self.link_reserved[link].checked_sub(bandwidth).expect("was reserved");
        }
    }
}

/// Shortest hop-count path from `from` to `to` over links whose available
/// bandwidth covers `bw_demand`, at most `max_hops` long. Among shortest
/// paths the lexicographically smallest node sequence wins. `from == to`
/// yields the single-node path.
pub fn map_link(
    scratch: &Scratch<'_>,
    from: NodeId,
    to: NodeId,
    bw_demand: Quantity,
    max_hops: usize,
) -> Option<Vec<NodeId>> {
    if from == to {
        return Some(vec![from]);
    }
    let net = scratch.network();
    let mut parent = vec![usize::MAX; net.node_count()];
    let mut depth = vec![0usize; net.node_count()];
    parent[from] = from;
    let mut queue = VecDeque::from([from]);
    // Neighbors are scanned in ascending order and each node keeps its first
    // discoverer, so the BFS tree holds the lexicographically smallest
    // shortest path to every node.
    while let Some(u) = queue.pop_front() {
        if depth[u] == max_hops {
            continue;
        }
        for &(v, link) in net.neighbors(u) {
            if parent[v] != usize::MAX || scratch.link_available(link) < bw_demand {
                continue;
            }
            parent[v] = u;
            depth[v] = depth[u] + 1;
            if v == to {
                let mut path = vec![to];
                let mut cur = to;
                while cur != from {
                    cur = parent[cur];
                    path.push(cur);
                }
                path.reverse();
                return Some(path);
            }
            queue.push_back(v);
        }
    }
    None
}

/// Placement state shared by the local embedder and the baselines.
pub(crate) struct Placer<'a, 'v> {
    pub scratch: Scratch<'a>,
    pub vnr: &'v Vnr,
    pub mapping: Vec<Option<NodeId>>,
    pub paths: Vec<Option<Vec<NodeId>>>,
    max_hops: usize,
    injective: bool,
    hosts: Vec<bool>,
}

impl<'a, 'v> Placer<'a, 'v> {
    pub fn new(net: &'a PhysicalNetwork, vnr: &'v Vnr, params: &LocalEmbedParams) -> Self {
        Placer {
            scratch: Scratch::new(net),
            vnr,
            mapping: vec![None; vnr.node_count()],
            paths: vec![None; vnr.links.len()],
            max_hops: params.max_path_hops(),
            injective: params.injective,
            hosts: vec![false; net.node_count()],
        }
    }

    /// True when `node` can take no virtual node at all under the
    /// injective policy.
    pub fn host_taken(&self, node: NodeId) -> bool {
        self.injective && self.hosts[node]
    }

    /// Tentatively places virtual node `v` on `node`, routing every link
    /// to an already placed neighbor. On failure nothing is reserved.
    pub fn try_place(&mut self, v: usize, node: NodeId) -> bool {
        let demand = self.vnr.nodes[v].demand;
        if self.host_taken(node) || !self.scratch.fits(node, &demand) {
            return false;
        }
        let mut routed: Vec<(usize, Vec<NodeId>)> = Vec::new();
        for &l in self.vnr.incident_links(v) {
            let link = &self.vnr.links[l];
            let (a, b) = link.endpoints;
            let other = if a == v { b } else { a };
            let Some(other_host) = self.mapping[other] else {
                continue;
            };
            let (from, to) = if a == v { (node, other_host) } else { (other_host, node) };
            match map_link(&self.scratch, from, to, link.bandwidth, self.max_hops) {
                Some(path) => {
                    self.scratch.reserve_path(&path, link.bandwidth);
                    routed.push((l, path));
                }
                None => {
                    for (l, path) in &routed {
                        self.scratch.unreserve_path(path, self.vnr.links[*l].bandwidth);
                    }
                    return false;
                }
            }
        }
        self.scratch.reserve_node(node, demand);
        self.mapping[v] = Some(node);
        self.hosts[node] = true;
        for (l, path) in routed {
            self.paths[l] = Some(path);
        }
        true
    }

    pub fn complete(&self) -> bool {
        self.mapping.iter().all(Option::is_some)
    }

    /// Builds the solution once every node is placed.
    pub fn finish(self, params: &LocalEmbedParams) -> Option<EmbeddingSolution> {
        if !self.complete() {
            return None;
        }
        let mapping: Vec<NodeId> = self.mapping.into_iter().map(Option::unwrap).collect();
        let paths: PathMapping =
            self.paths.into_iter().map(|p| p.expect("links are routed when their second endpoint is placed")).collect();
        Some(
            EmbeddingSolution::new(self.vnr, mapping, paths, params.x, params.y).expect("placer output is well formed"),
        )
    }
}

/// Runs the bounded BFS embedding rooted at `root`. `net` is never
/// modified.
pub fn embed(root: NodeId, net: &PhysicalNetwork, vnr: &Vnr, params: &LocalEmbedParams) -> LocalEmbedOutcome {
    assert!(net.contains(root), "root {root} is not a physical node");
    let budget = params.inspection_budget(vnr.node_count());
    let mut queue: VecDeque<usize> = vnr.demand_order().into();
    let mut placer = Placer::new(net, vnr, params);

    let mut seen = vec![false; net.node_count()];
    let mut frontier = VecDeque::from([(root, 0u32)]);
    seen[root] = true;
    let mut inspected = 0;
    let mut max_depth = 0;

    while !queue.is_empty() && inspected < budget {
        let Some((node, depth)) = frontier.pop_front() else {
            break;
        };
        inspected += 1;
        max_depth = max_depth.max(depth);

        let mut skipped = VecDeque::with_capacity(queue.len());
        while let Some(v) = queue.pop_front() {
            if placer.host_taken(node) {
                skipped.push_back(v);
                skipped.extend(queue.drain(..));
                break;
            }
            if !placer.try_place(v, node) {
                skipped.push_back(v);
            }
        }
        queue = skipped;

        if depth < params.beta {
            for &(next, _) in net.neighbors(node) {
                if !seen[next] {
                    seen[next] = true;
                    frontier.push_back((next, depth + 1));
                }
            }
        }
    }

    match placer.finish(params) {
        Some(solution) => LocalEmbedOutcome {
            feasible: true,
            solution: Some(solution),
            inspected_count: inspected,
            max_depth_reached: max_depth,
        },
        None => LocalEmbedOutcome::infeasible(inspected, max_depth),
    }
}

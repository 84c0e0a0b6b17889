//! Substrate and virtual network graphs.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::GraphError;
use crate::resources::{Quantity, ResourceVector};

/// Dense 0-based physical node index.
pub type NodeId = usize;
/// Index into [`PhysicalNetwork::links`].
pub type LinkId = usize;
/// Globally unique virtual network request id.
pub type RequestId = u64;

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PhysicalNode {
    pub id: NodeId,
    pub capacity: ResourceVector,
    pub residual: ResourceVector,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PhysicalLink {
    /// Stored with the smaller id first.
    pub endpoints: (NodeId, NodeId),
    pub bandwidth_capacity: Quantity,
    pub bandwidth_residual: Quantity,
}

impl PhysicalLink {
    pub fn other(&self, node: NodeId) -> NodeId {
        if self.endpoints.0 == node {
            self.endpoints.1
        } else {
            self.endpoints.0
        }
    }
}

/// Undirected substrate graph with residual resources.
///
/// Adjacency lists are kept sorted by neighbor id so every traversal
/// visits neighbors in ascending order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "NetworkRepr", into = "NetworkRepr")]
pub struct PhysicalNetwork {
    nodes: Vec<PhysicalNode>,
    links: Vec<PhysicalLink>,
    adjacency: Vec<Vec<(NodeId, LinkId)>>,
}

fn normalize(a: usize, b: usize) -> (usize, usize) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

fn build_adjacency(
    node_count: usize,
    endpoints: impl Iterator<Item = (usize, usize)>,
) -> Result<Vec<Vec<(usize, usize)>>, GraphError> {
    let mut adjacency: Vec<Vec<(usize, usize)>> = vec![Vec::new(); node_count];
    for (id, (a, b)) in endpoints.enumerate() {
        if a >= node_count {
            return Err(GraphError::UnknownNode(a));
        }
        if b >= node_count {
            return Err(GraphError::UnknownNode(b));
        }
        if a == b {
            return Err(GraphError::SelfLoop(a));
        }
        adjacency[a].push((b, id));
        adjacency[b].push((a, id));
    }
    for (node, list) in adjacency.iter_mut().enumerate() {
        list.sort_unstable();
        if let Some(w) = list.windows(2).find(|w| w[0].0 == w[1].0) {
            let (x, y) = normalize(node, w[0].0);
            return Err(GraphError::DuplicateLink(x, y));
        }
    }
    Ok(adjacency)
}

fn connected(adjacency: &[Vec<(usize, usize)>]) -> bool {
    if adjacency.is_empty() {
        return true;
    }
    let mut seen = vec![false; adjacency.len()];
    let mut queue = VecDeque::from([0]);
    seen[0] = true;
    let mut count = 1;
    while let Some(u) = queue.pop_front() {
        for &(v, _) in &adjacency[u] {
            if !seen[v] {
                seen[v] = true;
                count += 1;
                queue.push_back(v);
            }
        }
    }
    count == adjacency.len()
}

impl PhysicalNetwork {
    /// Builds a network at full capacity. `links` holds
    /// `(a, b, bandwidth)` triples.
    pub fn new(capacities: Vec<ResourceVector>, links: Vec<(NodeId, NodeId, Quantity)>) -> Result<Self, GraphError> {
        if capacities.is_empty() {
            return Err(GraphError::Empty);
        }
        let adjacency = build_adjacency(capacities.len(), links.iter().map(|l| (l.0, l.1)))?;
        let nodes = capacities
            .into_iter()
            .enumerate()
            .map(|(id, capacity)| PhysicalNode { id, capacity, residual: capacity })
            .collect();
        let links = links
            .into_iter()
            .map(|(a, b, bw)| PhysicalLink {
                endpoints: normalize(a, b),
                bandwidth_capacity: bw,
                bandwidth_residual: bw,
            })
            .collect();
        Ok(PhysicalNetwork { nodes, links, adjacency })
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn link_count(&self) -> usize {
        self.links.len()
    }

    pub fn nodes(&self) -> &[PhysicalNode] {
        &self.nodes
    }

    pub fn links(&self) -> &[PhysicalLink] {
        &self.links
    }

    pub fn node(&self, id: NodeId) -> &PhysicalNode {
        &self.nodes[id]
    }

    pub fn link(&self, id: LinkId) -> &PhysicalLink {
        &self.links[id]
    }

    /// `(neighbor, link)` pairs in ascending neighbor order.
    pub fn neighbors(&self, node: NodeId) -> &[(NodeId, LinkId)] {
        &self.adjacency[node]
    }

    pub fn link_between(&self, a: NodeId, b: NodeId) -> Option<LinkId> {
        let list = self.adjacency.get(a)?;
        list.binary_search_by_key(&b, |&(n, _)| n).ok().map(|i| list[i].1)
    }

    pub fn contains(&self, node: NodeId) -> bool {
        node < self.nodes.len()
    }

    pub fn is_connected(&self) -> bool {
        connected(&self.adjacency)
    }

    /// Overrides a node's residual, e.g. to model pre-existing load in a
    /// fixture. Must stay within capacity.
    pub fn set_node_residual(&mut self, id: NodeId, residual: ResourceVector) -> Result<(), GraphError> {
        if !residual.fits_within(&self.nodes[id].capacity) {
            return Err(GraphError::ResidualAboveCapacity(format!("node {id}")));
        }
        self.nodes[id].residual = residual;
        Ok(())
    }

    pub fn set_link_residual(&mut self, id: LinkId, residual: Quantity) -> Result<(), GraphError> {
        if residual > self.links[id].bandwidth_capacity {
            return Err(GraphError::ResidualAboveCapacity(format!("link {id}")));
        }
        self.links[id].bandwidth_residual = residual;
        Ok(())
    }

    pub(crate) fn node_mut(&mut self, id: NodeId) -> &mut PhysicalNode {
        &mut self.nodes[id]
    }

    pub(crate) fn link_mut(&mut self, id: LinkId) -> &mut PhysicalLink {
        &mut self.links[id]
    }

    /// Mean over nodes of the allocated CPU fraction.
    pub fn mean_cpu_utilization(&self) -> f64 {
        mean(self.nodes.iter().map(|n| {
            let cap = n.capacity.cpu.milli();
            if cap == 0 {
                0.0
            } else {
                (cap - n.residual.cpu.milli()) as f64 / cap as f64
            }
        }))
    }

    /// Mean over links of the allocated bandwidth fraction.
    pub fn mean_link_utilization(&self) -> f64 {
        mean(self.links.iter().map(|l| {
            let cap = l.bandwidth_capacity.milli();
            if cap == 0 {
                0.0
            } else {
                (cap - l.bandwidth_residual.milli()) as f64 / cap as f64
            }
        }))
    }

    /// True when every residual equals its capacity.
    pub fn is_pristine(&self) -> bool {
        self.nodes.iter().all(|n| n.residual == n.capacity)
            && self.links.iter().all(|l| l.bandwidth_residual == l.bandwidth_capacity)
    }
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, count) = values.fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
    if count == 0 {
        0.0
    } else {
        sum / count as f64
    }
}

#[derive(Serialize, Deserialize)]
struct NetworkRepr {
    nodes: Vec<PhysicalNode>,
    links: Vec<PhysicalLink>,
}

impl From<PhysicalNetwork> for NetworkRepr {
    fn from(net: PhysicalNetwork) -> Self {
        NetworkRepr { nodes: net.nodes, links: net.links }
    }
}

impl TryFrom<NetworkRepr> for PhysicalNetwork {
    type Error = GraphError;

    fn try_from(repr: NetworkRepr) -> Result<Self, GraphError> {
        let mut net = PhysicalNetwork::new(
            repr.nodes.iter().map(|n| n.capacity).collect(),
            repr.links.iter().map(|l| (l.endpoints.0, l.endpoints.1, l.bandwidth_capacity)).collect(),
        )?;
        for (id, node) in repr.nodes.iter().enumerate() {
            net.set_node_residual(id, node.residual)?;
        }
        for (id, link) in repr.links.iter().enumerate() {
            net.set_link_residual(id, link.bandwidth_residual)?;
        }
        Ok(net)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct VirtualNode {
    pub id: usize,
    pub demand: ResourceVector,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct VirtualLink {
    /// Stored with the smaller id first.
    pub endpoints: (usize, usize),
    pub bandwidth: Quantity,
}

/// A virtual network request.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "VnrRepr")]
pub struct Vnr {
    pub request_id: RequestId,
    pub nodes: Vec<VirtualNode>,
    pub links: Vec<VirtualLink>,
    pub arrival_time: f64,
    pub lifetime: f64,
    #[serde(skip)]
    incident: Vec<Vec<usize>>,
}

impl Vnr {
    /// `links` holds `(a, b, bandwidth)` triples over virtual node ids.
    pub fn new(
        request_id: RequestId,
        demands: Vec<ResourceVector>,
        links: Vec<(usize, usize, Quantity)>,
        arrival_time: f64,
        lifetime: f64,
    ) -> Result<Self, GraphError> {
        if demands.is_empty() {
            return Err(GraphError::Empty);
        }
        if !(lifetime > 0.0) {
            return Err(GraphError::NonPositiveLifetime(lifetime));
        }
        let adjacency = build_adjacency(demands.len(), links.iter().map(|l| (l.0, l.1)))?;
        let incident = adjacency
            .iter()
            .map(|list| {
                let mut ids: Vec<usize> = list.iter().map(|&(_, l)| l).collect();
                ids.sort_unstable();
                ids
            })
            .collect();
        Ok(Vnr {
            request_id,
            nodes: demands.into_iter().enumerate().map(|(id, demand)| VirtualNode { id, demand }).collect(),
            links: links
                .into_iter()
                .map(|(a, b, bandwidth)| VirtualLink { endpoints: normalize(a, b), bandwidth })
                .collect(),
            arrival_time,
            lifetime,
            incident,
        })
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Virtual link ids touching `node`, ascending.
    pub fn incident_links(&self, node: usize) -> &[usize] {
        &self.incident[node]
    }

    pub fn is_connected(&self) -> bool {
        let adjacency = build_adjacency(self.nodes.len(), self.links.iter().map(|l| l.endpoints))
            .expect("validated at construction");
        connected(&adjacency)
    }

    /// Ordering key for "highest demand first": cpu + memory + gpu plus the
    /// bandwidth of every incident virtual link.
    pub fn demand_key(&self, node: usize) -> Quantity {
        self.nodes[node].demand.total() + self.incident[node].iter().map(|&l| self.links[l].bandwidth).sum()
    }

    /// Virtual node ids by descending demand key, ties by ascending id.
    pub fn demand_order(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.nodes.len()).collect();
        order.sort_by_key(|&v| (std::cmp::Reverse(self.demand_key(v)), v));
        order
    }
}

#[derive(Deserialize)]
struct VnrRepr {
    request_id: RequestId,
    nodes: Vec<VirtualNode>,
    links: Vec<VirtualLink>,
    arrival_time: f64,
    lifetime: f64,
}

impl TryFrom<VnrRepr> for Vnr {
    type Error = GraphError;

    fn try_from(repr: VnrRepr) -> Result<Self, GraphError> {
        Vnr::new(
            repr.request_id,
            repr.nodes.iter().map(|n| n.demand).collect(),
            repr.links.iter().map(|l| (l.endpoints.0, l.endpoints.1, l.bandwidth)).collect(),
            repr.arrival_time,
            repr.lifetime,
        )
    }
}

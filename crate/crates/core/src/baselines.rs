//! Centralized comparison embedders.
//!
//! All three place virtual nodes one at a time in a fixed order, routing
//! links with [`map_link`](crate::local::map_link) as soon as both ends are
//! placed, and give up on the first virtual node that fits nowhere.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::RankError;
use crate::local::{LocalEmbedOutcome, LocalEmbedParams, Placer};
use crate::network::{NodeId, PhysicalNetwork, Vnr};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BaselineKind {
    FirstFit,
    BestFit,
    Grc,
}

impl fmt::Display for BaselineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BaselineKind::FirstFit => "firstfit",
            BaselineKind::BestFit => "bestfit",
            BaselineKind::Grc => "grc",
        })
    }
}

impl FromStr for BaselineKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "firstfit" | "first_fit" => Ok(BaselineKind::FirstFit),
            "bestfit" | "best_fit" => Ok(BaselineKind::BestFit),
            "grc" => Ok(BaselineKind::Grc),
            other => Err(format!("unknown baseline {other:?}")),
        }
    }
}

/// Global-resource-capacity ranking settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GrcParams {
    pub damping: f64,
    pub tolerance: f64,
    pub max_iterations: u32,
}

impl Default for GrcParams {
    fn default() -> Self {
        GrcParams { damping: 0.85, tolerance: 1e-9, max_iterations: 500 }
    }
}

impl GrcParams {
    pub fn validate(&self) -> Result<(), crate::error::ConfigError> {
        use crate::error::ConfigError;
        if !(0.0..1.0).contains(&self.damping) {
            return Err(ConfigError::invalid("grc.damping", "must be in [0, 1)"));
        }
        if !(self.tolerance > 0.0) {
            return Err(ConfigError::invalid("grc.tolerance", "must be positive"));
        }
        if self.max_iterations == 0 {
            return Err(ConfigError::invalid("grc.max_iterations", "must be positive"));
        }
        Ok(())
    }
}

/// Places virtual nodes in demand order, each on the first candidate (in
/// the order `candidates` yields for it) where it fits and its links route.
fn greedy<F>(
    net: &PhysicalNetwork,
    vnr: &Vnr,
    order: &[usize],
    params: &LocalEmbedParams,
    mut candidates: F,
) -> LocalEmbedOutcome
where
    F: FnMut(&Placer<'_, '_>, usize) -> Vec<NodeId>,
{
    let mut placer = Placer::new(net, vnr, params);
    let mut inspected = 0;
    for &v in order {
        let list = candidates(&placer, v);
        let mut placed = false;
        for node in list {
            inspected += 1;
            if placer.try_place(v, node) {
                placed = true;
                break;
            }
        }
        if !placed {
            return LocalEmbedOutcome::infeasible(inspected, 0);
        }
    }
    let solution = placer.finish(params).expect("every virtual node placed");
    LocalEmbedOutcome { feasible: true, solution: Some(solution), inspected_count: inspected, max_depth_reached: 0 }
}

/// Each virtual node goes to the lowest-id server that can take it.
pub fn first_fit(net: &PhysicalNetwork, vnr: &Vnr, params: &LocalEmbedParams) -> LocalEmbedOutcome {
    let all: Vec<NodeId> = (0..net.node_count()).collect();
    greedy(net, vnr, &vnr.demand_order(), params, |_, _| all.clone())
}

/// Each virtual node goes to the server with the most residual CPU (net of
/// tentative placements) that can take it; ties go to the lower id.
pub fn best_fit(net: &PhysicalNetwork, vnr: &Vnr, params: &LocalEmbedParams) -> LocalEmbedOutcome {
    greedy(net, vnr, &vnr.demand_order(), params, |placer, _| {
        let mut nodes: Vec<NodeId> = (0..net.node_count()).collect();
        nodes.sort_by_key(|&n| (std::cmp::Reverse(placer.scratch.node_available(n).cpu), n));
        nodes
    })
}

/// Damped fixed point `r = (1 - d) c + d T r`.
///
/// `capacity` is normalized to sum to one (uniform when it sums to zero).
/// Column `j` of `T` spreads node `j`'s rank over its neighbors in
/// proportion to the connecting link weights; a node without weighted links
/// keeps its own rank. Iteration starts from `c` and stops when the largest
/// change drops below `tolerance`.
pub fn grc_rank_weighted(
    capacity: &[f64],
    edges: &[(usize, usize, f64)],
    params: &GrcParams,
) -> Result<Vec<f64>, RankError> {
    let n = capacity.len();
    if n == 0 {
        return Err(RankError::Empty);
    }
    let total: f64 = capacity.iter().sum();
    let c: Vec<f64> = if total > 0.0 { capacity.iter().map(|x| x / total).collect() } else { vec![1.0 / n as f64; n] };
    let mut out_weight = vec![0.0; n];
    for &(a, b, w) in edges {
        out_weight[a] += w;
        out_weight[b] += w;
    }
    let d = params.damping;
    let mut rank = c.clone();
    let mut next = vec![0.0; n];
    let mut change = f64::INFINITY;
    for _ in 0..params.max_iterations {
        for (i, slot) in next.iter_mut().enumerate() {
            *slot = if out_weight[i] > 0.0 { 0.0 } else { rank[i] };
        }
        for &(a, b, w) in edges {
            if w > 0.0 {
                next[b] += rank[a] * w / out_weight[a];
                next[a] += rank[b] * w / out_weight[b];
            }
        }
        change = 0.0;
        for i in 0..n {
            let v = (1.0 - d) * c[i] + d * next[i];
            change = f64::max(change, (v - rank[i]).abs());
            rank[i] = v;
        }
        if change < params.tolerance {
            return Ok(rank);
        }
    }
    Err(RankError::NotConverged { iterations: params.max_iterations, last_change: change })
}

/// GRC rank of every server from residual CPU and residual bandwidth.
pub fn grc_rank(net: &PhysicalNetwork, params: &GrcParams) -> Result<Vec<f64>, RankError> {
    let capacity: Vec<f64> = net.nodes().iter().map(|n| n.residual.cpu.units()).collect();
    let edges: Vec<(usize, usize, f64)> =
        net.links().iter().map(|l| (l.endpoints.0, l.endpoints.1, l.bandwidth_residual.units())).collect();
    grc_rank_weighted(&capacity, &edges, params)
}

/// Same ranking over a request: CPU demand as capacity, virtual link
/// bandwidth as weights.
pub fn grc_rank_vnr(vnr: &Vnr, params: &GrcParams) -> Result<Vec<f64>, RankError> {
    let capacity: Vec<f64> = vnr.nodes.iter().map(|n| n.demand.cpu.units()).collect();
    let edges: Vec<(usize, usize, f64)> =
        vnr.links.iter().map(|l| (l.endpoints.0, l.endpoints.1, l.bandwidth.units())).collect();
    grc_rank_weighted(&capacity, &edges, params)
}

fn by_rank_desc(rank: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..rank.len()).collect();
    order.sort_by(|&a, &b| rank[b].total_cmp(&rank[a]).then(a.cmp(&b)));
    order
}

/// Virtual nodes in descending GRC rank each go to the highest-ranked
/// server that can take them.
pub fn grc_embed(
    net: &PhysicalNetwork,
    vnr: &Vnr,
    params: &LocalEmbedParams,
    grc: &GrcParams,
) -> Result<LocalEmbedOutcome, RankError> {
    let physical = by_rank_desc(&grc_rank(net, grc)?);
    let virtual_order = by_rank_desc(&grc_rank_vnr(vnr, grc)?);
    Ok(greedy(net, vnr, &virtual_order, params, |_, _| physical.clone()))
}

/// Dispatches to the named baseline.
pub fn run_baseline(
    kind: BaselineKind,
    net: &PhysicalNetwork,
    vnr: &Vnr,
    params: &LocalEmbedParams,
    grc: &GrcParams,
) -> Result<LocalEmbedOutcome, RankError> {
    Ok(match kind {
        BaselineKind::FirstFit => first_fit(net, vnr, params),
        BaselineKind::BestFit => best_fit(net, vnr, params),
        BaselineKind::Grc => grc_embed(net, vnr, params, grc)?,
    })
}

//! Discrete-event simulation of request arrivals and departures.
//!
//! The workload (substrate, arrival instants, requests, primaries) is drawn
//! up front from streams that no embedder touches, so every algorithm sees
//! the same requests in the same order. Requests are handled one at a time;
//! an accepted request departs after its lifetime and its resources are
//! returned exactly.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::baselines::{run_baseline, BaselineKind, GrcParams};
use crate::embedding::{allocate, release, AllocationLedger, EmbeddingSolution};
use crate::error::{ConfigError, GenerateError, SimError};
use crate::generate::{arrival_times, generate_physical_network, generate_vnr, pick_primary, GeneratorConfig};
use crate::local::LocalEmbedParams;
use crate::network::{NodeId, PhysicalNetwork, RequestId, Vnr};
use crate::protocol::{run_election, ElectionParams, ElectionTrace, FifoTransport};
use crate::rng::{stream, Stream};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Devine,
    FirstFit,
    BestFit,
    Grc,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [Algorithm::Devine, Algorithm::FirstFit, Algorithm::BestFit, Algorithm::Grc];

    fn baseline(self) -> Option<BaselineKind> {
        match self {
            Algorithm::Devine => None,
            Algorithm::FirstFit => Some(BaselineKind::FirstFit),
            Algorithm::BestFit => Some(BaselineKind::BestFit),
            Algorithm::Grc => Some(BaselineKind::Grc),
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.baseline() {
            None => f.write_str("devine"),
            Some(kind) => kind.fmt(f),
        }
    }
}

/// Error text for algorithms that are deliberately absent.
pub const NOT_IMPLEMENTED_HINT: &str =
    "not implemented: NeuroViNE needs a Hopfield subgraph extractor that is out of scope (see README, \"Algorithms\")";

impl FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "devine" => Ok(Algorithm::Devine),
            "neurovine" => Err(format!("neurovine: {NOT_IMPLEMENTED_HINT}")),
            other => other
                .parse::<BaselineKind>()
                .map(|k| match k {
                    BaselineKind::FirstFit => Algorithm::FirstFit,
                    BaselineKind::BestFit => Algorithm::BestFit,
                    BaselineKind::Grc => Algorithm::Grc,
                })
                .map_err(|_| format!("unknown algorithm {other:?}; expected devine, firstfit, bestfit or grc")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub generator: GeneratorConfig,
    pub algorithm: Algorithm,
    /// Ring size `L` for DeViNE.
    pub leaders: usize,
    /// Local embedding and metric settings; `x`, `y`, `path_hop_cap` and
    /// `injective` apply to the baselines too.
    pub embed: LocalEmbedParams,
    pub grc: GrcParams,
    pub duration: f64,
    pub sample_interval: f64,
    /// How many election traces to keep, starting from the first arrival.
    pub trace_sample: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            generator: GeneratorConfig::default(),
            algorithm: Algorithm::Devine,
            leaders: 5,
            embed: LocalEmbedParams::default(),
            grc: GrcParams::default(),
            duration: 2000.0,
            sample_interval: 10.0,
            trace_sample: 20,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.generator.validate()?;
        self.embed.validate()?;
        self.grc.validate()?;
        if self.leaders == 0 || self.leaders > self.generator.server_count {
            return Err(ConfigError::invalid(
                "leaders",
                format!("need 1 <= L <= server_count ({}), got {}", self.generator.server_count, self.leaders),
            ));
        }
        if !(self.duration >= 0.0 && self.duration.is_finite()) {
            return Err(ConfigError::invalid("duration", "must be finite and nonnegative"));
        }
        if !(self.sample_interval > 0.0) {
            return Err(ConfigError::invalid("sample_interval", "must be positive"));
        }
        Ok(())
    }

    pub fn seed(&self) -> u64 {
        self.generator.seed
    }

    pub fn election_params(&self) -> ElectionParams {
        ElectionParams { leaders: self.leaders, local: self.embed.clone() }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Arrival {
    pub vnr: Vnr,
    pub primary: NodeId,
}

/// Everything random about a run that does not depend on the algorithm.
#[derive(Clone, Debug, PartialEq)]
pub struct Workload {
    pub network: PhysicalNetwork,
    pub arrivals: Vec<Arrival>,
}

pub fn generate_workload(cfg: &GeneratorConfig, duration: f64) -> Result<Workload, GenerateError> {
    let seed = cfg.seed;
    let network = generate_physical_network(cfg, &mut stream(seed, Stream::Topology))?;
    let times = arrival_times(cfg, duration, &mut stream(seed, Stream::Arrivals));
    let mut vnr_rng = stream(seed, Stream::Vnr);
    let mut primary_rng = stream(seed, Stream::Primaries);
    let mut arrivals = Vec::with_capacity(times.len());
    for (i, t) in times.into_iter().enumerate() {
        arrivals.push(Arrival {
            vnr: generate_vnr(cfg, i as RequestId, t, &mut vnr_rng)?,
            primary: pick_primary(&network, &mut primary_rng),
        });
    }
    Ok(Workload { network, arrivals })
}

/// Short stable fingerprint of a request, for workload comparisons.
pub fn vnr_hash(vnr: &Vnr) -> String {
    let bytes = serde_json::to_vec(vnr).expect("requests serialize");
    let digest = Sha256::digest(&bytes);
    digest[..8].iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum EventKind {
    Departure(RequestId),
    Arrival(usize),
}

/// Ordered by time, then departures before arrivals, then request id.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SimEvent {
    pub time: f64,
    pub kind: EventKind,
}

impl SimEvent {
    fn key(&self) -> (u8, u64) {
        match self.kind {
            EventKind::Departure(id) => (0, id),
            EventKind::Arrival(i) => (1, i as u64),
        }
    }
}

impl Eq for SimEvent {}

impl Ord for SimEvent {
    fn cmp(&self, other: &Self) -> Ordering {
        self.time.total_cmp(&other.time).then_with(|| self.key().cmp(&other.key()))
    }
}

impl PartialOrd for SimEvent {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Outcome of one arrival.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArrivalRecord {
    pub index: usize,
    pub request_id: RequestId,
    pub time: f64,
    pub primary: NodeId,
    pub virtual_nodes: usize,
    pub virtual_links: usize,
    pub vnr_hash: String,
    pub accepted: bool,
    pub revenue: f64,
    pub cost: f64,
    pub embedding_messages: usize,
    pub embedded_messages: usize,
    pub acceptance_ratio: f64,
}

/// State sampled every `sample_interval` time units.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Epoch {
    pub time: f64,
    pub arrivals: usize,
    pub accepted: usize,
    pub acceptance_ratio: f64,
    pub revenue: f64,
    pub cost: f64,
    pub revenue_to_cost: f64,
    pub cpu_utilization: f64,
    pub link_utilization: f64,
    pub live_requests: usize,
    /// Mean transported messages per arrival so far (DeViNE only).
    pub mean_messages: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsSeries {
    pub epochs: Vec<Epoch>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub algorithm: Algorithm,
    pub seed: u64,
    pub duration: f64,
    pub arrivals: usize,
    pub accepted: usize,
    pub acceptance_ratio: f64,
    pub revenue: f64,
    pub cost: f64,
    pub revenue_to_cost: f64,
    /// Cost per accepted request.
    pub mean_cost: f64,
    /// Revenue per accepted request.
    pub mean_revenue: f64,
    /// Averages over sampled epochs.
    pub mean_cpu_utilization: f64,
    pub mean_link_utilization: f64,
    pub mean_embedding_messages: f64,
    pub mean_embedded_messages: f64,
    pub max_embedding_messages: usize,
    pub conservation_ok: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub summary: Summary,
    pub series: MetricsSeries,
    pub arrivals: Vec<ArrivalRecord>,
    pub traces: Vec<ElectionTrace>,
}

fn ratio(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}

#[derive(Default)]
struct Totals {
    arrivals: usize,
    accepted: usize,
    revenue: f64,
    cost: f64,
    messages: usize,
    embedding: usize,
    embedded: usize,
    max_embedding: usize,
}

impl Totals {
    fn epoch(&self, time: f64, net: &PhysicalNetwork, live: usize) -> Epoch {
        Epoch {
            time,
            arrivals: self.arrivals,
            accepted: self.accepted,
            acceptance_ratio: ratio(self.accepted as f64, self.arrivals as f64),
            revenue: self.revenue,
            cost: self.cost,
            revenue_to_cost: ratio(self.revenue, self.cost),
            cpu_utilization: net.mean_cpu_utilization(),
            link_utilization: net.mean_link_utilization(),
            live_requests: live,
            mean_messages: ratio(self.messages as f64, self.arrivals as f64),
        }
    }
}

struct Embedded {
    solution: Option<EmbeddingSolution>,
    trace: Option<ElectionTrace>,
}

pub fn run_simulation(cfg: &SimConfig) -> Result<SimReport, SimError> {
    cfg.validate()?;
    let workload = generate_workload(&cfg.generator, cfg.duration)?;
    run_workload(cfg, &workload)
}

/// Simulates `cfg.algorithm` over a pre-drawn workload.
pub fn run_workload(cfg: &SimConfig, workload: &Workload) -> Result<SimReport, SimError> {
    cfg.validate()?;
    let mut net = workload.network.clone();
    let mut ledger = AllocationLedger::new();
    let mut leader_rng = stream(cfg.seed(), Stream::Leaders);
    let election = cfg.election_params();

    let mut heap: BinaryHeap<Reverse<SimEvent>> = workload
        .arrivals
        .iter()
        .enumerate()
        .filter(|(_, a)| a.vnr.arrival_time < cfg.duration)
        .map(|(i, a)| Reverse(SimEvent { time: a.vnr.arrival_time, kind: EventKind::Arrival(i) }))
        .collect();

    let mut totals = Totals::default();
    let mut series = MetricsSeries::default();
    let mut records = Vec::new();
    let mut traces = Vec::new();
    let mut next_sample = cfg.sample_interval;

    while let Some(Reverse(event)) = heap.pop() {
        if event.time >= cfg.duration {
            break;
        }
        while next_sample < event.time {
            series.epochs.push(totals.epoch(next_sample, &net, ledger.len()));
            next_sample += cfg.sample_interval;
        }
        match event.kind {
            EventKind::Departure(id) => release(&mut net, id, &mut ledger)?,
            EventKind::Arrival(index) => {
                let arrival = &workload.arrivals[index];
                let vnr = &arrival.vnr;
                let outcome = match cfg.algorithm.baseline() {
                    None => {
                        let result = run_election(
                            &mut net,
                            &mut ledger,
                            vnr,
                            arrival.primary,
                            &election,
                            &mut FifoTransport::new(),
                            &mut leader_rng,
                        )?;
                        Embedded { solution: result.solution, trace: Some(result.trace) }
                    }
                    Some(kind) => {
                        let out = run_baseline(kind, &net, vnr, &cfg.embed, &cfg.grc)?;
                        if let Some(sol) = &out.solution {
                            allocate(&mut net, vnr, sol, &mut ledger, cfg.embed.injective)?;
                        }
                        Embedded { solution: out.solution, trace: None }
                    }
                };

                totals.arrivals += 1;
                let (embedding, embedded) =
                    outcome.trace.as_ref().map_or((0, 0), |t| (t.embedding_messages, t.embedded_messages));
                totals.embedding += embedding;
                totals.embedded += embedded;
                totals.messages += embedding + embedded;
                totals.max_embedding = totals.max_embedding.max(embedding);
                if let Some(trace) = outcome.trace {
                    if traces.len() < cfg.trace_sample {
                        traces.push(trace);
                    }
                }
                let (revenue, cost) = match &outcome.solution {
                    Some(sol) => {
                        totals.accepted += 1;
                        totals.revenue += sol.revenue;
                        totals.cost += sol.cost;
                        heap.push(Reverse(SimEvent {
                            time: event.time + vnr.lifetime,
                            kind: EventKind::Departure(vnr.request_id),
                        }));
                        (sol.revenue, sol.cost)
                    }
                    None => (0.0, 0.0),
                };
                records.push(ArrivalRecord {
                    index,
                    request_id: vnr.request_id,
                    time: event.time,
                    primary: arrival.primary,
                    virtual_nodes: vnr.node_count(),
                    virtual_links: vnr.links.len(),
                    vnr_hash: vnr_hash(vnr),
                    accepted: outcome.solution.is_some(),
                    revenue,
                    cost,
                    embedding_messages: embedding,
                    embedded_messages: embedded,
                    acceptance_ratio: ratio(totals.accepted as f64, totals.arrivals as f64),
                });
            }
        }
    }
    while next_sample <= cfg.duration {
        series.epochs.push(totals.epoch(next_sample, &net, ledger.len()));
        next_sample += cfg.sample_interval;
    }

    ledger.check_conservation(&net).map_err(SimError::Conservation)?;
    let live: Vec<RequestId> = ledger.request_ids().collect();
    for id in live {
        release(&mut net, id, &mut ledger)?;
    }
    if !net.is_pristine() {
        return Err(SimError::Conservation("residuals differ from capacity after final release".into()));
    }

    let epochs = &series.epochs;
    let epoch_mean = |f: fn(&Epoch) -> f64| ratio(epochs.iter().map(f).sum(), epochs.len() as f64);
    let summary = Summary {
        algorithm: cfg.algorithm,
        seed: cfg.seed(),
        duration: cfg.duration,
        arrivals: totals.arrivals,
        accepted: totals.accepted,
        acceptance_ratio: ratio(totals.accepted as f64, totals.arrivals as f64),
        revenue: totals.revenue,
        cost: totals.cost,
        revenue_to_cost: ratio(totals.revenue, totals.cost),
        mean_cost: ratio(totals.cost, totals.accepted as f64),
        mean_revenue: ratio(totals.revenue, totals.accepted as f64),
        mean_cpu_utilization: epoch_mean(|e| e.cpu_utilization),
        mean_link_utilization: epoch_mean(|e| e.link_utilization),
        mean_embedding_messages: ratio(totals.embedding as f64, totals.arrivals as f64),
        mean_embedded_messages: ratio(totals.embedded as f64, totals.arrivals as f64),
        max_embedding_messages: totals.max_embedding,
        conservation_ok: true,
    };
    Ok(SimReport { summary, series, arrivals: records, traces })
}

/// Runs every config, sharing one workload among configs whose generator
/// settings and duration agree. Runs execute in parallel; results come back
/// in input order.
pub fn compare_algorithms(cfgs: &[SimConfig]) -> Result<Vec<SimReport>, SimError> {
    for cfg in cfgs {
        cfg.validate()?;
    }
    let mut keys: Vec<(&GeneratorConfig, f64)> = Vec::new();
    let mut slot = Vec::with_capacity(cfgs.len());
    for cfg in cfgs {
        let key = (&cfg.generator, cfg.duration);
        let idx = keys.iter().position(|k| *k == key).unwrap_or_else(|| {
            keys.push(key);
            keys.len() - 1
        });
        slot.push(idx);
    }
    let workloads: Vec<Workload> = keys.par_iter().map(|(g, d)| generate_workload(g, *d)).collect::<Result<_, _>>()?;
    cfgs.par_iter().zip(slot.par_iter()).map(|(cfg, &i)| run_workload(cfg, &workloads[i])).collect()
}

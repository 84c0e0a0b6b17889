//! Ring election over leader-local embeddings.
//!
//! The primary computes its own candidate and sends an EMBEDDING message
//! around the ring. Each leader compares the circulating candidate with
//! its own and either forwards it or replaces it. Candidates are ordered
//! by `(metric, -node id)`, so equal metrics go to the lower node id and
//! exactly one candidate can complete a full circuit. A leader whose own
//! embedding failed never replaces the circulating candidate. When a
//! leader's own candidate comes back to it, it circulates an EMBEDDED
//! message carrying the solution; once that returns, it allocates.
//!
//! With `L >= 2` this costs at most `2L - 1` EMBEDDING and exactly `L`
//! EMBEDDED messages. A single-leader ring decides locally with no
//! transported messages.

use std::cmp::Ordering;
use std::collections::btree_map::Entry;
use std::collections::{BTreeMap, HashSet, VecDeque};
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::embedding::{allocate, AllocationLedger, EmbeddingSolution};
use crate::error::{LedgerError, ProtocolError};
use crate::local::{embed, LocalEmbedOutcome, LocalEmbedParams};
use crate::network::{NodeId, PhysicalNetwork, RequestId, Vnr};

/// Circular list of distinct leaders; the first member is the primary.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LeaderRing {
    members: Vec<NodeId>,
}

impl LeaderRing {
    pub fn new(members: Vec<NodeId>) -> Result<Self, ProtocolError> {
        if members.is_empty() {
            return Err(ProtocolError::LeaderCount { requested: 0, available: 0 });
        }
        let mut seen = HashSet::with_capacity(members.len());
        for &m in &members {
            if !seen.insert(m) {
                return Err(ProtocolError::DuplicateLeader(m));
            }
        }
        Ok(LeaderRing { members })
    }

    pub fn primary(&self) -> NodeId {
        self.members[0]
    }

    pub fn members(&self) -> &[NodeId] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, node: NodeId) -> bool {
        self.members.contains(&node)
    }

    pub fn position(&self, node: NodeId) -> Option<usize> {
        self.members.iter().position(|&m| m == node)
    }

    /// Next leader after `node`, wrapping around.
    pub fn successor(&self, node: NodeId) -> Option<NodeId> {
        self.position(node).map(|i| self.members[(i + 1) % self.members.len()])
    }
}

/// A leader's bid: its node id and metric, `None` when its local
/// embedding failed.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bid {
    pub node: NodeId,
    pub metric: Option<f64>,
}

impl Bid {
    /// Total order on `(metric, -node)` with failed bids lowest.
    pub fn key_cmp(&self, other: &Bid) -> Ordering {
        match (self.metric, other.metric) {
            (None, None) => Ordering::Equal,
            (None, Some(_)) => Ordering::Less,
            (Some(_), None) => Ordering::Greater,
            (Some(a), Some(b)) => a.total_cmp(&b),
        }
        .then_with(|| other.node.cmp(&self.node))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingMsg {
    pub originator: NodeId,
    /// `None` is the infeasible sentinel.
    pub metric: Option<f64>,
    pub ring: LeaderRing,
    pub request_id: RequestId,
}

impl EmbeddingMsg {
    pub fn bid(&self) -> Bid {
        Bid { node: self.originator, metric: self.metric }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmbeddedMsg {
    pub winner: NodeId,
    /// Absent when even the winner could not embed the request.
    pub solution: Option<EmbeddingSolution>,
    pub ring: LeaderRing,
    pub request_id: RequestId,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Message {
    Embedding(EmbeddingMsg),
    Embedded(EmbeddedMsg),
}

impl Message {
    pub fn kind(&self) -> MessageKind {
        match self {
            Message::Embedding(_) => MessageKind::Embedding,
            Message::Embedded(_) => MessageKind::Embedded,
        }
    }

    pub fn request_id(&self) -> RequestId {
        match self {
            Message::Embedding(m) => m.request_id,
            Message::Embedded(m) => m.request_id,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum MessageKind {
    Embedding,
    Embedded,
}

impl fmt::Display for MessageKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MessageKind::Embedding => "EMBEDDING",
            MessageKind::Embedded => "EMBEDDED",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    pub from: NodeId,
    pub to: NodeId,
    pub message: Message,
}

/// Message delivery between leaders. Implementations must keep FIFO order
/// per `(from, to)` pair.
pub trait Transport {
    fn send(&mut self, envelope: Envelope) -> Result<(), ProtocolError>;
    /// Next message to deliver, `None` when idle.
    fn recv(&mut self) -> Result<Option<Envelope>, ProtocolError>;
}

/// Single global FIFO queue; reliable and in order.
#[derive(Debug, Default)]
pub struct FifoTransport {
    queue: VecDeque<Envelope>,
    sent: usize,
}

impl FifoTransport {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn sent(&self) -> usize {
        self.sent
    }
}

impl Transport for FifoTransport {
    fn send(&mut self, envelope: Envelope) -> Result<(), ProtocolError> {
        self.sent += 1;
        self.queue.push_back(envelope);
        Ok(())
    }

    fn recv(&mut self) -> Result<Option<Envelope>, ProtocolError> {
        Ok(self.queue.pop_front())
    }
}

/// Where a leader gets its local embedding for a request.
pub trait CandidateSource {
    /// `None` when `node` has no knowledge of `request_id`.
    fn evaluate(&mut self, node: NodeId, request_id: RequestId) -> Option<LocalEmbedOutcome>;
}

/// Runs [`embed`] against one network snapshot for one request.
pub struct SnapshotEmbedder<'a> {
    pub net: &'a PhysicalNetwork,
    pub vnr: &'a Vnr,
    pub params: &'a LocalEmbedParams,
}

impl CandidateSource for SnapshotEmbedder<'_> {
    fn evaluate(&mut self, node: NodeId, request_id: RequestId) -> Option<LocalEmbedOutcome> {
        (request_id == self.vnr.request_id).then(|| embed(node, self.net, self.vnr, self.params))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Idle,
    Electing,
    Announcing,
    Done,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Decision {
    pub request_id: RequestId,
    pub winner: NodeId,
    pub solution: Option<EmbeddingSolution>,
}

/// What a leader wants done after handling a message.
#[derive(Clone, Debug, PartialEq)]
pub enum Action {
    Send(Envelope),
    /// The winner's announcement came back; the election is over.
    Decide(Decision),
    Dropped {
        request_id: RequestId,
        reason: String,
    },
}

#[derive(Clone, Debug)]
struct RequestState {
    outcome: Option<LocalEmbedOutcome>,
    embed_calls: u32,
    phase: Phase,
    announced: Option<Decision>,
}

impl Default for RequestState {
    fn default() -> Self {
        RequestState { outcome: None, embed_calls: 0, phase: Phase::Idle, announced: None }
    }
}

/// Protocol state of one leader, across any number of requests.
#[derive(Clone, Debug)]
pub struct LeaderState {
    node: NodeId,
    requests: BTreeMap<RequestId, RequestState>,
}

impl LeaderState {
    pub fn new(node: NodeId) -> Self {
        LeaderState { node, requests: BTreeMap::new() }
    }

    pub fn node(&self) -> NodeId {
        self.node
    }

    pub fn phase(&self, request_id: RequestId) -> Phase {
        self.requests.get(&request_id).map_or(Phase::Idle, |r| r.phase)
    }

    pub fn outcome(&self, request_id: RequestId) -> Option<&LocalEmbedOutcome> {
        self.requests.get(&request_id)?.outcome.as_ref()
    }

    /// Times the local embedding ran for `request_id`; at most one.
    pub fn embed_calls(&self, request_id: RequestId) -> u32 {
        self.requests.get(&request_id).map_or(0, |r| r.embed_calls)
    }

    /// The decision this leader learned from the EMBEDDED circuit.
    pub fn announced(&self, request_id: RequestId) -> Option<&Decision> {
        self.requests.get(&request_id)?.announced.as_ref()
    }

    fn bid(&mut self, request_id: RequestId, src: &mut dyn CandidateSource) -> Option<Bid> {
        let node = self.node;
        if let Entry::Vacant(slot) = self.requests.entry(request_id) {
            let outcome = src.evaluate(node, request_id)?;
            slot.insert(RequestState { outcome: Some(outcome), embed_calls: 1, ..Default::default() });
        }
        let state = &self.requests[&request_id];
        Some(Bid { node, metric: state.outcome.as_ref().and_then(LocalEmbedOutcome::metric) })
    }

    fn send(&self, ring: &LeaderRing, message: Message) -> Action {
        Action::Send(Envelope {
            from: self.node,
            to: ring.successor(self.node).expect("sender is a ring member"),
            message,
        })
    }

    fn drop_msg(request_id: RequestId, reason: impl Into<String>) -> Vec<Action> {
        vec![Action::Dropped { request_id, reason: reason.into() }]
    }

    /// Starts an election as the ring's primary.
    pub fn initiate(&mut self, ring: &LeaderRing, request_id: RequestId, src: &mut dyn CandidateSource) -> Vec<Action> {
        if ring.primary() != self.node {
            return Self::drop_msg(request_id, format!("node {} is not the primary", self.node));
        }
        let Some(bid) = self.bid(request_id, src) else {
            return Self::drop_msg(request_id, "unknown request");
        };
        self.requests.get_mut(&request_id).expect("bid inserted").phase = Phase::Electing;
        vec![self.send(
            ring,
            Message::Embedding(EmbeddingMsg {
                originator: bid.node,
                metric: bid.metric,
                ring: ring.clone(),
                request_id,
            }),
        )]
    }

    pub fn handle_embedding(&mut self, msg: EmbeddingMsg, src: &mut dyn CandidateSource) -> Vec<Action> {
        let request_id = msg.request_id;
        if !msg.ring.contains(self.node) {
            return Self::drop_msg(request_id, format!("node {} is not in the ring", self.node));
        }
        if msg.originator == self.node {
            // Our candidate went all the way round unbeaten.
            let Some(state) = self.requests.get_mut(&request_id) else {
                return Self::drop_msg(request_id, "own candidate for a request never evaluated");
            };
            state.phase = Phase::Announcing;
            let solution = state.outcome.as_ref().and_then(|o| o.solution.clone());
            return vec![self.send(
                &msg.ring,
                Message::Embedded(EmbeddedMsg { winner: self.node, solution, ring: msg.ring.clone(), request_id }),
            )];
        }
        let Some(own) = self.bid(request_id, src) else {
            return Self::drop_msg(request_id, "unknown request");
        };
        self.requests.get_mut(&request_id).expect("bid inserted").phase = Phase::Electing;
        let forward = if own.metric.is_none() || msg.bid().key_cmp(&own) == Ordering::Greater {
            msg
        } else {
            EmbeddingMsg { originator: own.node, metric: own.metric, ..msg }
        };
        vec![self.send(&forward.ring.clone(), Message::Embedding(forward))]
    }

    pub fn handle_embedded(&mut self, msg: EmbeddedMsg) -> Vec<Action> {
        let request_id = msg.request_id;
        if !msg.ring.contains(self.node) {
            return Self::drop_msg(request_id, format!("node {} is not in the ring", self.node));
        }
        let Some(state) = self.requests.get_mut(&request_id) else {
            return Self::drop_msg(request_id, "unknown request");
        };
        let decision = Decision { request_id, winner: msg.winner, solution: msg.solution.clone() };
        state.phase = Phase::Done;
        state.announced = Some(decision.clone());
        if msg.winner == self.node {
            return vec![Action::Decide(decision)];
        }
        vec![self.send(&msg.ring.clone(), Message::Embedded(msg))]
    }

    pub fn handle(&mut self, message: Message, src: &mut dyn CandidateSource) -> Vec<Action> {
        match message {
            Message::Embedding(m) => self.handle_embedding(m, src),
            Message::Embedded(m) => self.handle_embedded(m),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceEvent {
    pub request_id: RequestId,
    pub seq: usize,
    pub from: NodeId,
    pub to: NodeId,
    pub kind: MessageKind,
    /// Originator for EMBEDDING, winner for EMBEDDED.
    pub candidate: NodeId,
    pub metric: Option<f64>,
}

/// Every transported message of one election, in delivery order.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ElectionTrace {
    pub events: Vec<TraceEvent>,
    pub notes: Vec<String>,
    pub embedding_messages: usize,
    pub embedded_messages: usize,
}

impl ElectionTrace {
    fn record(&mut self, envelope: &Envelope) {
        let (candidate, metric) = match &envelope.message {
            Message::Embedding(m) => {
                self.embedding_messages += 1;
                (m.originator, m.metric)
            }
            Message::Embedded(m) => {
                self.embedded_messages += 1;
                (m.winner, m.solution.as_ref().map(|s| s.metric))
            }
        };
        self.events.push(TraceEvent {
            request_id: envelope.message.request_id(),
            seq: self.events.len(),
            from: envelope.from,
            to: envelope.to,
            kind: envelope.message.kind(),
            candidate,
            metric,
        });
    }

    pub fn total_messages(&self) -> usize {
        self.embedding_messages + self.embedded_messages
    }

    /// One JSON object per event, newline terminated.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for e in &self.events {
            out.push_str(&serde_json::to_string(e).expect("trace events serialize"));
            out.push('\n');
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ElectionOutcome {
    pub ring: LeaderRing,
    pub decision: Decision,
    pub trace: ElectionTrace,
    /// Local embedding runs per leader, in ring order.
    pub embed_calls: Vec<u32>,
    /// Each leader's cached local outcome, in ring order.
    pub outcomes: Vec<Option<LocalEmbedOutcome>>,
}

/// Drives one election to completion over `transport`. Messages a leader
/// addresses to itself (single-leader rings) are handled in place and
/// never reach the transport.
pub fn elect(
    ring: &LeaderRing,
    request_id: RequestId,
    src: &mut dyn CandidateSource,
    transport: &mut dyn Transport,
) -> Result<ElectionOutcome, ProtocolError> {
    let mut leaders: BTreeMap<NodeId, LeaderState> = ring.members().iter().map(|&n| (n, LeaderState::new(n))).collect();
    let mut trace = ElectionTrace::default();
    let mut decision = None;
    let mut local: VecDeque<Envelope> = VecDeque::new();
    let limit = 4 * ring.len() + 4;

    let mut pending = leaders.get_mut(&ring.primary()).expect("primary is a member").initiate(ring, request_id, src);
    loop {
        for action in pending.drain(..) {
            match action {
                Action::Send(env) if env.from == env.to => local.push_back(env),
                Action::Send(env) => transport.send(env)?,
                Action::Decide(d) => decision = Some(d),
                Action::Dropped { request_id, reason } => trace.notes.push(format!("request {request_id}: {reason}")),
            }
        }
        if decision.is_some() {
            break;
        }
        let env = match local.pop_front() {
            Some(env) => env,
            None => match transport.recv()? {
                Some(env) => {
                    trace.record(&env);
                    if trace.total_messages() > limit {
                        return Err(ProtocolError::Runaway(limit));
                    }
                    env
                }
                None => return Err(ProtocolError::NoDecision(request_id)),
            },
        };
        let Some(leader) = leaders.get_mut(&env.to) else {
            trace.notes.push(format!("message to non-member {}", env.to));
            continue;
        };
        pending = leader.handle(env.message, src);
    }

    let members = ring.members();
    Ok(ElectionOutcome {
        ring: ring.clone(),
        decision: decision.expect("loop exits on decision"),
        trace,
        embed_calls: members.iter().map(|n| leaders[n].embed_calls(request_id)).collect(),
        outcomes: members.iter().map(|n| leaders[n].outcome(request_id).cloned()).collect(),
    })
}

/// The primary plus `l - 1` distinct other servers drawn uniformly, in
/// draw order.
pub fn select_leaders<R: Rng + ?Sized>(
    net: &PhysicalNetwork,
    primary: NodeId,
    l: usize,
    rng: &mut R,
) -> Result<LeaderRing, ProtocolError> {
    let n = net.node_count();
    if !net.contains(primary) {
        return Err(ProtocolError::UnknownPrimary(primary));
    }
    if l == 0 || l > n {
        return Err(ProtocolError::LeaderCount { requested: l, available: n });
    }
    let mut members = Vec::with_capacity(l);
    members.push(primary);
    members
        .extend(rand::seq::index::sample(rng, n - 1, l - 1).into_iter().map(|i| if i < primary { i } else { i + 1 }));
    LeaderRing::new(members)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ElectionParams {
    /// Ring size `L`, primary included.
    pub leaders: usize,
    #[serde(flatten)]
    pub local: LocalEmbedParams,
}

impl Default for ElectionParams {
    fn default() -> Self {
        ElectionParams { leaders: 5, local: LocalEmbedParams::default() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ElectionResult {
    pub accepted: bool,
    pub solution: Option<EmbeddingSolution>,
    pub winner: NodeId,
    pub ring: LeaderRing,
    pub trace: ElectionTrace,
    pub embed_calls: Vec<u32>,
    /// Why an accepted-looking winner was not allocated, if so.
    pub rejection: Option<String>,
}

/// Full election for one request: pick leaders, elect, then re-verify the
/// winner's solution against live residuals and allocate it.
pub fn run_election<R: Rng + ?Sized>(
    net: &mut PhysicalNetwork,
    ledger: &mut AllocationLedger,
    vnr: &Vnr,
    primary: NodeId,
    params: &ElectionParams,
    transport: &mut dyn Transport,
    rng: &mut R,
) -> Result<ElectionResult, ProtocolError> {
    let ring = select_leaders(net, primary, params.leaders, rng)?;
    let outcome = {
        let mut src = SnapshotEmbedder { net, vnr, params: &params.local };
        elect(&ring, vnr.request_id, &mut src, transport)?
    };
    let Decision { winner, solution, .. } = outcome.decision;
    let mut rejection = None;
    let accepted = match &solution {
        None => false,
        Some(sol) => match allocate(net, vnr, sol, ledger, params.local.injective) {
            Ok(()) => true,
            Err(LedgerError::Invalid(v)) => {
                rejection = Some(v.to_string());
                false
            }
            Err(e) => return Err(e.into()),
        },
    };
    Ok(ElectionResult {
        accepted,
        solution: if accepted { solution } else { None },
        winner,
        ring: outcome.ring,
        trace: outcome.trace,
        embed_calls: outcome.embed_calls,
        rejection,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::resources::{Quantity, ResourceVector};
    use crate::rng::{stream, Stream};

    /// Candidate source with fixed metrics per node.
    struct Fixed(BTreeMap<NodeId, Option<f64>>);

    impl CandidateSource for Fixed {
        fn evaluate(&mut self, node: NodeId, request_id: RequestId) -> Option<LocalEmbedOutcome> {
            let metric = *self.0.get(&node)?;
            Some(LocalEmbedOutcome {
                feasible: metric.is_some(),
                solution: metric.map(|m| EmbeddingSolution {
                    request_id,
                    node_mapping: vec![node],
                    path_mapping: vec![],
                    revenue: m,
                    cost: 0.0,
                    metric: m,
                }),
                inspected_count: 1,
                max_depth_reached: 0,
            })
        }
    }

    fn fixed(ring: &[NodeId], metrics: &[Option<f64>]) -> Fixed {
        Fixed(ring.iter().copied().zip(metrics.iter().copied()).collect())
    }

    fn ring(members: &[NodeId]) -> LeaderRing {
        LeaderRing::new(members.to_vec()).unwrap()
    }

    #[test]
    fn bid_order_prefers_metric_then_lower_id() {
        let a = Bid { node: 3, metric: Some(5.0) };
        let b = Bid { node: 1, metric: Some(5.0) };
        let c = Bid { node: 0, metric: Some(4.0) };
        let none = Bid { node: 0, metric: None };
        assert_eq!(b.key_cmp(&a), Ordering::Greater);
        assert_eq!(a.key_cmp(&c), Ordering::Greater);
        assert_eq!(c.key_cmp(&none), Ordering::Greater);
    }

    #[test]
    fn forwards_dominating_message() {
        let r = ring(&[0, 1]);
        let mut leader = LeaderState::new(1);
        let mut src = fixed(&[1], &[Some(5.0)]);
        let out = leader.handle_embedding(
            EmbeddingMsg { originator: 0, metric: Some(7.0), ring: r.clone(), request_id: 9 },
            &mut src,
        );
        let Action::Send(env) = &out[0] else { panic!() };
        assert_eq!(env.to, 0);
        assert!(matches!(&env.message, Message::Embedding(m) if m.originator == 0 && m.metric == Some(7.0)));
    }

    #[test]
    fn takes_over_weaker_message() {
        let r = ring(&[0, 1]);
        let mut leader = LeaderState::new(1);
        let mut src = fixed(&[1], &[Some(7.0)]);
        let out = leader
            .handle_embedding(EmbeddingMsg { originator: 0, metric: Some(5.0), ring: r, request_id: 9 }, &mut src);
        let Action::Send(env) = &out[0] else { panic!() };
        assert!(matches!(&env.message, Message::Embedding(m) if m.originator == 1 && m.metric == Some(7.0)));
    }

    #[test]
    fn equal_metric_goes_to_lower_id() {
        let r = ring(&[5, 2]);
        let mut leader = LeaderState::new(2);
        let mut src = fixed(&[2], &[Some(7.0)]);
        let out = leader.handle_embedding(
            EmbeddingMsg { originator: 5, metric: Some(7.0), ring: r.clone(), request_id: 1 },
            &mut src,
        );
        let Action::Send(env) = &out[0] else { panic!() };
        assert!(matches!(&env.message, Message::Embedding(m) if m.originator == 2));

        // and the higher id forwards an equal bid from a lower id
        let mut leader = LeaderState::new(5);
        let mut src = fixed(&[5], &[Some(7.0)]);
        let out = leader
            .handle_embedding(EmbeddingMsg { originator: 2, metric: Some(7.0), ring: r, request_id: 1 }, &mut src);
        let Action::Send(env) = &out[0] else { panic!() };
        assert!(matches!(&env.message, Message::Embedding(m) if m.originator == 2));
    }

    #[test]
    fn unknown_request_is_dropped() {
        let r = ring(&[0, 1]);
        let mut leader = LeaderState::new(1);
        let mut src = Fixed(BTreeMap::new());
        let out = leader.handle_embedding(
            EmbeddingMsg { originator: 0, metric: Some(1.0), ring: r.clone(), request_id: 4 },
            &mut src,
        );
        assert!(matches!(&out[0], Action::Dropped { request_id: 4, .. }));
        let out = leader.handle_embedded(EmbeddedMsg { winner: 0, solution: None, ring: r, request_id: 4 });
        assert!(matches!(&out[0], Action::Dropped { request_id: 4, .. }));
    }

    #[test]
    fn five_leader_example_with_tie() {
        // metrics (3, 9, 1, 9, 2) at ring positions 0..4
        let members = [40, 17, 3, 8, 25];
        let r = ring(&members);
        let mut src = fixed(&members, &[Some(3.0), Some(9.0), Some(1.0), Some(9.0), Some(2.0)]);
        let out = elect(&r, 1, &mut src, &mut FifoTransport::new()).unwrap();
        assert_eq!(out.decision.winner, 8);
        // winner at position 3: 3 messages to reach it, 5 to come back
        assert_eq!(out.trace.embedding_messages, 8);
        assert_eq!(out.trace.embedded_messages, 5);
        assert!(out.embed_calls.iter().all(|&c| c == 1));
    }

    #[test]
    fn second_to_last_winner_hits_worst_case() {
        let members = [0, 1, 2, 3];
        let mut src = fixed(&members, &[Some(1.0), Some(1.0), Some(1.0), Some(9.0)]);
        let out = elect(&ring(&members), 1, &mut src, &mut FifoTransport::new()).unwrap();
        assert_eq!(out.decision.winner, 3);
        assert_eq!(out.trace.embedding_messages, 2 * 4 - 1);
        assert_eq!(out.trace.embedded_messages, 4);
    }

    #[test]
    fn all_infeasible_primary_wins_without_solution() {
        let members = [6, 2, 9];
        let mut src = fixed(&members, &[None, None, None]);
        let out = elect(&ring(&members), 1, &mut src, &mut FifoTransport::new()).unwrap();
        assert_eq!(out.decision.winner, 6);
        assert!(out.decision.solution.is_none());
        assert_eq!(out.trace.embedding_messages, 3);
        assert_eq!(out.trace.embedded_messages, 3);
    }

    #[test]
    fn single_leader_uses_no_transport() {
        let mut src = fixed(&[4], &[Some(2.0)]);
        let mut transport = FifoTransport::new();
        let out = elect(&ring(&[4]), 1, &mut src, &mut transport).unwrap();
        assert_eq!(out.decision.winner, 4);
        assert_eq!(out.trace.total_messages(), 0);
        assert_eq!(transport.sent(), 0);
    }

    struct Broken;

    impl Transport for Broken {
        fn send(&mut self, _: Envelope) -> Result<(), ProtocolError> {
            Err(ProtocolError::Transport("link down".into()))
        }
        fn recv(&mut self) -> Result<Option<Envelope>, ProtocolError> {
            Ok(None)
        }
    }

    #[test]
    fn transport_failure_allocates_nothing() {
        let cpu = |x| ResourceVector::cpu_only(x).unwrap();
        let q = |x| Quantity::from_units(x).unwrap();
        let mut net = PhysicalNetwork::new(vec![cpu(50.0); 3], vec![(0, 1, q(10.0)), (1, 2, q(10.0))]).unwrap();
        let before = net.clone();
        let vnr = Vnr::new(1, vec![cpu(5.0)], vec![], 0.0, 1.0).unwrap();
        let mut ledger = AllocationLedger::new();
        let params = ElectionParams { leaders: 3, ..Default::default() };
        let err = run_election(&mut net, &mut ledger, &vnr, 0, &params, &mut Broken, &mut stream(1, Stream::Leaders));
        assert!(matches!(err, Err(ProtocolError::Transport(_))));
        assert_eq!(net, before);
        assert!(ledger.is_empty());
    }

    #[test]
    fn select_leaders_bounds() {
        let cpu = ResourceVector::cpu_only(1.0).unwrap();
        let net = PhysicalNetwork::new(vec![cpu; 6], vec![]).unwrap();
        let mut rng = stream(3, Stream::Leaders);
        assert_eq!(select_leaders(&net, 2, 1, &mut rng).unwrap().members(), &[2]);
        let all = select_leaders(&net, 4, 6, &mut rng).unwrap();
        assert_eq!(all.primary(), 4);
        let mut sorted = all.members().to_vec();
        sorted.sort();
        assert_eq!(sorted, vec![0, 1, 2, 3, 4, 5]);
        assert!(select_leaders(&net, 0, 7, &mut rng).is_err());
        assert!(select_leaders(&net, 0, 0, &mut rng).is_err());
        assert!(select_leaders(&net, 6, 1, &mut rng).is_err());
    }

    #[test]
    fn trace_jsonl_has_one_line_per_event() {
        let members = [0, 1, 2];
        let mut src = fixed(&members, &[Some(1.0), Some(2.0), Some(0.5)]);
        let out = elect(&ring(&members), 7, &mut src, &mut FifoTransport::new()).unwrap();
        let text = out.trace.to_jsonl();
        assert_eq!(text.lines().count(), out.trace.events.len());
        let first: serde_json::Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
        assert_eq!(first["kind"], "EMBEDDING");
        assert_eq!(first["request_id"], 7);
    }
}

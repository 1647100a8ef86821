//! Deterministic network model: topology, per-receiver FIFO queues, and the
//! event scheduler that drives the node engine.

use std::collections::hash_map::DefaultHasher;
use std::collections::{BTreeSet, VecDeque};
use std::fmt;
use std::hash::{Hash, Hasher};
use std::str::FromStr;

use litemap::LiteMap;
use serde::{Deserialize, Serialize};

use crate::config::InterpretationConfig;
use crate::error::SimError;
use crate::message::{ControlMessage, Emission, RerrMessage};
use crate::node::{Anomaly, NodeChange, NodeState, Transition};
use crate::types::{NodeId, RoutingTableEntry, SequenceNumber};

/// Upper bound on deliveries performed by a single `DeliverAll`.
pub const DELIVER_ALL_LIMIT: usize = 10_000;

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Topology {
    nodes: BTreeSet<NodeId>,
    /// Unordered pairs stored as `(smaller, larger)`.
    links: BTreeSet<(NodeId, NodeId)>,
}

fn ordered(a: NodeId, b: NodeId) -> (NodeId, NodeId) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

impl Topology {
    pub fn new(nodes: impl IntoIterator<Item = NodeId>) -> Result<Self, SimError> {
        let mut topo = Topology::default();
        for n in nodes {
            if !topo.nodes.insert(n) {
                return Err(SimError::DuplicateNode(n));
            }
        }
        Ok(topo)
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes.iter().copied()
    }

    pub fn links(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.links.iter().copied()
    }

    pub fn contains(&self, n: NodeId) -> bool {
        self.nodes.contains(&n)
    }

    pub fn linked(&self, a: NodeId, b: NodeId) -> bool {
        self.links.contains(&ordered(a, b))
    }

    fn check_pair(&self, a: NodeId, b: NodeId) -> Result<(), SimError> {
        for n in [a, b] {
            if !self.contains(n) {
                return Err(SimError::UnknownNode(n));
            }
        }
        if a == b {
            return Err(SimError::SelfLink(a));
        }
        Ok(())
    }

    /// Returns whether the link was newly added.
    pub fn link(&mut self, a: NodeId, b: NodeId) -> Result<bool, SimError> {
        self.check_pair(a, b)?;
        Ok(self.links.insert(ordered(a, b)))
    }

    /// Returns whether a link was removed.
    pub fn unlink(&mut self, a: NodeId, b: NodeId) -> Result<bool, SimError> {
        self.check_pair(a, b)?;
        Ok(self.links.remove(&ordered(a, b)))
    }

    /// Current neighbors of `n` in ascending order.
    pub fn neighbors(&self, n: NodeId) -> Vec<NodeId> {
        self.links
            .iter()
            .filter_map(|&(a, b)| {
                if a == n {
                    Some(b)
                } else if b == n {
                    Some(a)
                } else {
                    None
                }
            })
            .collect()
    }
}

/// When a node notices that a neighbor has become unreachable.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DetectionMode {
    /// Both endpoints react to `LinkDown` immediately, and any failed
    /// transmission is detected as well.
    #[default]
    Eager,
    /// Only failed transmissions (control messages or data packets) are
    /// noticed, by the transmitting node.
    OnSend,
}

impl fmt::Display for DetectionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DetectionMode::Eager => "eager",
            DetectionMode::OnSend => "on-send",
        })
    }
}

impl FromStr for DetectionMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "eager" => Ok(DetectionMode::Eager),
            "on-send" | "onsend" => Ok(DetectionMode::OnSend),
            other => Err(format!("unknown detection mode `{other}` (expected eager or on-send)")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Event {
    LinkUp { a: NodeId, b: NodeId },
    LinkDown { a: NodeId, b: NodeId },
    NewPacket { src: NodeId, dest: NodeId },
    DeliverNext { node: NodeId },
    DeliverAll,
}

/// Scenario-file syntax, so event lists can be pasted into scenarios.
impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Event::LinkUp { a, b } => write!(f, "link {a} {b}"),
            Event::LinkDown { a, b } => write!(f, "unlink {a} {b}"),
            Event::NewPacket { src, dest } => write!(f, "newpkt {src} {dest}"),
            Event::DeliverNext { node } => write!(f, "deliver {node}"),
            Event::DeliverAll => f.write_str("deliver-all"),
        }
    }
}

impl Event {
    pub fn is_link_change(&self) -> bool {
        matches!(self, Event::LinkUp { .. } | Event::LinkDown { .. })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct InFlight {
    pub message: ControlMessage,
    pub sender: NodeId,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TraceRecord {
    Entry {
        node: NodeId,
        before: Option<RoutingTableEntry>,
        after: RoutingTableEntry,
    },
    OwnSn {
        node: NodeId,
        before: SequenceNumber,
        after: SequenceNumber,
    },
    Buffered {
        node: NodeId,
        destination: NodeId,
    },
    Released {
        node: NodeId,
        destination: NodeId,
        count: u32,
    },
    Delivered {
        node: NodeId,
        from: NodeId,
        message: ControlMessage,
    },
    Sent {
        from: NodeId,
        to: NodeId,
        message: ControlMessage,
    },
    SendFailed {
        from: NodeId,
        to: NodeId,
        message: ControlMessage,
    },
    DataForwarded {
        node: NodeId,
        destination: NodeId,
        next_hop: NodeId,
    },
    DataFailed {
        node: NodeId,
        destination: NodeId,
        next_hop: NodeId,
    },
    LinkBreak {
        node: NodeId,
        neighbor: NodeId,
        rerr: Option<RerrMessage>,
    },
    Anomaly {
        node: NodeId,
        anomaly: Anomaly,
    },
}

impl fmt::Display for TraceRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TraceRecord::Entry { node, before, after } => match before {
                Some(b) => write!(f, "{node}: {b} -> {after}"),
                None => write!(f, "{node}: new {after}"),
            },
            TraceRecord::OwnSn { node, before, after } => {
                write!(f, "{node}: own sn {before} -> {after}")
            }
            TraceRecord::Buffered { node, destination } => {
                write!(f, "{node}: buffered packet for {destination}")
            }
            TraceRecord::Released { node, destination, count } => {
                write!(f, "{node}: released {count} packet(s) for {destination}")
            }
            TraceRecord::Delivered { node, from, message } => {
                write!(f, "{node} <- {from}: {message}")
            }
            TraceRecord::Sent { from, to, message } => write!(f, "{from} -> {to}: {message}"),
            TraceRecord::SendFailed { from, to, message } => {
                write!(f, "{from} -x {to}: {message} (no link)")
            }
            TraceRecord::DataForwarded { node, destination, next_hop } => {
                write!(f, "{node}: data for {destination} sent to {next_hop}")
            }
            TraceRecord::DataFailed { node, destination, next_hop } => {
                write!(f, "{node}: data for {destination} could not reach {next_hop}")
            }
            TraceRecord::LinkBreak { node, neighbor, rerr } => match rerr {
                Some(r) => write!(f, "{node}: link to {neighbor} broken, {}", ControlMessage::Rerr(r.clone())),
                None => write!(f, "{node}: link to {neighbor} broken, no routes affected"),
            },
            TraceRecord::Anomaly { node, anomaly } => write!(f, "{node}: {anomaly}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceStep {
    pub index: usize,
    pub event: Event,
    pub records: Vec<TraceRecord>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trace {
    pub steps: Vec<TraceStep>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StepOutcome {
    Progress,
    /// The event left the global state untouched (for example an empty queue).
    NoOp,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GlobalState {
    pub topology: Topology,
    pub nodes: LiteMap<NodeId, NodeState>,
    /// Pending messages per receiver; empty queues are removed.
    pub inflight: LiteMap<NodeId, VecDeque<InFlight>>,
    pub detection: DetectionMode,
    pub trace: Trace,
    /// Number of events applied so far, recorded or not.
    pub steps: usize,
    #[serde(skip)]
    record_trace: bool,
}

impl GlobalState {
    pub fn new(
        topology: Topology,
        cfg: &InterpretationConfig,
        detection: DetectionMode,
    ) -> Self {
        let nodes = topology
            .nodes()
            .map(|id| (id, NodeState::new(id, cfg)))
            .collect();
        GlobalState {
            topology,
            nodes,
            inflight: LiteMap::new(),
            detection,
            trace: Trace::default(),
            steps: 0,
            record_trace: true,
        }
    }

    /// Turns off trace accumulation; `apply_event` still returns each step.
    pub fn without_trace(mut self) -> Self {
        self.record_trace = false;
        self
    }

    pub fn node(&self, id: NodeId) -> Option<&NodeState> {
        self.nodes.get(&id)
    }

    pub fn queue(&self, id: NodeId) -> impl Iterator<Item = &InFlight> {
        self.inflight.get(&id).into_iter().flatten()
    }

    pub fn queue_len(&self, id: NodeId) -> usize {
        self.inflight.get(&id).map_or(0, VecDeque::len)
    }

    pub fn is_quiescent(&self) -> bool {
        self.inflight.is_empty()
    }

    /// 128-bit digest of everything that determines future behavior
    /// (topology, node states, queues, detection mode). The trace is excluded.
    pub fn fingerprint(&self) -> u128 {
        let half = |salt: u64| {
            let mut h = DefaultHasher::new();
            salt.hash(&mut h);
            self.topology.hash(&mut h);
            self.nodes.hash(&mut h);
            self.inflight.hash(&mut h);
            self.detection.hash(&mut h);
            h.finish()
        };
        (u128::from(half(0x9e37_79b9)) << 64) | u128::from(half(0x85eb_ca6b))
    }

    /// Applies one event and returns the recorded step.
    pub fn apply_event(
        &mut self,
        event: &Event,
        cfg: &InterpretationConfig,
    ) -> Result<(StepOutcome, TraceStep), SimError> {
        let mut ctx = StepContext {
            records: Vec::new(),
            changed: false,
        };
        match *event {
            Event::LinkUp { a, b } => {
                ctx.changed = self.topology.link(a, b)?;
            }
            Event::LinkDown { a, b } => {
                ctx.changed = self.topology.unlink(a, b)?;
                if ctx.changed && self.detection == DetectionMode::Eager {
                    let (lo, hi) = ordered(a, b);
                    for (node, neighbor) in [(lo, hi), (hi, lo)] {
                        if self.has_valid_route_via(node, neighbor) {
                            self.link_break(node, neighbor, cfg, &mut ctx);
                        }
                    }
                }
            }
            Event::NewPacket { src, dest } => {
                self.new_packet(src, dest, cfg, &mut ctx)?;
            }
            Event::DeliverNext { node } => {
                if !self.topology.contains(node) {
                    return Err(SimError::UnknownNode(node));
                }
                self.deliver_next(node, cfg, &mut ctx);
            }
            Event::DeliverAll => {
                let mut delivered = 0;
                while let Some((&node, _)) = self.inflight.first() {
                    if delivered == DELIVER_ALL_LIMIT {
                        return Err(SimError::NoQuiescence(DELIVER_ALL_LIMIT));
                    }
                    self.deliver_next(node, cfg, &mut ctx);
                    delivered += 1;
                }
            }
        }
        let step = TraceStep {
            index: self.steps,
            event: event.clone(),
            records: ctx.records,
        };
        self.steps += 1;
        if self.record_trace {
            self.trace.steps.push(step.clone());
        }
        let outcome = if ctx.changed {
            StepOutcome::Progress
        } else {
            StepOutcome::NoOp
        };
        Ok((outcome, step))
    }

    fn has_valid_route_via(&self, node: NodeId, neighbor: NodeId) -> bool {
        self.nodes[&node]
            .table
            .values()
            .any(|e| e.is_valid() && e.next_hop == neighbor)
    }

    fn new_packet(
        &mut self,
        src: NodeId,
        dest: NodeId,
        cfg: &InterpretationConfig,
        ctx: &mut StepContext,
    ) -> Result<(), SimError> {
        for n in [src, dest] {
            if !self.topology.contains(n) {
                return Err(SimError::UnknownNode(n));
            }
        }
        if src == dest {
            return Err(SimError::SelfPacket(src));
        }
        let route = self.nodes[&src].valid_entry(dest).map(|e| e.next_hop);
        match route {
            Some(next_hop) if self.topology.linked(src, next_hop) => {
                ctx.records.push(TraceRecord::DataForwarded {
                    node: src,
                    destination: dest,
                    next_hop,
                });
            }
            Some(next_hop) => {
                ctx.records.push(TraceRecord::DataFailed {
                    node: src,
                    destination: dest,
                    next_hop,
                });
                self.link_break(src, next_hop, cfg, ctx);
            }
            None => {
                let node = self.nodes.get_mut(&src).expect("node exists");
                let (_, transition) = node.originate_rreq(dest, cfg);
                ctx.changed = true;
                self.apply_transition(src, transition, cfg, ctx);
            }
        }
        Ok(())
    }

    fn deliver_next(&mut self, node: NodeId, cfg: &InterpretationConfig, ctx: &mut StepContext) {
        let Some(queue) = self.inflight.get_mut(&node) else {
            return;
        };
        let item = queue.pop_front().expect("stored queues are nonempty");
        if queue.is_empty() {
            self.inflight.remove(&node);
        }
        ctx.changed = true;
        ctx.records.push(TraceRecord::Delivered {
            node,
            from: item.sender,
            message: item.message.clone(),
        });
        let state = self.nodes.get_mut(&node).expect("receiver exists");
        let transition = match &item.message {
            ControlMessage::Rreq(m) => state.handle_rreq(m, item.sender, cfg),
            ControlMessage::Rrep(m) => state.handle_rrep(m, item.sender, cfg),
            ControlMessage::Rerr(m) => state.handle_rerr(m, item.sender, cfg),
        };
        self.apply_transition(node, transition, cfg, ctx);
    }

    fn link_break(
        &mut self,
        node: NodeId,
        neighbor: NodeId,
        cfg: &InterpretationConfig,
        ctx: &mut StepContext,
    ) {
        let transition = self
            .nodes
            .get_mut(&node)
            .expect("node exists")
            .detect_link_break(neighbor);
        if !transition.changes.is_empty() {
            ctx.changed = true;
        }
        ctx.records.push(TraceRecord::LinkBreak {
            node,
            neighbor,
            rerr: transition.rerr.clone(),
        });
        self.apply_transition(node, transition, cfg, ctx);
    }

    fn apply_transition(
        &mut self,
        node: NodeId,
        transition: Transition,
        cfg: &InterpretationConfig,
        ctx: &mut StepContext,
    ) {
        for change in transition.changes {
            ctx.changed = true;
            ctx.records.push(match change {
                NodeChange::Entry { before, after } => TraceRecord::Entry { node, before, after },
                NodeChange::OwnSn { before, after } => TraceRecord::OwnSn { node, before, after },
                NodeChange::Buffered { destination } => TraceRecord::Buffered { node, destination },
                NodeChange::Released { destination, count } => TraceRecord::Released {
                    node,
                    destination,
                    count,
                },
                NodeChange::Anomaly(anomaly) => TraceRecord::Anomaly { node, anomaly },
            });
        }
        for emission in transition.emissions {
            match emission {
                Emission::Broadcast { message } => {
                    for to in self.topology.neighbors(node) {
                        self.enqueue(node, to, message.clone(), ctx);
                    }
                }
                Emission::Unicast { to, message } => {
                    self.unicast_or_fail(node, to, message, cfg, ctx);
                }
            }
        }
    }

    fn enqueue(&mut self, from: NodeId, to: NodeId, message: ControlMessage, ctx: &mut StepContext) {
        ctx.changed = true;
        ctx.records.push(TraceRecord::Sent {
            from,
            to,
            message: message.clone(),
        });
        self.inflight.entry(to).or_default().push_back(InFlight {
            message,
            sender: from,
        });
    }

    /// Enqueues `message` for `target` if the two are linked; otherwise the
    /// sender treats `target` as a broken neighbor.
    pub fn unicast_or_fail(
        &mut self,
        sender: NodeId,
        target: NodeId,
        message: ControlMessage,
        cfg: &InterpretationConfig,
        ctx: &mut StepContext,
    ) {
        if self.topology.linked(sender, target) {
            self.enqueue(sender, target, message, ctx);
        } else {
            ctx.records.push(TraceRecord::SendFailed {
                from: sender,
                to: target,
                message,
            });
            self.link_break(sender, target, cfg, ctx);
        }
    }
}

/// Scratch space for the records of the event being applied.
#[derive(Debug, Default)]
pub struct StepContext {
    records: Vec<TraceRecord>,
    changed: bool,
}

impl StepContext {
    pub fn records(&self) -> &[TraceRecord] {
        &self.records
    }
}

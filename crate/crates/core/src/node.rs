//! Per-node protocol engine.
//!
//! Every handler is a transition on an owned [`NodeState`]: it mutates the
//! state in place and returns a [`Transition`] describing the messages to
//! emit and every routing-table write it performed. Callers that need value
//! semantics clone the state first; nothing here touches shared data.
//!
//! The entry-level rules (`update_previous_hop`, `update_reverse_route`,
//! `update_forward_route`) are free functions returning `None` when the
//! entry stays as it is.

use std::collections::BTreeSet;
use std::fmt;

use litemap::LiteMap;
use serde::{Deserialize, Serialize};

use crate::config::{Amb1, Amb2, Amb3, Amb4, InterpretationConfig};
use crate::message::{ControlMessage, Emission, RerrMessage, RreqMessage, RrepMessage};
use crate::types::{NodeId, RoutingTableEntry, SequenceNumber, SnStatus, Validity};

/// Something the engine could not do, logged instead of failing the transition.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Anomaly {
    /// A reply had to be routed toward `originator` but no valid route exists.
    NoReverseRoute { originator: NodeId },
}

impl fmt::Display for Anomaly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Anomaly::NoReverseRoute { originator } => {
                write!(f, "no valid reverse route toward {originator}; reply discarded")
            }
        }
    }
}

/// One observable effect of a transition on the node's own state.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum NodeChange {
    Entry {
        before: Option<RoutingTableEntry>,
        after: RoutingTableEntry,
    },
    OwnSn {
        before: SequenceNumber,
        after: SequenceNumber,
    },
    Buffered {
        destination: NodeId,
    },
    Released {
        destination: NodeId,
        count: u32,
    },
    Anomaly(Anomaly),
}

/// Result of one handler invocation.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Transition {
    pub emissions: Vec<Emission>,
    pub changes: Vec<NodeChange>,
    /// Route error assembled by an invalidation, whether or not anybody
    /// was left to receive it.
    pub rerr: Option<RerrMessage>,
}

impl Transition {
    pub fn anomalies(&self) -> impl Iterator<Item = &Anomaly> {
        self.changes.iter().filter_map(|c| match c {
            NodeChange::Anomaly(a) => Some(a),
            _ => None,
        })
    }

    pub fn entry_writes(&self) -> impl Iterator<Item = (&Option<RoutingTableEntry>, &RoutingTableEntry)> {
        self.changes.iter().filter_map(|c| match c {
            NodeChange::Entry { before, after } => Some((before, after)),
            _ => None,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct NodeState {
    pub id: NodeId,
    pub own_sn: SequenceNumber,
    pub table: LiteMap<NodeId, RoutingTableEntry>,
    pub rreq_seen: BTreeSet<(NodeId, u32)>,
    /// Pending data packets per destination.
    pub buffered: LiteMap<NodeId, u32>,
    pub next_rreq_id: u32,
}

/// Sequence number every node starts with.
pub const INITIAL_OWN_SN: SequenceNumber = SequenceNumber(1);

impl NodeState {
    pub fn new(id: NodeId, cfg: &InterpretationConfig) -> Self {
        let mut node = NodeState {
            id,
            own_sn: INITIAL_OWN_SN,
            table: LiteMap::new(),
            rreq_seen: BTreeSet::new(),
            buffered: LiteMap::new(),
            next_rreq_id: 1,
        };
        if cfg.amb3 == Amb3::OptimalOnly {
            let entry = node.optimal_self_entry();
            node.table.insert(id, entry);
        }
        node
    }

    pub fn entry(&self, destination: NodeId) -> Option<&RoutingTableEntry> {
        self.table.get(&destination)
    }

    pub fn valid_entry(&self, destination: NodeId) -> Option<&RoutingTableEntry> {
        self.table.get(&destination).filter(|e| e.is_valid())
    }

    pub fn self_entry(&self) -> Option<&RoutingTableEntry> {
        self.table.get(&self.id)
    }

    pub fn buffered_for(&self, destination: NodeId) -> u32 {
        self.buffered.get(&destination).copied().unwrap_or(0)
    }

    fn optimal_self_entry(&self) -> RoutingTableEntry {
        RoutingTableEntry::new(
            self.id,
            self.own_sn.0,
            SnStatus::Known,
            Validity::Valid,
            0,
            self.id,
        )
    }

    fn write_entry(&mut self, entry: RoutingTableEntry, out: &mut Transition) {
        let before = self.table.get(&entry.destination).cloned();
        if before.as_ref() == Some(&entry) {
            return;
        }
        self.table.insert(entry.destination, entry.clone());
        out.changes.push(NodeChange::Entry {
            before,
            after: entry,
        });
    }

    fn add_precursor(&mut self, destination: NodeId, precursor: NodeId, out: &mut Transition) {
        if let Some(entry) = self.table.get(&destination) {
            if !entry.precursors.contains(&precursor) {
                let mut updated = entry.clone();
                updated.precursors.insert(precursor);
                self.write_entry(updated, out);
            }
        }
    }

    fn set_own_sn(&mut self, sn: SequenceNumber, cfg: &InterpretationConfig, out: &mut Transition) {
        if sn != self.own_sn {
            debug_assert!(sn > self.own_sn, "own sequence number must not decrease");
            out.changes.push(NodeChange::OwnSn {
                before: self.own_sn,
                after: sn,
            });
            self.own_sn = sn;
        }
        if cfg.amb3 == Amb3::OptimalOnly {
            self.refresh_optimal_self_entry(out);
        }
    }

    fn refresh_optimal_self_entry(&mut self, out: &mut Transition) {
        let mut entry = self.optimal_self_entry();
        if let Some(old) = self.table.get(&self.id) {
            entry.precursors = old.precursors.clone();
        }
        self.write_entry(entry, out);
    }

    fn apply_previous_hop(&mut self, prev: NodeId, cfg: &InterpretationConfig, out: &mut Transition) {
        if let Some(entry) = update_previous_hop(self.table.get(&prev), prev, cfg) {
            self.write_entry(entry, out);
        }
    }

    /// Starts a route discovery for `dest` and buffers the triggering packet.
    pub fn originate_rreq(
        &mut self,
        dest: NodeId,
        cfg: &InterpretationConfig,
    ) -> (RreqMessage, Transition) {
        assert_ne!(dest, self.id, "a node never requests a route to itself");
        let mut out = Transition::default();
        let sn = self.own_sn.incremented(cfg.rreq_sn_increment.value());
        self.set_own_sn(sn, cfg, &mut out);

        let rreq_id = self.next_rreq_id;
        self.next_rreq_id += 1;

        let (dest_sn, dest_sn_unknown) = match self.table.get(&dest) {
            Some(entry) => (entry.dsn, false),
            None => (SequenceNumber::UNKNOWN, true),
        };
        *self.buffered.entry(dest).or_insert(0) += 1;
        out.changes.push(NodeChange::Buffered { destination: dest });

        let rreq = RreqMessage {
            rreq_id,
            originator: self.id,
            originator_sn: self.own_sn,
            destination: dest,
            dest_sn,
            dest_sn_unknown,
            hop_count: 0,
        };
        out.emissions.push(Emission::Broadcast {
            message: ControlMessage::Rreq(rreq.clone()),
        });
        (rreq, out)
    }

    pub fn handle_rreq(
        &mut self,
        rreq: &RreqMessage,
        prev: NodeId,
        cfg: &InterpretationConfig,
    ) -> Transition {
        let mut out = Transition::default();
        self.apply_previous_hop(prev, cfg, &mut out);

        let key = (rreq.originator, rreq.rreq_id);
        if rreq.originator == self.id || self.rreq_seen.contains(&key) {
            return out;
        }
        self.rreq_seen.insert(key);

        let mut rreq = rreq.clone();
        rreq.hop_count += 1;
        if let Some(entry) = update_reverse_route(self.table.get(&rreq.originator), &rreq, prev, cfg)
        {
            self.write_entry(entry, &mut out);
        }

        if rreq.destination == self.id {
            let sn = self.own_sn.max(rreq.dest_sn);
            self.set_own_sn(sn, cfg, &mut out);
            let reply = RrepMessage {
                originator: rreq.originator,
                destination: self.id,
                dest_sn: self.own_sn,
                hop_count: 0,
            };
            self.reply_toward_originator(reply, None, &mut out);
            return out;
        }

        let fresh_enough = self.valid_entry(rreq.destination).filter(|e| {
            e.sn_status == SnStatus::Known && (rreq.dest_sn_unknown || e.dsn >= rreq.dest_sn)
        });
        if let Some(route) = fresh_enough {
            let reply = RrepMessage {
                originator: rreq.originator,
                destination: rreq.destination,
                dest_sn: route.dsn,
                hop_count: route.hop_count,
            };
            self.reply_toward_originator(reply, Some(rreq.destination), &mut out);
            return out;
        }

        out.emissions.push(Emission::Broadcast {
            message: ControlMessage::Rreq(rreq),
        });
        out
    }

    /// Unicasts `reply` along the valid reverse route and, for intermediate
    /// replies and forwarded replies, records the next hop as a precursor of
    /// the forward entry.
    fn reply_toward_originator(
        &mut self,
        reply: RrepMessage,
        forward_entry: Option<NodeId>,
        out: &mut Transition,
    ) {
        let Some(next_hop) = self.valid_entry(reply.originator).map(|e| e.next_hop) else {
            out.changes.push(NodeChange::Anomaly(Anomaly::NoReverseRoute {
                originator: reply.originator,
            }));
            return;
        };
        if let Some(dest) = forward_entry {
            self.add_precursor(dest, next_hop, out);
        }
        out.emissions.push(Emission::Unicast {
            to: next_hop,
            message: ControlMessage::Rrep(reply),
        });
    }

    pub fn handle_rrep(
        &mut self,
        rrep: &RrepMessage,
        prev: NodeId,
        cfg: &InterpretationConfig,
    ) -> Transition {
        let mut out = Transition::default();
        self.apply_previous_hop(prev, cfg, &mut out);

        let mut rrep = rrep.clone();
        rrep.hop_count += 1;

        let forward = if rrep.destination == self.id {
            match cfg.amb3 {
                Amb3::Allow => self.apply_forward_route(&rrep, prev, cfg, &mut out),
                Amb3::OptimalOnly => {
                    self.refresh_optimal_self_entry(&mut out);
                    true
                }
                Amb3::DisallowDrop => return out,
                Amb3::DisallowForward => true,
            }
        } else {
            self.apply_forward_route(&rrep, prev, cfg, &mut out)
        };

        if rrep.originator == self.id {
            if self.valid_entry(rrep.destination).is_some() {
                if let Some(count) = self.buffered.remove(&rrep.destination) {
                    out.changes.push(NodeChange::Released {
                        destination: rrep.destination,
                        count,
                    });
                }
            }
        } else if forward {
            let dest = rrep.destination;
            self.reply_toward_originator(rrep, Some(dest), &mut out);
        }
        out
    }

    fn apply_forward_route(
        &mut self,
        rrep: &RrepMessage,
        prev: NodeId,
        cfg: &InterpretationConfig,
        out: &mut Transition,
    ) -> bool {
        match update_forward_route(self.table.get(&rrep.destination), rrep, prev, cfg) {
            Some(entry) => {
                self.write_entry(entry, out);
                true
            }
            None => false,
        }
    }

    /// Invalidates every valid route through `broken_neighbor` and addresses
    /// a route error to their precursors.
    pub fn detect_link_break(&mut self, broken_neighbor: NodeId) -> Transition {
        let mut out = Transition::default();
        let affected: Vec<NodeId> = self
            .table
            .values()
            .filter(|e| e.is_valid() && e.next_hop == broken_neighbor)
            .map(|e| e.destination)
            .collect();
        let invalidated = affected
            .into_iter()
            .map(|dest| {
                let mut entry = self.table[&dest].clone();
                entry.dsn = entry.dsn.incremented(1);
                entry.validity = Validity::Invalid;
                entry
            })
            .collect();
        self.invalidate_and_report(invalidated, &mut out);
        out
    }

    pub fn handle_rerr(
        &mut self,
        rerr: &RerrMessage,
        prev: NodeId,
        cfg: &InterpretationConfig,
    ) -> Transition {
        let mut out = Transition::default();
        let mut invalidated = Vec::new();
        for &(dest, rsn) in &rerr.unreachable {
            let Some(entry) = self.table.get(&dest) else {
                continue;
            };
            if !entry.is_valid() || entry.next_hop != prev {
                continue;
            }
            let stored = entry.dsn;
            let new_sn = match cfg.amb4 {
                Amb4::Copy => Some(rsn),
                Amb4::IfNotFresher => (stored <= rsn).then_some(rsn),
                Amb4::Max => Some(stored.max(rsn)),
                Amb4::MaxIncremented => Some(stored.incremented(1).max(rsn)),
                Amb4::IfStrictlyOlder => (stored < rsn).then_some(rsn),
            };
            if let Some(sn) = new_sn {
                let mut updated = entry.clone();
                updated.dsn = sn;
                updated.validity = Validity::Invalid;
                invalidated.push(updated);
            }
        }
        self.invalidate_and_report(invalidated, &mut out);
        out
    }

    fn invalidate_and_report(&mut self, invalidated: Vec<RoutingTableEntry>, out: &mut Transition) {
        if invalidated.is_empty() {
            return;
        }
        let mut recipients = BTreeSet::new();
        let mut unreachable = Vec::with_capacity(invalidated.len());
        for mut entry in invalidated {
            recipients.extend(entry.precursors.iter().copied());
            unreachable.push((entry.destination, entry.dsn));
            entry.precursors.clear();
            self.write_entry(entry, out);
        }
        let rerr = RerrMessage { unreachable };
        for to in recipients {
            out.emissions.push(Emission::Unicast {
                to,
                message: ControlMessage::Rerr(rerr.clone()),
            });
        }
        out.rerr = Some(rerr);
    }
}

/// Route to the sender of a just-received control message.
pub fn update_previous_hop(
    entry: Option<&RoutingTableEntry>,
    prev: NodeId,
    cfg: &InterpretationConfig,
) -> Option<RoutingTableEntry> {
    let fresh = |dsn: SequenceNumber, status: SnStatus, precursors: &BTreeSet<NodeId>| {
        RoutingTableEntry {
            destination: prev,
            dsn,
            sn_status: status,
            validity: Validity::Valid,
            hop_count: 1,
            next_hop: prev,
            precursors: precursors.clone(),
        }
    };
    match entry {
        None => Some(fresh(SequenceNumber::UNKNOWN, SnStatus::Unknown, &BTreeSet::new())),
        Some(old) => match cfg.amb2 {
            Amb2::NoUpdate => None,
            Amb2::Overwrite => Some(fresh(
                SequenceNumber::UNKNOWN,
                SnStatus::Unknown,
                &old.precursors,
            )),
            Amb2::Merge => Some(fresh(old.dsn, old.sn_status, &old.precursors)),
        },
    }
}

/// Shared freshness gate for routes learned from requests and replies.
fn accepts_route(
    stored: Option<&RoutingTableEntry>,
    sn: SequenceNumber,
    hop_count: u32,
    amb1: Amb1,
) -> bool {
    let Some(old) = stored else {
        return true;
    };
    if sn > old.dsn {
        return true;
    }
    if sn == old.dsn && (!old.is_valid() || hop_count < old.hop_count) {
        return true;
    }
    if old.sn_status == SnStatus::Unknown {
        return match amb1 {
            Amb1::CopyFromReply => true,
            Amb1::KeepFresher => sn >= old.dsn,
        };
    }
    false
}

/// Route back to the originator of a request. `rreq.hop_count` must already
/// include the hop to this node.
pub fn update_reverse_route(
    entry: Option<&RoutingTableEntry>,
    rreq: &RreqMessage,
    prev: NodeId,
    cfg: &InterpretationConfig,
) -> Option<RoutingTableEntry> {
    accepts_route(entry, rreq.originator_sn, rreq.hop_count, cfg.amb1).then(|| RoutingTableEntry {
        destination: rreq.originator,
        dsn: rreq.originator_sn,
        sn_status: SnStatus::Known,
        validity: Validity::Valid,
        hop_count: rreq.hop_count,
        next_hop: prev,
        precursors: entry.map(|e| e.precursors.clone()).unwrap_or_default(),
    })
}

/// Route to the destination named in a reply. `rrep.hop_count` must already
/// include the hop to this node.
pub fn update_forward_route(
    entry: Option<&RoutingTableEntry>,
    rrep: &RrepMessage,
    prev: NodeId,
    cfg: &InterpretationConfig,
) -> Option<RoutingTableEntry> {
    accepts_route(entry, rrep.dest_sn, rrep.hop_count, cfg.amb1).then(|| RoutingTableEntry {
        destination: rrep.destination,
        dsn: rrep.dest_sn,
        sn_status: SnStatus::Known,
        validity: Validity::Valid,
        hop_count: rrep.hop_count,
        next_hop: prev,
        precursors: entry.map(|e| e.precursors.clone()).unwrap_or_default(),
    })
}

//! Invariant checks over global states and traces.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::config::{Amb3, InterpretationConfig};
use crate::netsim::{GlobalState, Trace, TraceRecord, TraceStep};
use crate::types::{NodeId, SequenceNumber, SnStatus, Validity};

/// A cycle in the next-hop graph of one destination.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct LoopReport {
    pub destination: NodeId,
    /// Starts at the smallest node; each node's next hop is the following one.
    pub cycle: Vec<NodeId>,
}

impl fmt::Display for LoopReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "loop for {}: ", self.destination)?;
        for n in &self.cycle {
            write!(f, "{n} -> ")?;
        }
        match self.cycle.first() {
            Some(first) => write!(f, "{first}"),
            None => Ok(()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MonotonicityViolation {
    pub node: NodeId,
    pub destination: NodeId,
    pub step_index: usize,
    pub before: SequenceNumber,
    pub after: SequenceNumber,
}

impl fmt::Display for MonotonicityViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "step {}: {} lowered its sequence number for {} from {} to {}",
            self.step_index, self.node, self.destination, self.before, self.after
        )
    }
}

/// Next-hop edges for `destination`: one per node that holds a valid route
/// to it through some other node.
pub fn next_hop_graph(g: &GlobalState, destination: NodeId) -> BTreeMap<NodeId, NodeId> {
    g.nodes
        .iter()
        .filter(|(&id, _)| id != destination)
        .filter_map(|(&id, node)| {
            node.valid_entry(destination)
                .filter(|e| e.next_hop != id)
                .map(|e| (id, e.next_hop))
        })
        .collect()
}

/// Every elementary cycle of every destination's next-hop graph, sorted.
pub fn check_loop_freedom(g: &GlobalState) -> Vec<LoopReport> {
    let destinations: BTreeSet<NodeId> = g
        .nodes
        .values()
        .flat_map(|n| n.table.keys().copied())
        .collect();
    let mut reports = Vec::new();
    for destination in destinations {
        let edges = next_hop_graph(g, destination);
        for cycle in functional_cycles(&edges) {
            reports.push(LoopReport { destination, cycle });
        }
    }
    reports.sort();
    reports
}

/// Cycles of a graph with out-degree at most one.
fn functional_cycles(edges: &BTreeMap<NodeId, NodeId>) -> Vec<Vec<NodeId>> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        OnPath,
        Done,
    }
    let mut marks: BTreeMap<NodeId, Mark> = BTreeMap::new();
    let mut cycles = Vec::new();
    for &start in edges.keys() {
        if marks.contains_key(&start) {
            continue;
        }
        let mut path = Vec::new();
        let mut current = Some(start);
        while let Some(n) = current {
            match marks.get(&n) {
                Some(Mark::Done) => break,
                Some(Mark::OnPath) => {
                    let pos = path.iter().position(|&p| p == n).expect("on path");
                    let mut cycle: Vec<NodeId> = path[pos..].to_vec();
                    let min = cycle.iter().enumerate().min_by_key(|(_, id)| **id).map(|(i, _)| i);
                    cycle.rotate_left(min.unwrap_or(0));
                    cycles.push(cycle);
                    break;
                }
                None => {
                    marks.insert(n, Mark::OnPath);
                    path.push(n);
                    current = edges.get(&n).copied();
                }
            }
        }
        for n in path {
            marks.insert(n, Mark::Done);
        }
    }
    cycles
}

/// Sequence-number decreases recorded in one step, at most one per
/// (node, destination).
pub fn step_violations(step: &TraceStep) -> Vec<MonotonicityViolation> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for record in &step.records {
        if let TraceRecord::Entry {
            node,
            before: Some(before),
            after,
        } = record
        {
            if after.dsn < before.dsn && seen.insert((*node, after.destination)) {
                out.push(MonotonicityViolation {
                    node: *node,
                    destination: after.destination,
                    step_index: step.index,
                    before: before.dsn,
                    after: after.dsn,
                });
            }
        }
    }
    out
}

pub fn check_monotonicity(trace: &Trace) -> Vec<MonotonicityViolation> {
    trace.steps.iter().flat_map(step_violations).collect()
}

/// Nodes whose self-entry breaks the configured rule: any self-entry under
/// 3c/3d, a missing or non-optimal one under 3b. Under 3a, where anything
/// goes, lists the nodes that currently hold a self-entry.
pub fn check_self_entries(g: &GlobalState, cfg: &InterpretationConfig) -> Vec<NodeId> {
    g.nodes
        .values()
        .filter(|n| {
            let entry = n.self_entry();
            match cfg.amb3 {
                Amb3::Allow | Amb3::DisallowDrop | Amb3::DisallowForward => entry.is_some(),
                Amb3::OptimalOnly => !entry.is_some_and(|e| {
                    e.dsn == n.own_sn
                        && e.sn_status == SnStatus::Known
                        && e.validity == Validity::Valid
                        && e.hop_count == 0
                        && e.next_hop == n.id
                }),
            }
        })
        .map(|n| n.id)
        .collect()
}

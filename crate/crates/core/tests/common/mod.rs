#![allow(dead_code)]

pub mod rules;

use std::collections::BTreeSet;

use aodv_core::{GlobalState, LoopReport, NodeId, RoutingTableEntry, SnStatus, Validity};

pub fn id(name: &str) -> NodeId {
    NodeId::new(name).unwrap()
}

pub fn entry(dest: &str, dsn: u32, status: SnStatus, validity: Validity, hops: u32, next: &str) -> RoutingTableEntry {
    RoutingTableEntry::new(id(dest), dsn, status, validity, hops, id(next))
}

pub fn known(dest: &str, dsn: u32, validity: Validity, hops: u32, next: &str) -> RoutingTableEntry {
    entry(dest, dsn, SnStatus::Known, validity, hops, next)
}

/// Loop oracle by brute force: from every node, walk next hops for at most
/// |nodes| steps and report every walk that returns to its start.
pub fn walk_oracle(g: &GlobalState) -> Vec<LoopReport> {
    let nodes: Vec<NodeId> = g.nodes.iter().map(|(id, _)| *id).collect();
    let mut destinations = BTreeSet::new();
    for (_, node) in g.nodes.iter() {
        for (dest, _) in node.table.iter() {
            destinations.insert(*dest);
        }
    }
    let hop = |at: NodeId, dest: NodeId| -> Option<NodeId> {
        if at == dest {
            return None;
        }
        let e = g.nodes.get(&at)?.table.get(&dest)?;
        (e.validity == Validity::Valid && e.next_hop != at).then_some(e.next_hop)
    };
    let mut found = BTreeSet::new();
    for &dest in &destinations {
        for &start in &nodes {
            let mut walk = vec![start];
            let mut at = start;
            for _ in 0..nodes.len() {
                let Some(next) = hop(at, dest) else { break };
                if next == start {
                    let smallest = (0..walk.len()).min_by_key(|&i| walk[i]).unwrap();
                    walk.rotate_left(smallest);
                    found.insert(LoopReport { destination: dest, cycle: walk });
                    break;
                }
                if walk.contains(&next) {
                    break;
                }
                walk.push(next);
                at = next;
            }
        }
    }
    found.into_iter().collect()
}

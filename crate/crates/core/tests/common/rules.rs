//! Table of the single-rule examples, each a named check over the public API.

use aodv_core::checker::check_self_entries;
use aodv_core::explorer::{explore, ExploreBounds};
use aodv_core::netsim::StepContext;
use aodv_core::node::{update_forward_route, update_previous_hop, update_reverse_route};
use aodv_core::{
    check_loop_freedom, check_monotonicity, replay_witness, Amb1, Amb2, Amb3, Amb4, ControlMessage, DetectionMode,
    Emission, Event, GlobalState, InterpretationConfig, NodeState, Preset, RerrMessage, RoutingTableEntry, RreqMessage,
    RrepMessage, Scenario, SequenceNumber, SnStatus, StepOutcome, Topology, Trace, TraceRecord, TraceStep, Validity,
};

use super::{entry, id, known};

pub type Check = fn() -> Result<(), String>;

fn expect<T: PartialEq + std::fmt::Debug>(actual: T, expected: T) -> Result<(), String> {
    if actual == expected {
        Ok(())
    } else {
        Err(format!("expected {expected:?}, got {actual:?}"))
    }
}

fn route(e: Option<&RoutingTableEntry>) -> Option<String> {
    e.map(|e| format!("{e} {}", e.sn_status.short()))
}

fn cfg(a1: Amb1, a2: Amb2, a3: Amb3, a4: Amb4) -> InterpretationConfig {
    InterpretationConfig::new(a1, a2, a3, a4)
}

fn safe() -> InterpretationConfig {
    Preset::RfcStrictSafe.config()
}

fn node_with(name: &str, config: &InterpretationConfig, entries: &[RoutingTableEntry]) -> NodeState {
    let mut n = NodeState::new(id(name), config);
    for e in entries {
        n.table.insert(e.destination, e.clone());
    }
    n
}

fn rreq(orig: &str, osn: u32, dest: &str, dsn: u32, unknown: bool, hops: u32) -> RreqMessage {
    RreqMessage {
        rreq_id: 1,
        originator: id(orig),
        originator_sn: SequenceNumber(osn),
        destination: id(dest),
        dest_sn: SequenceNumber(dsn),
        dest_sn_unknown: unknown,
        hop_count: hops,
    }
}

fn rrep(orig: &str, dest: &str, dsn: u32, hops: u32) -> RrepMessage {
    RrepMessage {
        originator: id(orig),
        destination: id(dest),
        dest_sn: SequenceNumber(dsn),
        hop_count: hops,
    }
}

fn originate_increments_own_sn() -> Result<(), String> {
    let mut d = NodeState::new(id("d"), &safe());
    let (msg, _) = d.originate_rreq(id("a"), &safe());
    expect((d.own_sn, msg.originator_sn), (SequenceNumber(2), SequenceNumber(2)))
}

fn originate_copies_stored_dsn() -> Result<(), String> {
    let mut s = node_with("s", &safe(), &[known("d", 3, Validity::Invalid, 1, "d")]);
    let (msg, _) = s.originate_rreq(id("d"), &safe());
    expect((msg.dest_sn, msg.dest_sn_unknown), (SequenceNumber(3), false))
}

fn originate_without_entry() -> Result<(), String> {
    let mut s = NodeState::new(id("s"), &safe());
    let (msg, _) = s.originate_rreq(id("x"), &safe());
    expect((msg.dest_sn, msg.dest_sn_unknown, msg.hop_count), (SequenceNumber(0), true, 0))
}

fn previous_hop_created() -> Result<(), String> {
    let e = update_previous_hop(None, id("d"), &safe());
    expect(route(e.as_ref()), Some("(d,0,val,1,d) unk".into()))
}

fn previous_hop_2a_untouched() -> Result<(), String> {
    let old = known("d", 5, Validity::Valid, 2, "a");
    let c = cfg(Amb1::KeepFresher, Amb2::NoUpdate, Amb3::Allow, Amb4::IfNotFresher);
    expect(update_previous_hop(Some(&old), id("d"), &c), None)
}

fn previous_hop_2b_overwrites() -> Result<(), String> {
    let old = known("d", 5, Validity::Valid, 2, "a");
    let c = cfg(Amb1::KeepFresher, Amb2::Overwrite, Amb3::Allow, Amb4::IfNotFresher);
    let e = update_previous_hop(Some(&old), id("d"), &c);
    expect(route(e.as_ref()), Some("(d,0,val,1,d) unk".into()))
}

fn previous_hop_2c_merges() -> Result<(), String> {
    let old = known("d", 5, Validity::Valid, 2, "a");
    let e = update_previous_hop(Some(&old), id("d"), &safe());
    expect(route(e.as_ref()), Some("(d,5,val,1,d) kno".into()))
}

fn reverse_route_created() -> Result<(), String> {
    let e = update_reverse_route(None, &rreq("s", 4, "x", 0, true, 2), id("d"), &safe());
    expect(route(e.as_ref()), Some("(s,4,val,2,d) kno".into()))
}

fn reverse_route_not_fresher_not_shorter() -> Result<(), String> {
    let old = known("s", 4, Validity::Valid, 2, "d");
    expect(update_reverse_route(Some(&old), &rreq("s", 4, "x", 0, true, 3), id("d"), &safe()), None)
}

fn reverse_route_shorter() -> Result<(), String> {
    let old = known("s", 4, Validity::Valid, 3, "d");
    let e = update_reverse_route(Some(&old), &rreq("s", 4, "x", 0, true, 2), id("a"), &safe());
    expect(route(e.as_ref()), Some("(s,4,val,2,a) kno".into()))
}

fn intermediate_rebroadcasts() -> Result<(), String> {
    let mut b = NodeState::new(id("b"), &safe());
    let t = b.handle_rreq(&rreq("s", 2, "x", 0, true, 0), id("s"), &safe());
    let forwarded = rreq("s", 2, "x", 0, true, 1);
    expect(
        t.emissions,
        vec![Emission::Broadcast {
            message: ControlMessage::Rreq(forwarded),
        }],
    )
}

fn own_request_discarded_after_previous_hop() -> Result<(), String> {
    let mut s = NodeState::new(id("s"), &safe());
    let t = s.handle_rreq(&rreq("s", 2, "x", 0, true, 1), id("d"), &safe());
    expect(t.emissions.len(), 0)?;
    expect(route(s.entry(id("d"))), Some("(d,0,val,1,d) unk".into()))?;
    expect(s.table.len(), 1)
}

fn intermediate_reply_figure1() -> Result<(), String> {
    let mut a = node_with("a", &safe(), &[known("d", 2, Validity::Valid, 1, "d")]);
    let t = a.handle_rreq(&rreq("s", 2, "d", 1, false, 1), id("x"), &safe());
    expect(
        t.emissions,
        vec![Emission::Unicast {
            to: id("x"),
            message: ControlMessage::Rrep(rrep("s", "d", 2, 1)),
        }],
    )
}

fn forward_route_1a_copies() -> Result<(), String> {
    let old = entry("d", 5, SnStatus::Unknown, Validity::Valid, 2, "a");
    let c = cfg(Amb1::CopyFromReply, Amb2::Merge, Amb3::Allow, Amb4::IfNotFresher);
    let e = update_forward_route(Some(&old), &rrep("s", "d", 2, 1), id("a"), &c);
    expect(route(e.as_ref()), Some("(d,2,val,1,a) kno".into()))
}

fn forward_route_1b_gate() -> Result<(), String> {
    let old = entry("d", 5, SnStatus::Unknown, Validity::Valid, 2, "a");
    expect(update_forward_route(Some(&old), &rrep("s", "d", 2, 1), id("a"), &safe()), None)
}

fn forward_route_created() -> Result<(), String> {
    let e = update_forward_route(None, &rrep("s", "d", 2, 1), id("a"), &safe());
    expect(route(e.as_ref()), Some("(d,2,val,1,a) kno".into()))
}

/// d (own sn 2) receives RREP(s,d) from a; s is a direct neighbour of d.
fn self_reply(amb3: Amb3) -> (NodeState, NodeState, Vec<Emission>) {
    let c = cfg(Amb1::KeepFresher, Amb2::Merge, amb3, Amb4::IfNotFresher);
    let mut d = node_with(
        "d",
        &c,
        &[known("a", 1, Validity::Valid, 1, "a"), known("s", 3, Validity::Valid, 1, "s")],
    );
    d.own_sn = SequenceNumber(2);
    let before = d.clone();
    let t = d.handle_rrep(&rrep("s", "d", 2, 1), id("a"), &c);
    (before, d, t.emissions)
}

fn forwarded_to_s() -> Vec<Emission> {
    vec![Emission::Unicast {
        to: id("s"),
        message: ControlMessage::Rrep(rrep("s", "d", 2, 2)),
    }]
}

fn self_entry_3a() -> Result<(), String> {
    let (_, d, emissions) = self_reply(Amb3::Allow);
    expect(route(d.self_entry()), Some("(d,2,val,2,a) kno".into()))?;
    expect(emissions, forwarded_to_s())
}

fn self_entry_3c_dropped() -> Result<(), String> {
    let (before, d, emissions) = self_reply(Amb3::DisallowDrop);
    expect(&d.table, &before.table)?;
    expect(emissions, vec![])
}

fn self_entry_3d_forwarded() -> Result<(), String> {
    let (before, d, emissions) = self_reply(Amb3::DisallowForward);
    expect(&d.table, &before.table)?;
    expect(emissions, forwarded_to_s())
}

fn break_without_routes() -> Result<(), String> {
    let mut n = node_with("n", &safe(), &[known("b", 1, Validity::Valid, 1, "b")]);
    let t = n.detect_link_break(id("a"));
    expect((t.rerr, t.emissions.len()), (None, 0))
}

fn break_without_precursors() -> Result<(), String> {
    let mut n = node_with("n", &safe(), &[known("a", 1, Validity::Valid, 1, "a")]);
    let t = n.detect_link_break(id("a"));
    expect(route(n.entry(id("a"))), Some("(a,2,inval,1,a) kno".into()))?;
    expect(
        t.rerr,
        Some(RerrMessage {
            unreachable: vec![(id("a"), SequenceNumber(2))],
        }),
    )?;
    expect(t.emissions.len(), 0)
}

fn break_figure1_g() -> Result<(), String> {
    let mut self_entry = known("d", 2, Validity::Valid, 2, "a");
    self_entry.precursors.insert(id("s"));
    let c = Preset::RfcStrictLoop.config();
    let mut d = node_with("d", &c, &[known("a", 1, Validity::Valid, 1, "a"), self_entry]);
    let t = d.detect_link_break(id("a"));
    expect(route(d.entry(id("d"))), Some("(d,3,inval,2,a) kno".into()))?;
    expect(route(d.entry(id("a"))), Some("(a,2,inval,1,a) kno".into()))?;
    let rerr = RerrMessage {
        unreachable: vec![(id("a"), SequenceNumber(2)), (id("d"), SequenceNumber(3))],
    };
    expect(
        t.emissions,
        vec![Emission::Unicast {
            to: id("s"),
            message: ControlMessage::Rerr(rerr),
        }],
    )
}

fn rerr_outcome(amb4: Amb4, stored: u32, reported: u32) -> Option<String> {
    let c = cfg(Amb1::KeepFresher, Amb2::Merge, Amb3::Allow, amb4);
    let mut n = node_with("n", &c, &[known("d", stored, Validity::Valid, 1, "p")]);
    let rerr = RerrMessage {
        unreachable: vec![(id("d"), SequenceNumber(reported))],
    };
    n.handle_rerr(&rerr, id("p"), &c);
    route(n.entry(id("d")))
}

fn rerr_five_way_split() -> Result<(), String> {
    let got: Vec<Option<String>> = Amb4::ALL.iter().map(|&a| rerr_outcome(a, 5, 3)).collect();
    let want = ["(d,3,inval,1,p) kno", "(d,5,val,1,p) kno", "(d,5,inval,1,p) kno", "(d,6,inval,1,p) kno", "(d,5,val,1,p) kno"];
    expect(got, want.iter().map(|s| Some(s.to_string())).collect())
}

fn rerr_footnote_agreement() -> Result<(), String> {
    for a in [Amb4::Copy, Amb4::IfNotFresher, Amb4::Max, Amb4::IfStrictlyOlder] {
        expect(rerr_outcome(a, 2, 3), Some("(d,3,inval,1,p) kno".into())).map_err(|e| format!("{a:?}: {e}"))?;
    }
    Ok(())
}

fn rerr_other_next_hop_ignored() -> Result<(), String> {
    for &a in Amb4::ALL {
        let c = cfg(Amb1::KeepFresher, Amb2::Merge, Amb3::Allow, a);
        let mut n = node_with("n", &c, &[known("d", 5, Validity::Valid, 1, "q")]);
        let rerr = RerrMessage {
            unreachable: vec![(id("d"), SequenceNumber(9))],
        };
        let t = n.handle_rerr(&rerr, id("p"), &c);
        expect((route(n.entry(id("d"))), t.emissions.len()), (Some("(d,5,val,1,q) kno".into()), 0))?;
    }
    Ok(())
}

fn pair_state(linked: bool, route_via: bool) -> GlobalState {
    let mut topo = Topology::new([id("a"), id("b")]).unwrap();
    if linked {
        topo.link(id("a"), id("b")).unwrap();
    }
    let mut g = GlobalState::new(topo, &safe(), DetectionMode::Eager);
    if route_via {
        let mut e = known("b", 1, Validity::Valid, 1, "b");
        e.precursors.insert(id("z"));
        g.nodes.get_mut(&id("a")).unwrap().table.insert(id("b"), e);
    }
    g
}

fn empty_queue_is_noop() -> Result<(), String> {
    let mut g = pair_state(true, false);
    let before = g.clone();
    let (outcome, _) = g.apply_event(&Event::DeliverNext { node: id("a") }, &safe()).map_err(|e| e.to_string())?;
    expect(outcome, StepOutcome::NoOp)?;
    expect(g.nodes, before.nodes)
}

fn probe(n: u32) -> ControlMessage {
    ControlMessage::Rerr(RerrMessage {
        unreachable: vec![(id("q"), SequenceNumber(n))],
    })
}

fn unicast_linked_fifo() -> Result<(), String> {
    let mut g = pair_state(true, false);
    let mut ctx = StepContext::default();
    g.unicast_or_fail(id("a"), id("b"), probe(1), &safe(), &mut ctx);
    g.unicast_or_fail(id("a"), id("b"), probe(2), &safe(), &mut ctx);
    let queued: Vec<ControlMessage> = g.queue(id("b")).map(|m| m.message.clone()).collect();
    expect(queued, vec![probe(1), probe(2)])
}

fn unicast_unlinked_breaks_route() -> Result<(), String> {
    let mut g = pair_state(false, true);
    let mut ctx = StepContext::default();
    g.unicast_or_fail(id("a"), id("b"), probe(1), &safe(), &mut ctx);
    expect(route(g.node(id("a")).unwrap().entry(id("b"))), Some("(b,2,inval,1,b) kno".into()))?;
    let breaks = ctx
        .records()
        .iter()
        .filter(|r| matches!(r, TraceRecord::LinkBreak { rerr: Some(_), .. }))
        .count();
    expect(breaks, 1)
}

fn unicast_unlinked_without_route() -> Result<(), String> {
    let mut g = pair_state(false, false);
    let before = g.clone();
    let mut ctx = StepContext::default();
    g.unicast_or_fail(id("a"), id("b"), probe(1), &safe(), &mut ctx);
    expect((&g.nodes, &g.inflight), (&before.nodes, &before.inflight))
}

fn no_tables_no_loops() -> Result<(), String> {
    expect(check_loop_freedom(&pair_state(true, false)), vec![])
}

fn chain_has_no_loop() -> Result<(), String> {
    let topo = Topology::new([id("a"), id("b"), id("c")]).unwrap();
    let mut g = GlobalState::new(topo, &safe(), DetectionMode::Eager);
    g.nodes.get_mut(&id("a")).unwrap().table.insert(id("c"), known("c", 1, Validity::Valid, 2, "b"));
    g.nodes.get_mut(&id("b")).unwrap().table.insert(id("c"), known("c", 1, Validity::Valid, 1, "c"));
    expect(check_loop_freedom(&g), super::walk_oracle(&g))?;
    expect(check_loop_freedom(&g), vec![])
}

fn overwrite_trace_violation() -> Result<(), String> {
    let trace = Trace {
        steps: vec![TraceStep {
            index: 0,
            event: Event::DeliverNext { node: id("s") },
            records: vec![TraceRecord::Entry {
                node: id("s"),
                before: Some(known("d", 5, Validity::Valid, 2, "a")),
                after: entry("d", 0, SnStatus::Unknown, Validity::Valid, 1, "d"),
            }],
        }],
    };
    let v = check_monotonicity(&trace);
    expect(v.len(), 1)?;
    expect((v[0].before, v[0].after), (SequenceNumber(5), SequenceNumber(0)))
}

fn empty_trace_monotone() -> Result<(), String> {
    expect(check_monotonicity(&Trace::default()), vec![])
}

fn figure1_3c_has_no_self_entries() -> Result<(), String> {
    let c = Preset::AodvUu.config();
    let run = Scenario::builtin("figure1").unwrap().run(&c).map_err(|e| e.to_string())?;
    expect(check_self_entries(&run.state, &c), vec![])
}

fn optimal_self_entries_at_start() -> Result<(), String> {
    let c = Preset::KernelAodv.config();
    let topo = Topology::new([id("a"), id("b"), id("c")]).unwrap();
    let g = GlobalState::new(topo, &c, DetectionMode::Eager);
    expect(check_self_entries(&g, &c), vec![])?;
    for (name, node) in g.nodes.iter() {
        expect(route(node.self_entry()), Some(format!("({name},1,val,0,{name}) kno")))?;
    }
    Ok(())
}

fn empty_witness_replay() -> Result<(), String> {
    let bounds = ExploreBounds::default();
    let c = Preset::RfcStrictLoop.config();
    let initial = bounds.initial_state(&c);
    let g = replay_witness(&initial, &[], &c).map_err(|e| e.to_string())?;
    expect(&g, &initial)?;
    expect(check_loop_freedom(&g), vec![])
}

fn zero_events_one_state() -> Result<(), String> {
    let bounds = ExploreBounds {
        max_events: 0,
        ..ExploreBounds::default()
    };
    let r = explore(&safe(), &bounds).map_err(|e| e.to_string())?;
    expect((r.states_visited, r.exhausted), (1, true))
}

pub const RULES: &[(&str, Check)] = &[
    ("originate: own sequence number incremented", originate_increments_own_sn),
    ("originate: stored dsn copied into request", originate_copies_stored_dsn),
    ("originate: no entry gives unknown dsn 0", originate_without_entry),
    ("previous hop: created unknown", previous_hop_created),
    ("previous hop: 2a leaves entry", previous_hop_2a_untouched),
    ("previous hop: 2b overwrites", previous_hop_2b_overwrites),
    ("previous hop: 2c keeps dsn and status", previous_hop_2c_merges),
    ("reverse route: created", reverse_route_created),
    ("reverse route: equal dsn, longer path ignored", reverse_route_not_fresher_not_shorter),
    ("reverse route: equal dsn, shorter path taken", reverse_route_shorter),
    ("request: intermediate without route rebroadcasts", intermediate_rebroadcasts),
    ("request: own request discarded after previous hop", own_request_discarded_after_previous_hop),
    ("request: intermediate reply from fresh route", intermediate_reply_figure1),
    ("forward route: 1a copies smaller dsn", forward_route_1a_copies),
    ("forward route: 1b refuses smaller dsn", forward_route_1b_gate),
    ("forward route: created", forward_route_created),
    ("reply about self: 3a installs self-entry", self_entry_3a),
    ("reply about self: 3c drops", self_entry_3c_dropped),
    ("reply about self: 3d forwards without entry", self_entry_3d_forwarded),
    ("link break: no affected route", break_without_routes),
    ("link break: no precursors, nothing sent", break_without_precursors),
    ("link break: self-entry and neighbour invalidated", break_figure1_g),
    ("route error: five-way split on (d,5) vs (d,3)", rerr_five_way_split),
    ("route error: 4a/4b/4c/4e agree on (d,2) vs (d,3)", rerr_footnote_agreement),
    ("route error: other next hop ignored", rerr_other_next_hop_ignored),
    ("netsim: deliver on empty queue is a no-op", empty_queue_is_noop),
    ("netsim: unicast to neighbour is FIFO", unicast_linked_fifo),
    ("netsim: failed unicast breaks route", unicast_unlinked_breaks_route),
    ("netsim: failed unicast without route changes nothing", unicast_unlinked_without_route),
    ("checker: empty tables loop-free", no_tables_no_loops),
    ("checker: chain loop-free", chain_has_no_loop),
    ("checker: overwrite trace has one violation", overwrite_trace_violation),
    ("checker: empty trace monotone", empty_trace_monotone),
    ("checker: no self-entries under 3c on figure1", figure1_3c_has_no_self_entries),
    ("checker: optimal self-entries at start under 3b", optimal_self_entries_at_start),
    ("explorer: empty witness replays to initial state", empty_witness_replay),
    ("explorer: zero events visits one state", zero_events_one_state),
];

/// Runs every rule, returning the failures.
pub fn failures() -> Vec<String> {
    RULES
        .iter()
        .filter_map(|(name, check)| check().err().map(|e| format!("{name}: {e}")))
        .collect()
}

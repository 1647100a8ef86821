//! Text and JSON renderings of runs, traces and exploration results.

use std::fmt::Write as _;

use serde_json::{json, Value};

use crate::explorer::ExploreResult;
use crate::netsim::{GlobalState, Trace};
use crate::scenario::ScenarioRun;
use crate::types::RoutingTableEntry;

/// `(d,3,inval,1,d) kno`, with precursors appended when present.
pub fn entry_line(e: &RoutingTableEntry) -> String {
    let mut s = format!("{} {}", e, e.sn_status.short());
    if !e.precursors.is_empty() {
        let names: Vec<String> = e.precursors.iter().map(|p| p.to_string()).collect();
        let _ = write!(s, " pre={{{}}}", names.join(","));
    }
    s
}

pub fn render_tables(g: &GlobalState) -> String {
    let mut out = String::new();
    for node in g.nodes.values() {
        let _ = writeln!(out, "{} (own sn {})", node.id, node.own_sn);
        if node.table.is_empty() {
            out.push_str("  (empty)\n");
        }
        for e in node.table.values() {
            let _ = writeln!(out, "  {}", entry_line(e));
        }
    }
    let links: Vec<String> = g.topology.links().map(|(a, b)| format!("{a}-{b}")).collect();
    let _ = writeln!(out, "links: {}", if links.is_empty() { "none".to_string() } else { links.join(" ") });
    if !g.inflight.is_empty() {
        out.push_str("in flight:\n");
        for (to, queue) in &g.inflight {
            for m in queue {
                let _ = writeln!(out, "  {} -> {to}: {}", m.sender, m.message);
            }
        }
    }
    out
}

pub fn render_trace(trace: &Trace) -> String {
    let mut out = String::new();
    for step in &trace.steps {
        let _ = writeln!(out, "[{}] {}", step.index, step.event);
        for r in &step.records {
            let _ = writeln!(out, "    {r}");
        }
    }
    out
}

pub fn render_run(run: &ScenarioRun) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "scenario {} under {}", run.name, run.config);
    for c in &run.checks {
        let status = if c.passed { "ok  " } else { "FAIL" };
        let part = c.part.as_deref().map(|p| format!(" [{p}]")).unwrap_or_default();
        let _ = writeln!(out, "{status} line {}{part}: {}", c.line, c.assertion);
        if !c.passed {
            let _ = writeln!(out, "       actual: {}", c.detail);
        }
    }
    out.push_str("\nfinal routing tables\n");
    out.push_str(&render_tables(&run.state));
    if run.loops.is_empty() {
        out.push_str("\nno routing loops\n");
    } else {
        out.push('\n');
        for l in &run.loops {
            let _ = writeln!(out, "{l}");
        }
    }
    if run.violations.is_empty() {
        out.push_str("sequence numbers monotone\n");
    } else {
        for v in &run.violations {
            let _ = writeln!(out, "{v}");
        }
    }
    let failed = run.failures().count();
    let _ = writeln!(
        out,
        "{} of {} assertions passed",
        run.checks.len() - failed,
        run.checks.len()
    );
    out
}

pub fn run_json(run: &ScenarioRun) -> Value {
    json!({
        "scenario": run.name,
        "config": run.config.to_string(),
        "passed": run.passed(),
        "checks": run.checks,
        "loops": run.loops,
        "monotonicity_violations": run.violations,
        "nodes": run.state.nodes,
        "links": run.state.topology.links().collect::<Vec<_>>(),
    })
}

pub fn render_explore(r: &ExploreResult) -> String {
    let b = &r.bounds;
    let mut out = String::new();
    let _ = writeln!(out, "config {}", r.config);
    let _ = writeln!(
        out,
        "bounds: {} nodes, {} events, {} link changes, {} route requests, initial {}, detection {}{}",
        b.node_count,
        b.max_events,
        b.max_link_changes,
        b.max_route_requests,
        b.initial,
        b.detection,
        if b.deliver_all { ", deliver-all steps" } else { "" }
    );
    let _ = writeln!(
        out,
        "states visited: {}  transitions: {}  depth reached: {}  exhausted: {}",
        r.states_visited, r.transitions, r.depth_reached, r.exhausted
    );
    let _ = writeln!(out, "loops: {}", r.loops.len());
    for l in &r.loops {
        let _ = writeln!(out, "  {} (witness of {} events)", l.report, l.witness.len());
    }
    let _ = writeln!(out, "monotonicity violations: {}", r.monotonicity_violations);
    for v in &r.violation_witnesses {
        let _ = writeln!(out, "  {} (witness of {} events)", v.violation, v.witness.len());
    }
    out
}

pub fn explore_json(r: &ExploreResult) -> Value {
    serde_json::to_value(r).expect("explore results serialize")
}

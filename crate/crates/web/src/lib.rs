//! Browser bindings: step through a scenario, run a small exploration, list
//! presets. The `*_json` functions are plain Rust so they can be tested
//! natively; the exported wrappers only convert errors.

use serde::Serialize;
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

use aodv_core::explorer::{loop_scenario, violation_scenario};
use aodv_core::report::{explore_json, render_tables, run_json};
use aodv_core::scenario::Item;
use aodv_core::{
    check_loop_freedom, explore, ExploreBounds, GlobalState, InterpretationConfig, Preset, Scenario,
};

/// Caps keeping a browser search to a second or two.
pub const MAX_NODES: usize = 4;
pub const MAX_EVENTS: usize = 8;
pub const STATE_LIMIT: usize = 200_000;

#[derive(Serialize)]
struct Snapshot {
    line: usize,
    part: Option<String>,
    event: String,
    records: Vec<String>,
    tables: String,
    nodes: Vec<String>,
    links: Vec<(String, String)>,
    /// Valid next hops as (node, destination, next hop).
    routes: Vec<(String, String, String)>,
    loops: Vec<String>,
}

fn snapshot(line: usize, part: Option<String>, event: String, g: &GlobalState) -> Snapshot {
    let records = g
        .trace
        .steps
        .last()
        .map(|s| s.records.iter().map(ToString::to_string).collect())
        .unwrap_or_default();
    let routes = g
        .nodes
        .values()
        .flat_map(|n| {
            n.table
                .values()
                .filter(|e| e.is_valid())
                .map(move |e| (n.id.to_string(), e.destination.to_string(), e.next_hop.to_string()))
        })
        .collect();
    Snapshot {
        line,
        part,
        event,
        records,
        tables: render_tables(g),
        nodes: g.topology.nodes().map(|n| n.to_string()).collect(),
        links: g.topology.links().map(|(a, b)| (a.to_string(), b.to_string())).collect(),
        routes,
        loops: check_loop_freedom(g).iter().map(ToString::to_string).collect(),
    }
}

/// Empty string: the scenario's own configuration. Otherwise a preset name
/// or the compact form `1b,2c,3a,4b,+1`.
pub fn parse_config(s: &str, fallback: Option<InterpretationConfig>) -> Result<InterpretationConfig, String> {
    let s = s.trim();
    if s.is_empty() {
        return Ok(fallback.unwrap_or_default());
    }
    if let Ok(p) = s.parse::<Preset>() {
        return Ok(p.config());
    }
    InterpretationConfig::parse_compact(s).map_err(|e| e.to_string())
}

/// Runs `text`, returning the final report plus one snapshot per event.
pub fn run_scenario_json(text: &str, config: &str) -> Result<Value, String> {
    let scenario = Scenario::parse(text).map_err(|e| e.to_string())?;
    let cfg = parse_config(config, scenario.config)?;
    let initial = scenario.initial_state(&cfg);
    let mut steps = vec![snapshot(0, None, "initial topology".into(), &initial)];
    let mut part = None;
    let run = scenario
        .run_observed(&cfg, |item, g| match item {
            Item::Part { label, .. } => part = Some(label.clone()),
            Item::Event { line, event } => steps.push(snapshot(*line, part.clone(), event.to_string(), g)),
            Item::Check { .. } => {}
        })
        .map_err(|e| e.to_string())?;
    Ok(json!({ "run": run_json(&run), "steps": steps }))
}

pub fn figure1_text(variant: &str) -> Result<String, String> {
    let name = match variant {
        "" | "figure1" | "plain" => "figure1",
        "ns2" | "figure1-ns2" => "figure1-ns2",
        other => return Err(format!("unknown variant `{other}`")),
    };
    Ok(Scenario::builtin(name).expect("built-in").to_text())
}

/// Bounded search from a fresh network, with every witness as scenario text.
pub fn explore_json_capped(config: &str, nodes: usize, max_events: usize) -> Result<Value, String> {
    let cfg = parse_config(config, None)?;
    if nodes > MAX_NODES || max_events > MAX_EVENTS {
        return Err(format!("the browser demo is limited to {MAX_NODES} nodes and {MAX_EVENTS} events"));
    }
    let bounds = ExploreBounds {
        node_count: nodes,
        max_events,
        state_limit: STATE_LIMIT,
        ..ExploreBounds::default()
    };
    let r = explore(&cfg, &bounds).map_err(|e| e.to_string())?;
    let witnesses: Vec<String> = r
        .loops
        .iter()
        .map(|l| loop_scenario(&r, l, "loop").to_text())
        .chain(r.violation_witnesses.iter().map(|v| violation_scenario(&r, v, "decrement").to_text()))
        .collect();
    let mut v = explore_json(&r);
    v["witness_scenarios"] = json!(witnesses);
    Ok(v)
}

pub fn presets_json() -> Value {
    Value::Array(
        Preset::ALL
            .iter()
            .map(|p| json!({ "name": p.name(), "config": p.config().to_string(), "description": p.description() }))
            .collect(),
    )
}

fn to_js(r: Result<Value, String>) -> Result<String, JsValue> {
    r.map(|v| v.to_string()).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn run_scenario(text: &str, config: &str) -> Result<String, JsValue> {
    to_js(run_scenario_json(text, config))
}

#[wasm_bindgen]
pub fn figure1(variant: &str) -> Result<String, JsValue> {
    figure1_text(variant).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn explore_small(config: &str, nodes: usize, max_events: usize) -> Result<String, JsValue> {
    to_js(explore_json_capped(config, nodes, max_events))
}

#[wasm_bindgen]
pub fn presets() -> String {
    presets_json().to_string()
}

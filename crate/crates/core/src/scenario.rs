//! Line-oriented scenario files.
//!
//! ```text
//! # comment
//! scenario <name>
//! config 1b,2c,3a,4b,+1          # or: preset <name>
//! detect eager|on-send
//! node <id> [<id> ...]
//! link <a> <b>                    # initial topology until the first event
//! events                          # optional explicit end of the set-up block
//! link <a> <b> | unlink <a> <b>
//! newpkt <src> <dest>
//! deliver <node> [<count>]
//! deliver-all
//! part <label>
//! assert-entry <node> <dest> <dsn> <val|inval> <hops> <next> [kno|unk]
//! assert-no-entry <node> <dest>
//! assert-loop <dest> <node> [<node> ...]
//! assert-loop-count <n>
//! assert-no-loops
//! assert-monotone
//! assert-decrement <node> <dest>
//! when amb3=3a amb4=4a|4b sn-increment=1: <assertion>
//! ```
//!
//! Assertions are checked at the point where they appear.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::checker::{check_loop_freedom, check_monotonicity, LoopReport, MonotonicityViolation};
use crate::config::{InterpretationConfig, Preset};
use crate::error::{ParseError, ScenarioError, SimError};
use crate::netsim::{DetectionMode, Event, GlobalState, Topology};
use crate::types::{NodeId, SnStatus, Validity};

pub const FIGURE1: &str = include_str!("../scenarios/figure1.scn");
pub const FIGURE1_NS2: &str = include_str!("../scenarios/figure1-ns2.scn");

/// Names accepted by [`Scenario::builtin`].
pub const BUILTINS: &[&str] = &["figure1", "figure1-ns2"];

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExpectedEntry {
    pub node: NodeId,
    pub destination: NodeId,
    pub dsn: u32,
    pub validity: Validity,
    pub hop_count: u32,
    pub next_hop: NodeId,
    pub sn_status: Option<SnStatus>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Assertion {
    Entry(ExpectedEntry),
    NoEntry { node: NodeId, destination: NodeId },
    Loop(LoopReport),
    LoopCount { count: usize },
    NoLoops,
    Monotone,
    /// Some step lowered `node`'s sequence number for `destination`.
    Decrement { node: NodeId, destination: NodeId },
}

impl fmt::Display for Assertion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Assertion::Entry(e) => {
                write!(
                    f,
                    "assert-entry {} {} {} {} {} {}",
                    e.node,
                    e.destination,
                    e.dsn,
                    e.validity.short(),
                    e.hop_count,
                    e.next_hop
                )?;
                if let Some(status) = e.sn_status {
                    write!(f, " {}", status.short())?;
                }
                Ok(())
            }
            Assertion::NoEntry { node, destination } => {
                write!(f, "assert-no-entry {node} {destination}")
            }
            Assertion::Loop(report) => {
                write!(f, "assert-loop {}", report.destination)?;
                for n in &report.cycle {
                    write!(f, " {n}")?;
                }
                Ok(())
            }
            Assertion::LoopCount { count } => write!(f, "assert-loop-count {count}"),
            Assertion::NoLoops => f.write_str("assert-no-loops"),
            Assertion::Monotone => f.write_str("assert-monotone"),
            Assertion::Decrement { node, destination } => {
                write!(f, "assert-decrement {node} {destination}")
            }
        }
    }
}

/// Restricts an assertion to configurations matching every condition.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Guard {
    /// `(key, allowed values)`, keys being `amb1`..`amb4` and `sn-increment`.
    pub conditions: Vec<(String, Vec<String>)>,
}

const GUARD_KEYS: &[&str] = &["amb1", "amb2", "amb3", "amb4", "sn-increment"];

impl Guard {
    pub fn matches(&self, cfg: &InterpretationConfig) -> bool {
        self.conditions.iter().all(|(key, allowed)| {
            let actual = match key.as_str() {
                "amb1" => cfg.amb1.code(),
                "amb2" => cfg.amb2.code(),
                "amb3" => cfg.amb3.code(),
                "amb4" => cfg.amb4.code(),
                _ => match cfg.rreq_sn_increment.value() {
                    1 => "1",
                    _ => "2",
                },
            };
            allowed.iter().any(|v| v == actual)
        })
    }

    fn is_empty(&self) -> bool {
        self.conditions.is_empty()
    }
}

impl fmt::Display for Guard {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("when")?;
        for (key, values) in &self.conditions {
            write!(f, " {key}={}", values.join("|"))?;
        }
        f.write_str(":")
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Item {
    Event { line: usize, event: Event },
    Part { line: usize, label: String },
    Check {
        line: usize,
        guard: Guard,
        assertion: Assertion,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    pub config: Option<InterpretationConfig>,
    pub detection: DetectionMode,
    pub nodes: Vec<NodeId>,
    pub initial_links: Vec<(NodeId, NodeId)>,
    pub items: Vec<Item>,
}

fn err(line: usize, message: impl Into<String>) -> ParseError {
    ParseError {
        line,
        message: message.into(),
    }
}

fn node_arg(line: usize, s: &str) -> Result<NodeId, ParseError> {
    NodeId::new(s).map_err(|e| err(line, e.to_string()))
}

fn count_arg<T: std::str::FromStr>(line: usize, s: &str, what: &str) -> Result<T, ParseError> {
    s.parse()
        .map_err(|_| err(line, format!("expected {what}, found `{s}`")))
}

fn expect_args(line: usize, directive: &str, args: &[&str], min: usize, max: usize) -> Result<(), ParseError> {
    if args.len() < min || args.len() > max {
        let wanted = if min == max {
            format!("{min}")
        } else {
            format!("{min} to {max}")
        };
        return Err(err(
            line,
            format!("`{directive}` takes {wanted} argument(s), got {}", args.len()),
        ));
    }
    Ok(())
}

fn parse_guard(line: usize, text: &str) -> Result<Guard, ParseError> {
    let mut guard = Guard::default();
    for cond in text.split_whitespace() {
        let (key, values) = cond
            .split_once('=')
            .ok_or_else(|| err(line, format!("guard condition `{cond}` must look like key=value")))?;
        let key = key.to_ascii_lowercase();
        if !GUARD_KEYS.contains(&key.as_str()) {
            return Err(err(line, format!("unknown guard key `{key}`")));
        }
        let mut allowed = Vec::new();
        for v in values.split('|') {
            let v = v.trim().to_ascii_lowercase();
            let valid = match key.as_str() {
                "amb1" => v.parse::<crate::config::Amb1>().map(|a| a.code().to_string()),
                "amb2" => v.parse::<crate::config::Amb2>().map(|a| a.code().to_string()),
                "amb3" => v.parse::<crate::config::Amb3>().map(|a| a.code().to_string()),
                "amb4" => v.parse::<crate::config::Amb4>().map(|a| a.code().to_string()),
                _ => v
                    .trim_start_matches('+')
                    .parse::<crate::config::SnIncrement>()
                    .map(|i| i.value().to_string()),
            };
            allowed.push(valid.map_err(|e| err(line, e.to_string()))?);
        }
        guard.conditions.push((key, allowed));
    }
    if guard.is_empty() {
        return Err(err(line, "`when` needs at least one condition"));
    }
    Ok(guard)
}

fn parse_assertion(line: usize, directive: &str, args: &[&str]) -> Result<Option<Assertion>, ParseError> {
    let assertion = match directive {
        "assert-entry" => {
            expect_args(line, directive, args, 6, 7)?;
            let validity = match args[3] {
                "val" | "valid" => Validity::Valid,
                "inval" | "invalid" => Validity::Invalid,
                other => return Err(err(line, format!("expected val or inval, found `{other}`"))),
            };
            let sn_status = match args.get(6).copied() {
                None => None,
                Some("kno" | "known") => Some(SnStatus::Known),
                Some("unk" | "unknown") => Some(SnStatus::Unknown),
                Some(other) => return Err(err(line, format!("expected kno or unk, found `{other}`"))),
            };
            Assertion::Entry(ExpectedEntry {
                node: node_arg(line, args[0])?,
                destination: node_arg(line, args[1])?,
                dsn: count_arg(line, args[2], "a sequence number")?,
                validity,
                hop_count: count_arg(line, args[4], "a hop count")?,
                next_hop: node_arg(line, args[5])?,
                sn_status,
            })
        }
        "assert-no-entry" => {
            expect_args(line, directive, args, 2, 2)?;
            Assertion::NoEntry {
                node: node_arg(line, args[0])?,
                destination: node_arg(line, args[1])?,
            }
        }
        "assert-loop" => {
            if args.len() < 3 {
                return Err(err(line, "`assert-loop` takes a destination and at least two nodes"));
            }
            let destination = node_arg(line, args[0])?;
            let mut cycle = args[1..]
                .iter()
                .map(|a| node_arg(line, a))
                .collect::<Result<Vec<_>, _>>()?;
            let min = (0..cycle.len()).min_by_key(|&i| cycle[i]).unwrap_or(0);
            cycle.rotate_left(min);
            Assertion::Loop(LoopReport { destination, cycle })
        }
        "assert-loop-count" => {
            expect_args(line, directive, args, 1, 1)?;
            Assertion::LoopCount {
                count: count_arg(line, args[0], "a loop count")?,
            }
        }
        "assert-no-loops" => {
            expect_args(line, directive, args, 0, 0)?;
            Assertion::NoLoops
        }
        "assert-monotone" => {
            expect_args(line, directive, args, 0, 0)?;
            Assertion::Monotone
        }
        "assert-decrement" => {
            expect_args(line, directive, args, 2, 2)?;
            Assertion::Decrement {
                node: node_arg(line, args[0])?,
                destination: node_arg(line, args[1])?,
            }
        }
        _ => return Ok(None),
    };
    Ok(Some(assertion))
}

impl Scenario {
    pub fn builtin(name: &str) -> Option<Scenario> {
        let text = match name {
            "figure1" => FIGURE1,
            "figure1-ns2" => FIGURE1_NS2,
            _ => return None,
        };
        Some(Scenario::parse(text).expect("built-in scenarios parse"))
    }

    pub fn parse(text: &str) -> Result<Scenario, ParseError> {
        let mut scenario = Scenario {
            name: "unnamed".to_string(),
            config: None,
            detection: DetectionMode::default(),
            nodes: Vec::new(),
            initial_links: Vec::new(),
            items: Vec::new(),
        };
        let mut in_setup = true;

        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (guard, body) = match content.strip_prefix("when ") {
                Some(rest) => {
                    let (conds, body) = rest
                        .split_once(':')
                        .ok_or_else(|| err(line, "`when` guard must end with `:`"))?;
                    (Some(parse_guard(line, conds)?), body.trim())
                }
                None => (None, content),
            };
            let words: Vec<&str> = body.split_whitespace().collect();
            let Some((&directive, args)) = words.split_first() else {
                return Err(err(line, "missing directive after guard"));
            };

            if let Some(assertion) = parse_assertion(line, directive, args)? {
                in_setup = false;
                scenario.items.push(Item::Check {
                    line,
                    guard: guard.unwrap_or_default(),
                    assertion,
                });
                continue;
            }
            if guard.is_some() {
                return Err(err(line, "only assertions can be guarded"));
            }

            match directive {
                "scenario" => {
                    if args.is_empty() {
                        return Err(err(line, "`scenario` needs a name"));
                    }
                    scenario.name = args.join(" ");
                }
                "config" => {
                    expect_args(line, directive, args, 1, 1)?;
                    let cfg = InterpretationConfig::parse_compact(args[0])
                        .map_err(|e| err(line, e.to_string()))?;
                    scenario.config = Some(cfg);
                }
                "preset" => {
                    expect_args(line, directive, args, 1, 1)?;
                    let preset: Preset = args[0].parse().map_err(|e: crate::error::ConfigError| err(line, e.to_string()))?;
                    scenario.config = Some(preset.config());
                }
                "detect" => {
                    expect_args(line, directive, args, 1, 1)?;
                    scenario.detection = args[0].parse().map_err(|e: String| err(line, e))?;
                }
                "node" | "nodes" => {
                    if !in_setup {
                        return Err(err(line, "nodes must be declared before the first event"));
                    }
                    if args.is_empty() {
                        return Err(err(line, "`node` needs at least one id"));
                    }
                    for a in args {
                        let n = node_arg(line, a)?;
                        if scenario.nodes.contains(&n) {
                            return Err(err(line, format!("node `{n}` declared twice")));
                        }
                        scenario.nodes.push(n);
                    }
                }
                "events" => {
                    expect_args(line, directive, args, 0, 0)?;
                    in_setup = false;
                }
                "link" | "unlink" => {
                    expect_args(line, directive, args, 2, 2)?;
                    let a = scenario.declared(line, args[0])?;
                    let b = scenario.declared(line, args[1])?;
                    if a == b {
                        return Err(err(line, "link endpoints must be distinct"));
                    }
                    if in_setup && directive == "link" {
                        scenario.initial_links.push((a, b));
                    } else if in_setup {
                        scenario.initial_links.retain(|&(x, y)| (x, y) != (a, b) && (x, y) != (b, a));
                    } else {
                        let event = if directive == "link" {
                            Event::LinkUp { a, b }
                        } else {
                            Event::LinkDown { a, b }
                        };
                        scenario.items.push(Item::Event { line, event });
                    }
                }
                "newpkt" => {
                    expect_args(line, directive, args, 2, 2)?;
                    let src = scenario.declared(line, args[0])?;
                    let dest = scenario.declared(line, args[1])?;
                    if src == dest {
                        return Err(err(line, "a node cannot send a packet to itself"));
                    }
                    in_setup = false;
                    scenario.items.push(Item::Event {
                        line,
                        event: Event::NewPacket { src, dest },
                    });
                }
                "deliver" => {
                    expect_args(line, directive, args, 1, 2)?;
                    let node = scenario.declared(line, args[0])?;
                    let count: usize = match args.get(1) {
                        Some(c) => count_arg(line, c, "a delivery count")?,
                        None => 1,
                    };
                    in_setup = false;
                    for _ in 0..count {
                        scenario.items.push(Item::Event {
                            line,
                            event: Event::DeliverNext { node },
                        });
                    }
                }
                "deliver-all" => {
                    expect_args(line, directive, args, 0, 0)?;
                    in_setup = false;
                    scenario.items.push(Item::Event {
                        line,
                        event: Event::DeliverAll,
                    });
                }
                "part" => {
                    in_setup = false;
                    scenario.items.push(Item::Part {
                        line,
                        label: args.join(" "),
                    });
                }
                other => return Err(err(line, format!("unknown directive `{other}`"))),
            }
        }
        if scenario.nodes.len() < 2 {
            return Err(err(text.lines().count().max(1), "a scenario needs at least two nodes"));
        }
        Ok(scenario)
    }

    fn declared(&self, line: usize, s: &str) -> Result<NodeId, ParseError> {
        let n = node_arg(line, s)?;
        if !self.nodes.contains(&n) {
            return Err(err(line, format!("node `{n}` is not declared")));
        }
        Ok(n)
    }

    /// Builds a scenario from an event list, e.g. an explorer witness.
    pub fn from_events(
        name: &str,
        config: Option<InterpretationConfig>,
        detection: DetectionMode,
        topology: &Topology,
        events: &[Event],
        checks: Vec<Assertion>,
    ) -> Scenario {
        let mut items: Vec<Item> = events
            .iter()
            .map(|e| Item::Event {
                line: 0,
                event: e.clone(),
            })
            .collect();
        items.extend(checks.into_iter().map(|assertion| Item::Check {
            line: 0,
            guard: Guard::default(),
            assertion,
        }));
        Scenario {
            name: name.to_string(),
            config,
            detection,
            nodes: topology.nodes().collect(),
            initial_links: topology.links().collect(),
            items,
        }
    }

    pub fn events(&self) -> impl Iterator<Item = &Event> {
        self.items.iter().filter_map(|i| match i {
            Item::Event { event, .. } => Some(event),
            _ => None,
        })
    }

    /// Events preceding the first `part` marker whose label is `part` or
    /// starts with the word `part`, e.g. `(e)`.
    pub fn events_before(&self, part: &str) -> Option<Vec<Event>> {
        let mut events = Vec::new();
        for item in &self.items {
            match item {
                Item::Event { event, .. } => events.push(event.clone()),
                Item::Part { label, .. }
                    if label == part || label.split_whitespace().next() == Some(part) =>
                {
                    return Some(events)
                }
                _ => {}
            }
        }
        None
    }

    pub fn initial_topology(&self) -> Topology {
        let mut topo = Topology::new(self.nodes.iter().copied()).expect("nodes are distinct");
        for &(a, b) in &self.initial_links {
            topo.link(a, b).expect("links reference declared nodes");
        }
        topo
    }

    pub fn initial_state(&self, cfg: &InterpretationConfig) -> GlobalState {
        GlobalState::new(self.initial_topology(), cfg, self.detection)
    }

    /// Renders the scenario back to the text format.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("scenario {}\n", self.name));
        if let Some(cfg) = self.config {
            out.push_str(&format!("config {cfg}\n"));
        }
        out.push_str(&format!("detect {}\n", self.detection));
        let names: Vec<String> = self.nodes.iter().map(|n| n.to_string()).collect();
        out.push_str(&format!("node {}\n", names.join(" ")));
        for (a, b) in &self.initial_links {
            out.push_str(&format!("link {a} {b}\n"));
        }
        out.push_str("events\n");
        for item in &self.items {
            match item {
                Item::Event { event, .. } => out.push_str(&format!("{event}\n")),
                Item::Part { label, .. } => out.push_str(&format!("part {label}\n")),
                Item::Check { guard, assertion, .. } => {
                    if guard.is_empty() {
                        out.push_str(&format!("{assertion}\n"));
                    } else {
                        out.push_str(&format!("{guard} {assertion}\n"));
                    }
                }
            }
        }
        out
    }

    /// Configuration used when the caller does not supply one.
    pub fn effective_config(&self, override_cfg: Option<InterpretationConfig>) -> InterpretationConfig {
        override_cfg.or(self.config).unwrap_or_default()
    }

    pub fn run(&self, cfg: &InterpretationConfig) -> Result<ScenarioRun, ScenarioError> {
        self.run_observed(cfg, |_, _| {})
    }

    /// Like [`Scenario::run`], calling `observe` after every item.
    pub fn run_observed(
        &self,
        cfg: &InterpretationConfig,
        mut observe: impl FnMut(&Item, &GlobalState),
    ) -> Result<ScenarioRun, ScenarioError> {
        let mut state = self.initial_state(cfg);
        let mut checks = Vec::new();
        let mut part = None;
        for item in &self.items {
            match item {
                Item::Event { line, event } => {
                    state
                        .apply_event(event, cfg)
                        .map_err(|source: SimError| ScenarioError::Event {
                            line: *line,
                            event: event.to_string(),
                            source,
                        })?;
                }
                Item::Part { label, .. } => part = Some(label.clone()),
                Item::Check {
                    line,
                    guard,
                    assertion,
                } => {
                    if guard.matches(cfg) {
                        let (passed, detail) = evaluate(assertion, &state);
                        checks.push(CheckResult {
                            line: *line,
                            part: part.clone(),
                            assertion: assertion.to_string(),
                            passed,
                            detail,
                        });
                    }
                }
            }
            observe(item, &state);
        }
        Ok(ScenarioRun {
            name: self.name.clone(),
            config: *cfg,
            loops: check_loop_freedom(&state),
            violations: check_monotonicity(&state.trace),
            checks,
            state,
        })
    }
}

fn evaluate(assertion: &Assertion, state: &GlobalState) -> (bool, String) {
    match assertion {
        Assertion::Entry(expected) => {
            let actual = state
                .node(expected.node)
                .and_then(|n| n.entry(expected.destination));
            match actual {
                None => (false, format!("{} has no entry for {}", expected.node, expected.destination)),
                Some(e) => {
                    let ok = e.dsn.0 == expected.dsn
                        && e.validity == expected.validity
                        && e.hop_count == expected.hop_count
                        && e.next_hop == expected.next_hop
                        && expected.sn_status.is_none_or(|s| s == e.sn_status);
                    (ok, format!("{} holds {} {}", expected.node, e, e.sn_status.short()))
                }
            }
        }
        Assertion::NoEntry { node, destination } => {
            match state.node(*node).and_then(|n| n.entry(*destination)) {
                None => (true, format!("{node} has no entry for {destination}")),
                Some(e) => (false, format!("{node} holds {e}")),
            }
        }
        Assertion::Loop(expected) => {
            let loops = check_loop_freedom(state);
            (loops.contains(expected), describe_loops(&loops))
        }
        Assertion::LoopCount { count } => {
            let loops = check_loop_freedom(state);
            (loops.len() == *count, describe_loops(&loops))
        }
        Assertion::NoLoops => {
            let loops = check_loop_freedom(state);
            (loops.is_empty(), describe_loops(&loops))
        }
        Assertion::Monotone => {
            let violations = check_monotonicity(&state.trace);
            let detail = match violations.first() {
                None => "no sequence number decreased".to_string(),
                Some(v) => format!("{} violation(s), first: {v}", violations.len()),
            };
            (violations.is_empty(), detail)
        }
        Assertion::Decrement { node, destination } => {
            let found = check_monotonicity(&state.trace)
                .into_iter()
                .find(|v| v.node == *node && v.destination == *destination);
            match found {
                Some(v) => (true, v.to_string()),
                None => (false, format!("{node} never lowered its sequence number for {destination}")),
            }
        }
    }
}

fn describe_loops(loops: &[LoopReport]) -> String {
    if loops.is_empty() {
        return "no loops".to_string();
    }
    loops
        .iter()
        .map(|l| l.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckResult {
    pub line: usize,
    pub part: Option<String>,
    pub assertion: String,
    pub passed: bool,
    /// What was actually observed.
    pub detail: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScenarioRun {
    pub name: String,
    pub config: InterpretationConfig,
    pub state: GlobalState,
    pub checks: Vec<CheckResult>,
    pub loops: Vec<LoopReport>,
    pub violations: Vec<MonotonicityViolation>,
}

impl ScenarioRun {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckResult> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

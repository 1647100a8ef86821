//! Bounded exhaustive exploration of event interleavings.
//!
//! The search runs in breadth-first layers, so the first witness recorded for
//! any property is one of minimal length. States are deduplicated by
//! fingerprint; a state reached again is only expanded when it arrives with a
//! link-change/route-request budget that no earlier visit dominates.
//!
//! Each layer is expanded in parallel when the `parallel` feature is on and
//! merged back in frontier order, so results never depend on scheduling.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::checker::{check_loop_freedom, step_violations, LoopReport, MonotonicityViolation};
use crate::config::InterpretationConfig;
use crate::error::{BoundsError, ExploreError, ReplayError};
use crate::netsim::{DetectionMode, Event, GlobalState, StepOutcome, Topology, TraceStep};
use crate::scenario::{Assertion, Scenario};
use crate::types::NodeId;

pub const MAX_NODES: usize = 5;

/// Frontier items expanded together; bounds the successor buffer.
const CHUNK: usize = 4096;

/// Witness: an event list replayed from the bounds' initial state.
pub type Witness = Vec<Event>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialTopology {
    /// No links.
    Empty,
    /// a-b, b-c, ...
    Line,
    /// Every pair linked.
    Complete,
}

impl fmt::Display for InitialTopology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            InitialTopology::Empty => "empty",
            InitialTopology::Line => "line",
            InitialTopology::Complete => "complete",
        })
    }
}

impl FromStr for InitialTopology {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "empty" => Ok(InitialTopology::Empty),
            "line" => Ok(InitialTopology::Line),
            "complete" | "all" => Ok(InitialTopology::Complete),
            other => Err(format!("unknown initial topology `{other}` (expected empty, line or complete)")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExploreBounds {
    pub node_count: usize,
    pub max_events: usize,
    pub max_link_changes: usize,
    pub max_route_requests: usize,
    /// Cap on stored states; hitting it ends the search with `exhausted = false`.
    pub state_limit: usize,
    pub initial: InitialTopology,
    pub detection: DetectionMode,
    /// Also offer `DeliverAll` as a single event.
    pub deliver_all: bool,
}

impl Default for ExploreBounds {
    fn default() -> Self {
        ExploreBounds {
            node_count: 3,
            max_events: 8,
            max_link_changes: 3,
            max_route_requests: 2,
            state_limit: 4_000_000,
            initial: InitialTopology::Empty,
            detection: DetectionMode::Eager,
            deliver_all: false,
        }
    }
}

impl ExploreBounds {
    pub fn validate(&self) -> Result<(), BoundsError> {
        if self.node_count < 2 || self.node_count > MAX_NODES {
            return Err(BoundsError::NodeCount {
                got: self.node_count,
                max: MAX_NODES,
            });
        }
        if self.state_limit == 0 {
            return Err(BoundsError::StateLimit);
        }
        Ok(())
    }

    pub fn node_ids(&self) -> Vec<NodeId> {
        (0..self.node_count).map(NodeId::generated).collect()
    }

    pub fn initial_topology(&self) -> Topology {
        let ids = self.node_ids();
        let mut topo = Topology::new(ids.iter().copied()).expect("generated ids are distinct");
        for (i, &a) in ids.iter().enumerate() {
            for (j, &b) in ids.iter().enumerate().skip(i + 1) {
                let add = match self.initial {
                    InitialTopology::Empty => false,
                    InitialTopology::Line => j == i + 1,
                    InitialTopology::Complete => true,
                };
                if add {
                    topo.link(a, b).expect("distinct generated ids");
                }
            }
        }
        topo
    }

    pub fn initial_state(&self, cfg: &InterpretationConfig) -> GlobalState {
        GlobalState::new(self.initial_topology(), cfg, self.detection)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoopWitness {
    pub report: LoopReport,
    pub witness: Witness,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ViolationWitness {
    pub violation: MonotonicityViolation,
    pub witness: Witness,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExploreResult {
    pub config: InterpretationConfig,
    pub bounds: ExploreBounds,
    /// Topology every witness is replayed from.
    pub origin: Topology,
    /// Events applied before the search began; every witness starts with them.
    pub prefix: Witness,
    pub states_visited: usize,
    pub transitions: usize,
    pub depth_reached: usize,
    /// One entry per distinct loop, each with a shortest witness.
    pub loops: Vec<LoopWitness>,
    /// Number of explored transitions that lowered some stored sequence number.
    pub monotonicity_violations: usize,
    /// A shortest witness for each (node, destination) pair that saw a decrease.
    pub violation_witnesses: Vec<ViolationWitness>,
    pub exhausted: bool,
}

impl ExploreResult {
    pub fn loop_free(&self) -> bool {
        self.loops.is_empty()
    }
}

struct ArenaNode {
    parent: Option<usize>,
    event: Option<Event>,
    depth: usize,
}

/// A newly admitted state, handed to the visitor of [`explore_with`].
pub struct Visit<'a> {
    pub index: usize,
    pub depth: usize,
    pub state: &'a GlobalState,
    /// The transition that produced the state; `None` for the initial state.
    pub step: Option<&'a TraceStep>,
    prefix: &'a [Event],
    arena: &'a [ArenaNode],
}

impl Visit<'_> {
    pub fn witness(&self) -> Witness {
        witness_of(self.prefix, self.arena, self.index)
    }
}

fn witness_of(prefix: &[Event], arena: &[ArenaNode], mut index: usize) -> Witness {
    let mut events = Vec::with_capacity(arena[index].depth);
    while let Some(parent) = arena[index].parent {
        events.push(arena[index].event.clone().expect("non-root nodes carry an event"));
        index = parent;
    }
    events.extend(prefix.iter().rev().cloned());
    events.reverse();
    events
}

#[derive(Clone, Copy, PartialEq, Eq)]
struct Budget {
    link_changes: usize,
    route_requests: usize,
}

impl Budget {
    fn dominated_by(self, other: Budget) -> bool {
        other.link_changes <= self.link_changes && other.route_requests <= self.route_requests
    }
}

struct FrontierItem {
    index: usize,
    state: GlobalState,
    budget: Budget,
}

struct Successor {
    parent: usize,
    event: Event,
    state: GlobalState,
    step: TraceStep,
    budget: Budget,
    fingerprint: u128,
}

/// Events enabled in `state` under the remaining budget, in a fixed order.
pub fn enabled_events(state: &GlobalState, bounds: &ExploreBounds, budget_left: (bool, bool)) -> Vec<Event> {
    let (links_left, requests_left) = budget_left;
    let ids: Vec<NodeId> = state.topology.nodes().collect();
    let mut events = Vec::new();
    if links_left {
        for (i, &a) in ids.iter().enumerate() {
            for &b in &ids[i + 1..] {
                events.push(if state.topology.linked(a, b) {
                    Event::LinkDown { a, b }
                } else {
                    Event::LinkUp { a, b }
                });
            }
        }
    }
    if requests_left {
        for &src in &ids {
            for &dest in &ids {
                if src != dest {
                    events.push(Event::NewPacket { src, dest });
                }
            }
        }
    }
    for &node in &ids {
        if state.queue_len(node) > 0 {
            events.push(Event::DeliverNext { node });
        }
    }
    if bounds.deliver_all && !state.is_quiescent() {
        events.push(Event::DeliverAll);
    }
    events
}

fn expand(item: &FrontierItem, cfg: &InterpretationConfig, bounds: &ExploreBounds) -> Vec<Successor> {
    let budget_left = (
        item.budget.link_changes < bounds.max_link_changes,
        item.budget.route_requests < bounds.max_route_requests,
    );
    let mut out = Vec::new();
    for event in enabled_events(&item.state, bounds, budget_left) {
        let mut state = item.state.clone();
        let Ok((outcome, step)) = state.apply_event(&event, cfg) else {
            // DeliverAll may fail to quiesce; treat that branch as pruned.
            continue;
        };
        if outcome == StepOutcome::NoOp {
            continue;
        }
        let mut budget = item.budget;
        if event.is_link_change() {
            budget.link_changes += 1;
        }
        if matches!(event, Event::NewPacket { .. }) {
            budget.route_requests += 1;
        }
        let fingerprint = state.fingerprint();
        out.push(Successor {
            parent: item.index,
            event,
            state,
            step,
            budget,
            fingerprint,
        });
    }
    out
}

#[cfg(feature = "parallel")]
fn expand_layer(frontier: &[FrontierItem], cfg: &InterpretationConfig, bounds: &ExploreBounds) -> Vec<Vec<Successor>> {
    use rayon::prelude::*;
    frontier.par_iter().map(|item| expand(item, cfg, bounds)).collect()
}

#[cfg(not(feature = "parallel"))]
fn expand_layer(frontier: &[FrontierItem], cfg: &InterpretationConfig, bounds: &ExploreBounds) -> Vec<Vec<Successor>> {
    frontier.iter().map(|item| expand(item, cfg, bounds)).collect()
}

pub fn explore(cfg: &InterpretationConfig, bounds: &ExploreBounds) -> Result<ExploreResult, BoundsError> {
    explore_with(cfg, bounds, |_| {})
}

/// Like [`explore`], calling `visit` once for every admitted state in
/// breadth-first order.
pub fn explore_with(
    cfg: &InterpretationConfig,
    bounds: &ExploreBounds,
    visit: impl FnMut(&Visit<'_>),
) -> Result<ExploreResult, BoundsError> {
    bounds.validate()?;
    let origin = bounds.initial_state(cfg).without_trace();
    Ok(search(cfg, bounds.clone(), origin, Vec::new(), visit))
}

/// Searches from the state reached by replaying `prefix` on `origin`, for
/// instance a scenario cut short. The node set and detection mode come from
/// `origin`; `bounds.node_count`, `initial` and `detection` are overwritten.
/// Event and budget limits count only events after the prefix.
pub fn explore_from(
    cfg: &InterpretationConfig,
    bounds: &ExploreBounds,
    origin: &GlobalState,
    prefix: &[Event],
    visit: impl FnMut(&Visit<'_>),
) -> Result<ExploreResult, ExploreError> {
    let mut bounds = bounds.clone();
    bounds.node_count = origin.nodes.len();
    bounds.detection = origin.detection;
    bounds.validate()?;
    let mut root = origin.clone().without_trace();
    for (index, event) in prefix.iter().enumerate() {
        root.apply_event(event, cfg).map_err(|source| ReplayError {
            index,
            event: event.to_string(),
            source,
        })?;
    }
    let mut result = search(cfg, bounds, root, prefix.to_vec(), visit);
    result.origin = origin.topology.clone();
    Ok(result)
}

fn search(
    cfg: &InterpretationConfig,
    bounds: ExploreBounds,
    root: GlobalState,
    prefix: Witness,
    mut visit: impl FnMut(&Visit<'_>),
) -> ExploreResult {
    let bounds = &bounds;
    let origin = bounds.initial_topology();
    let mut arena = vec![ArenaNode {
        parent: None,
        event: None,
        depth: 0,
    }];
    let mut seen: HashMap<u128, Vec<Budget>> = HashMap::new();
    let zero = Budget {
        link_changes: 0,
        route_requests: 0,
    };
    seen.insert(root.fingerprint(), vec![zero]);

    let mut loops: Vec<LoopWitness> = Vec::new();
    let mut known_loops: BTreeSet<LoopReport> = BTreeSet::new();
    let mut violation_witnesses = Vec::new();
    let mut violation_pairs = BTreeSet::new();
    let mut monotonicity_violations = 0;
    let mut transitions = 0;
    let mut exhausted = true;
    let mut depth_reached = 0;

    let mut record_loops = |state: &GlobalState, index: usize, arena: &[ArenaNode], loops: &mut Vec<LoopWitness>| {
        for report in check_loop_freedom(state) {
            if known_loops.insert(report.clone()) {
                loops.push(LoopWitness {
                    report,
                    witness: witness_of(&prefix, arena, index),
                });
            }
        }
    };

    visit(&Visit {
        index: 0,
        depth: 0,
        state: &root,
        step: None,
        prefix: &prefix,
        arena: &arena,
    });
    record_loops(&root, 0, &arena, &mut loops);

    let mut frontier = vec![FrontierItem {
        index: 0,
        state: root,
        budget: zero,
    }];

    'layers: for depth in 1..=bounds.max_events {
        if frontier.is_empty() {
            break;
        }
        let mut next = Vec::new();
        let mut pending = std::mem::take(&mut frontier).into_iter();
        loop {
            let chunk: Vec<FrontierItem> = pending.by_ref().take(CHUNK).collect();
            if chunk.is_empty() {
                break;
            }
            let layer = expand_layer(&chunk, cfg, bounds);
            drop(chunk);
            for succ in layer.into_iter().flatten() {
                transitions += 1;
                let violations = step_violations(&succ.step);
                let budgets = seen.entry(succ.fingerprint).or_default();
                let admitted = !budgets.iter().any(|&b| succ.budget.dominated_by(b));
                let index = arena.len();
                if admitted {
                    if arena.len() >= bounds.state_limit {
                        exhausted = false;
                        break 'layers;
                    }
                    budgets.retain(|&b| !b.dominated_by(succ.budget));
                    budgets.push(succ.budget);
                    arena.push(ArenaNode {
                        parent: Some(succ.parent),
                        event: Some(succ.event.clone()),
                        depth,
                    });
                    depth_reached = depth;
                }
                if !violations.is_empty() {
                    monotonicity_violations += 1;
                    for v in violations {
                        if violation_pairs.insert((v.node, v.destination)) {
                            let mut witness = witness_of(&prefix, &arena, succ.parent);
                            witness.push(succ.event.clone());
                            violation_witnesses.push(ViolationWitness { violation: v, witness });
                        }
                    }
                }
                if !admitted {
                    continue;
                }
                visit(&Visit {
                    index,
                    depth,
                    state: &succ.state,
                    step: Some(&succ.step),
                    prefix: &prefix,
                    arena: &arena,
                });
                record_loops(&succ.state, index, &arena, &mut loops);
                if depth == bounds.max_events {
                    continue;
                }
                next.push(FrontierItem {
                    index,
                    state: succ.state,
                    budget: succ.budget,
                });
            }
        }
        frontier = next;
    }

    ExploreResult {
        config: *cfg,
        bounds: bounds.clone(),
        origin,
        prefix,
        states_visited: arena.len(),
        transitions,
        depth_reached,
        loops,
        monotonicity_violations,
        violation_witnesses,
        exhausted,
    }
}

/// Replays `witness` from `initial`, recording a full trace.
pub fn replay_witness(
    initial: &GlobalState,
    witness: &[Event],
    cfg: &InterpretationConfig,
) -> Result<GlobalState, ReplayError> {
    let mut state = initial.clone();
    for (index, event) in witness.iter().enumerate() {
        state.apply_event(event, cfg).map_err(|source| ReplayError {
            index,
            event: event.to_string(),
            source,
        })?;
    }
    Ok(state)
}

/// Scenario reproducing a loop witness, asserting the loop at the end.
pub fn loop_scenario(result: &ExploreResult, found: &LoopWitness, name: &str) -> Scenario {
    Scenario::from_events(
        name,
        Some(result.config),
        result.bounds.detection,
        &result.origin,
        &found.witness,
        vec![Assertion::Loop(found.report.clone())],
    )
}

/// Scenario reproducing a sequence-number decrease.
pub fn violation_scenario(result: &ExploreResult, found: &ViolationWitness, name: &str) -> Scenario {
    Scenario::from_events(
        name,
        Some(result.config),
        result.bounds.detection,
        &result.origin,
        &found.witness,
        vec![Assertion::Decrement {
            node: found.violation.node,
            destination: found.violation.destination,
        }],
    )
}

//! Time-free AODV simulator with explicit interpretation axes for the
//! ambiguous update rules, plus loop and monotonicity checkers and a bounded
//! state-space explorer.

pub mod checker;
pub mod config;
pub mod error;
pub mod explorer;
pub mod message;
pub mod netsim;
pub mod node;
pub mod report;
pub mod scenario;
pub mod types;

pub use checker::{
    check_loop_freedom, check_monotonicity, check_self_entries, LoopReport,
    MonotonicityViolation,
};
pub use config::{Amb1, Amb2, Amb3, Amb4, InterpretationConfig, Preset, SnIncrement};
pub use error::{BoundsError, ConfigError, ExploreError, NodeIdError, ParseError, ReplayError, ScenarioError, SimError};
pub use explorer::{explore, explore_from, explore_with, replay_witness, ExploreBounds, ExploreResult, Witness};
pub use message::{ControlMessage, Emission, RerrMessage, RreqMessage, RrepMessage};
pub use netsim::{DetectionMode, Event, GlobalState, StepOutcome, Topology, Trace, TraceRecord, TraceStep};
pub use node::NodeState;
pub use scenario::{Scenario, ScenarioRun};
pub use types::{NodeId, RoutingTableEntry, SequenceNumber, SnStatus, Validity};

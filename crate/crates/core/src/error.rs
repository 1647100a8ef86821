use thiserror::Error;

use crate::types::NodeId;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NodeIdError {
    #[error("node id `{0}` must be 1 to 8 characters long")]
    Length(String),
    #[error("node id `{0}` may only contain ascii letters, digits, `_` and `-`")]
    Charset(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("unknown preset `{0}`")]
    UnknownPreset(String),
    #[error("invalid value `{value}` for {axis}")]
    InvalidAxis { axis: &'static str, value: String },
}

/// An event that does not fit the current network.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimError {
    #[error("unknown node `{0}`")]
    UnknownNode(NodeId),
    #[error("link endpoints must be distinct (got `{0}` twice)")]
    SelfLink(NodeId),
    #[error("node `{0}` cannot send a packet to itself")]
    SelfPacket(NodeId),
    #[error("duplicate node `{0}`")]
    DuplicateNode(NodeId),
    #[error("delivery did not quiesce after {0} steps")]
    NoQuiescence(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScenarioError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("line {line}: `{event}` rejected: {source}")]
    Event {
        line: usize,
        event: String,
        #[source]
        source: SimError,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BoundsError {
    #[error("node count must be between 2 and {max} (got {got})")]
    NodeCount { got: usize, max: usize },
    #[error("state limit must be positive")]
    StateLimit,
}

/// A witness event that does not apply to the state reached so far.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("event {index} (`{event}`) rejected: {source}")]
pub struct ReplayError {
    pub index: usize,
    pub event: String,
    #[source]
    pub source: SimError,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExploreError {
    #[error(transparent)]
    Bounds(#[from] BoundsError),
    #[error("prefix {0}")]
    Prefix(#[from] ReplayError),
}

//! Routing-table vocabulary shared by every other module.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::NodeIdError;

const NODE_ID_LEN: usize = 8;

/// Short node name such as `s`, `d`, `a` or `x`.
///
/// Stored inline (zero padded) so the type is `Copy` and orders
/// lexicographically by name, which is the tie-breaking order used
/// everywhere a set of nodes is iterated.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId([u8; NODE_ID_LEN]);

impl NodeId {
    pub fn new(name: &str) -> Result<Self, NodeIdError> {
        if name.is_empty() || name.len() > NODE_ID_LEN {
            return Err(NodeIdError::Length(name.to_string()));
        }
        if !name
            .bytes()
            .all(|b| b.is_ascii_alphanumeric() || b == b'_' || b == b'-')
        {
            return Err(NodeIdError::Charset(name.to_string()));
        }
        let mut buf = [0u8; NODE_ID_LEN];
        buf[..name.len()].copy_from_slice(name.as_bytes());
        Ok(NodeId(buf))
    }

    pub fn as_str(&self) -> &str {
        let len = self.0.iter().position(|&b| b == 0).unwrap_or(NODE_ID_LEN);
        // Only ASCII is ever written into the buffer.
        std::str::from_utf8(&self.0[..len]).expect("node ids are ascii")
    }

    /// Names used for generated networks: `a`, `b`, `c`, ...
    pub fn generated(index: usize) -> Self {
        assert!(index < 26, "generated node ids are single letters");
        let mut buf = [0u8; NODE_ID_LEN];
        buf[0] = b'a' + index as u8;
        NodeId(buf)
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl fmt::Debug for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for NodeId {
    type Err = NodeIdError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        NodeId::new(s)
    }
}

impl Serialize for NodeId {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for NodeId {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        NodeId::new(&s).map_err(serde::de::Error::custom)
    }
}

/// Destination sequence number. Zero is the conventional "no information" value.
#[derive(
    Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct SequenceNumber(pub u32);

impl SequenceNumber {
    pub const UNKNOWN: SequenceNumber = SequenceNumber(0);

    pub fn incremented(self, by: u32) -> Self {
        SequenceNumber(self.0.saturating_add(by))
    }
}

impl fmt::Display for SequenceNumber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Whether the stored sequence number can be trusted.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SnStatus {
    Known,
    Unknown,
}

impl SnStatus {
    pub fn short(self) -> &'static str {
        match self {
            SnStatus::Known => "kno",
            SnStatus::Unknown => "unk",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Validity {
    Valid,
    Invalid,
}

impl Validity {
    pub fn short(self) -> &'static str {
        match self {
            Validity::Valid => "val",
            Validity::Invalid => "inval",
        }
    }
}

/// One destination's route record.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RoutingTableEntry {
    pub destination: NodeId,
    pub dsn: SequenceNumber,
    pub sn_status: SnStatus,
    pub validity: Validity,
    pub hop_count: u32,
    pub next_hop: NodeId,
    pub precursors: BTreeSet<NodeId>,
}

impl RoutingTableEntry {
    pub fn new(
        destination: NodeId,
        dsn: u32,
        sn_status: SnStatus,
        validity: Validity,
        hop_count: u32,
        next_hop: NodeId,
    ) -> Self {
        RoutingTableEntry {
            destination,
            dsn: SequenceNumber(dsn),
            sn_status,
            validity,
            hop_count,
            next_hop,
            precursors: BTreeSet::new(),
        }
    }

    pub fn is_valid(&self) -> bool {
        self.validity == Validity::Valid
    }

    /// The route fields without precursors, for comparisons that ignore them.
    pub fn route(&self) -> (NodeId, SequenceNumber, SnStatus, Validity, u32, NodeId) {
        (
            self.destination,
            self.dsn,
            self.sn_status,
            self.validity,
            self.hop_count,
            self.next_hop,
        )
    }
}

/// Renders the five-tuple `(destination,sequence number,validity,hop count,next hop)`.
impl fmt::Display for RoutingTableEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "({},{},{},{},{})",
            self.destination,
            self.dsn,
            self.validity.short(),
            self.hop_count,
            self.next_hop
        )
    }
}

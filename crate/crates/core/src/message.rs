use std::fmt;

use serde::{Deserialize, Serialize};

use crate::types::{NodeId, SequenceNumber};

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RreqMessage {
    pub rreq_id: u32,
    pub originator: NodeId,
    pub originator_sn: SequenceNumber,
    pub destination: NodeId,
    pub dest_sn: SequenceNumber,
    pub dest_sn_unknown: bool,
    pub hop_count: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RrepMessage {
    pub originator: NodeId,
    pub destination: NodeId,
    pub dest_sn: SequenceNumber,
    pub hop_count: u32,
}

/// Non-empty list of unreachable destinations.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RerrMessage {
    pub unreachable: Vec<(NodeId, SequenceNumber)>,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ControlMessage {
    Rreq(RreqMessage),
    Rrep(RrepMessage),
    Rerr(RerrMessage),
}

impl fmt::Display for ControlMessage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ControlMessage::Rreq(m) => write!(
                f,
                "RREQ({},{}) id={} osn={} dsn={}{} hops={}",
                m.originator,
                m.destination,
                m.rreq_id,
                m.originator_sn,
                m.dest_sn,
                if m.dest_sn_unknown { "?" } else { "" },
                m.hop_count
            ),
            ControlMessage::Rrep(m) => write!(
                f,
                "RREP({},{}) dsn={} hops={}",
                m.originator, m.destination, m.dest_sn, m.hop_count
            ),
            ControlMessage::Rerr(m) => {
                f.write_str("RERR[")?;
                for (i, (dest, sn)) in m.unreachable.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" ")?;
                    }
                    write!(f, "({dest},{sn})")?;
                }
                f.write_str("]")
            }
        }
    }
}

/// A message a node hands to the network after a transition.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum Emission {
    Broadcast { message: ControlMessage },
    Unicast { to: NodeId, message: ControlMessage },
}

impl Emission {
    pub fn message(&self) -> &ControlMessage {
        match self {
            Emission::Broadcast { message } | Emission::Unicast { message, .. } => message,
        }
    }
}

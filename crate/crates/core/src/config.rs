//! Interpretation axes for the ambiguous update rules, and named presets.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::ConfigError;

/// Updating an entry whose sequence number is marked unknown, on a route reply.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Amb1 {
    /// Copy the reply's sequence number unconditionally.
    #[serde(rename = "1a")]
    CopyFromReply,
    /// Never accept a smaller sequence number.
    #[serde(rename = "1b")]
    KeepFresher,
}

/// Updating the route to the previous hop (sequence number unknown).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Amb2 {
    /// Leave an existing entry untouched.
    #[serde(rename = "2a")]
    NoUpdate,
    /// Overwrite with sequence number 0, status unknown.
    #[serde(rename = "2b")]
    Overwrite,
    /// New route, old sequence number and status.
    #[serde(rename = "2c")]
    Merge,
}

/// Self-entries created by route replies about the receiving node.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Amb3 {
    /// Arbitrary self-entries are allowed.
    #[serde(rename = "3a")]
    Allow,
    /// Only the optimal self-entry, holding the node's own sequence number.
    #[serde(rename = "3b")]
    OptimalOnly,
    /// No self-entries; the reply is dropped.
    #[serde(rename = "3c")]
    DisallowDrop,
    /// No self-entries; the reply is still forwarded.
    #[serde(rename = "3d")]
    DisallowForward,
}

/// Invalidation in response to a route error.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Amb4 {
    /// Always copy the error's sequence number.
    #[serde(rename = "4a")]
    Copy,
    /// Invalidate only if stored <= error's.
    #[serde(rename = "4b")]
    IfNotFresher,
    /// max(stored, error's).
    #[serde(rename = "4c")]
    Max,
    /// max(stored + 1, error's).
    #[serde(rename = "4d")]
    MaxIncremented,
    /// Invalidate only if stored < error's.
    #[serde(rename = "4e")]
    IfStrictlyOlder,
}

/// How much a node bumps its own sequence number when originating a request.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SnIncrement {
    #[serde(rename = "1")]
    One,
    #[serde(rename = "2")]
    Two,
}

impl SnIncrement {
    pub fn value(self) -> u32 {
        match self {
            SnIncrement::One => 1,
            SnIncrement::Two => 2,
        }
    }
}

macro_rules! axis_text {
    ($ty:ty, $axis:literal, $( $variant:path => $code:literal ),+ $(,)?) => {
        impl $ty {
            pub const ALL: &'static [$ty] = &[$($variant),+];

            pub fn code(self) -> &'static str {
                match self { $($variant => $code),+ }
            }
        }

        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.code())
            }
        }

        impl FromStr for $ty {
            type Err = ConfigError;

            /// Accepts the full code (`4b`) or just the letter (`b`).
            fn from_str(s: &str) -> Result<Self, Self::Err> {
                let s = s.trim().to_ascii_lowercase();
                $(
                    if s == $code || s == &$code[1..] {
                        return Ok($variant);
                    }
                )+
                Err(ConfigError::InvalidAxis { axis: $axis, value: s })
            }
        }
    };
}

axis_text!(Amb1, "amb1", Amb1::CopyFromReply => "1a", Amb1::KeepFresher => "1b");
axis_text!(Amb2, "amb2", Amb2::NoUpdate => "2a", Amb2::Overwrite => "2b", Amb2::Merge => "2c");
axis_text!(
    Amb3, "amb3",
    Amb3::Allow => "3a",
    Amb3::OptimalOnly => "3b",
    Amb3::DisallowDrop => "3c",
    Amb3::DisallowForward => "3d",
);
axis_text!(
    Amb4, "amb4",
    Amb4::Copy => "4a",
    Amb4::IfNotFresher => "4b",
    Amb4::Max => "4c",
    Amb4::MaxIncremented => "4d",
    Amb4::IfStrictlyOlder => "4e",
);

impl SnIncrement {
    pub const ALL: &'static [SnIncrement] = &[SnIncrement::One, SnIncrement::Two];
}

impl fmt::Display for SnIncrement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value())
    }
}

impl FromStr for SnIncrement {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "1" => Ok(SnIncrement::One),
            "2" => Ok(SnIncrement::Two),
            other => Err(ConfigError::InvalidAxis {
                axis: "sn-increment",
                value: other.to_string(),
            }),
        }
    }
}

/// One choice per ambiguity, plus the originator increment quirk.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct InterpretationConfig {
    pub amb1: Amb1,
    pub amb2: Amb2,
    pub amb3: Amb3,
    pub amb4: Amb4,
    pub rreq_sn_increment: SnIncrement,
}

impl InterpretationConfig {
    pub const fn new(amb1: Amb1, amb2: Amb2, amb3: Amb3, amb4: Amb4) -> Self {
        InterpretationConfig {
            amb1,
            amb2,
            amb3,
            amb4,
            rreq_sn_increment: SnIncrement::One,
        }
    }

    pub const fn with_increment(mut self, inc: SnIncrement) -> Self {
        self.rreq_sn_increment = inc;
        self
    }

    /// Every combination of the five axes (240 configurations).
    pub fn all() -> impl Iterator<Item = InterpretationConfig> {
        Amb1::ALL.iter().flat_map(|&a1| {
            Amb2::ALL.iter().flat_map(move |&a2| {
                Amb3::ALL.iter().flat_map(move |&a3| {
                    Amb4::ALL.iter().flat_map(move |&a4| {
                        SnIncrement::ALL.iter().map(move |&inc| {
                            InterpretationConfig::new(a1, a2, a3, a4).with_increment(inc)
                        })
                    })
                })
            })
        })
    }

    /// Parses the compact form produced by `Display`, e.g. `1b,2c,3a,4b,+1`.
    pub fn parse_compact(s: &str) -> Result<Self, ConfigError> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        if parts.len() != 5 {
            return Err(ConfigError::InvalidAxis {
                axis: "config",
                value: s.to_string(),
            });
        }
        Ok(InterpretationConfig {
            amb1: parts[0].parse()?,
            amb2: parts[1].parse()?,
            amb3: parts[2].parse()?,
            amb4: parts[3].parse()?,
            rreq_sn_increment: parts[4].trim_start_matches('+').parse()?,
        })
    }
}

impl Default for InterpretationConfig {
    fn default() -> Self {
        Preset::RfcStrictSafe.config()
    }
}

impl fmt::Display for InterpretationConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{},{},{},{},+{}",
            self.amb1, self.amb2, self.amb3, self.amb4, self.rreq_sn_increment
        )
    }
}

/// Named configurations: five surveyed implementations and two strict RFC readings.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    AodvUu,
    KernelAodv,
    AodvUiuc,
    AodvUcsb,
    AodvNs2,
    RfcStrictLoop,
    RfcStrictSafe,
}

impl Preset {
    pub const ALL: &'static [Preset] = &[
        Preset::AodvUu,
        Preset::KernelAodv,
        Preset::AodvUiuc,
        Preset::AodvUcsb,
        Preset::AodvNs2,
        Preset::RfcStrictLoop,
        Preset::RfcStrictSafe,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::AodvUu => "aodv-uu",
            Preset::KernelAodv => "kernel-aodv",
            Preset::AodvUiuc => "aodv-uiuc",
            Preset::AodvUcsb => "aodv-ucsb",
            Preset::AodvNs2 => "aodv-ns2",
            Preset::RfcStrictLoop => "rfc-strict-loop",
            Preset::RfcStrictSafe => "rfc-strict-safe",
        }
    }

    // None of the surveyed implementations uses the status flag, so they
    // all sit on 1b.
    pub fn config(self) -> InterpretationConfig {
        use Amb1::KeepFresher as B1;
        match self {
            Preset::AodvUu => {
                InterpretationConfig::new(B1, Amb2::Merge, Amb3::DisallowDrop, Amb4::Copy)
            }
            Preset::KernelAodv => {
                InterpretationConfig::new(B1, Amb2::NoUpdate, Amb3::OptimalOnly, Amb4::Copy)
            }
            Preset::AodvUiuc => {
                InterpretationConfig::new(B1, Amb2::Overwrite, Amb3::Allow, Amb4::Copy)
            }
            Preset::AodvUcsb => {
                InterpretationConfig::new(B1, Amb2::Overwrite, Amb3::Allow, Amb4::IfNotFresher)
            }
            Preset::AodvNs2 => {
                InterpretationConfig::new(B1, Amb2::NoUpdate, Amb3::Allow, Amb4::IfNotFresher)
                    .with_increment(SnIncrement::Two)
            }
            Preset::RfcStrictLoop => {
                InterpretationConfig::new(B1, Amb2::Merge, Amb3::Allow, Amb4::IfNotFresher)
            }
            Preset::RfcStrictSafe => InterpretationConfig::new(
                B1,
                Amb2::Merge,
                Amb3::DisallowDrop,
                Amb4::IfStrictlyOlder,
            ),
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            Preset::AodvUu => "AODV-UU: self-entries explicitly excluded",
            Preset::KernelAodv => "Kernel-AODV: optimal self-entries maintained from start-up",
            Preset::AodvUiuc => "AODV-UIUC: previous-hop overwrite with unknown sequence number",
            Preset::AodvUcsb => "AODV-UCSB: previous-hop overwrite, conditional RERR invalidation",
            Preset::AodvNs2 => "AODV-ns2: arbitrary self-entries, originator increments by two",
            Preset::RfcStrictLoop => "literal RFC reading that admits the self-entry loop",
            Preset::RfcStrictSafe => "RFC reading that avoids self-entries and stale RERR copies",
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Preset::ALL
            .iter()
            .copied()
            .find(|p| p.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| ConfigError::UnknownPreset(s.to_string()))
    }
}

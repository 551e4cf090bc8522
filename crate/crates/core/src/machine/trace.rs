//! Execution trace records and their JSON form.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::pauli::{Generator, PauliWord, Position};

/// Current trace schema tag, written into every exported trace.
pub const TRACE_SCHEMA: &str = "hqc-trace/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct WireId(pub u32);

impl fmt::Display for WireId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "w{}", self.0)
    }
}

impl Serialize for WireId {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u32(self.0)
    }
}

impl<'de> Deserialize<'de> for WireId {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<WireId, D::Error> {
        u32::deserialize(d).map(WireId)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WireKind {
    Qubit,
    Bit,
}

/// Storage slot of a wire. A bit keeps its measurement record in `Z`; its `X`
/// slot is the dephased remainder of the measured qubit and is never read out.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Slot {
    X,
    Z,
}

impl fmt::Display for Slot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Slot::X => "x",
            Slot::Z => "z",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SlotRef {
    pub wire: WireId,
    pub slot: Slot,
}

impl SlotRef {
    pub fn new(wire: WireId, slot: Slot) -> SlotRef {
        SlotRef { wire, slot }
    }
}

impl fmt::Display for SlotRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.wire, self.slot)
    }
}

impl FromStr for SlotRef {
    type Err = String;
    fn from_str(s: &str) -> Result<SlotRef, String> {
        let (w, sl) = s
            .split_once('.')
            .ok_or_else(|| format!("bad slot reference {s:?}"))?;
        let id = w
            .strip_prefix('w')
            .and_then(|n| n.parse().ok())
            .ok_or_else(|| format!("bad wire in {s:?}"))?;
        let slot = match sl {
            "x" => Slot::X,
            "z" => Slot::Z,
            _ => return Err(format!("bad slot in {s:?}")),
        };
        Ok(SlotRef {
            wire: WireId(id),
            slot,
        })
    }
}

impl Serialize for SlotRef {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for SlotRef {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<SlotRef, D::Error> {
        String::deserialize(d)?
            .parse()
            .map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Init {
    Zero,
    Unknown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventKind {
    Alloc,
    Gate,
    Measure,
    Query,
}

/// How one slot's new word was formed: `target = (−1)^negate · base · factors…`.
/// A `None` target is the result of a parity query.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlotFlow {
    pub target: Option<SlotRef>,
    pub base: Option<SlotRef>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub negate: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub factors: Vec<SlotRef>,
}

/// A fresh generator entering the machine: allocation, or the environment
/// record created by a measurement.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Introduction {
    pub slot: SlotRef,
    pub generator: Generator,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WireRecord {
    pub wire: WireId,
    pub kind: WireKind,
    pub x: PauliWord,
    pub z: PauliWord,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AllocInfo {
    pub init: Init,
    pub position: Position,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub site: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryRecord {
    pub result: PauliWord,
    pub classification: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Event {
    pub time: u64,
    pub kind: EventKind,
    pub gate: String,
    pub wires: Vec<WireId>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flows: Vec<SlotFlow>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub introduced: Vec<Introduction>,
    pub descriptors: Vec<WireRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alloc: Option<AllocInfo>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub query: Option<QueryRecord>,
}

/// An exported trace: schema tag plus the ordered events.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trace {
    pub schema: String,
    pub events: Vec<Event>,
}

impl Trace {
    pub fn new(events: Vec<Event>) -> Trace {
        Trace {
            schema: TRACE_SCHEMA.to_string(),
            events,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("trace serializes")
    }

    pub fn from_json(s: &str) -> Result<Trace, serde_json::Error> {
        serde_json::from_str(s)
    }
}

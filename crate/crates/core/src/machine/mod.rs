//! The hybrid descriptor machine.
//!
//! Every wire carries two Pauli words. A qubit's pair is its Heisenberg
//! descriptor `(q_x, q_z)` relative to the fixed reference state; the
//! y-component is never stored and is always `i·q_x·q_z`.
//!
//! Measurement turns a qubit wire into a bit wire. The bit's readout word is
//! the former `q_z`. The former `q_x` is kept as a hidden record slot,
//! multiplied by the `X` generator of a fresh environment position: that is
//! the decoherence caused by the measurement. The hidden slot is never read
//! out, but it does flow back into a qubit when that qubit controls a CNOT
//! onto the bit, which is what makes such a gate dephase its control.
//!
//! A bit is classical, so it is decohered again (a fresh environment
//! generator in its hidden slot) after every two-wire gate it takes part in.
//! With that convention CNOT and CZ follow one rule for every mix of bits and
//! qubits.

pub mod trace;

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matrix::CMatrix;
use crate::pauli::{
    concrete_expectation, expectation, readout_form, word_mul, GenKind, Generator, Letter,
    PauliError, PauliWord, Phase, Position, ReferenceZero,
};
pub use trace::{
    AllocInfo, Event, EventKind, Init, Introduction, QueryRecord, Slot, SlotFlow, SlotRef, Trace,
    WireId, WireKind, WireRecord,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MachineError {
    #[error("wire {0} does not exist")]
    DeadWire(WireId),
    #[error("wire {0} is not a qubit")]
    NotAQubit(WireId),
    #[error("wire {0} is not a bit")]
    NotABit(WireId),
    #[error("gate applied twice to wire {0}")]
    SameWire(WireId),
    #[error("empty wire list")]
    EmptyList,
    #[error("wire {wire} has no {component} component")]
    BadSlot { wire: WireId, component: Component },
    #[error("descriptor touches symbolic position {0}")]
    SymbolicState(Position),
    #[error(transparent)]
    Pauli(#[from] PauliError),
}

/// Readout component of a wire; `Y` is derived as `i·q_x·q_z`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Component {
    X,
    Y,
    Z,
}

impl std::fmt::Display for Component {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Component::X => "x",
            Component::Y => "y",
            Component::Z => "z",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Descriptor {
    Qubit { x: PauliWord, z: PauliWord },
    Bit { word: PauliWord },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BitClassification {
    Definite(u8),
    Random,
    Symbolic,
}

impl std::fmt::Display for BitClassification {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BitClassification::Definite(v) => write!(f, "definite({v})"),
            BitClassification::Random => f.write_str("random"),
            BitClassification::Symbolic => f.write_str("symbolic"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PositionFlag {
    Reference,
    Symbolic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PositionOrigin {
    /// Home position of an allocated wire.
    Wire(WireId),
    /// Environment record created when the wire was measured.
    Environment(WireId),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PositionInfo {
    pub flag: PositionFlag,
    pub origin: PositionOrigin,
}

/// Allocated positions, numbered from 1.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PositionRegistry {
    entries: Vec<PositionInfo>,
}

impl PositionRegistry {
    fn fresh(&mut self, flag: PositionFlag, origin: PositionOrigin) -> Position {
        self.entries.push(PositionInfo { flag, origin });
        Position(self.entries.len() as u32)
    }

    pub fn get(&self, p: Position) -> Option<&PositionInfo> {
        (p.0 as usize)
            .checked_sub(1)
            .and_then(|i| self.entries.get(i))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Position, &PositionInfo)> {
        self.entries
            .iter()
            .enumerate()
            .map(|(i, e)| (Position(i as u32 + 1), e))
    }

    pub fn symbolic(&self) -> impl Iterator<Item = Position> + '_ {
        self.iter()
            .filter(|(_, e)| e.flag == PositionFlag::Symbolic)
            .map(|(p, _)| p)
    }
}

impl ReferenceZero for PositionRegistry {
    fn is_reference_zero(&self, p: Position) -> bool {
        self.get(p)
            .is_some_and(|e| e.flag == PositionFlag::Reference)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct WireMeta {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub site: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WireState {
    pub id: WireId,
    pub kind: WireKind,
    pub home: Position,
    pub x: PauliWord,
    pub z: PauliWord,
    #[serde(default)]
    pub meta: WireMeta,
}

impl WireState {
    fn slot(&self, s: Slot) -> &PauliWord {
        match s {
            Slot::X => &self.x,
            Slot::Z => &self.z,
        }
    }

    fn slot_mut(&mut self, s: Slot) -> &mut PauliWord {
        match s {
            Slot::X => &mut self.x,
            Slot::Z => &mut self.z,
        }
    }

    fn record(&self) -> WireRecord {
        WireRecord {
            wire: self.id,
            kind: self.kind,
            x: self.x.clone(),
            z: self.z.clone(),
        }
    }
}

/// Everything the machine's readouts depend on, without the trace.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MachineState {
    pub positions: PositionRegistry,
    pub wires: Vec<WireState>,
}

/// Result of the entanglement query.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Entanglement {
    /// Some pair of components is individually random but jointly definite.
    pub operational: bool,
    /// Some reduced component of either wire has X-support outside its home position.
    pub support: bool,
}

#[derive(Debug, Clone, Default)]
pub struct Machine {
    wires: BTreeMap<WireId, WireState>,
    positions: PositionRegistry,
    trace: Vec<Event>,
    clock: u64,
}

impl Machine {
    pub fn new() -> Machine {
        Machine::default()
    }

    /// Rebuilds a machine from its per-wire state alone. The trace starts empty.
    pub fn from_state(state: MachineState) -> Machine {
        let wires = state.wires.into_iter().map(|w| (w.id, w)).collect();
        Machine {
            wires,
            positions: state.positions,
            trace: Vec::new(),
            clock: 0,
        }
    }

    pub fn state(&self) -> MachineState {
        MachineState {
            positions: self.positions.clone(),
            wires: self.wires.values().cloned().collect(),
        }
    }

    pub fn positions(&self) -> &PositionRegistry {
        &self.positions
    }

    pub fn trace(&self) -> &[Event] {
        &self.trace
    }

    pub fn export_trace(&self) -> Trace {
        Trace::new(self.trace.clone())
    }

    pub fn wire_ids(&self) -> impl Iterator<Item = WireId> + '_ {
        self.wires.keys().copied()
    }

    pub fn qubits(&self) -> Vec<WireId> {
        self.wires
            .values()
            .filter(|w| w.kind == WireKind::Qubit)
            .map(|w| w.id)
            .collect()
    }

    pub fn bits(&self) -> Vec<WireId> {
        self.wires
            .values()
            .filter(|w| w.kind == WireKind::Bit)
            .map(|w| w.id)
            .collect()
    }

    pub fn kind(&self, w: WireId) -> Result<WireKind, MachineError> {
        Ok(self.wire(w)?.kind)
    }

    pub fn home(&self, w: WireId) -> Result<Position, MachineError> {
        Ok(self.wire(w)?.home)
    }

    pub fn meta(&self, w: WireId) -> Result<&WireMeta, MachineError> {
        Ok(&self.wire(w)?.meta)
    }

    fn wire(&self, w: WireId) -> Result<&WireState, MachineError> {
        self.wires.get(&w).ok_or(MachineError::DeadWire(w))
    }

    fn qubit(&self, w: WireId) -> Result<&WireState, MachineError> {
        let s = self.wire(w)?;
        if s.kind != WireKind::Qubit {
            return Err(MachineError::NotAQubit(w));
        }
        Ok(s)
    }

    fn bit(&self, w: WireId) -> Result<&WireState, MachineError> {
        let s = self.wire(w)?;
        if s.kind != WireKind::Bit {
            return Err(MachineError::NotABit(w));
        }
        Ok(s)
    }

    fn distinct(&self, a: WireId, b: WireId) -> Result<(), MachineError> {
        self.wire(a)?;
        self.wire(b)?;
        if a == b {
            return Err(MachineError::SameWire(a));
        }
        Ok(())
    }

    fn tick(&mut self) -> u64 {
        self.clock += 1;
        self.clock
    }

    /// Appends an event after a mutation of `touched`. In debug builds the
    /// untouched wires are checked against `before`.
    fn push_event(
        &mut self,
        mut event: Event,
        touched: &[WireId],
        before: Option<&BTreeMap<WireId, WireState>>,
    ) {
        if cfg!(debug_assertions) {
            if let Some(before) = before {
                for (id, old) in before {
                    if !touched.contains(id) {
                        assert_eq!(Some(old), self.wires.get(id), "non-local change to {id}");
                    }
                }
            }
        }
        event.descriptors = touched.iter().map(|w| self.wires[w].record()).collect();
        self.trace.push(event);
    }

    fn snapshot_for_check(&self) -> Option<BTreeMap<WireId, WireState>> {
        cfg!(debug_assertions).then(|| self.wires.clone())
    }

    pub fn alloc_qubit(&mut self, init: Init) -> WireId {
        self.alloc_qubit_with(init, WireMeta::default())
    }

    pub fn alloc_qubit_with(&mut self, init: Init, meta: WireMeta) -> WireId {
        let id = WireId(self.wires.len() as u32 + 1);
        let flag = match init {
            Init::Zero => PositionFlag::Reference,
            Init::Unknown => PositionFlag::Symbolic,
        };
        let p = self.positions.fresh(flag, PositionOrigin::Wire(id));
        let state = WireState {
            id,
            kind: WireKind::Qubit,
            home: p,
            x: PauliWord::single(p, Letter::X),
            z: PauliWord::single(p, Letter::Z),
            meta: meta.clone(),
        };
        self.wires.insert(id, state);
        let time = self.tick();
        let event = Event {
            time,
            kind: EventKind::Alloc,
            gate: match init {
                Init::Zero => "ALLOC0".into(),
                Init::Unknown => "ALLOC?".into(),
            },
            wires: vec![id],
            flows: vec![],
            introduced: vec![
                Introduction {
                    slot: SlotRef::new(id, Slot::X),
                    generator: Generator {
                        position: p,
                        kind: GenKind::X,
                    },
                },
                Introduction {
                    slot: SlotRef::new(id, Slot::Z),
                    generator: Generator {
                        position: p,
                        kind: GenKind::Z,
                    },
                },
            ],
            descriptors: vec![],
            alloc: Some(AllocInfo {
                init,
                position: p,
                name: meta.name,
                site: meta.site,
            }),
            query: None,
        };
        self.push_event(event, &[id], None);
        id
    }

    fn gate_event(
        &mut self,
        gate: &str,
        kind: EventKind,
        wires: Vec<WireId>,
        flows: Vec<SlotFlow>,
    ) -> Event {
        Event {
            time: self.tick(),
            kind,
            gate: gate.to_string(),
            wires,
            flows,
            introduced: vec![],
            descriptors: vec![],
            alloc: None,
            query: None,
        }
    }

    /// Applies `flows` atomically: all right-hand sides are read before any
    /// slot is written.
    fn apply_flows(&mut self, flows: &[SlotFlow]) {
        let mut updates = Vec::with_capacity(flows.len());
        for f in flows {
            let target = f.target.expect("gate flows have targets");
            let mut word = match f.base {
                Some(b) => self.wires[&b.wire].slot(b.slot).clone(),
                None => PauliWord::identity(),
            };
            for factor in &f.factors {
                let fw = self.wires[&factor.wire].slot(factor.slot);
                word = word_mul(&word, fw);
            }
            if f.negate {
                word = -word;
            }
            updates.push((target, word));
        }
        for (t, w) in updates {
            *self
                .wires
                .get_mut(&t.wire)
                .expect("live wire")
                .slot_mut(t.slot) = w;
        }
    }

    fn run_gate(&mut self, gate: &str, wires: Vec<WireId>, flows: Vec<SlotFlow>) {
        let before = self.snapshot_for_check();
        self.apply_flows(&flows);
        let mut event = self.gate_event(gate, EventKind::Gate, wires.clone(), flows);
        if wires.len() == 2 {
            for &w in &wires {
                if self.wires[&w].kind == WireKind::Bit {
                    event.introduced.push(self.decohere(w));
                }
            }
        }
        self.push_event(event, &wires, before.as_ref());
    }

    /// Multiplies the hidden slot of `w` by the `X` generator of a fresh
    /// environment position. A bit is re-decohered after every two-wire gate
    /// it takes part in, so it never carries coherence between gates.
    fn decohere(&mut self, w: WireId) -> Introduction {
        let env = self
            .positions
            .fresh(PositionFlag::Reference, PositionOrigin::Environment(w));
        let s = self.wires.get_mut(&w).expect("live wire");
        s.x = word_mul(&s.x, &PauliWord::single(env, Letter::X));
        Introduction {
            slot: SlotRef::new(w, Slot::X),
            generator: Generator {
                position: env,
                kind: GenKind::X,
            },
        }
    }

    /// NOT: `q_z → −q_z`. On a bit the record word is negated.
    pub fn apply_not(&mut self, w: WireId) -> Result<(), MachineError> {
        self.wire(w)?;
        let z = SlotRef::new(w, Slot::Z);
        let flows = vec![SlotFlow {
            target: Some(z),
            base: Some(z),
            negate: true,
            factors: vec![],
        }];
        self.run_gate("NOT", vec![w], flows);
        Ok(())
    }

    /// Hadamard: exchanges `q_x` and `q_z`.
    pub fn apply_hadamard(&mut self, w: WireId) -> Result<(), MachineError> {
        self.qubit(w)?;
        let (x, z) = (SlotRef::new(w, Slot::X), SlotRef::new(w, Slot::Z));
        let flows = vec![
            SlotFlow {
                target: Some(x),
                base: Some(z),
                negate: false,
                factors: vec![],
            },
            SlotFlow {
                target: Some(z),
                base: Some(x),
                negate: false,
                factors: vec![],
            },
        ];
        self.run_gate("H", vec![w], flows);
        Ok(())
    }

    /// CNOT: `c_x → c_x·t_x`, `t_z → c_z·t_z`.
    pub fn apply_cnot(&mut self, control: WireId, target: WireId) -> Result<(), MachineError> {
        self.distinct(control, target)?;
        let (cx, cz) = (
            SlotRef::new(control, Slot::X),
            SlotRef::new(control, Slot::Z),
        );
        let (tx, tz) = (SlotRef::new(target, Slot::X), SlotRef::new(target, Slot::Z));
        let flows = vec![
            SlotFlow {
                target: Some(cx),
                base: Some(cx),
                negate: false,
                factors: vec![tx],
            },
            SlotFlow {
                target: Some(tz),
                base: Some(tz),
                negate: false,
                factors: vec![cz],
            },
        ];
        self.run_gate("CNOT", vec![control, target], flows);
        Ok(())
    }

    /// CZ: `a_x → a_x·b_z`, `b_x → b_x·a_z`.
    pub fn apply_cz(&mut self, a: WireId, b: WireId) -> Result<(), MachineError> {
        self.distinct(a, b)?;
        let (ax, az) = (SlotRef::new(a, Slot::X), SlotRef::new(a, Slot::Z));
        let (bx, bz) = (SlotRef::new(b, Slot::X), SlotRef::new(b, Slot::Z));
        let flows = vec![
            SlotFlow {
                target: Some(ax),
                base: Some(ax),
                negate: false,
                factors: vec![bz],
            },
            SlotFlow {
                target: Some(bx),
                base: Some(bx),
                negate: false,
                factors: vec![az],
            },
        ];
        self.run_gate("CZ", vec![a, b], flows);
        Ok(())
    }

    pub fn apply_swap(&mut self, a: WireId, b: WireId) -> Result<(), MachineError> {
        self.qubit(a)?;
        self.qubit(b)?;
        if a == b {
            return Err(MachineError::SameWire(a));
        }
        let flows = [Slot::X, Slot::Z]
            .into_iter()
            .flat_map(|s| {
                [
                    SlotFlow {
                        target: Some(SlotRef::new(a, s)),
                        base: Some(SlotRef::new(b, s)),
                        negate: false,
                        factors: vec![],
                    },
                    SlotFlow {
                        target: Some(SlotRef::new(b, s)),
                        base: Some(SlotRef::new(a, s)),
                        negate: false,
                        factors: vec![],
                    },
                ]
            })
            .collect();
        self.run_gate("SWAP", vec![a, b], flows);
        Ok(())
    }

    /// Destructive computational-basis measurement: the qubit wire becomes a
    /// bit wire whose word is the former `q_z`.
    pub fn measure_z(&mut self, w: WireId) -> Result<WireId, MachineError> {
        self.qubit(w)?;
        let before = self.snapshot_for_check();
        let (x, z) = (SlotRef::new(w, Slot::X), SlotRef::new(w, Slot::Z));
        self.wires.get_mut(&w).expect("checked above").kind = WireKind::Bit;
        let introduced = self.decohere(w);
        let flows = vec![
            SlotFlow {
                target: Some(x),
                base: Some(x),
                negate: false,
                factors: vec![],
            },
            SlotFlow {
                target: Some(z),
                base: Some(z),
                negate: false,
                factors: vec![],
            },
        ];
        let mut event = self.gate_event("MEASZ", EventKind::Measure, vec![w], flows);
        event.introduced.push(introduced);
        self.push_event(event, &[w], before.as_ref());
        Ok(w)
    }

    /// X-basis measurement: Hadamard then [`Machine::measure_z`].
    pub fn measure_x(&mut self, w: WireId) -> Result<WireId, MachineError> {
        self.apply_hadamard(w)?;
        self.measure_z(w)
    }

    pub fn descriptor_of(&self, w: WireId) -> Result<Descriptor, MachineError> {
        let s = self.wire(w)?;
        Ok(match s.kind {
            WireKind::Qubit => Descriptor::Qubit {
                x: s.x.clone(),
                z: s.z.clone(),
            },
            WireKind::Bit => Descriptor::Bit { word: s.z.clone() },
        })
    }

    /// Raw storage slot, including a bit's hidden record slot.
    pub fn slot_word(&self, r: SlotRef) -> Result<&PauliWord, MachineError> {
        Ok(self.wire(r.wire)?.slot(r.slot))
    }

    /// The readout word of a component: `q_x`, `q_z`, or `q_y = i·q_x·q_z`.
    /// Bits expose only their `z` record word.
    pub fn component(&self, w: WireId, c: Component) -> Result<PauliWord, MachineError> {
        let s = self.wire(w)?;
        match (s.kind, c) {
            (_, Component::Z) => Ok(s.z.clone()),
            (WireKind::Qubit, Component::X) => Ok(s.x.clone()),
            (WireKind::Qubit, Component::Y) => Ok(word_mul(&s.x, &s.z).times_phase(Phase::PlusI)),
            (WireKind::Bit, _) => Err(MachineError::BadSlot {
                wire: w,
                component: c,
            }),
        }
    }

    /// Classifies a Hermitian readout word against the position registry.
    pub fn classify_word(&self, word: &PauliWord) -> Result<BitClassification, MachineError> {
        let r = readout_form(word, &self.positions);
        if !r.x_support.is_empty() {
            return Ok(BitClassification::Random);
        }
        if !r.symbolic.is_empty() {
            return Ok(BitClassification::Symbolic);
        }
        match r.phase.as_sign() {
            Some(1) => Ok(BitClassification::Definite(0)),
            Some(_) => Ok(BitClassification::Definite(1)),
            None => Err(PauliError::PhaseNotReal(r.phase).into()),
        }
    }

    pub fn classify(&self, bit: WireId) -> Result<BitClassification, MachineError> {
        let s = self.bit(bit)?;
        self.classify_word(&s.z)
    }

    /// Product of the bit words: the XOR of their outcomes.
    pub fn parity_word(&self, bits: &[WireId]) -> Result<PauliWord, MachineError> {
        if bits.is_empty() {
            return Err(MachineError::EmptyList);
        }
        let mut word = PauliWord::identity();
        for &b in bits {
            word = word_mul(&word, &self.bit(b)?.z);
        }
        Ok(word)
    }

    pub fn joint_parity(&self, bits: &[WireId]) -> Result<BitClassification, MachineError> {
        let word = self.parity_word(bits)?;
        self.classify_word(&word)
    }

    /// [`Machine::joint_parity`] that also records the product as a query
    /// event, so flow analysis sees the cancellations it performs.
    pub fn record_joint_parity(
        &mut self,
        bits: &[WireId],
    ) -> Result<BitClassification, MachineError> {
        let word = self.parity_word(bits)?;
        let class = self.classify_word(&word)?;
        let slots: Vec<SlotRef> = bits.iter().map(|&b| SlotRef::new(b, Slot::Z)).collect();
        let flow = SlotFlow {
            target: None,
            base: Some(slots[0]),
            negate: false,
            factors: slots[1..].to_vec(),
        };
        let mut event = self.gate_event("PARITY", EventKind::Query, bits.to_vec(), vec![flow]);
        event.query = Some(QueryRecord {
            result: word,
            classification: class.to_string(),
        });
        self.trace.push(event);
        Ok(class)
    }

    /// `q_abij = q_ai · q_bj`.
    pub fn joint_descriptor(
        &self,
        a: WireId,
        i: Component,
        b: WireId,
        j: Component,
    ) -> Result<PauliWord, MachineError> {
        Ok(word_mul(&self.component(a, i)?, &self.component(b, j)?))
    }

    pub fn entanglement(&self, a: WireId, b: WireId) -> Result<Entanglement, MachineError> {
        self.qubit(a)?;
        self.qubit(b)?;
        const ALL: [Component; 3] = [Component::X, Component::Y, Component::Z];
        let mut operational = false;
        'outer: for i in ALL {
            let wa = self.component(a, i)?;
            if self.classify_word(&wa)? != BitClassification::Random {
                continue;
            }
            for j in ALL {
                let wb = self.component(b, j)?;
                if self.classify_word(&wb)? != BitClassification::Random {
                    continue;
                }
                if matches!(
                    self.classify_word(&word_mul(&wa, &wb))?,
                    BitClassification::Definite(_)
                ) {
                    operational = true;
                    break 'outer;
                }
            }
        }
        let mut support = false;
        for w in [a, b] {
            let home = self.home(w)?;
            for c in ALL {
                let r = readout_form(&self.component(w, c)?, &self.positions);
                if r.x_support.iter().any(|&p| p != home) {
                    support = true;
                }
            }
        }
        Ok(Entanglement {
            operational,
            support,
        })
    }

    pub fn is_entangled(&self, a: WireId, b: WireId) -> Result<bool, MachineError> {
        Ok(self.entanglement(a, b)?.operational)
    }

    /// Density matrix of the listed qubits, first wire most significant:
    /// `ρ = 2^-k Σ <Π_m q_{m,i_m}> σ_{i_1} ⊗ … ⊗ σ_{i_k}`.
    pub fn export_density(&self, wires: &[WireId]) -> Result<CMatrix, MachineError> {
        for &w in wires {
            let s = self.qubit(w)?;
            if let Some(p) =
                s.x.positions()
                    .chain(s.z.positions())
                    .find(|&p| !self.positions.is_reference_zero(p))
            {
                return Err(MachineError::SymbolicState(p));
            }
        }
        self.density_with(wires, |word| {
            let e = expectation(word, &self.positions).expect("positions checked above");
            Complex64::new(e as f64, 0.0)
        })
    }

    /// Density export with each symbolic position replaced by a concrete
    /// pure state given by its Bloch vector.
    pub fn export_density_concrete<F>(
        &self,
        wires: &[WireId],
        bloch: F,
    ) -> Result<CMatrix, MachineError>
    where
        F: Fn(Position) -> Option<[f64; 3]>,
    {
        for &w in wires {
            self.qubit(w)?;
        }
        for p in self.positions.symbolic() {
            if bloch(p).is_none() {
                return Err(MachineError::SymbolicState(p));
            }
        }
        let lookup = |p: Position| {
            if self.positions.is_reference_zero(p) {
                [0.0, 0.0, 1.0]
            } else {
                bloch(p).expect("checked above")
            }
        };
        self.density_with(wires, |word| concrete_expectation(word, lookup))
    }

    fn density_with<F>(&self, wires: &[WireId], expect: F) -> Result<CMatrix, MachineError>
    where
        F: Fn(&PauliWord) -> Complex64,
    {
        let k = wires.len();
        let dim = 1usize << k;
        let mut components = Vec::with_capacity(k);
        for &w in wires {
            components.push([
                PauliWord::identity(),
                self.component(w, Component::X)?,
                self.component(w, Component::Y)?,
                self.component(w, Component::Z)?,
            ]);
        }
        let mut rho = CMatrix::zeros(dim);
        let norm = 1.0 / dim as f64;
        let mut idx = vec![0usize; k];
        let terms = 1usize << (2 * k);
        for t in 0..terms {
            for (m, slot) in idx.iter_mut().enumerate() {
                *slot = (t >> (2 * (k - 1 - m))) & 3;
            }
            let mut word = PauliWord::identity();
            for (m, &i) in idx.iter().enumerate() {
                if i != 0 {
                    word = word_mul(&word, &components[m][i]);
                }
            }
            let e = expect(&word);
            if e.norm() == 0.0 {
                continue;
            }
            add_pauli_term(&mut rho, &idx, e * norm);
        }
        Ok(rho)
    }
}

/// `rho += coeff · σ_{idx_1} ⊗ … ⊗ σ_{idx_k}` with 0=I, 1=X, 2=Y, 3=Z.
fn add_pauli_term(rho: &mut CMatrix, idx: &[usize], coeff: Complex64) {
    let k = idx.len();
    let dim = 1usize << k;
    let mut flip = 0usize;
    for (m, &i) in idx.iter().enumerate() {
        if i == 1 || i == 2 {
            flip |= 1 << (k - 1 - m);
        }
    }
    for row in 0..dim {
        let col = row ^ flip;
        let mut v = coeff;
        for (m, &i) in idx.iter().enumerate() {
            let bit = (row >> (k - 1 - m)) & 1;
            // <row_bit| σ |col_bit>
            v *= match (i, bit) {
                (0, _) | (1, _) => Complex64::new(1.0, 0.0),
                (2, 0) => Complex64::new(0.0, -1.0),
                (2, _) => Complex64::new(0.0, 1.0),
                (_, 0) => Complex64::new(1.0, 0.0),
                _ => Complex64::new(-1.0, 0.0),
            };
        }
        rho[(row, col)] += v;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(s: &str) -> PauliWord {
        s.parse().unwrap()
    }

    fn qubit_desc(x: &str, z: &str) -> Descriptor {
        Descriptor::Qubit { x: w(x), z: w(z) }
    }

    #[test]
    fn alloc_gives_fresh_positions() {
        let mut m = Machine::new();
        let a = m.alloc_qubit(Init::Zero);
        let b = m.alloc_qubit(Init::Unknown);
        assert_eq!(m.descriptor_of(a).unwrap(), qubit_desc("X1", "Z1"));
        assert_eq!(m.descriptor_of(b).unwrap(), qubit_desc("X2", "Z2"));
        assert_ne!(m.home(a).unwrap(), m.home(b).unwrap());
        assert_eq!(
            m.classify_word(&m.component(a, Component::Z).unwrap())
                .unwrap(),
            BitClassification::Definite(0)
        );
        assert_eq!(
            m.classify_word(&m.component(b, Component::Z).unwrap())
                .unwrap(),
            BitClassification::Symbolic
        );
    }

    #[test]
    fn not_gate() {
        let mut m = Machine::new();
        let a = m.alloc_qubit(Init::Zero);
        m.apply_not(a).unwrap();
        assert_eq!(m.descriptor_of(a).unwrap(), qubit_desc("X1", "-Z1"));
        m.apply_not(a).unwrap();
        assert_eq!(m.descriptor_of(a).unwrap(), qubit_desc("X1", "Z1"));
        m.apply_not(a).unwrap();
        let b = m.measure_z(a).unwrap();
        assert_eq!(m.classify(b).unwrap(), BitClassification::Definite(1));
        m.apply_not(b).unwrap();
        assert_eq!(
            m.descriptor_of(b).unwrap(),
            Descriptor::Bit { word: w("Z1") }
        );
        assert_eq!(m.classify(b).unwrap(), BitClassification::Definite(0));
    }

    #[test]
    fn hadamard_swaps_slots() {
        let mut m = Machine::new();
        let a = m.alloc_qubit(Init::Zero);
        m.apply_hadamard(a).unwrap();
        assert_eq!(m.descriptor_of(a).unwrap(), qubit_desc("Z1", "X1"));
        m.apply_hadamard(a).unwrap();
        assert_eq!(m.descriptor_of(a).unwrap(), qubit_desc("X1", "Z1"));
        m.apply_hadamard(a).unwrap();
        let b = m.measure_z(a).unwrap();
        assert_eq!(m.classify(b).unwrap(), BitClassification::Random);
        assert_eq!(m.apply_hadamard(b), Err(MachineError::NotAQubit(b)));
    }

    #[test]
    fn cnot_matches_descriptor_rule() {
        let mut m = Machine::new();
        let a = m.alloc_qubit(Init::Zero);
        let b = m.alloc_qubit(Init::Zero);
        m.apply_cnot(a, b).unwrap();
        assert_eq!(m.descriptor_of(a).unwrap(), qubit_desc("X1.X2", "Z1"));
        assert_eq!(m.descriptor_of(b).unwrap(), qubit_desc("X2", "Z1.Z2"));
        let (ma, mb) = (m.measure_z(a).unwrap(), m.measure_z(b).unwrap());
        assert_eq!(m.classify(ma).unwrap(), BitClassification::Definite(0));
        assert_eq!(m.classify(mb).unwrap(), BitClassification::Definite(0));
        assert_eq!(m.apply_cnot(ma, ma), Err(MachineError::SameWire(ma)));
        assert_eq!(
            m.apply_cnot(ma, WireId(99)),
            Err(MachineError::DeadWire(WireId(99)))
        );
    }

    #[test]
    fn bit_controlled_cnot_multiplies_target_z() {
        let mut m = Machine::new();
        let a = m.alloc_qubit(Init::Zero);
        let q = m.alloc_qubit(Init::Zero);
        let bit = m.measure_z(a).unwrap();
        m.apply_cnot(bit, q).unwrap();
        assert_eq!(m.descriptor_of(q).unwrap(), qubit_desc("X2", "Z1.Z2"));
        assert_eq!(
            m.descriptor_of(bit).unwrap(),
            Descriptor::Bit { word: w("Z1") }
        );
    }

    #[test]
    fn cz_rule_and_symmetry() {
        let mut m = Machine::new();
        let a = m.alloc_qubit(Init::Zero);
        let b = m.alloc_qubit(Init::Zero);
        m.apply_cz(a, b).unwrap();
        assert_eq!(m.descriptor_of(a).unwrap(), qubit_desc("X1.Z2", "Z1"));
        assert_eq!(m.descriptor_of(b).unwrap(), qubit_desc("Z1.X2", "Z2"));
        let mut n = Machine::new();
        let a2 = n.alloc_qubit(Init::Zero);
        let b2 = n.alloc_qubit(Init::Zero);
        n.apply_cz(b2, a2).unwrap();
        assert_eq!(m.state(), n.state());
        m.apply_cz(a, b).unwrap();
        assert_eq!(m.descriptor_of(a).unwrap(), qubit_desc("X1", "Z1"));
    }

    #[test]
    fn swap_equals_three_cnots() {
        let mut m = Machine::new();
        let a = m.alloc_qubit(Init::Zero);
        let b = m.alloc_qubit(Init::Zero);
        m.apply_hadamard(a).unwrap();
        m.apply_cz(a, b).unwrap();
        let mut n = m.clone();
        m.apply_swap(a, b).unwrap();
        n.apply_cnot(a, b).unwrap();
        n.apply_cnot(b, a).unwrap();
        n.apply_cnot(a, b).unwrap();
        assert_eq!(m.descriptor_of(a).unwrap(), n.descriptor_of(a).unwrap());
        assert_eq!(m.descriptor_of(b).unwrap(), n.descriptor_of(b).unwrap());
    }

    #[test]
    fn bell_pair_parity() {
        let mut m = Machine::new();
        let a = m.alloc_qubit(Init::Zero);
        let b = m.alloc_qubit(Init::Zero);
        m.apply_hadamard(a).unwrap();
        m.apply_cnot(a, b).unwrap();
        assert!(m.is_entangled(a, b).unwrap());
        assert!(m.entanglement(a, b).unwrap().support);
        let ma = m.measure_z(a).unwrap();
        let mb = m.measure_z(b).unwrap();
        assert_eq!(
            m.descriptor_of(ma).unwrap(),
            Descriptor::Bit { word: w("X1") }
        );
        assert_eq!(
            m.descriptor_of(mb).unwrap(),
            Descriptor::Bit { word: w("X1.Z2") }
        );
        assert_eq!(m.classify(ma).unwrap(), BitClassification::Random);
        assert_eq!(m.classify(mb).unwrap(), BitClassification::Random);
        assert_eq!(
            m.joint_parity(&[ma, mb]).unwrap(),
            BitClassification::Definite(0)
        );
        assert_eq!(m.joint_parity(&[]), Err(MachineError::EmptyList));
    }

    #[test]
    fn independent_random_bits_stay_random() {
        let mut m = Machine::new();
        let a = m.alloc_qubit(Init::Zero);
        let b = m.alloc_qubit(Init::Zero);
        let ma = m.measure_x(a).unwrap();
        let mb = m.measure_x(b).unwrap();
        assert_eq!(
            m.joint_parity(&[ma, mb]).unwrap(),
            BitClassification::Random
        );
        assert_eq!(m.joint_parity(&[ma]).unwrap(), m.classify(ma).unwrap());
    }

    #[test]
    fn measure_x_on_plus_is_definite() {
        let mut m = Machine::new();
        let a = m.alloc_qubit(Init::Zero);
        m.apply_hadamard(a).unwrap();
        let b = m.measure_x(a).unwrap();
        assert_eq!(m.classify(b).unwrap(), BitClassification::Definite(0));
        assert_eq!(m.classify(WireId(1)), Ok(BitClassification::Definite(0)));
    }

    #[test]
    fn classify_symbolic_and_errors() {
        let mut m = Machine::new();
        let u = m.alloc_qubit(Init::Unknown);
        let q = m.alloc_qubit(Init::Zero);
        assert_eq!(m.classify(q), Err(MachineError::NotABit(q)));
        let b = m.measure_z(u).unwrap();
        assert_eq!(m.classify(b).unwrap(), BitClassification::Symbolic);
        assert!(m.export_density(&[q]).is_ok());
        m.apply_cnot(b, q).unwrap();
        assert_eq!(
            m.export_density(&[q]),
            Err(MachineError::SymbolicState(Position(1)))
        );
    }

    #[test]
    fn joint_descriptor_examples() {
        let mut m = Machine::new();
        let a = m.alloc_qubit(Init::Zero);
        let b = m.alloc_qubit(Init::Zero);
        assert_eq!(
            m.joint_descriptor(a, Component::X, b, Component::Z)
                .unwrap(),
            w("X1.Z2")
        );
        m.apply_hadamard(a).unwrap();
        m.apply_cnot(a, b).unwrap();
        let zz = m
            .joint_descriptor(a, Component::Z, b, Component::Z)
            .unwrap();
        assert_eq!(zz, w("Z2"));
        let ma = m.measure_z(a).unwrap();
        assert_eq!(
            m.joint_descriptor(ma, Component::X, b, Component::Z),
            Err(MachineError::BadSlot {
                wire: ma,
                component: Component::X
            })
        );
    }

    #[test]
    fn not_entangled_cases() {
        let mut m = Machine::new();
        let a = m.alloc_qubit(Init::Zero);
        let b = m.alloc_qubit(Init::Zero);
        assert!(!m.is_entangled(a, b).unwrap());
        m.apply_cnot(a, b).unwrap();
        assert!(!m.is_entangled(a, b).unwrap());
    }

    #[test]
    fn density_examples() {
        let mut m = Machine::new();
        let a = m.alloc_qubit(Init::Zero);
        let rho = m.export_density(&[a]).unwrap();
        assert!(rho.max_abs_diff(&CMatrix::from_real(&[&[1.0, 0.0], &[0.0, 0.0]])) < 1e-15);
        m.apply_hadamard(a).unwrap();
        let rho = m.export_density(&[a]).unwrap();
        assert!(rho.max_abs_diff(&CMatrix::from_real(&[&[0.5, 0.5], &[0.5, 0.5]])) < 1e-15);
    }

    #[test]
    fn y_component_is_hermitian() {
        let mut m = Machine::new();
        let a = m.alloc_qubit(Init::Zero);
        assert_eq!(m.component(a, Component::Y).unwrap(), w("Y1"));
        m.apply_hadamard(a).unwrap();
        assert_eq!(m.component(a, Component::Y).unwrap(), w("-Y1"));
    }

    #[test]
    fn trace_times_increase() {
        let mut m = Machine::new();
        let a = m.alloc_qubit(Init::Zero);
        let b = m.alloc_qubit(Init::Zero);
        m.apply_hadamard(a).unwrap();
        m.apply_cnot(a, b).unwrap();
        m.measure_z(a).unwrap();
        let times: Vec<u64> = m.trace().iter().map(|e| e.time).collect();
        assert!(times.windows(2).all(|p| p[0] < p[1]));
        let t = m.export_trace();
        assert_eq!(Trace::from_json(&t.to_json()).unwrap(), t);
    }

    #[test]
    fn rebuilt_machine_exports_same_density() {
        let mut m = Machine::new();
        let a = m.alloc_qubit(Init::Zero);
        let b = m.alloc_qubit(Init::Zero);
        m.apply_hadamard(a).unwrap();
        m.apply_cnot(a, b).unwrap();
        let json = serde_json::to_string(&m.state()).unwrap();
        let n = Machine::from_state(serde_json::from_str(&json).unwrap());
        assert_eq!(
            m.export_density(&[a, b]).unwrap(),
            n.export_density(&[a, b]).unwrap()
        );
    }
}

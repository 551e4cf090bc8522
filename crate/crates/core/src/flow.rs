//! Dependency flow extracted from an execution trace.
//!
//! Nodes are slot states: the word held by one slot of one wire right after
//! the event at `time` wrote it. A parity query gets a node with no slot.
//!
//! Every word multiplication `target = base · f1 · f2 …` becomes a signed
//! ledger of generator-level edges into the target node:
//!
//! * `Compose` carries each generator of the base word (+1);
//! * `Copy` brings a factor generator the running product lacked (+1);
//! * `Annihilate` cancels a factor generator against the running product (−1).
//!
//! Summing the edges into a node (plus its introductions) therefore gives each
//! generator a count of 0 or 1, which is how [`replay`] reconstructs the words
//! without looking at them. `Transmit` edges mark a bit's readout word feeding
//! a different wire and carry no generator.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::machine::{Event, EventKind, Slot, SlotRef, Trace, WireId, WireKind};
use crate::pauli::{GenKind, Generator};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FlowError {
    #[error("malformed trace at event {time}: {reason}")]
    MalformedTrace { time: u64, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Node {
    pub wire: WireId,
    /// `None` for the result of a parity query.
    pub slot: Option<Slot>,
    pub time: u64,
}

impl std::fmt::Display for Node {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.slot {
            Some(s) => write!(f, "{}.{}@{}", self.wire, s, self.time),
            None => write!(f, "{}.parity@{}", self.wire, self.time),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgeKind {
    Copy,
    Compose,
    Annihilate,
    Transmit,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edge {
    pub kind: EdgeKind,
    pub from: Node,
    pub to: Node,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<Generator>,
    /// Time of the causing event.
    pub event: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IntroductionKind {
    /// Home generators of a freshly allocated wire.
    Allocation,
    /// Environment record of a measurement or of a bit's decoherence.
    Discard,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphIntroduction {
    pub node: Node,
    pub generator: Generator,
    pub kind: IntroductionKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventSummary {
    pub time: u64,
    pub gate: String,
    pub wires: Vec<WireId>,
    /// Kinds of `wires` just before the event.
    pub kinds: Vec<WireKind>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlowGraph {
    pub nodes: Vec<Node>,
    pub edges: Vec<Edge>,
    pub introductions: Vec<GraphIntroduction>,
    pub events: Vec<EventSummary>,
    /// Declared site of each allocated wire.
    pub sites: BTreeMap<WireId, Option<String>>,
}

fn malformed(event: &Event, reason: impl Into<String>) -> FlowError {
    FlowError::MalformedTrace {
        time: event.time,
        reason: reason.into(),
    }
}

struct Builder {
    graph: FlowGraph,
    nodes: BTreeSet<Node>,
    latest: BTreeMap<SlotRef, (Node, BTreeSet<Generator>)>,
    kinds: BTreeMap<WireId, WireKind>,
}

impl Builder {
    fn current(
        &self,
        event: &Event,
        s: SlotRef,
    ) -> Result<&(Node, BTreeSet<Generator>), FlowError> {
        self.latest
            .get(&s)
            .ok_or_else(|| malformed(event, format!("slot {s} read before allocation")))
    }

    fn add_node(&mut self, n: Node) {
        if self.nodes.insert(n) {
            self.graph.nodes.push(n);
        }
    }

    fn edge(
        &mut self,
        kind: EdgeKind,
        from: Node,
        to: Node,
        generator: Option<Generator>,
        event: u64,
    ) {
        self.graph.edges.push(Edge {
            kind,
            from,
            to,
            generator,
            event,
        });
    }

    fn alloc(&mut self, event: &Event) -> Result<(), FlowError> {
        let info = event
            .alloc
            .as_ref()
            .ok_or_else(|| malformed(event, "allocation without alloc record"))?;
        let &[wire] = event.wires.as_slice() else {
            return Err(malformed(event, "allocation must name exactly one wire"));
        };
        if self.kinds.insert(wire, WireKind::Qubit).is_some() {
            return Err(malformed(event, format!("wire {wire} allocated twice")));
        }
        self.graph.sites.insert(wire, info.site.clone());
        for slot in [Slot::X, Slot::Z] {
            let node = Node {
                wire,
                slot: Some(slot),
                time: event.time,
            };
            self.add_node(node);
            self.latest
                .insert(SlotRef::new(wire, slot), (node, BTreeSet::new()));
        }
        for intro in &event.introduced {
            self.introduce(
                event,
                intro.slot,
                intro.generator,
                IntroductionKind::Allocation,
            )?;
        }
        Ok(())
    }

    fn introduce(
        &mut self,
        event: &Event,
        s: SlotRef,
        g: Generator,
        kind: IntroductionKind,
    ) -> Result<(), FlowError> {
        let (node, gens) = self
            .latest
            .get_mut(&s)
            .ok_or_else(|| malformed(event, format!("unknown slot {s}")))?;
        if node.time != event.time {
            return Err(malformed(
                event,
                format!("introduction into {s} without a write in the same event"),
            ));
        }
        if !gens.insert(g) {
            return Err(malformed(
                event,
                format!("generator {g} introduced into {s} twice"),
            ));
        }
        let node = *node;
        self.graph.introductions.push(GraphIntroduction {
            node,
            generator: g,
            kind,
        });
        Ok(())
    }

    fn operation(&mut self, event: &Event) -> Result<(), FlowError> {
        let mut kinds = Vec::with_capacity(event.wires.len());
        for w in &event.wires {
            kinds.push(
                *self
                    .kinds
                    .get(w)
                    .ok_or_else(|| malformed(event, format!("unknown wire {w}")))?,
            );
        }
        let mut updates: Vec<(SlotRef, Node, BTreeSet<Generator>)> = Vec::new();
        let mut flows = event.flows.clone();
        // A slot that only receives an introduction is carried over unchanged first.
        for intro in &event.introduced {
            if !flows.iter().any(|f| f.target == Some(intro.slot)) {
                flows.push(crate::machine::SlotFlow {
                    target: Some(intro.slot),
                    base: Some(intro.slot),
                    negate: false,
                    factors: vec![],
                });
            }
        }
        for flow in &flows {
            let to = match (flow.target, flow.base) {
                (Some(t), _) => Node {
                    wire: t.wire,
                    slot: Some(t.slot),
                    time: event.time,
                },
                (None, Some(b)) => Node {
                    wire: b.wire,
                    slot: None,
                    time: event.time,
                },
                (None, None) => return Err(malformed(event, "flow with neither target nor base")),
            };
            let mut acc = BTreeSet::new();
            if let Some(b) = flow.base {
                let (from, gens) = self.current(event, b)?.clone();
                for g in gens {
                    self.edge(EdgeKind::Compose, from, to, Some(g), event.time);
                    acc.insert(g);
                }
            }
            for &f in &flow.factors {
                let (from, gens) = self.current(event, f)?.clone();
                for g in gens {
                    if acc.remove(&g) {
                        self.edge(EdgeKind::Annihilate, from, to, Some(g), event.time);
                    } else {
                        acc.insert(g);
                        self.edge(EdgeKind::Copy, from, to, Some(g), event.time);
                    }
                }
                let from_bit = self.kinds.get(&f.wire) == Some(&WireKind::Bit);
                if from_bit && f.slot == Slot::Z && f.wire != to.wire {
                    self.edge(EdgeKind::Transmit, from, to, None, event.time);
                }
            }
            self.add_node(to);
            if let Some(t) = flow.target {
                updates.push((t, to, acc));
            }
        }
        for (s, node, gens) in updates {
            self.latest.insert(s, (node, gens));
        }
        for intro in &event.introduced {
            self.introduce(
                event,
                intro.slot,
                intro.generator,
                IntroductionKind::Discard,
            )?;
        }
        if event.kind == EventKind::Measure {
            for w in &event.wires {
                self.kinds.insert(*w, WireKind::Bit);
            }
        }
        self.graph.events.push(EventSummary {
            time: event.time,
            gate: event.gate.clone(),
            wires: event.wires.clone(),
            kinds,
        });
        Ok(())
    }
}

/// Extracts the flow graph. Time stamps are taken as recorded; whether they
/// run forward is left to [`check_causality`].
pub fn build_flow_graph(trace: &Trace) -> Result<FlowGraph, FlowError> {
    let mut b = Builder {
        graph: FlowGraph::default(),
        nodes: BTreeSet::new(),
        latest: BTreeMap::new(),
        kinds: BTreeMap::new(),
    };
    for event in &trace.events {
        match event.kind {
            EventKind::Alloc => {
                b.graph.events.push(EventSummary {
                    time: event.time,
                    gate: event.gate.clone(),
                    wires: event.wires.clone(),
                    kinds: vec![],
                });
                b.alloc(event)?
            }
            _ => b.operation(event)?,
        }
    }
    Ok(b.graph)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CausalityReport {
    pub acyclic: bool,
    pub violations: Vec<String>,
}

impl CausalityReport {
    pub fn passed(&self) -> bool {
        self.acyclic && self.violations.is_empty()
    }
}

/// Acyclicity, forward time stamps and per-event locality of every edge.
pub fn check_causality(g: &FlowGraph) -> CausalityReport {
    let mut violations = Vec::new();
    for pair in g.events.windows(2) {
        if pair[1].time <= pair[0].time {
            violations.push(format!(
                "event time {} does not follow {}",
                pair[1].time, pair[0].time
            ));
        }
    }
    let wires_of: BTreeMap<u64, &[WireId]> = g
        .events
        .iter()
        .map(|e| (e.time, e.wires.as_slice()))
        .collect();
    for e in &g.edges {
        if e.from.time >= e.to.time {
            violations.push(format!(
                "{:?} edge {} -> {} does not run forward in time",
                e.kind, e.from, e.to
            ));
        }
        match wires_of.get(&e.event) {
            Some(ws) if ws.contains(&e.from.wire) && ws.contains(&e.to.wire) => {}
            _ => violations.push(format!(
                "edge {} -> {} leaves the wires of event {}",
                e.from, e.to, e.event
            )),
        }
    }
    CausalityReport {
        acyclic: is_acyclic(g),
        violations,
    }
}

fn is_acyclic(g: &FlowGraph) -> bool {
    let index: BTreeMap<Node, usize> = g.nodes.iter().enumerate().map(|(i, n)| (*n, i)).collect();
    let mut out = vec![Vec::new(); g.nodes.len()];
    let mut indegree = vec![0usize; g.nodes.len()];
    for e in &g.edges {
        let (Some(&a), Some(&b)) = (index.get(&e.from), index.get(&e.to)) else {
            return false;
        };
        out[a].push(b);
        indegree[b] += 1;
    }
    let mut ready: Vec<usize> = (0..g.nodes.len()).filter(|&i| indegree[i] == 0).collect();
    let mut seen = 0;
    while let Some(i) = ready.pop() {
        seen += 1;
        for &j in &out[i] {
            indegree[j] -= 1;
            if indegree[j] == 0 {
                ready.push(j);
            }
        }
    }
    seen == g.nodes.len()
}

/// Reconstructs every node's generator set from introductions and edges
/// alone. Counts other than 0 or 1 are returned as errors.
pub fn replay(g: &FlowGraph) -> Result<BTreeMap<Node, BTreeSet<Generator>>, String> {
    let mut counts: BTreeMap<Node, BTreeMap<Generator, i64>> = BTreeMap::new();
    for i in &g.introductions {
        *counts
            .entry(i.node)
            .or_default()
            .entry(i.generator)
            .or_default() += 1;
    }
    for e in &g.edges {
        let Some(gen) = e.generator else { continue };
        let delta = if e.kind == EdgeKind::Annihilate {
            -1
        } else {
            1
        };
        *counts.entry(e.to).or_default().entry(gen).or_default() += delta;
    }
    let mut out = BTreeMap::new();
    for n in &g.nodes {
        let mut set = BTreeSet::new();
        for (gen, c) in counts.remove(n).unwrap_or_default() {
            match c {
                0 => {}
                1 => {
                    set.insert(gen);
                }
                _ => return Err(format!("generator {gen} has count {c} at {n}")),
            }
        }
        out.insert(*n, set);
    }
    Ok(out)
}

/// Generator sets of the last node of every slot, as replayed.
pub fn replay_final(g: &FlowGraph) -> Result<BTreeMap<SlotRef, BTreeSet<Generator>>, String> {
    let sets = replay(g)?;
    let mut last: BTreeMap<SlotRef, (u64, BTreeSet<Generator>)> = BTreeMap::new();
    for (n, s) in sets {
        let Some(slot) = n.slot else { continue };
        let key = SlotRef::new(n.wire, slot);
        if last.get(&key).is_none_or(|(t, _)| *t < n.time) {
            last.insert(key, (n.time, s));
        }
    }
    Ok(last.into_iter().map(|(k, (_, s))| (k, s)).collect())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConservationReport {
    pub copies: usize,
    pub annihilations: usize,
    pub discards: usize,
    pub violations: Vec<String>,
}

impl ConservationReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks that dependencies are cloned and annihilated but never deleted:
/// fresh generators appear only at allocation (or as the environment record
/// of a measured or decohered bit, reported as discards), every recorded word
/// equals the independent replay of the edges, and no generator leaves a
/// gate event without a matching annihilation.
pub fn check_clone_annihilate_not_delete(trace: &Trace) -> Result<ConservationReport, FlowError> {
    let g = build_flow_graph(trace)?;
    let mut violations = Vec::new();

    for (event, summary) in trace.events.iter().zip(&g.events) {
        if event.introduced.is_empty() {
            continue;
        }
        let allowed = match event.kind {
            EventKind::Alloc | EventKind::Measure => true,
            EventKind::Gate => summary.kinds.contains(&WireKind::Bit),
            EventKind::Query => false,
        };
        if !allowed {
            violations.push(format!(
                "event {} ({}) introduces a generator",
                event.time, event.gate
            ));
        }
    }

    match replay(&g) {
        Err(e) => violations.push(e),
        Ok(sets) => {
            for event in &trace.events {
                for rec in &event.descriptors {
                    for (slot, word) in [(Slot::X, &rec.x), (Slot::Z, &rec.z)] {
                        let node = Node {
                            wire: rec.wire,
                            slot: Some(slot),
                            time: event.time,
                        };
                        if let Some(replayed) = sets.get(&node) {
                            if *replayed != word.generator_set() {
                                violations.push(format!(
                                    "replay of {node} disagrees with the recorded word {word}"
                                ));
                            }
                        }
                    }
                }
            }
            violations.extend(deletions(&g, &sets));
        }
    }

    let count = |k: EdgeKind| g.edges.iter().filter(|e| e.kind == k).count();
    Ok(ConservationReport {
        copies: count(EdgeKind::Copy),
        annihilations: count(EdgeKind::Annihilate),
        discards: g
            .introductions
            .iter()
            .filter(|i| i.kind == IntroductionKind::Discard)
            .count(),
        violations,
    })
}

/// Generators held by an event's wires before a gate that none of them holds
/// afterwards and that no annihilation accounts for.
fn deletions(g: &FlowGraph, sets: &BTreeMap<Node, BTreeSet<Generator>>) -> Vec<String> {
    let mut out = Vec::new();
    let mut latest: BTreeMap<SlotRef, Node> = BTreeMap::new();
    let mut by_event: BTreeMap<u64, Vec<&Edge>> = BTreeMap::new();
    for e in &g.edges {
        by_event.entry(e.event).or_default().push(e);
    }
    let mut written: BTreeMap<u64, Vec<Node>> = BTreeMap::new();
    for n in &g.nodes {
        if n.slot.is_some() {
            written.entry(n.time).or_default().push(*n);
        }
    }
    for ev in &g.events {
        let slots: Vec<SlotRef> = ev
            .wires
            .iter()
            .flat_map(|&w| [SlotRef::new(w, Slot::X), SlotRef::new(w, Slot::Z)])
            .collect();
        let held = |latest: &BTreeMap<SlotRef, Node>| -> BTreeSet<Generator> {
            slots
                .iter()
                .filter_map(|s| latest.get(s))
                .flat_map(|n| sets[n].iter().copied())
                .collect()
        };
        let before = held(&latest);
        for n in written.get(&ev.time).into_iter().flatten() {
            latest.insert(SlotRef::new(n.wire, n.slot.expect("slot nodes only")), *n);
        }
        if ev.kinds.is_empty() {
            continue;
        }
        let after = held(&latest);
        let annihilated: BTreeSet<Generator> = by_event
            .get(&ev.time)
            .into_iter()
            .flatten()
            .filter(|e| e.kind == EdgeKind::Annihilate)
            .filter_map(|e| e.generator)
            .collect();
        for gen in before.difference(&after) {
            if !annihilated.contains(gen) {
                out.push(format!("event {} ({}) deletes {gen}", ev.time, ev.gate));
            }
        }
    }
    out
}

/// Resource counts. Dependency counts cover `X`-type generators (the
/// triangles); `Z`-type occurrences are counted separately. Parity queries do
/// not change any slot, so their annihilations are kept apart.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResourceReport {
    pub qubits_allocated: usize,
    pub bits_produced: usize,
    pub entangling_gates: usize,
    pub mixed_gates: usize,
    pub dependency_copies: usize,
    pub dependency_annihilations: usize,
    pub z_copies: usize,
    pub z_annihilations: usize,
    pub query_annihilations: usize,
    pub discards: usize,
    pub classical_transmissions: usize,
}

pub fn resource_report(trace: &Trace) -> Result<ResourceReport, FlowError> {
    let g = build_flow_graph(trace)?;
    let mut r = ResourceReport {
        qubits_allocated: g.sites.len(),
        ..Default::default()
    };
    for ev in &g.events {
        if ev.gate == "MEASZ" {
            r.bits_produced += 1;
        }
        if ev.wires.len() != 2 || !matches!(ev.gate.as_str(), "CNOT" | "CZ" | "SWAP") {
            continue;
        }
        let bits = ev.kinds.iter().filter(|k| **k == WireKind::Bit).count();
        match bits {
            0 if ev.gate != "SWAP" => r.entangling_gates += 1,
            1 => r.mixed_gates += 1,
            _ => {}
        }
        for (i, &w) in ev.wires.iter().enumerate() {
            let other = ev.wires[1 - i];
            if ev.kinds[i] == WireKind::Bit {
                let (a, b) = (
                    g.sites.get(&w).cloned().flatten(),
                    g.sites.get(&other).cloned().flatten(),
                );
                if a.is_none() || b.is_none() || a != b {
                    r.classical_transmissions += 1;
                }
            }
        }
    }
    for e in &g.edges {
        let Some(gen) = e.generator else { continue };
        let x = gen.kind == GenKind::X;
        match (e.kind, e.to.slot.is_some(), x) {
            (EdgeKind::Copy, true, true) => r.dependency_copies += 1,
            (EdgeKind::Copy, true, false) => r.z_copies += 1,
            (EdgeKind::Annihilate, true, true) => r.dependency_annihilations += 1,
            (EdgeKind::Annihilate, true, false) => r.z_annihilations += 1,
            (EdgeKind::Annihilate, false, _) => r.query_annihilations += 1,
            _ => {}
        }
    }
    r.discards = g
        .introductions
        .iter()
        .filter(|i| i.kind == IntroductionKind::Discard)
        .count();
    Ok(r)
}

impl FlowGraph {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("graph serializes")
    }

    pub fn from_json(s: &str) -> Result<FlowGraph, serde_json::Error> {
        serde_json::from_str(s)
    }

    /// Graphviz text with nodes and edges in construction order.
    pub fn to_dot(&self) -> String {
        let mut out = String::from(
            "digraph flow {\n  rankdir=LR;\n  node [shape=box, fontname=\"monospace\"];\n",
        );
        for n in &self.nodes {
            writeln!(out, "  \"{n}\";").expect("write to string");
        }
        for e in &self.edges {
            let (style, name) = match e.kind {
                EdgeKind::Copy => ("color=\"#1f77b4\"", "copy"),
                EdgeKind::Compose => ("color=\"#7f7f7f\"", "compose"),
                EdgeKind::Annihilate => ("color=\"#d62728\", style=dashed", "annihilate"),
                EdgeKind::Transmit => ("color=\"#2ca02c\", style=bold", "transmit"),
            };
            let label = match e.generator {
                Some(g) => format!("{name} {g}"),
                None => name.to_string(),
            };
            writeln!(
                out,
                "  \"{}\" -> \"{}\" [label=\"{label}\", {style}];",
                e.from, e.to
            )
            .expect("write to string");
        }
        out.push_str("}\n");
        out
    }
}

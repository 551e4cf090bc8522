//! Machine-versus-oracle comparison of one program.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dsl::{execute, CircuitProgram, ExecError};
use crate::machine::{BitClassification, Machine, MachineError, PositionOrigin, WireKind};
use crate::oracle::{compare, simulate, OracleConfig, OracleError, UnknownAssignment};
use crate::pauli::Position;

pub const DEFAULT_TOLERANCE: f64 = 1e-10;

/// Largest number of live qubits whose joint density is compared directly.
/// Beyond it the joint matrix (4^n entries) is too large, and every one- and
/// two-qubit reduced density is compared instead.
pub const JOINT_DENSITY_LIMIT: usize = 8;

#[derive(Debug, Error)]
pub enum CompareError {
    #[error(transparent)]
    Exec(#[from] ExecError),
    #[error(transparent)]
    Machine(#[from] MachineError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationMismatch {
    pub wire: String,
    pub machine: String,
    pub oracle_p1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub program: String,
    pub seed: u64,
    pub assignments: UnknownAssignment,
    pub max_abs_diff: f64,
    pub classification_mismatches: Vec<ClassificationMismatch>,
}

impl ComparisonReport {
    pub fn passed(&self, tolerance: f64) -> bool {
        self.max_abs_diff <= tolerance && self.classification_mismatches.is_empty()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// True when the oracle's `P(bit = 1)` agrees with the machine's classification.
pub fn classification_agrees(class: BitClassification, p1: f64, tolerance: f64) -> bool {
    match class {
        BitClassification::Definite(0) => p1.abs() <= tolerance,
        BitClassification::Definite(_) => (p1 - 1.0).abs() <= tolerance,
        BitClassification::Random => (p1 - 0.5).abs() <= tolerance,
        BitClassification::Symbolic => true,
    }
}

/// Runs the program on both simulators. Unknown wires get seeded states.
pub fn compare_program(
    name: &str,
    program: &CircuitProgram,
    seed: u64,
    tolerance: f64,
    config: OracleConfig,
) -> Result<ComparisonReport, CompareError> {
    let assignments = UnknownAssignment::seeded(program, seed);
    compare_with(name, program, seed, &assignments, tolerance, config)
}

pub fn compare_with(
    name: &str,
    program: &CircuitProgram,
    seed: u64,
    assignments: &UnknownAssignment,
    tolerance: f64,
    config: OracleConfig,
) -> Result<ComparisonReport, CompareError> {
    let sim = simulate(program, assignments, config)?;
    let run = execute(program, Machine::new())?;
    let m = &run.machine;

    let ordinal_names: Vec<String> = program
        .lower()
        .into_iter()
        .filter_map(|s| match s.prim {
            crate::dsl::Prim::Alloc { name, .. } => Some(name),
            _ => None,
        })
        .collect();
    let bloch = |p: Position| -> Option<[f64; 3]> {
        match m.positions().get(p)?.origin {
            PositionOrigin::Wire(id) => {
                let ordinal = run.wires.iter().position(|&w| w == id)?;
                assignments.bloch(&ordinal_names[ordinal])
            }
            PositionOrigin::Environment(_) => None,
        }
    };

    let qubits = sim.live_qubits();
    let subsets: Vec<Vec<usize>> = if qubits.is_empty() {
        Vec::new()
    } else if qubits.len() <= JOINT_DENSITY_LIMIT {
        vec![qubits.clone()]
    } else {
        let mut subsets: Vec<Vec<usize>> = qubits.iter().map(|&q| vec![q]).collect();
        for (i, &a) in qubits.iter().enumerate() {
            subsets.extend(qubits[i + 1..].iter().map(|&b| vec![a, b]));
        }
        subsets
    };
    let mut max_abs_diff = 0.0f64;
    for subset in &subsets {
        let ids: Vec<_> = subset.iter().map(|&w| run.wires[w]).collect();
        let exported = m.export_density_concrete(&ids, bloch)?;
        max_abs_diff = max_abs_diff.max(compare(&exported, &sim.density(subset)?)?);
    }

    let mut classification_mismatches = Vec::new();
    for (ordinal, &id) in run.wires.iter().enumerate() {
        if m.kind(id)? != WireKind::Bit {
            continue;
        }
        let class = m.classify(id)?;
        let p1 = sim.marginal_one(ordinal)?;
        if !classification_agrees(class, p1, tolerance) {
            classification_mismatches.push(ClassificationMismatch {
                wire: ordinal_names[ordinal].clone(),
                machine: class.to_string(),
                oracle_p1: p1,
            });
        }
    }

    Ok(ComparisonReport {
        program: name.to_string(),
        seed,
        assignments: assignments.clone(),
        max_abs_diff,
        classification_mismatches,
    })
}

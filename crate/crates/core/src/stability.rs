//! Does reducing words mid-circuit change any later prediction?
//!
//! Each trial runs a seeded random program twice. In the second run every
//! slot of every wire (bit record slots included) is reduced at a random cut
//! point: `Z` letters at reference positions are dropped and `Y` becomes `X`
//! there. The run then continues from the reduced words, and the final
//! classifications of every bit, every pair of bits and every qubit component
//! are compared with the unreduced run.
//!
//! Two readings of `Y → X` are tried: [`ReductionVariant::Literal`] keeps the
//! phase, [`ReductionVariant::PhaseFolded`] multiplies by `i` as readout does
//! (`Y = i·X·Z`).

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::circuits::{random_program, random_source, RandomCircuitSpec};
use crate::dsl::execute_with_hook;
use crate::machine::{Component, Machine, MachineState};
use crate::pauli::{Letter, PauliWord, Phase, ReferenceZero};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReductionVariant {
    Literal,
    PhaseFolded,
}

pub fn reduce_word<R: ReferenceZero + ?Sized>(
    w: &PauliWord,
    reference: &R,
    variant: ReductionVariant,
) -> PauliWord {
    let mut phase = w.phase();
    let mut letters = BTreeMap::new();
    for (&p, &l) in w.letters() {
        if !reference.is_reference_zero(p) {
            letters.insert(p, l);
            continue;
        }
        match l {
            Letter::X => {
                letters.insert(p, Letter::X);
            }
            Letter::Z => {}
            Letter::Y => {
                if variant == ReductionVariant::PhaseFolded {
                    phase = phase * Phase::PlusI;
                }
                letters.insert(p, Letter::X);
            }
        }
    }
    PauliWord::from_letters(phase, letters)
}

pub fn reduce_state(state: &MachineState, variant: ReductionVariant) -> MachineState {
    let mut out = state.clone();
    for w in &mut out.wires {
        w.x = reduce_word(&w.x, &state.positions, variant);
        w.z = reduce_word(&w.z, &state.positions, variant);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Discrepancy {
    pub seed: u64,
    pub variant: ReductionVariant,
    pub cut: usize,
    pub observable: String,
    pub full: String,
    pub reduced: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct VariantSummary {
    pub trials: usize,
    pub trials_with_discrepancy: usize,
    pub observations: usize,
    pub discrepant_observations: usize,
    /// Discrepancies by `full -> reduced` classification pair.
    pub by_kind: BTreeMap<String, usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub trials: u64,
    pub circuit: String,
    pub variants: BTreeMap<ReductionVariant, VariantSummary>,
    /// The first few discrepancies of each variant, with their programs.
    pub examples: Vec<(Discrepancy, String)>,
}

impl StabilityReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }
}

pub const STUDY_CIRCUITS: RandomCircuitSpec = RandomCircuitSpec {
    max_wires: 6,
    max_depth: 50,
    unknown_fraction: 0.25,
    measure_weight: 1,
    unitary_only: false,
};

const EXAMPLES_PER_VARIANT: usize = 5;

fn observe(m: &Machine) -> BTreeMap<String, String> {
    let show = |r: Result<_, _>| match r {
        Ok(c) => format!("{c}"),
        Err(e) => format!("error: {e}"),
    };
    let mut out = BTreeMap::new();
    let bits = m.bits();
    for (i, &b) in bits.iter().enumerate() {
        out.insert(format!("bit {b}"), show(m.classify(b)));
        for &c in &bits[i + 1..] {
            out.insert(format!("parity {b} {c}"), show(m.joint_parity(&[b, c])));
        }
    }
    for q in m.qubits() {
        for (name, c) in [
            ("x", Component::X),
            ("y", Component::Y),
            ("z", Component::Z),
        ] {
            let class = m.component(q, c).and_then(|w| m.classify_word(&w));
            out.insert(format!("qubit {q}.{name}"), show(class));
        }
    }
    out
}

/// Runs `trials` seeded trials of both variants.
pub fn stability_study(trials: u64) -> StabilityReport {
    let mut variants: BTreeMap<ReductionVariant, VariantSummary> = BTreeMap::new();
    let mut examples = Vec::new();
    for seed in 0..trials {
        let program = random_program(seed, STUDY_CIRCUITS);
        let statements = program.lower().len();
        let cut = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed).gen_range(0..=statements);
        let full = observe(
            &execute_with_hook(&program, Machine::new(), |_, _| {})
                .expect("runs")
                .machine,
        );
        for variant in [ReductionVariant::Literal, ReductionVariant::PhaseFolded] {
            let hook = |k: usize, m: &mut Machine| {
                if k == cut {
                    *m = Machine::from_state(reduce_state(&m.state(), variant));
                }
            };
            let reduced = observe(
                &execute_with_hook(&program, Machine::new(), hook)
                    .expect("runs")
                    .machine,
            );
            let summary = variants.entry(variant).or_default();
            summary.trials += 1;
            summary.observations += full.len();
            let mut any = false;
            for (observable, f) in &full {
                let r = &reduced[observable];
                if f == r {
                    continue;
                }
                any = true;
                summary.discrepant_observations += 1;
                *summary.by_kind.entry(format!("{f} -> {r}")).or_default() += 1;
                let shown = examples
                    .iter()
                    .filter(|(d, _): &&(Discrepancy, String)| d.variant == variant)
                    .count();
                if shown < EXAMPLES_PER_VARIANT {
                    let d = Discrepancy {
                        seed,
                        variant,
                        cut,
                        observable: observable.clone(),
                        full: f.clone(),
                        reduced: r.clone(),
                    };
                    examples.push((d, random_source(seed, STUDY_CIRCUITS)));
                }
            }
            summary.trials_with_discrepancy += usize::from(any);
        }
    }
    StabilityReport {
        trials,
        circuit: format!("{STUDY_CIRCUITS:?}"),
        variants,
        examples,
    }
}

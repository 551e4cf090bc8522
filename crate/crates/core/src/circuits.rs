//! Seeded random `.hqc` programs for property and equivalence suites.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dsl::{parse, CircuitProgram};

#[derive(Debug, Clone, Copy)]
pub struct RandomCircuitSpec {
    pub max_wires: usize,
    pub max_depth: usize,
    /// Probability that a wire starts in an unknown state.
    pub unknown_fraction: f64,
    /// Relative weight of measurements among the operations.
    pub measure_weight: u32,
    /// Emit only unitary gates.
    pub unitary_only: bool,
}

impl Default for RandomCircuitSpec {
    fn default() -> Self {
        RandomCircuitSpec {
            max_wires: 6,
            max_depth: 50,
            unknown_fraction: 0.0,
            measure_weight: 1,
            unitary_only: false,
        }
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Choice {
    Not,
    H,
    Cnot,
    Cz,
    Swap,
    MeasZ,
    MeasX,
}

/// Source text of a random program over `w0..wn`. Measured wires keep their
/// name, so later gates can address the resulting bits.
pub fn random_source(seed: u64, spec: RandomCircuitSpec) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(1..=spec.max_wires);
    let depth = rng.gen_range(1..=spec.max_depth);
    let mut src = String::new();
    let mut is_qubit = vec![true; n];
    for w in 0..n {
        let init = if rng.gen_bool(spec.unknown_fraction) {
            "?"
        } else {
            "0"
        };
        src.push_str(&format!("q w{w} = {init}\n"));
    }
    for _ in 0..depth {
        let qubits: Vec<usize> = (0..n).filter(|&w| is_qubit[w]).collect();
        let mut menu: Vec<(Choice, u32)> = vec![(Choice::Not, 3)];
        if !qubits.is_empty() {
            menu.push((Choice::H, 3));
            if !spec.unitary_only {
                menu.push((Choice::MeasZ, spec.measure_weight));
                menu.push((Choice::MeasX, spec.measure_weight));
            }
        }
        if n >= 2 {
            menu.push((Choice::Cnot, 3));
            menu.push((Choice::Cz, 3));
        }
        if qubits.len() >= 2 {
            menu.push((Choice::Swap, 2));
        }
        let choice = menu
            .choose_weighted(&mut rng, |c| c.1)
            .expect("non-empty menu")
            .0;
        let all: Vec<usize> = (0..n).collect();
        let line = match choice {
            Choice::Not => format!("NOT w{}", all.choose(&mut rng).unwrap()),
            Choice::H => format!("H w{}", qubits.choose(&mut rng).unwrap()),
            Choice::Cnot | Choice::Cz => {
                let pair: Vec<&usize> = all.choose_multiple(&mut rng, 2).collect();
                let g = if choice == Choice::Cnot { "CNOT" } else { "CZ" };
                format!("{g} w{} w{}", pair[0], pair[1])
            }
            Choice::Swap => {
                let pair: Vec<&usize> = qubits.choose_multiple(&mut rng, 2).collect();
                format!("SWAP w{} w{}", pair[0], pair[1])
            }
            Choice::MeasZ | Choice::MeasX => {
                let w = *qubits.choose(&mut rng).unwrap();
                is_qubit[w] = false;
                let m = if choice == Choice::MeasZ {
                    "measz"
                } else {
                    "measx"
                };
                format!("b w{w} = {m} w{w}")
            }
        };
        src.push_str(&line);
        src.push('\n');
    }
    src
}

pub fn random_program(seed: u64, spec: RandomCircuitSpec) -> CircuitProgram {
    parse(&random_source(seed, spec)).expect("generated programs are well-formed")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_parseable() {
        for seed in 0..50 {
            let a = random_source(seed, RandomCircuitSpec::default());
            assert_eq!(a, random_source(seed, RandomCircuitSpec::default()));
            parse(&a).unwrap();
        }
    }
}

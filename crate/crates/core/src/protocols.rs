//! Teleportation: correction-wiring search and per-branch fidelity.
//!
//! The protocol shares the pair `H a; CNOT a bob; NOT bob` (the
//! `|01⟩ + |10⟩` Bell state), then Alice entangles the unknown input with her
//! half and measures both. Which correction gate each outcome bit should drive,
//! and whether a bit needs a classical flip first, is decided by
//! [`search_teleport_wiring`] against the oracle rather than assumed.

use num_complex::Complex64;

use crate::dsl::{parse, CircuitProgram};
use crate::oracle::{reduced_density, simulate, OracleConfig, OracleError, UnknownAssignment};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Correction {
    Cnot,
    Cz,
}

impl Correction {
    fn keyword(self) -> &'static str {
        match self {
            Correction::Cnot => "CNOT",
            Correction::Cz => "CZ",
        }
    }
}

/// Gate driven by each of Alice's bits, and whether the bit is flipped first.
/// `m1` is the X-basis outcome on the input, `m2` the Z-basis outcome on her
/// half of the pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TeleportWiring {
    pub m1: Correction,
    pub m2: Correction,
    pub flip_m1: bool,
    pub flip_m2: bool,
}

impl TeleportWiring {
    pub fn all() -> Vec<TeleportWiring> {
        let mut out = Vec::new();
        for m1 in [Correction::Cnot, Correction::Cz] {
            for m2 in [Correction::Cnot, Correction::Cz] {
                for flip_m1 in [false, true] {
                    for flip_m2 in [false, true] {
                        out.push(TeleportWiring {
                            m1,
                            m2,
                            flip_m1,
                            flip_m2,
                        });
                    }
                }
            }
        }
        out
    }
}

/// Source text of the protocol with the given wiring.
pub fn teleport_source(w: TeleportWiring) -> String {
    let mut s = String::from(
        "# Teleportation of an unknown state from Alice to Bob.\n\
         # Correction wiring found by oracle search over bit-to-gate assignments.\n\
         q psi = ? @alice\n\
         q a = 0 @alice\n\
         q bob = 0 @bob\n\
         # shared pair (|01> + |10>)\n\
         H a\n\
         CNOT a bob\n\
         NOT bob\n\
         # Alice's measurement\n\
         CNOT psi a\n\
         b m1 = measx psi\n\
         b m2 = measz a\n\
         # Bob's corrections\n",
    );
    if w.flip_m1 {
        s.push_str("NOT m1\n");
    }
    if w.flip_m2 {
        s.push_str("NOT m2\n");
    }
    s.push_str(&format!("{} m1 bob\n", w.m1.keyword()));
    s.push_str(&format!("{} m2 bob\n", w.m2.keyword()));
    s
}

#[derive(Debug, Clone, PartialEq)]
pub struct BranchFidelity {
    pub bits: Vec<Option<u8>>,
    pub probability: f64,
    pub fidelity: f64,
}

/// Fidelity of the `output` wire with the state assigned to the `input` wire,
/// in every branch of the oracle run.
pub fn branch_fidelities(
    program: &CircuitProgram,
    input: &str,
    output: &str,
    assign: &UnknownAssignment,
    config: OracleConfig,
) -> Result<Vec<BranchFidelity>, OracleError> {
    let wire = |name: &str| {
        program
            .symbols
            .get(name)
            .map(|s| s.wire)
            .ok_or_else(|| OracleError::MissingAssignment(name.to_string()))
    };
    let out = wire(output)?;
    let (alpha, beta) = assign
        .get(input)
        .ok_or_else(|| OracleError::MissingAssignment(input.to_string()))?;
    let sim = simulate(program, assign, config)?;
    let mut result = Vec::new();
    for b in &sim.branches {
        let rho = reduced_density(&b.state, &[out])?;
        let psi = [alpha, beta];
        let mut f = Complex64::new(0.0, 0.0);
        for r in 0..2 {
            for c in 0..2 {
                f += psi[r].conj() * rho[(r, c)] * psi[c];
            }
        }
        result.push(BranchFidelity {
            bits: b.bits.clone(),
            probability: b.probability,
            fidelity: f.re / rho.trace().re,
        });
    }
    Ok(result)
}

/// Wirings whose every branch returns the input state to Bob, for the seeded
/// inputs `0..seeds`.
pub fn search_teleport_wiring(seeds: u64, tolerance: f64) -> Vec<TeleportWiring> {
    TeleportWiring::all()
        .into_iter()
        .filter(|&w| {
            let program = parse(&teleport_source(w)).expect("generated protocol parses");
            (0..seeds).all(|seed| {
                let assign = UnknownAssignment::seeded(&program, seed);
                branch_fidelities(&program, "psi", "bob", &assign, OracleConfig::default())
                    .expect("protocol fits the oracle")
                    .iter()
                    .all(|b| b.fidelity >= 1.0 - tolerance)
            })
        })
        .collect()
}

use proptest::prelude::*;

use hqc_core::circuits::{random_program, RandomCircuitSpec};
use hqc_core::dsl::execute;
use hqc_core::machine::{Component, Init, Machine, MachineState, WireId, WireKind};
use hqc_core::oracle::{simulate, OracleConfig, UnknownAssignment};
use hqc_core::pauli::PauliWord;

#[derive(Debug, Clone, Copy)]
enum Op {
    Not(usize),
    H(usize),
    Cnot(usize, usize),
    Cz(usize, usize),
    Swap(usize, usize),
    Measure(usize),
}

fn op(n: usize) -> impl Strategy<Value = Op> {
    (0usize..6, 0..n, 0..n).prop_map(|(k, a, b)| match k {
        0 => Op::Not(a),
        1 => Op::H(a),
        2 => Op::Cnot(a, b),
        3 => Op::Cz(a, b),
        4 => Op::Swap(a, b),
        _ => Op::Measure(a),
    })
}

/// Applies `op` if it is valid for the current wire kinds; returns the wires it touched.
fn apply(m: &mut Machine, wires: &[WireId], op: Op) -> Option<Vec<WireId>> {
    let qubit = |m: &Machine, w: WireId| m.kind(w) == Ok(WireKind::Qubit);
    let ok = match op {
        Op::Not(a) => m.apply_not(wires[a]).is_ok(),
        Op::H(a) => m.apply_hadamard(wires[a]).is_ok(),
        Op::Cnot(a, b) => m.apply_cnot(wires[a], wires[b]).is_ok(),
        Op::Cz(a, b) => m.apply_cz(wires[a], wires[b]).is_ok(),
        Op::Swap(a, b) => m.apply_swap(wires[a], wires[b]).is_ok(),
        Op::Measure(a) => qubit(m, wires[a]) && m.measure_z(wires[a]).is_ok(),
    };
    ok.then(|| match op {
        Op::Not(a) | Op::H(a) | Op::Measure(a) => vec![wires[a]],
        Op::Cnot(a, b) | Op::Cz(a, b) | Op::Swap(a, b) => vec![wires[a], wires[b]],
    })
}

fn machine(n: usize, unknown: u8) -> (Machine, Vec<WireId>) {
    let mut m = Machine::new();
    let wires = (0..n)
        .map(|i| {
            m.alloc_qubit(if unknown & (1 << i) != 0 {
                Init::Unknown
            } else {
                Init::Zero
            })
        })
        .collect();
    (m, wires)
}

fn snapshot(m: &Machine) -> MachineState {
    m.state()
}

fn words(m: &Machine) -> Vec<(WireId, WireKind, PauliWord, PauliWord)> {
    m.state()
        .wires
        .into_iter()
        .map(|w| (w.id, w.kind, w.x, w.z))
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn unitary_gates_are_involutions(unknown in any::<u8>(), ops in proptest::collection::vec(op(8), 1..40)) {
        let (mut m, wires) = machine(8, unknown);
        for o in ops {
            let before = words(&m);
            if matches!(o, Op::Measure(_)) {
                apply(&mut m, &wires, o);
                continue;
            }
            if let Some(touched) = apply(&mut m, &wires, o) {
                // Gates on bits re-decohere the bit record, which is not undone.
                let on_bit = before.iter().any(|(id, k, _, _)| *k == WireKind::Bit && touched.contains(id));
                apply(&mut m, &wires, o).unwrap();
                if !on_bit {
                    prop_assert_eq!(words(&m), before);
                }
            }
        }
    }

    #[test]
    fn untouched_wires_are_unchanged(unknown in any::<u8>(), ops in proptest::collection::vec(op(8), 1..60)) {
        let (mut m, wires) = machine(8, unknown);
        for o in ops {
            let before = snapshot(&m);
            if let Some(touched) = apply(&mut m, &wires, o) {
                let after = snapshot(&m);
                for (b, a) in before.wires.iter().zip(&after.wires) {
                    if !touched.contains(&b.id) {
                        prop_assert_eq!(b, a);
                    }
                }
            }
        }
    }

    #[test]
    fn descriptor_algebra_is_preserved(unknown in any::<u8>(), ops in proptest::collection::vec(op(6), 1..60)) {
        let (mut m, wires) = machine(6, unknown);
        for o in ops {
            apply(&mut m, &wires, o);
        }
        let ws = words(&m);
        for (i, (_, ki, xi, zi)) in ws.iter().enumerate() {
            prop_assert!(xi.is_hermitian() && zi.is_hermitian());
            if *ki == WireKind::Qubit {
                prop_assert!(!xi.commutes_with(zi));
            }
            for (_, _, xj, zj) in &ws[i + 1..] {
                for (a, b) in [(xi, xj), (xi, zj), (zi, xj), (zi, zj)] {
                    prop_assert!(a.commutes_with(b));
                }
            }
        }
        for q in m.qubits() {
            prop_assert!(m.component(q, Component::Y).unwrap().is_hermitian());
        }
    }

    #[test]
    fn density_depends_only_on_local_state(ops in proptest::collection::vec(op(5), 1..40)) {
        let (mut m, wires) = machine(5, 0);
        for o in ops {
            apply(&mut m, &wires, o);
        }
        let qubits = m.qubits();
        if !qubits.is_empty() {
            let json = serde_json::to_string(&m.state()).unwrap();
            let rebuilt = Machine::from_state(serde_json::from_str(&json).unwrap());
            let a = m.export_density(&qubits).unwrap();
            prop_assert_eq!(a.max_abs_diff(&rebuilt.export_density(&qubits).unwrap()), 0.0);
            prop_assert!(a.is_hermitian(1e-12));
            prop_assert!((a.trace().re - 1.0).abs() <= 1e-12);
        }
    }
}

/// Two-qubit unitary circuits: the descriptor entanglement test agrees with
/// the purity of the oracle's one-qubit reduced state.
#[test]
fn entanglement_agrees_with_purity() {
    let spec = RandomCircuitSpec {
        max_wires: 2,
        max_depth: 12,
        unitary_only: true,
        ..Default::default()
    };
    let mut entangled = 0;
    for seed in 0..400 {
        let program = random_program(seed, spec);
        if program.wire_count() != 2 {
            continue;
        }
        let run = execute(&program, Machine::new()).unwrap();
        let machine_says = run
            .machine
            .is_entangled(run.wires[0], run.wires[1])
            .unwrap();
        let sim = simulate(
            &program,
            &UnknownAssignment::default(),
            OracleConfig::default(),
        )
        .unwrap();
        let purity = sim.density(&[0]).unwrap().purity();
        assert_eq!(machine_says, purity < 1.0 - 1e-10, "seed {seed}");
        entangled += usize::from(machine_says);
    }
    assert!(entangled > 20);
}

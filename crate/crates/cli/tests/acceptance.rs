//! Acceptance criteria A1–A7. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails. Set `HQC_BLESS=1` to rewrite the committed
//! reduction-stability report instead of comparing against it.

use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use hqc_core::circuits::{random_program, RandomCircuitSpec};
use hqc_core::compare::{compare_program, DEFAULT_TOLERANCE};
use hqc_core::dsl::{execute, parse, CircuitProgram};
use hqc_core::flow::{
    build_flow_graph, check_causality, check_clone_annihilate_not_delete, replay_final,
    resource_report, EdgeKind, ResourceReport,
};
use hqc_core::machine::{BitClassification, Init, Machine, Slot, SlotRef, Trace, WireId};
use hqc_core::oracle::{simulate, OracleConfig, UnknownAssignment};
use hqc_core::pauli::{readout_form, Letter, PauliWord};
use hqc_core::protocols::branch_fidelities;
use hqc_core::stability::stability_study;

type Outcome = Result<String, String>;
type Criterion = (&'static str, &'static str, fn() -> Outcome);

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn corpus() -> Vec<PathBuf> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(root().join("corpus"))
        .expect("corpus directory")
        .map(|e| e.expect("corpus entry").path())
        .filter(|p| p.extension().is_some_and(|e| e == "hqc"))
        .collect();
    files.sort();
    files
}

fn load(path: &Path) -> CircuitProgram {
    parse(&std::fs::read_to_string(path).expect("readable corpus file")).expect("corpus parses")
}

fn within(limit: Duration, start: Instant) -> Result<f64, String> {
    let s = start.elapsed().as_secs_f64();
    if s < limit.as_secs_f64() {
        Ok(s)
    } else {
        Err(format!("took {s:.2} s, limit {} s", limit.as_secs()))
    }
}

fn a1_oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0f64;
    let mut mismatches = 0;
    for seed in 0..200 {
        let program = random_program(seed, RandomCircuitSpec::default());
        let r = compare_program(
            "random",
            &program,
            seed,
            DEFAULT_TOLERANCE,
            OracleConfig::default(),
        )
        .map_err(|e| format!("seed {seed}: {e}"))?;
        worst = worst.max(r.max_abs_diff);
        mismatches += r.classification_mismatches.len();
    }
    let secs = within(Duration::from_secs(60), start)?;
    let summary = format!(
        "200 circuits, max |Δρ| = {worst:.1e}, {mismatches} classification mismatches, {secs:.2} s"
    );
    if worst <= DEFAULT_TOLERANCE && mismatches == 0 {
        Ok(summary)
    } else {
        Err(summary)
    }
}

/// `w` is `±L_ψ` times Z letters on reference positions only.
fn only_reference_z_besides(
    w: &PauliWord,
    psi: hqc_core::pauli::Position,
    letter: Letter,
    m: &Machine,
) -> bool {
    let reference = m.positions();
    w.letters().iter().all(|(&p, &l)| {
        if p == psi {
            l == letter
        } else {
            l == Letter::Z && hqc_core::pauli::ReferenceZero::is_reference_zero(reference, p)
        }
    }) && w.letter(psi) == Some(letter)
}

fn a2_teleportation() -> Outcome {
    let start = Instant::now();
    let program = load(&root().join("corpus/teleport.hqc"));
    let mut worst = 1.0f64;
    let mut branches = 0;
    for seed in 0..20 {
        let assign = UnknownAssignment::seeded(&program, seed);
        for b in branch_fidelities(&program, "psi", "bob", &assign, OracleConfig::default())
            .map_err(|e| e.to_string())?
        {
            worst = worst.min(b.fidelity);
            branches += 1;
        }
    }
    if worst < 1.0 - 1e-10 {
        return Err(format!("worst branch fidelity {worst}"));
    }

    let run = execute(&program, Machine::new()).map_err(|e| e.to_string())?;
    let m = &run.machine;
    let (psi, bob) = (
        run.wire(&program, "psi").unwrap(),
        run.wire(&program, "bob").unwrap(),
    );
    let home = m.home(psi).map_err(|e| e.to_string())?;
    let initial = &m.trace()[0].descriptors[0];
    let state = m.state();
    let final_bob = state.wires.iter().find(|w| w.id == bob).unwrap();
    if !only_reference_z_besides(&final_bob.x, home, Letter::X, m)
        || !only_reference_z_besides(&final_bob.z, home, Letter::Z, m)
    {
        return Err(format!(
            "Bob's descriptor ({}, {}) is not (±X_ψ·Z…, ±Z_ψ·Z…)",
            final_bob.x, final_bob.z
        ));
    }
    let same = readout_form(&final_bob.x, m.positions()) == readout_form(&initial.x, m.positions())
        && readout_form(&final_bob.z, m.positions()) == readout_form(&initial.z, m.positions());
    if !same {
        return Err(format!(
            "Bob's readout ({}, {}) differs from the input's",
            final_bob.x, final_bob.z
        ));
    }
    let secs = within(Duration::from_secs(5), start)?;
    Ok(format!(
        "20 inputs, {branches} branches, min fidelity 1 - {:.1e}; Bob ends as ({}, {}), {secs:.2} s",
        1.0 - worst,
        final_bob.x,
        final_bob.z
    ))
}

fn a3_bell_annihilation() -> Outcome {
    let start = Instant::now();
    let program = load(&root().join("corpus/bell.hqc"));
    let run = execute(&program, Machine::new()).map_err(|e| e.to_string())?;
    let (ma, mb) = (
        run.wire(&program, "ma").unwrap(),
        run.wire(&program, "mb").unwrap(),
    );
    let m = &run.machine;
    let classes = (m.classify(ma), m.classify(mb), m.joint_parity(&[ma, mb]));
    let (
        Ok(BitClassification::Random),
        Ok(BitClassification::Random),
        Ok(BitClassification::Definite(v)),
    ) = classes
    else {
        return Err(format!("machine classifications {classes:?}"));
    };
    let sim = simulate(
        &program,
        &UnknownAssignment::default(),
        OracleConfig::default(),
    )
    .map_err(|e| e.to_string())?;
    let (a, b) = (program.symbols["ma"].wire, program.symbols["mb"].wire);
    let (pa, pb) = (sim.marginal_one(a).unwrap(), sim.marginal_one(b).unwrap());
    let parity = sim.parity_one(&[a, b]).unwrap();
    let ok = (pa - 0.5).abs() <= 1e-10
        && (pb - 0.5).abs() <= 1e-10
        && (parity - f64::from(v)).abs() <= 1e-10;
    let secs = within(Duration::from_secs(1), start)?;
    let summary = format!("random, random, parity definite({v}); oracle P1 = {pa}, {pb}, P(parity=1) = {parity}, {secs:.3} s");
    if ok {
        Ok(summary)
    } else {
        Err(summary)
    }
}

fn a4_involutions_and_locality() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut applications = 0;
    let mut machines = 0;
    while applications < 1000 {
        machines += 1;
        let mut m = Machine::new();
        let n = rng.gen_range(2..=8);
        let wires: Vec<WireId> = (0..n)
            .map(|_| {
                m.alloc_qubit(if rng.gen_bool(0.3) {
                    Init::Unknown
                } else {
                    Init::Zero
                })
            })
            .collect();
        for _ in 0..40 {
            let gate = rng.gen_range(0..5);
            let a = wires[rng.gen_range(0..n)];
            let mut b = wires[rng.gen_range(0..n)];
            while b == a {
                b = wires[rng.gen_range(0..n)];
            }
            let touched: Vec<WireId> = if gate < 2 { vec![a] } else { vec![a, b] };
            let before = serde_json::to_vec(&m.state()).unwrap();
            let apply = |m: &mut Machine| -> Result<(), String> {
                match gate {
                    0 => m.apply_not(a),
                    1 => m.apply_hadamard(a),
                    2 => m.apply_cnot(a, b),
                    3 => m.apply_cz(a, b),
                    _ => m.apply_swap(a, b),
                }
                .map_err(|e| e.to_string())
            };
            apply(&mut m)?;
            applications += 1;
            for (old, new) in serde_json::from_slice::<hqc_core::machine::MachineState>(&before)
                .unwrap()
                .wires
                .iter()
                .zip(&m.state().wires)
            {
                if !touched.contains(&old.id)
                    && serde_json::to_vec(old).unwrap() != serde_json::to_vec(new).unwrap()
                {
                    return Err(format!("gate {gate} on {touched:?} changed {}", old.id));
                }
            }
            apply(&mut m)?;
            applications += 1;
            if serde_json::to_vec(&m.state()).unwrap() != before {
                return Err(format!("gate {gate} on {touched:?} is not an involution"));
            }
            // Occasionally keep one application so later gates see varied states.
            if rng.gen_bool(0.5) {
                apply(&mut m)?;
                applications += 1;
            }
        }
    }
    let secs = within(Duration::from_secs(10), start)?;
    Ok(format!(
        "{applications} gate applications on {machines} machines of 2-8 wires, {secs:.2} s"
    ))
}

const TELEPORT_RESOURCES: ResourceReport = ResourceReport {
    qubits_allocated: 3,
    bits_produced: 2,
    entangling_gates: 2,
    mixed_gates: 2,
    dependency_copies: 6,
    dependency_annihilations: 2,
    z_copies: 5,
    z_annihilations: 1,
    query_annihilations: 0,
    discards: 4,
    classical_transmissions: 2,
};

fn flow_checks(name: &str, trace: &Trace, final_state: &Machine) -> Result<(), String> {
    let g = build_flow_graph(trace).map_err(|e| format!("{name}: {e}"))?;
    let c = check_causality(&g);
    if !c.passed() {
        return Err(format!("{name}: {:?}", c.violations));
    }
    let cons = check_clone_annihilate_not_delete(trace).map_err(|e| format!("{name}: {e}"))?;
    if !cons.passed() {
        return Err(format!("{name}: {:?}", cons.violations));
    }
    let replayed = replay_final(&g).map_err(|e| format!("{name}: {e}"))?;
    for w in final_state.state().wires {
        for (slot, word) in [(Slot::X, &w.x), (Slot::Z, &w.z)] {
            if replayed.get(&SlotRef::new(w.id, slot)) != Some(&word.generator_set()) {
                return Err(format!("{name}: replay of {}.{slot} disagrees", w.id));
            }
        }
    }
    Ok(())
}

fn a5_flow_properties() -> Outcome {
    let start = Instant::now();
    let files = corpus();
    for path in &files {
        let run = execute(&load(path), Machine::new()).map_err(|e| e.to_string())?;
        flow_checks(
            &path.display().to_string(),
            &run.machine.export_trace(),
            &run.machine,
        )?;
    }
    let spec = RandomCircuitSpec {
        unknown_fraction: 0.3,
        ..Default::default()
    };
    for seed in 0..100 {
        let run =
            execute(&random_program(seed, spec), Machine::new()).map_err(|e| e.to_string())?;
        flow_checks(
            &format!("random {seed}"),
            &run.machine.export_trace(),
            &run.machine,
        )?;
    }

    let program = load(&root().join("corpus/teleport.hqc"));
    let run = execute(&program, Machine::new()).map_err(|e| e.to_string())?;
    let trace = run.machine.export_trace();
    let report = resource_report(&trace).map_err(|e| e.to_string())?;
    if report != TELEPORT_RESOURCES {
        return Err(format!("teleportation resources {report:?}"));
    }
    // Classical transmissions happen after Alice's last measurement and land on Bob's wire.
    let g = build_flow_graph(&trace).map_err(|e| e.to_string())?;
    let alice_done = trace
        .events
        .iter()
        .filter(|e| e.gate == "MEASZ")
        .map(|e| e.time)
        .max()
        .unwrap();
    let bob = run.wire(&program, "bob").unwrap();
    let transmits: Vec<_> = g
        .edges
        .iter()
        .filter(|e| e.kind == EdgeKind::Transmit)
        .collect();
    if transmits.len() != 2
        || transmits
            .iter()
            .any(|e| e.event <= alice_done || e.to.wire != bob)
    {
        return Err(format!("unexpected transmissions {transmits:?}"));
    }
    let secs = within(Duration::from_secs(10), start)?;
    Ok(format!(
        "{} corpus + 100 random traces acyclic, forward and reconciled; teleportation: {} qubits, {} bits, \
         {} entangling, {} mixed, {} transmissions; {secs:.2} s",
        files.len(),
        report.qubits_allocated,
        report.bits_produced,
        report.entangling_gates,
        report.mixed_gates,
        report.classical_transmissions
    ))
}

fn hqc(args: &[&str]) -> Result<(), String> {
    let status = Command::new(env!("CARGO_BIN_EXE_hqc"))
        .args(args)
        .stdout(std::process::Stdio::null())
        .status()
        .map_err(|e| e.to_string())?;
    if status.success() {
        Ok(())
    } else {
        Err(format!("hqc {} exited with {status}", args.join(" ")))
    }
}

fn a6_determinism() -> Outcome {
    let runs: Vec<tempfile::TempDir> = (0..2)
        .map(|_| tempfile::tempdir().expect("temp dir"))
        .collect();
    let files = corpus();
    for dir in &runs {
        let out = dir.path().to_str().unwrap();
        for f in &files {
            let f = f.to_str().unwrap();
            hqc(&["render", f, "--format", "text", "-o", out])?;
            hqc(&["render", f, "--format", "svg", "-o", out])?;
            hqc(&["analyze", f, "--format", "json", "-o", out])?;
            hqc(&["analyze", f, "--format", "dot", "-o", out])?;
        }
    }
    let mut names: Vec<_> = std::fs::read_dir(runs[0].path())
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    names.sort();
    let mut golden_matches = 0;
    for name in &names {
        let a = std::fs::read(runs[0].path().join(name)).unwrap();
        let b = std::fs::read(runs[1].path().join(name)).map_err(|e| format!("{name:?}: {e}"))?;
        if a != b {
            return Err(format!("{name:?} differs between runs"));
        }
        let golden = std::fs::read(root().join("corpus/golden").join(name))
            .map_err(|e| format!("{name:?}: {e}"))?;
        if golden != a {
            return Err(format!("{name:?} differs from its golden file"));
        }
        golden_matches += 1;
    }
    Ok(format!(
        "{} outputs byte-identical across two runs and equal to {golden_matches} golden files",
        names.len()
    ))
}

fn a7_reduction_stability() -> Outcome {
    let report = stability_study(1000);
    let path = root().join("reports/reduction_stability.json");
    let text = report.to_json();
    if std::env::var_os("HQC_BLESS").is_some() {
        std::fs::write(&path, &text).map_err(|e| e.to_string())?;
    }
    let committed =
        std::fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))?;
    if committed != text {
        return Err(
            "generated report differs from the committed reports/reduction_stability.json".into(),
        );
    }
    let parts: Vec<String> = report
        .variants
        .iter()
        .map(|(v, s)| {
            format!(
                "{v:?}: {}/{} trials with discrepancies",
                s.trials_with_discrepancy, s.trials
            )
        })
        .collect();
    Ok(format!(
        "report generated and matches the committed file; {} (documented, not asserted)",
        parts.join(", ")
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 7] = [
        ("A1", "oracle equivalence", a1_oracle_equivalence),
        ("A2", "teleportation", a2_teleportation),
        ("A3", "Bell annihilation", a3_bell_annihilation),
        (
            "A4",
            "gate involutions and locality",
            a4_involutions_and_locality,
        ),
        ("A5", "flow properties", a5_flow_properties),
        ("A6", "determinism", a6_determinism),
        ("A7", "reduction-stability report", a7_reduction_stability),
    ];
    let mut failed = 0;
    for (id, name, check) in criteria {
        match check() {
            Ok(detail) => println!("{id} {name}: PASS ({detail})"),
            Err(detail) => {
                failed += 1;
                println!("{id} {name}: FAIL ({detail})");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

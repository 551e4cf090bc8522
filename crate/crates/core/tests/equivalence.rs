use hqc_core::circuits::{random_program, RandomCircuitSpec};
use hqc_core::compare::{compare_program, DEFAULT_TOLERANCE};
use hqc_core::dsl::execute;
use hqc_core::machine::{BitClassification, Machine};
use hqc_core::oracle::{simulate, OracleConfig, UnknownAssignment};

#[test]
fn random_circuits_with_unknown_inputs_match_the_oracle() {
    let specs = [
        RandomCircuitSpec {
            unknown_fraction: 0.5,
            ..Default::default()
        },
        RandomCircuitSpec {
            unknown_fraction: 0.3,
            measure_weight: 3,
            max_wires: 7,
            max_depth: 80,
            ..Default::default()
        },
    ];
    for spec in specs {
        for seed in 0..300 {
            let program = random_program(seed, spec);
            let r = compare_program(
                "random",
                &program,
                seed,
                DEFAULT_TOLERANCE,
                OracleConfig::default(),
            )
            .unwrap();
            assert!(r.passed(DEFAULT_TOLERANCE), "seed {seed}: {}", r.to_json());
        }
    }
}

#[test]
fn definite_joint_parities_are_degenerate_in_the_oracle() {
    let spec = RandomCircuitSpec {
        measure_weight: 4,
        ..Default::default()
    };
    let mut definite = 0;
    for seed in 0..300 {
        let program = random_program(seed, spec);
        let run = execute(&program, Machine::new()).unwrap();
        let sim = simulate(
            &program,
            &UnknownAssignment::default(),
            OracleConfig::default(),
        )
        .unwrap();
        let bits: Vec<usize> = (0..run.wires.len())
            .filter(|&i| run.machine.bits().contains(&run.wires[i]))
            .collect();
        for (i, &a) in bits.iter().enumerate() {
            for &b in &bits[i + 1..] {
                let class = run
                    .machine
                    .joint_parity(&[run.wires[a], run.wires[b]])
                    .unwrap();
                let p1 = sim.parity_one(&[a, b]).unwrap();
                match class {
                    BitClassification::Definite(v) => {
                        definite += 1;
                        assert!(
                            (p1 - f64::from(v)).abs() <= DEFAULT_TOLERANCE,
                            "seed {seed}"
                        );
                    }
                    BitClassification::Random => {
                        assert!((p1 - 0.5).abs() <= DEFAULT_TOLERANCE, "seed {seed}")
                    }
                    BitClassification::Symbolic => unreachable!("no unknown inputs"),
                }
            }
        }
    }
    assert!(definite > 100);
}

/// Above the joint-density limit the comparison falls back to every one- and
/// two-qubit marginal; a wide entangled circuit with unknown inputs still agrees.
#[test]
fn wide_circuits_compare_through_marginals() {
    use hqc_core::compare::JOINT_DENSITY_LIMIT;
    use hqc_core::dsl::parse;

    let n = JOINT_DENSITY_LIMIT + 4;
    let mut source = String::from("q u0 = ?\nq u1 = ?\n");
    source.extend((2..n).map(|i| format!("q w{i} = 0\n")));
    source.push_str("H w2\nCNOT u0 w2\nCZ u1 w3\n");
    source.extend((3..n).map(|i| format!("CNOT w{} w{i}\n", i - 1)));
    source.push_str("b m = measx w5\nCNOT m w6\nH u1\n");
    let program = parse(&source).unwrap();
    for seed in 0..5 {
        let r = compare_program(
            "wide",
            &program,
            seed,
            DEFAULT_TOLERANCE,
            OracleConfig::default(),
        )
        .unwrap();
        assert!(r.passed(DEFAULT_TOLERANCE), "seed {seed}: {}", r.to_json());
    }
}

use hqc_core::circuits::{random_program, RandomCircuitSpec};
use hqc_core::dsl::execute;
use hqc_core::machine::{Machine, WireKind};
use hqc_core::pauli::readout_form;
use hqc_core::render::{layout, reconstruct, render_svg, render_text};

#[test]
fn glyphs_reproduce_the_final_readout() {
    let spec = RandomCircuitSpec {
        unknown_fraction: 0.3,
        ..Default::default()
    };
    for seed in 0..100 {
        let run = execute(&random_program(seed, spec), Machine::new()).unwrap();
        let trace = run.machine.export_trace();
        let model = layout(&trace).unwrap();
        let last = reconstruct(&model).pop().unwrap();
        let reference = run.machine.positions();
        for w in run.machine.state().wires {
            let (first, second) = &last[&w.id];
            match w.kind {
                WireKind::Qubit => {
                    assert_eq!(*first, readout_form(&w.x, reference), "seed {seed}");
                    assert_eq!(
                        second.as_ref().unwrap(),
                        &readout_form(&w.z, reference),
                        "seed {seed}"
                    );
                }
                WireKind::Bit => assert_eq!(*first, readout_form(&w.z, reference), "seed {seed}"),
            }
        }
        assert_eq!(render_text(&model), render_text(&layout(&trace).unwrap()));
        assert_eq!(render_svg(&model), render_svg(&layout(&trace).unwrap()));
    }
}

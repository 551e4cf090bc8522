use std::path::{Path, PathBuf};

use hqc_core::dsl::{execute, parse, Op};
use hqc_core::machine::Machine;
use hqc_core::protocols::{search_teleport_wiring, teleport_source};

fn corpus_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

fn corpus() -> Vec<(PathBuf, String)> {
    let mut files: Vec<_> = std::fs::read_dir(corpus_dir())
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "hqc"))
        .collect();
    files.sort();
    files
        .into_iter()
        .map(|p| (p.clone(), std::fs::read_to_string(p).unwrap()))
        .collect()
}

#[test]
fn every_corpus_program_passes_its_assertions() {
    let files = corpus();
    assert!(files.len() >= 3);
    for (path, text) in files {
        let program = parse(&text).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        let run = execute(&program, Machine::new()).unwrap();
        assert!(
            run.report.all_passed(),
            "{}: {:?}",
            path.display(),
            run.report.failures().collect::<Vec<_>>()
        );
    }
}

#[test]
fn corpus_programs_pretty_print_round_trip() {
    for (path, text) in corpus() {
        let program = parse(&text).unwrap();
        assert_eq!(
            parse(&program.pretty()).unwrap().ops().collect::<Vec<_>>(),
            program.ops().collect::<Vec<_>>(),
            "{}",
            path.display()
        );
    }
}

#[test]
fn teleport_file_is_the_searched_wiring() {
    let found = search_teleport_wiring(8, 1e-10);
    assert_eq!(found.len(), 1);
    let text = std::fs::read_to_string(corpus_dir().join("teleport.hqc")).unwrap();
    assert_eq!(text, teleport_source(found[0]));

    let program = parse(&text).unwrap();
    let ops: Vec<&Op> = program
        .ops()
        .filter(|o| !matches!(o, Op::Assert(_)))
        .collect();
    assert_eq!(ops.len(), 12);
    assert_eq!(
        ops.iter().filter(|o| matches!(o, Op::Alloc { .. })).count(),
        3
    );
    assert_eq!(
        ops.iter()
            .filter(|o| matches!(o, Op::Measure { .. }))
            .count(),
        2
    );
    assert_eq!(
        ops.iter().filter(|o| matches!(o, Op::Gate { .. })).count(),
        7
    );
}

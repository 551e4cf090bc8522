//! `hqc`: run, compare, render and analyze `.hqc` programs.
//!
//! Exit codes: 0 pass, 1 semantic failure (assertion, mismatch or check
//! violation), 2 input error (parse, I/O, malformed trace), 3 oracle cap.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;
use thiserror::Error;

use hqc_core::circuits::{random_program, RandomCircuitSpec};
use hqc_core::compare::{compare_program, CompareError, ComparisonReport, DEFAULT_TOLERANCE};
use hqc_core::dsl::{execute, parse, CircuitProgram, Op};
use hqc_core::flow::{
    build_flow_graph, check_causality, check_clone_annihilate_not_delete, resource_report, EdgeKind,
};
use hqc_core::machine::{Machine, Trace, WireKind};
use hqc_core::oracle::{OracleConfig, OracleError};
use hqc_core::render::{layout, render_svg, render_text};
use hqc_core::stability::stability_study;

#[derive(Parser)]
#[command(
    name = "hqc",
    version,
    about = "Descriptor-picture simulator for hybrid qubit/bit circuits"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute programs and report classifications and assertions.
    Run {
        files: Vec<PathBuf>,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Compare the descriptor machine with the state-vector oracle.
    Compare {
        files: Vec<PathBuf>,
        #[command(flatten)]
        oracle: OracleArgs,
        /// Number of consecutive seeds to try, starting at --seed.
        #[arg(long, default_value_t = 1)]
        trials: u64,
    },
    /// Compare seeded random circuits (Zero inputs) with the oracle.
    Suite {
        #[command(flatten)]
        oracle: OracleArgs,
        #[arg(long, default_value_t = 200)]
        circuits: u64,
    },
    /// Write triangle-notation diagrams.
    Render {
        files: Vec<PathBuf>,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
        #[arg(long, short = 'o')]
        out: Option<PathBuf>,
    },
    /// Flow graph, causality and conservation checks, resource counts.
    /// Accepts programs or exported JSON traces.
    Analyze {
        files: Vec<PathBuf>,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
        #[arg(long, short = 'o')]
        out: Option<PathBuf>,
    },
    /// Export the execution trace of a program as JSON.
    Trace {
        file: PathBuf,
        #[arg(long, short = 'o')]
        out: Option<PathBuf>,
    },
    /// Mid-circuit reduction study over seeded random circuits.
    Stability {
        #[arg(long, default_value_t = 1000)]
        trials: u64,
        #[arg(long, short = 'o')]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct OracleArgs {
    /// Seed for unknown-state assignments and random circuits.
    #[arg(long, env = "HQC_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = OracleConfig::default().max_wires)]
    max_wires: usize,
    #[arg(long, default_value_t = DEFAULT_TOLERANCE)]
    tolerance: f64,
}

impl OracleArgs {
    fn config(&self) -> OracleConfig {
        OracleConfig {
            max_wires: self.max_wires,
            ..OracleConfig::default()
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Dot,
    Svg,
    Text,
}

#[derive(Debug, Error)]
enum Failure {
    #[error("{0}")]
    Semantic(String),
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Cap(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Semantic(_) => 1,
            Failure::Input(_) => 2,
            Failure::Cap(_) => 3,
        }
    }
}

fn input(path: &Path, e: impl std::fmt::Display) -> Failure {
    Failure::Input(format!("{}: {e}", path.display()))
}

fn load(path: &Path) -> Result<CircuitProgram, Failure> {
    let src = fs::read_to_string(path).map_err(|e| input(path, e))?;
    parse(&src).map_err(|e| input(path, e))
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "out".into())
}

fn emit(out: Option<&Path>, name: &str, contents: &str) -> Result<(), Failure> {
    match out {
        None => {
            print!("{contents}");
            Ok(())
        }
        Some(dir) => {
            fs::create_dir_all(dir).map_err(|e| input(dir, e))?;
            let path = dir.join(name);
            fs::write(&path, contents).map_err(|e| input(&path, e))
        }
    }
}

fn trace_of(path: &Path) -> Result<Trace, Failure> {
    if path.extension().is_some_and(|e| e == "json") {
        let src = fs::read_to_string(path).map_err(|e| input(path, e))?;
        return Trace::from_json(&src).map_err(|e| input(path, e));
    }
    let program = load(path)?;
    let run = execute(&program, Machine::new()).map_err(|e| input(path, e))?;
    Ok(run.machine.export_trace())
}

fn require_files(files: &[PathBuf]) -> Result<(), Failure> {
    if files.is_empty() {
        return Err(Failure::Input("no input files".into()));
    }
    Ok(())
}

fn cmd_run(files: &[PathBuf], format: Format) -> Result<(), Failure> {
    require_files(files)?;
    let mut failed = 0;
    let mut reports = Vec::new();
    for path in files {
        let program = load(path)?;
        let run = execute(&program, Machine::new()).map_err(|e| input(path, e))?;
        // A measured wire answers to its old name and its result name.
        let mut names: BTreeMap<usize, Vec<&str>> = BTreeMap::new();
        for (name, sym) in &program.symbols {
            if sym.kind == WireKind::Bit {
                names.entry(sym.wire).or_default().push(name);
            }
        }
        let results: Vec<&str> = program
            .ops()
            .filter_map(|op| match op {
                Op::Measure { result, .. } => Some(result.as_str()),
                _ => None,
            })
            .collect();
        let mut bits = Vec::new();
        for (ordinal, mut aliases) in names {
            aliases.sort_by_key(|n| !results.contains(n));
            let class = run
                .machine
                .classify(run.wires[ordinal])
                .map_err(|e| input(path, e))?;
            bits.push((aliases.join(" = "), class.to_string()));
        }
        failed += run.report.failures().count();
        match format {
            Format::Json => reports.push(json!({
                "program": path.display().to_string(),
                "bits": bits.iter().map(|(n, c)| json!({"name": n, "classification": c})).collect::<Vec<_>>(),
                "assertions": run.report.results.iter().map(|r| json!({
                    "line": r.line, "statement": r.statement, "passed": r.passed, "observed": r.observed,
                })).collect::<Vec<_>>(),
                "passed": run.report.all_passed(),
            })),
            _ => {
                println!("{}", path.display());
                for (name, class) in &bits {
                    println!("  bit {name}: {class}");
                }
                for r in &run.report.results {
                    let verdict = if r.passed { "ok" } else { "FAILED" };
                    println!("  line {}: {} ... {verdict} ({})", r.line, r.statement, r.observed);
                }
            }
        }
    }
    if format == Format::Json {
        println!(
            "{}",
            serde_json::to_string_pretty(&reports).expect("reports serialize")
        );
    }
    if failed > 0 {
        return Err(Failure::Semantic(format!("{failed} assertion(s) failed")));
    }
    Ok(())
}

fn compare_failure(path: &str, e: CompareError) -> Failure {
    match e {
        CompareError::Oracle(
            e @ (OracleError::TooManyWires { .. } | OracleError::TooManyBranches { .. }),
        ) => Failure::Cap(format!("{path}: {e}")),
        e => Failure::Input(format!("{path}: {e}")),
    }
}

fn finish_compare(reports: &[ComparisonReport], tolerance: f64) -> Result<(), Failure> {
    println!(
        "{}",
        serde_json::to_string_pretty(reports).expect("reports serialize")
    );
    let failed = reports.iter().filter(|r| !r.passed(tolerance)).count();
    if failed > 0 {
        return Err(Failure::Semantic(format!("{failed} comparison(s) failed")));
    }
    Ok(())
}

fn cmd_compare(files: &[PathBuf], oracle: &OracleArgs, trials: u64) -> Result<(), Failure> {
    require_files(files)?;
    let mut reports = Vec::new();
    for path in files {
        let program = load(path)?;
        let name = path.display().to_string();
        for seed in oracle.seed..oracle.seed.saturating_add(trials) {
            let r = compare_program(&name, &program, seed, oracle.tolerance, oracle.config())
                .map_err(|e| compare_failure(&name, e))?;
            reports.push(r);
        }
    }
    finish_compare(&reports, oracle.tolerance)
}

fn cmd_suite(oracle: &OracleArgs, circuits: u64) -> Result<(), Failure> {
    let mut reports = Vec::new();
    for seed in oracle.seed..oracle.seed.saturating_add(circuits) {
        let program = random_program(seed, RandomCircuitSpec::default());
        let name = format!("random-{seed}");
        let r = compare_program(&name, &program, seed, oracle.tolerance, oracle.config())
            .map_err(|e| compare_failure(&name, e))?;
        reports.push(r);
    }
    finish_compare(&reports, oracle.tolerance)
}

fn cmd_render(files: &[PathBuf], format: Format, out: Option<&Path>) -> Result<(), Failure> {
    require_files(files)?;
    for path in files {
        let model = layout(&trace_of(path)?).map_err(|e| input(path, e))?;
        let (text, ext) = match format {
            Format::Svg => (render_svg(&model), "svg"),
            Format::Text => (render_text(&model), "txt"),
            _ => {
                return Err(Failure::Input(
                    "render supports --format text or svg".into(),
                ))
            }
        };
        emit(out, &format!("{}.{ext}", stem(path)), &text)?;
    }
    Ok(())
}

fn cmd_analyze(files: &[PathBuf], format: Format, out: Option<&Path>) -> Result<(), Failure> {
    require_files(files)?;
    let mut violations = 0;
    for path in files {
        let trace = trace_of(path)?;
        let graph = build_flow_graph(&trace).map_err(|e| input(path, e))?;
        let causality = check_causality(&graph);
        let conservation = check_clone_annihilate_not_delete(&trace).map_err(|e| input(path, e))?;
        let resources = resource_report(&trace).map_err(|e| input(path, e))?;
        violations += causality.violations.len()
            + usize::from(!causality.acyclic)
            + conservation.violations.len();
        let name = stem(path);
        match format {
            Format::Dot => emit(out, &format!("{name}.dot"), &graph.to_dot())?,
            Format::Json => {
                let count = |k: EdgeKind| graph.edges.iter().filter(|e| e.kind == k).count();
                let doc = json!({
                    "program": name,
                    "resources": resources,
                    "causality": causality,
                    "conservation": conservation,
                    "graph": {
                        "nodes": graph.nodes.len(),
                        "copy": count(EdgeKind::Copy),
                        "compose": count(EdgeKind::Compose),
                        "annihilate": count(EdgeKind::Annihilate),
                        "transmit": count(EdgeKind::Transmit),
                    },
                    "flow": graph,
                });
                let text = serde_json::to_string_pretty(&doc).expect("analysis serializes") + "\n";
                emit(out, &format!("{name}.analysis.json"), &text)?;
            }
            _ => {
                return Err(Failure::Input(
                    "analyze supports --format json or dot".into(),
                ))
            }
        }
    }
    if violations > 0 {
        return Err(Failure::Semantic(format!(
            "{violations} flow check violation(s)"
        )));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run { files, format } => cmd_run(files, *format),
        Command::Compare {
            files,
            oracle,
            trials,
        } => cmd_compare(files, oracle, *trials),
        Command::Suite { oracle, circuits } => cmd_suite(oracle, *circuits),
        Command::Render { files, format, out } => cmd_render(files, *format, out.as_deref()),
        Command::Analyze { files, format, out } => cmd_analyze(files, *format, out.as_deref()),
        Command::Trace { file, out } => trace_of(file).and_then(|t| {
            let text = t.to_json() + "\n";
            emit(out.as_deref(), &format!("{}.trace.json", stem(file)), &text)
        }),
        Command::Stability { trials, out } => {
            let report = stability_study(*trials);
            emit(
                out.as_deref(),
                "reduction_stability.json",
                &report.to_json(),
            )
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("hqc: {f}");
            ExitCode::from(f.code())
        }
    }
}

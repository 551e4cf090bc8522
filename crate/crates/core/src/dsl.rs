//! The `.hqc` circuit language.
//!
//! ```text
//! # Bell pair
//! q a = 0
//! q b = 0 @bob
//! H a
//! CNOT a b
//! b ma = measz a
//! b mb = measz b
//! assert joint_definite ma mb
//! ```
//!
//! One statement per line, `#` starts a comment. Allocations take an optional
//! `@site` tag used by flow analysis. A measured name becomes a bit and stays
//! addressable under both its old name and the result name.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::machine::{BitClassification, Init, Machine, MachineError, WireId, WireKind, WireMeta};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DslError {
    #[error("line {line}, column {col}: expected {expected}")]
    Syntax {
        line: usize,
        col: usize,
        expected: String,
    },
    #[error("line {line}, column {col}: {name} is a {found:?}, expected a {expected:?}")]
    Kind {
        line: usize,
        col: usize,
        name: String,
        expected: WireKind,
        found: WireKind,
    },
    #[error("line {line}, column {col}: {name} used before declaration")]
    UseBeforeDecl {
        line: usize,
        col: usize,
        name: String,
    },
    #[error("line {line}, column {col}: {name} already declared")]
    DuplicateName {
        line: usize,
        col: usize,
        name: String,
    },
}

impl DslError {
    pub fn line(&self) -> usize {
        match self {
            DslError::Syntax { line, .. }
            | DslError::Kind { line, .. }
            | DslError::UseBeforeDecl { line, .. }
            | DslError::DuplicateName { line, .. } => *line,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {error}")]
pub struct ExecError {
    pub line: usize,
    pub error: MachineError,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GateKind {
    Not,
    H,
    /// Phase flip, sugar for `H; NOT; H`.
    Z,
    Cnot,
    Cz,
    Swap,
}

impl GateKind {
    pub fn arity(self) -> usize {
        match self {
            GateKind::Not | GateKind::H | GateKind::Z => 1,
            GateKind::Cnot | GateKind::Cz | GateKind::Swap => 2,
        }
    }

    fn keyword(self) -> &'static str {
        match self {
            GateKind::Not => "NOT",
            GateKind::H => "H",
            GateKind::Z => "Z",
            GateKind::Cnot => "CNOT",
            GateKind::Cz => "CZ",
            GateKind::Swap => "SWAP",
        }
    }

    fn from_keyword(s: &str) -> Option<GateKind> {
        Some(match s {
            "NOT" => GateKind::Not,
            "H" => GateKind::H,
            "Z" => GateKind::Z,
            "CNOT" => GateKind::Cnot,
            "CZ" => GateKind::Cz,
            "SWAP" => GateKind::Swap,
            _ => return None,
        })
    }

    /// Operand kind requirement; `None` accepts bits and qubits.
    fn requires_qubits(self) -> bool {
        matches!(self, GateKind::H | GateKind::Z | GateKind::Swap)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Basis {
    Z,
    X,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Assertion {
    Definite { name: String, value: u8 },
    Random { name: String },
    JointDefinite { names: Vec<String> },
    Entangled { a: String, b: String },
    NotEntangled { a: String, b: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Op {
    Alloc {
        name: String,
        init: Init,
        site: Option<String>,
    },
    Gate {
        gate: GateKind,
        operands: Vec<String>,
    },
    Measure {
        target: String,
        basis: Basis,
        result: String,
    },
    Assert(Assertion),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stmt {
    pub line: usize,
    pub op: Op,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Symbol {
    /// Allocation ordinal of the wire the name refers to.
    pub wire: usize,
    /// Kind at the end of the program.
    pub kind: WireKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CircuitProgram {
    pub statements: Vec<Stmt>,
    pub symbols: BTreeMap<String, Symbol>,
}

/// Primitive operation over wire ordinals, after desugaring `Z` and `measx`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Prim {
    Alloc {
        wire: usize,
        init: Init,
        name: String,
        site: Option<String>,
    },
    Not(usize),
    H(usize),
    Cnot(usize, usize),
    Cz(usize, usize),
    Swap(usize, usize),
    MeasZ(usize),
    Assert(LoweredAssertion),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LoweredAssertion {
    Definite { wire: usize, value: u8 },
    Random { wire: usize },
    JointDefinite { wires: Vec<usize> },
    Entangled { a: usize, b: usize, expected: bool },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LoweredStmt {
    pub line: usize,
    pub prim: Prim,
    /// Source text of the statement the primitive came from.
    pub source: String,
}

impl CircuitProgram {
    pub fn ops(&self) -> impl Iterator<Item = &Op> {
        self.statements.iter().map(|s| &s.op)
    }

    pub fn wire_count(&self) -> usize {
        self.statements
            .iter()
            .filter(|s| matches!(s.op, Op::Alloc { .. }))
            .count()
    }

    /// Wire ordinals allocated with an unknown state, with their names.
    pub fn unknown_wires(&self) -> Vec<(usize, String)> {
        self.lower()
            .into_iter()
            .filter_map(|s| match s.prim {
                Prim::Alloc {
                    wire,
                    init: Init::Unknown,
                    name,
                    ..
                } => Some((wire, name)),
                _ => None,
            })
            .collect()
    }

    /// Desugars to primitives: `Z` → `H; NOT; H`, `measx` → `H; measz`.
    pub fn lower(&self) -> Vec<LoweredStmt> {
        let mut names: BTreeMap<&str, usize> = BTreeMap::new();
        let mut next = 0;
        let mut out = Vec::new();
        for stmt in &self.statements {
            let source = print_op(&stmt.op);
            let mut push = |prim| {
                out.push(LoweredStmt {
                    line: stmt.line,
                    prim,
                    source: source.clone(),
                })
            };
            let id = |n: &String| names[n.as_str()];
            match &stmt.op {
                Op::Alloc { name, init, site } => {
                    names.insert(name, next);
                    push(Prim::Alloc {
                        wire: next,
                        init: *init,
                        name: name.clone(),
                        site: site.clone(),
                    });
                    next += 1;
                }
                Op::Gate { gate, operands } => {
                    let a = id(&operands[0]);
                    match gate {
                        GateKind::Not => push(Prim::Not(a)),
                        GateKind::H => push(Prim::H(a)),
                        GateKind::Z => {
                            push(Prim::H(a));
                            push(Prim::Not(a));
                            push(Prim::H(a));
                        }
                        GateKind::Cnot => push(Prim::Cnot(a, id(&operands[1]))),
                        GateKind::Cz => push(Prim::Cz(a, id(&operands[1]))),
                        GateKind::Swap => push(Prim::Swap(a, id(&operands[1]))),
                    }
                }
                Op::Measure {
                    target,
                    basis,
                    result,
                } => {
                    let a = id(target);
                    if *basis == Basis::X {
                        push(Prim::H(a));
                    }
                    push(Prim::MeasZ(a));
                    names.insert(result, a);
                }
                Op::Assert(a) => push(Prim::Assert(match a {
                    Assertion::Definite { name, value } => LoweredAssertion::Definite {
                        wire: id(name),
                        value: *value,
                    },
                    Assertion::Random { name } => LoweredAssertion::Random { wire: id(name) },
                    Assertion::JointDefinite { names } => LoweredAssertion::JointDefinite {
                        wires: names.iter().map(&id).collect(),
                    },
                    Assertion::Entangled { a, b } => LoweredAssertion::Entangled {
                        a: id(a),
                        b: id(b),
                        expected: true,
                    },
                    Assertion::NotEntangled { a, b } => LoweredAssertion::Entangled {
                        a: id(a),
                        b: id(b),
                        expected: false,
                    },
                })),
            }
        }
        out
    }

    /// Canonical source text; reparses to a structurally equal program.
    pub fn pretty(&self) -> String {
        let mut s = String::new();
        for stmt in &self.statements {
            s.push_str(&print_op(&stmt.op));
            s.push('\n');
        }
        s
    }
}

impl fmt::Display for CircuitProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.pretty())
    }
}

fn print_op(op: &Op) -> String {
    match op {
        Op::Alloc { name, init, site } => {
            let v = match init {
                Init::Zero => "0",
                Init::Unknown => "?",
            };
            match site {
                Some(site) => format!("q {name} = {v} @{site}"),
                None => format!("q {name} = {v}"),
            }
        }
        Op::Gate { gate, operands } => format!("{} {}", gate.keyword(), operands.join(" ")),
        Op::Measure {
            target,
            basis,
            result,
        } => {
            let m = match basis {
                Basis::Z => "measz",
                Basis::X => "measx",
            };
            format!("b {result} = {m} {target}")
        }
        Op::Assert(a) => match a {
            Assertion::Definite { name, value } => format!("assert definite {name} {value}"),
            Assertion::Random { name } => format!("assert random {name}"),
            Assertion::JointDefinite { names } => {
                format!("assert joint_definite {}", names.join(" "))
            }
            Assertion::Entangled { a, b } => format!("assert entangled {a} {b}"),
            Assertion::NotEntangled { a, b } => format!("assert not_entangled {a} {b}"),
        },
    }
}

struct Token<'a> {
    text: &'a str,
    col: usize,
}

fn tokenize(line: &str) -> Vec<Token<'_>> {
    let code = match line.find('#') {
        Some(i) => &line[..i],
        None => line,
    };
    let mut tokens = Vec::new();
    let mut start: Option<usize> = None;
    for (i, ch) in code.char_indices() {
        if ch.is_whitespace() {
            if let Some(s) = start.take() {
                tokens.push(Token {
                    text: &code[s..i],
                    col: code[..s].chars().count() + 1,
                });
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        tokens.push(Token {
            text: &code[s..],
            col: code[..s].chars().count() + 1,
        });
    }
    tokens
}

fn is_ident(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

struct Parser {
    symbols: BTreeMap<String, Symbol>,
    kinds: Vec<WireKind>,
}

struct LineCursor<'a> {
    line: usize,
    tokens: Vec<Token<'a>>,
    pos: usize,
    /// Column just past the last token, for "expected more" errors.
    end_col: usize,
}

impl<'a> LineCursor<'a> {
    fn syntax(&self, col: usize, expected: &str) -> DslError {
        DslError::Syntax {
            line: self.line,
            col,
            expected: expected.to_string(),
        }
    }

    fn next(&mut self, expected: &str) -> Result<&Token<'a>, DslError> {
        let t = self
            .tokens
            .get(self.pos)
            .ok_or_else(|| self.syntax(self.end_col, expected))?;
        self.pos += 1;
        Ok(t)
    }

    fn keyword(&mut self, kw: &str) -> Result<(), DslError> {
        let expected = format!("`{kw}`");
        let t = self.next(&expected)?;
        if t.text != kw {
            let col = t.col;
            return Err(self.syntax(col, &expected));
        }
        Ok(())
    }

    fn ident(&mut self) -> Result<(&'a str, usize), DslError> {
        let t = self.next("a name")?;
        let (text, col) = (t.text, t.col);
        if !is_ident(text) {
            return Err(self.syntax(col, "a name"));
        }
        Ok((text, col))
    }

    fn finish(&self) -> Result<(), DslError> {
        match self.tokens.get(self.pos) {
            Some(t) => Err(self.syntax(t.col, "end of line")),
            None => Ok(()),
        }
    }

    fn peek(&self) -> Option<&Token<'a>> {
        self.tokens.get(self.pos)
    }
}

impl Parser {
    fn lookup(&self, line: usize, col: usize, name: &str) -> Result<&Symbol, DslError> {
        self.symbols
            .get(name)
            .ok_or_else(|| DslError::UseBeforeDecl {
                line,
                col,
                name: name.to_string(),
            })
    }

    fn expect_kind(
        &self,
        line: usize,
        col: usize,
        name: &str,
        expected: WireKind,
    ) -> Result<usize, DslError> {
        let sym = self.lookup(line, col, name)?;
        let found = self.kinds[sym.wire];
        if found != expected {
            return Err(DslError::Kind {
                line,
                col,
                name: name.to_string(),
                expected,
                found,
            });
        }
        Ok(sym.wire)
    }

    fn declare(
        &mut self,
        line: usize,
        col: usize,
        name: &str,
        wire: usize,
    ) -> Result<(), DslError> {
        if self.symbols.contains_key(name) {
            return Err(DslError::DuplicateName {
                line,
                col,
                name: name.to_string(),
            });
        }
        self.symbols.insert(
            name.to_string(),
            Symbol {
                wire,
                kind: self.kinds[wire],
            },
        );
        Ok(())
    }

    fn parse_line(&mut self, cur: &mut LineCursor<'_>) -> Result<Op, DslError> {
        let line = cur.line;
        let head = cur.next("a statement")?;
        let (head_text, head_col) = (head.text, head.col);
        let op = match head_text {
            "q" => {
                let (name, col) = cur.ident()?;
                cur.keyword("=")?;
                let t = cur.next("`0` or `?`")?;
                let init = match t.text {
                    "0" => Init::Zero,
                    "?" => Init::Unknown,
                    _ => {
                        let col = t.col;
                        return Err(cur.syntax(col, "`0` or `?`"));
                    }
                };
                let site = match cur.peek() {
                    Some(t) if t.text.starts_with('@') => {
                        let (text, col) = (t.text, t.col);
                        cur.pos += 1;
                        if !is_ident(&text[1..]) {
                            return Err(cur.syntax(col, "a site name after `@`"));
                        }
                        Some(text[1..].to_string())
                    }
                    _ => None,
                };
                cur.finish()?;
                let wire = self.kinds.len();
                self.kinds.push(WireKind::Qubit);
                self.declare(line, col, name, wire).inspect_err(|_| {
                    self.kinds.pop();
                })?;
                Op::Alloc {
                    name: name.to_string(),
                    init,
                    site,
                }
            }
            "b" => {
                let (result, rcol) = cur.ident()?;
                cur.keyword("=")?;
                let t = cur.next("`measz` or `measx`")?;
                let basis = match t.text {
                    "measz" => Basis::Z,
                    "measx" => Basis::X,
                    _ => {
                        let col = t.col;
                        return Err(cur.syntax(col, "`measz` or `measx`"));
                    }
                };
                let (target, tcol) = cur.ident()?;
                cur.finish()?;
                let wire = self.expect_kind(line, tcol, target, WireKind::Qubit)?;
                if result != target && self.symbols.contains_key(result) {
                    return Err(DslError::DuplicateName {
                        line,
                        col: rcol,
                        name: result.to_string(),
                    });
                }
                self.kinds[wire] = WireKind::Bit;
                for sym in self.symbols.values_mut().filter(|s| s.wire == wire) {
                    sym.kind = WireKind::Bit;
                }
                self.symbols.insert(
                    result.to_string(),
                    Symbol {
                        wire,
                        kind: WireKind::Bit,
                    },
                );
                Op::Measure {
                    target: target.to_string(),
                    basis,
                    result: result.to_string(),
                }
            }
            "assert" => {
                let t = cur.next("an assertion kind")?;
                let (kind, kcol) = (t.text, t.col);
                let assertion = match kind {
                    "definite" => {
                        let (name, col) = cur.ident()?;
                        let v = cur.next("`0` or `1`")?;
                        let value = match v.text {
                            "0" => 0,
                            "1" => 1,
                            _ => {
                                let col = v.col;
                                return Err(cur.syntax(col, "`0` or `1`"));
                            }
                        };
                        cur.finish()?;
                        self.expect_kind(line, col, name, WireKind::Bit)?;
                        Assertion::Definite {
                            name: name.to_string(),
                            value,
                        }
                    }
                    "random" => {
                        let (name, col) = cur.ident()?;
                        cur.finish()?;
                        self.expect_kind(line, col, name, WireKind::Bit)?;
                        Assertion::Random {
                            name: name.to_string(),
                        }
                    }
                    "joint_definite" => {
                        let mut names = Vec::new();
                        let (first, col) = cur.ident()?;
                        self.expect_kind(line, col, first, WireKind::Bit)?;
                        names.push(first.to_string());
                        while cur.peek().is_some() {
                            let (name, col) = cur.ident()?;
                            self.expect_kind(line, col, name, WireKind::Bit)?;
                            names.push(name.to_string());
                        }
                        Assertion::JointDefinite { names }
                    }
                    "entangled" | "not_entangled" => {
                        let (a, acol) = cur.ident()?;
                        let (b, bcol) = cur.ident()?;
                        cur.finish()?;
                        self.expect_kind(line, acol, a, WireKind::Qubit)?;
                        self.expect_kind(line, bcol, b, WireKind::Qubit)?;
                        let (a, b) = (a.to_string(), b.to_string());
                        if kind == "entangled" {
                            Assertion::Entangled { a, b }
                        } else {
                            Assertion::NotEntangled { a, b }
                        }
                    }
                    _ => return Err(cur.syntax(
                        kcol,
                        "`definite`, `random`, `joint_definite`, `entangled` or `not_entangled`",
                    )),
                };
                Op::Assert(assertion)
            }
            kw => {
                let gate = GateKind::from_keyword(kw).ok_or_else(|| {
                    cur.syntax(
                        head_col,
                        "`q`, `b`, `assert` or a gate (NOT, H, Z, CNOT, CZ, SWAP)",
                    )
                })?;
                let mut operands = Vec::new();
                let mut wires = Vec::new();
                for _ in 0..gate.arity() {
                    let (name, col) = cur.ident()?;
                    let wire = if gate.requires_qubits() {
                        self.expect_kind(line, col, name, WireKind::Qubit)?
                    } else {
                        self.lookup(line, col, name)?.wire
                    };
                    if wires.contains(&wire) {
                        return Err(cur.syntax(col, "a different wire"));
                    }
                    wires.push(wire);
                    operands.push(name.to_string());
                }
                cur.finish()?;
                Op::Gate { gate, operands }
            }
        };
        Ok(op)
    }
}

/// Parses a program, stopping at the first error.
pub fn parse(source: &str) -> Result<CircuitProgram, DslError> {
    let mut parser = Parser {
        symbols: BTreeMap::new(),
        kinds: Vec::new(),
    };
    let mut statements = Vec::new();
    for (i, raw) in source.split('\n').enumerate() {
        let line = i + 1;
        let text = raw.strip_suffix('\r').unwrap_or(raw);
        let tokens = tokenize(text);
        if tokens.is_empty() {
            continue;
        }
        let end_col = tokens
            .last()
            .map(|t| t.col + t.text.chars().count())
            .unwrap_or(1);
        let mut cur = LineCursor {
            line,
            tokens,
            pos: 0,
            end_col,
        };
        let op = parser.parse_line(&mut cur)?;
        statements.push(Stmt { line, op });
    }
    Ok(CircuitProgram {
        statements,
        symbols: parser.symbols,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AssertionResult {
    pub line: usize,
    pub statement: String,
    pub passed: bool,
    pub observed: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AssertionReport {
    pub results: Vec<AssertionResult>,
}

impl AssertionReport {
    pub fn all_passed(&self) -> bool {
        self.results.iter().all(|r| r.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &AssertionResult> {
        self.results.iter().filter(|r| !r.passed)
    }
}

/// Result of running a program: the machine, the wire id of every ordinal,
/// and the assertion report.
#[derive(Debug, Clone)]
pub struct Execution {
    pub machine: Machine,
    pub wires: Vec<WireId>,
    pub report: AssertionReport,
}

impl Execution {
    pub fn wire(&self, program: &CircuitProgram, name: &str) -> Option<WireId> {
        program.symbols.get(name).map(|s| self.wires[s.wire])
    }
}

/// Runs `program` on `machine`. Assertions are collected, never fatal.
pub fn execute(program: &CircuitProgram, machine: Machine) -> Result<Execution, ExecError> {
    execute_with_hook(program, machine, |_, _| {})
}

/// Like [`execute`], calling `hook(k, machine)` before the `k`-th lowered
/// statement and once more with `k` equal to the statement count.
pub fn execute_with_hook(
    program: &CircuitProgram,
    machine: Machine,
    mut hook: impl FnMut(usize, &mut Machine),
) -> Result<Execution, ExecError> {
    let mut m = machine;
    let mut wires: Vec<WireId> = Vec::new();
    let mut report = AssertionReport::default();
    let lowered = program.lower();
    let count = lowered.len();
    for (k, stmt) in lowered.into_iter().enumerate() {
        hook(k, &mut m);
        let at = |error| ExecError {
            line: stmt.line,
            error,
        };
        match &stmt.prim {
            Prim::Alloc {
                init, name, site, ..
            } => {
                let meta = WireMeta {
                    name: Some(name.clone()),
                    site: site.clone(),
                };
                wires.push(m.alloc_qubit_with(*init, meta));
            }
            Prim::Not(a) => m.apply_not(wires[*a]).map_err(at)?,
            Prim::H(a) => m.apply_hadamard(wires[*a]).map_err(at)?,
            Prim::Cnot(a, b) => m.apply_cnot(wires[*a], wires[*b]).map_err(at)?,
            Prim::Cz(a, b) => m.apply_cz(wires[*a], wires[*b]).map_err(at)?,
            Prim::Swap(a, b) => m.apply_swap(wires[*a], wires[*b]).map_err(at)?,
            Prim::MeasZ(a) => {
                m.measure_z(wires[*a]).map_err(at)?;
            }
            Prim::Assert(a) => {
                let (passed, observed) = match a {
                    LoweredAssertion::Definite { wire, value } => {
                        let c = m.classify(wires[*wire]).map_err(at)?;
                        (c == BitClassification::Definite(*value), c.to_string())
                    }
                    LoweredAssertion::Random { wire } => {
                        let c = m.classify(wires[*wire]).map_err(at)?;
                        (c == BitClassification::Random, c.to_string())
                    }
                    LoweredAssertion::JointDefinite { wires: ws } => {
                        let ids: Vec<WireId> = ws.iter().map(|w| wires[*w]).collect();
                        let c = m.record_joint_parity(&ids).map_err(at)?;
                        (matches!(c, BitClassification::Definite(_)), c.to_string())
                    }
                    LoweredAssertion::Entangled { a, b, expected } => {
                        let e = m.is_entangled(wires[*a], wires[*b]).map_err(at)?;
                        (
                            e == *expected,
                            if e {
                                "entangled".into()
                            } else {
                                "not entangled".into()
                            },
                        )
                    }
                };
                report.results.push(AssertionResult {
                    line: stmt.line,
                    statement: stmt.source.clone(),
                    passed,
                    observed,
                });
            }
        }
    }
    hook(count, &mut m);
    Ok(Execution {
        machine: m,
        wires,
        report,
    })
}

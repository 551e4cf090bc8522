//! Triangle-notation diagrams of a trace, as fixed-width text or SVG.
//!
//! Time runs left to right, one column per event. Every live wire has a cell
//! in every column showing its readout-form words after that event: a qubit
//! cell has an x lane and a z lane, a bit cell a single lane.
//!
//! Text glyphs, in canonical order (phase first, then by position):
//!
//! | glyph      | meaning                                        |
//! |------------|------------------------------------------------|
//! | `#`        | sign box, a `-1` phase                         |
//! | `i`        | imaginary phase                                |
//! | `^p`       | triangle: `X` at reference position `p`        |
//! | `?kL`      | rotation box: letter `L` at unknown input `k`  |
//! | `.`        | empty lane                                     |
//!
//! A qubit cell reads `[x-lane|z-lane]`, a bit cell `[lane]`; a trailing `*`
//! marks the wires the column's event acted on.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::machine::{EventKind, Init, Trace, WireId, WireKind};
use crate::pauli::{readout_form, Letter, PauliWord, Phase, Position, ReadoutForm};

pub const TEXT_HEADER: &str = "# hqc diagram 1";

/// Distinguishable colors, cycled by position index.
pub const PALETTE: [&str; 12] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
    "#bcbd22", "#17becf", "#003f5c", "#a05195",
];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RenderError {
    #[error("malformed trace at event {time}: {reason}")]
    MalformedTrace { time: u64, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Glyph {
    Sign,
    Imaginary,
    Triangle {
        position: Position,
    },
    Rotation {
        position: Position,
        symbol: usize,
        letter: Letter,
    },
}

impl Glyph {
    fn text(&self) -> String {
        match self {
            Glyph::Sign => "#".into(),
            Glyph::Imaginary => "i".into(),
            Glyph::Triangle { position } => format!("^{position}"),
            Glyph::Rotation { symbol, letter, .. } => {
                format!("?{symbol}{}", letter.to_string().to_lowercase())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Cell {
    Qubit { x: Vec<Glyph>, z: Vec<Glyph> },
    Bit { word: Vec<Glyph> },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lane {
    pub wire: WireId,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Column {
    pub time: u64,
    pub gate: String,
    pub wires: Vec<WireId>,
    pub cells: BTreeMap<WireId, Cell>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiagramModel {
    pub lanes: Vec<Lane>,
    pub columns: Vec<Column>,
    /// Rotation-box number of each unknown-input position.
    pub symbols: BTreeMap<Position, usize>,
}

/// Glyphs of one readout form in canonical order.
pub fn glyphs(form: &ReadoutForm, symbols: &BTreeMap<Position, usize>) -> Vec<Glyph> {
    let mut out = Vec::new();
    match form.phase {
        Phase::PlusOne => {}
        Phase::MinusOne => out.push(Glyph::Sign),
        Phase::PlusI => out.push(Glyph::Imaginary),
        Phase::MinusI => out.extend([Glyph::Sign, Glyph::Imaginary]),
    }
    let mut letters: BTreeMap<Position, Glyph> = form
        .x_support
        .iter()
        .map(|&p| (p, Glyph::Triangle { position: p }))
        .collect();
    for (&p, &letter) in &form.symbolic {
        let symbol = symbols.get(&p).copied().unwrap_or(0);
        letters.insert(
            p,
            Glyph::Rotation {
                position: p,
                symbol,
                letter,
            },
        );
    }
    out.extend(letters.into_values());
    out
}

/// Inverse of [`glyphs`].
pub fn readout_of(glyphs: &[Glyph]) -> ReadoutForm {
    let mut form = ReadoutForm {
        phase: Phase::PlusOne,
        x_support: BTreeSet::new(),
        symbolic: BTreeMap::new(),
    };
    for g in glyphs {
        match *g {
            Glyph::Sign => form.phase = -form.phase,
            Glyph::Imaginary => form.phase = form.phase * Phase::PlusI,
            Glyph::Triangle { position } => {
                form.x_support.insert(position);
            }
            Glyph::Rotation {
                position, letter, ..
            } => {
                form.symbolic.insert(position, letter);
            }
        }
    }
    form
}

/// One column per event; cells show every live wire after that event.
pub fn layout(trace: &Trace) -> Result<DiagramModel, RenderError> {
    let mut model = DiagramModel::default();
    for e in &trace.events {
        if let (EventKind::Alloc, Some(info)) = (e.kind, &e.alloc) {
            if info.init == Init::Unknown {
                let k = model.symbols.len() + 1;
                model.symbols.insert(info.position, k);
            }
        }
    }
    let symbols = model.symbols.clone();
    let reference = |p: Position| !symbols.contains_key(&p);
    let mut current: BTreeMap<WireId, (WireKind, PauliWord, PauliWord)> = BTreeMap::new();
    for e in &trace.events {
        if e.kind == EventKind::Alloc {
            let &[wire] = e.wires.as_slice() else {
                return Err(RenderError::MalformedTrace {
                    time: e.time,
                    reason: "allocation must name one wire".into(),
                });
            };
            let name = e
                .alloc
                .as_ref()
                .and_then(|a| a.name.clone())
                .unwrap_or_else(|| wire.to_string());
            model.lanes.push(Lane { wire, name });
        }
        for rec in &e.descriptors {
            current.insert(rec.wire, (rec.kind, rec.x.clone(), rec.z.clone()));
        }
        for w in &e.wires {
            if !current.contains_key(w) {
                return Err(RenderError::MalformedTrace {
                    time: e.time,
                    reason: format!("no descriptor for {w}"),
                });
            }
        }
        let cells = current
            .iter()
            .map(|(&w, (kind, x, z))| {
                let g = |word: &PauliWord| glyphs(&readout_form(word, &reference), &model.symbols);
                let cell = match kind {
                    WireKind::Qubit => Cell::Qubit { x: g(x), z: g(z) },
                    WireKind::Bit => Cell::Bit { word: g(z) },
                };
                (w, cell)
            })
            .collect();
        model.columns.push(Column {
            time: e.time,
            gate: e.gate.clone(),
            wires: e.wires.clone(),
            cells,
        });
    }
    Ok(model)
}

fn lane_text(g: &[Glyph]) -> String {
    if g.is_empty() {
        ".".into()
    } else {
        g.iter().map(Glyph::text).collect()
    }
}

fn cell_text(c: &Cell) -> String {
    match c {
        Cell::Qubit { x, z } => format!("[{}|{}]", lane_text(x), lane_text(z)),
        Cell::Bit { word } => format!("[{}]", lane_text(word)),
    }
}

pub fn render_text(model: &DiagramModel) -> String {
    let mut out = String::from(TEXT_HEADER);
    out.push('\n');
    if model.columns.is_empty() {
        return out;
    }
    let mut rows: Vec<Vec<String>> = vec![vec!["time".into()], vec!["gate".into()]];
    for lane in &model.lanes {
        rows.push(vec![lane.name.clone()]);
    }
    for col in &model.columns {
        rows[0].push(col.time.to_string());
        rows[1].push(col.gate.clone());
        for (i, lane) in model.lanes.iter().enumerate() {
            let mut s = col.cells.get(&lane.wire).map(cell_text).unwrap_or_default();
            if col.wires.contains(&lane.wire) {
                s.push('*');
            }
            rows[i + 2].push(s);
        }
    }
    let columns = rows[0].len();
    let widths: Vec<usize> = (0..columns)
        .map(|c| rows.iter().map(|r| r[c].len()).max().unwrap_or(0))
        .collect();
    for row in rows {
        let mut line = String::new();
        for (c, s) in row.iter().enumerate() {
            if c > 0 {
                line.push_str("  ");
            }
            write!(line, "{s:<w$}", w = widths[c]).expect("write to string");
        }
        out.push_str(line.trim_end());
        out.push('\n');
    }
    out
}

const GLYPH: i64 = 14;
const NAME_WIDTH: i64 = 80;
const TOP: i64 = 28;
const BAND: i64 = 48;

fn color(p: Position) -> &'static str {
    PALETTE[(p.0 as usize).saturating_sub(1) % PALETTE.len()]
}

fn column_width(col: &Column) -> i64 {
    let widest = col
        .cells
        .values()
        .map(|c| match c {
            Cell::Qubit { x, z } => x.len().max(z.len()),
            Cell::Bit { word } => word.len(),
        })
        .max()
        .unwrap_or(0) as i64;
    (GLYPH * widest + 24).max(56)
}

fn svg_glyph(out: &mut String, id: &str, g: &Glyph, x: i64, y: i64) {
    match *g {
        Glyph::Triangle { position } => {
            writeln!(
                out,
                "  <polygon id=\"{id}\" points=\"{},{} {},{} {},{}\" fill=\"{}\"/>",
                x,
                y + 5,
                x + 6,
                y - 6,
                x + 12,
                y + 5,
                color(position)
            )
        }
        Glyph::Sign => writeln!(out, "  <rect id=\"{id}\" x=\"{}\" y=\"{}\" width=\"10\" height=\"10\" fill=\"#000\"/>", x + 1, y - 5),
        Glyph::Imaginary => writeln!(
            out,
            "  <text id=\"{id}\" x=\"{}\" y=\"{}\" font-family=\"monospace\" font-size=\"12\">i</text>",
            x + 3,
            y + 4
        ),
        Glyph::Rotation { position, symbol, letter } => writeln!(
            out,
            "  <g id=\"{id}\"><rect x=\"{x}\" y=\"{}\" width=\"12\" height=\"12\" fill=\"none\" stroke=\"{}\"/>\
             <text x=\"{}\" y=\"{}\" font-family=\"monospace\" font-size=\"8\">{symbol}{}</text></g>",
            y - 6,
            color(position),
            x + 1,
            y + 3,
            letter.to_string().to_lowercase()
        ),
    }
    .expect("write to string");
}

/// SVG 1.1 rendering with deterministic element order and ids.
pub fn render_svg(model: &DiagramModel) -> String {
    let widths: Vec<i64> = model.columns.iter().map(column_width).collect();
    let width = NAME_WIDTH + widths.iter().sum::<i64>() + 16;
    let height = TOP + BAND * model.lanes.len() as i64 + 8;
    let band_of: BTreeMap<WireId, i64> = model
        .lanes
        .iter()
        .enumerate()
        .map(|(i, l)| (l.wire, TOP + BAND * i as i64))
        .collect();

    let mut out = String::new();
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{width}\" height=\"{height}\" \
         viewBox=\"0 0 {width} {height}\">"
    )
    .expect("write to string");
    out.push_str("  <rect width=\"100%\" height=\"100%\" fill=\"#fff\"/>\n");
    for lane in &model.lanes {
        let y = band_of[&lane.wire] + BAND / 2 + 4;
        writeln!(
            out,
            "  <text id=\"name-{}\" x=\"4\" y=\"{y}\" font-family=\"monospace\" font-size=\"12\">{}</text>",
            lane.wire, lane.name
        )
        .expect("write to string");
    }
    let mut x0 = NAME_WIDTH;
    for (col, w) in model.columns.iter().zip(&widths) {
        let t = col.time;
        writeln!(
            out,
            "  <text id=\"gate-{t}\" x=\"{}\" y=\"16\" font-family=\"monospace\" font-size=\"10\">{}</text>",
            x0 + 4,
            col.gate
        )
        .expect("write to string");
        for (&wire, cell) in &col.cells {
            let band = band_of[&wire];
            let (xl, zl, bl) = (band + 14, band + 34, band + 24);
            match cell {
                Cell::Qubit { x, z } => {
                    for (yy, slot, g) in [(xl, "x", x), (zl, "z", z)] {
                        writeln!(
                            out,
                            "  <line id=\"lane-{t}-{wire}-{slot}\" x1=\"{x0}\" y1=\"{yy}\" x2=\"{}\" y2=\"{yy}\" stroke=\"#bbb\"/>",
                            x0 + w
                        )
                        .expect("write to string");
                        for (k, glyph) in g.iter().enumerate() {
                            svg_glyph(
                                &mut out,
                                &format!("g-{t}-{wire}-{slot}-{k}"),
                                glyph,
                                x0 + 8 + GLYPH * k as i64,
                                yy,
                            );
                        }
                    }
                }
                Cell::Bit { word } => {
                    for (k, dy) in [-2, 2].into_iter().enumerate() {
                        writeln!(
                            out,
                            "  <line id=\"lane-{t}-{wire}-b{k}\" x1=\"{x0}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#bbb\"/>",
                            bl + dy,
                            x0 + w,
                            bl + dy
                        )
                        .expect("write to string");
                    }
                    for (k, glyph) in word.iter().enumerate() {
                        svg_glyph(
                            &mut out,
                            &format!("g-{t}-{wire}-b-{k}"),
                            glyph,
                            x0 + 8 + GLYPH * k as i64,
                            bl,
                        );
                    }
                }
            }
        }
        let ys: Vec<i64> = col
            .wires
            .iter()
            .filter_map(|w| band_of.get(w))
            .copied()
            .collect();
        if let (Some(lo), Some(hi)) = (ys.iter().min(), ys.iter().max()) {
            let xg = x0 + w - 4;
            writeln!(
                out,
                "  <line id=\"op-{t}\" x1=\"{xg}\" y1=\"{}\" x2=\"{xg}\" y2=\"{}\" stroke=\"#000\" stroke-width=\"2\"/>",
                lo + 8,
                hi + BAND - 8
            )
            .expect("write to string");
        }
        x0 += w;
    }
    out.push_str("</svg>\n");
    out
}

/// Readout forms recovered from the glyphs: `(x, z)` for qubits, `(word, None)` for bits.
pub fn reconstruct(
    model: &DiagramModel,
) -> Vec<BTreeMap<WireId, (ReadoutForm, Option<ReadoutForm>)>> {
    model
        .columns
        .iter()
        .map(|c| {
            c.cells
                .iter()
                .map(|(&w, cell)| {
                    let forms = match cell {
                        Cell::Qubit { x, z } => (readout_of(x), Some(readout_of(z))),
                        Cell::Bit { word } => (readout_of(word), None),
                    };
                    (w, forms)
                })
                .collect()
        })
        .collect()
}

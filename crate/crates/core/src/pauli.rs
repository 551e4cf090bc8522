//! Exact Pauli-word algebra.
//!
//! A [`PauliWord`] is a phase in `{+1, -1, +i, -i}` times a tensor product of
//! single-position Pauli letters. Positions are opaque generator indices handed
//! out by the machine; a position is either a reference-zero qubit (the fixed
//! Heisenberg state `|0>`) or a symbolic unknown.
//!
//! Words are stored sparsely and canonically (no identity letters, ordered by
//! position), so structural equality is operator equality.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::ops::{Mul, Neg};
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Errors raised by readout of Pauli words.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PauliError {
    #[error("cannot reduce {letter} at non-reference position {position}")]
    NonReferenceReduction { position: Position, letter: Letter },
    #[error("expectation requested over symbolic position {0}")]
    SymbolicExpectation(Position),
    #[error("expectation value {0} is not real")]
    PhaseNotReal(Phase),
    #[error("invalid Pauli word {input:?}: {reason}")]
    Parse { input: String, reason: String },
}

/// A generator index. Positions are allocated from 1 upwards.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Position(pub u32);

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// The fourth roots of unity, stored as an exponent of `i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Phase {
    PlusOne,
    PlusI,
    MinusOne,
    MinusI,
}

impl Phase {
    pub const ALL: [Phase; 4] = [Phase::PlusOne, Phase::PlusI, Phase::MinusOne, Phase::MinusI];

    pub fn from_exponent(k: u8) -> Phase {
        match k % 4 {
            0 => Phase::PlusOne,
            1 => Phase::PlusI,
            2 => Phase::MinusOne,
            _ => Phase::MinusI,
        }
    }

    /// Exponent `k` with `phase = i^k`.
    pub fn exponent(self) -> u8 {
        match self {
            Phase::PlusOne => 0,
            Phase::PlusI => 1,
            Phase::MinusOne => 2,
            Phase::MinusI => 3,
        }
    }

    pub fn conj(self) -> Phase {
        Phase::from_exponent(4 - self.exponent())
    }

    pub fn is_real(self) -> bool {
        matches!(self, Phase::PlusOne | Phase::MinusOne)
    }

    /// `+1` or `-1` for real phases.
    pub fn as_sign(self) -> Option<i8> {
        match self {
            Phase::PlusOne => Some(1),
            Phase::MinusOne => Some(-1),
            _ => None,
        }
    }

    pub fn to_complex(self) -> Complex64 {
        match self {
            Phase::PlusOne => Complex64::new(1.0, 0.0),
            Phase::PlusI => Complex64::new(0.0, 1.0),
            Phase::MinusOne => Complex64::new(-1.0, 0.0),
            Phase::MinusI => Complex64::new(0.0, -1.0),
        }
    }

    fn prefix(self) -> &'static str {
        match self {
            Phase::PlusOne => "",
            Phase::PlusI => "i",
            Phase::MinusOne => "-",
            Phase::MinusI => "-i",
        }
    }
}

impl Mul for Phase {
    type Output = Phase;
    // Phases are powers of i, so multiplying adds exponents.
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn mul(self, rhs: Phase) -> Phase {
        Phase::from_exponent(self.exponent() + rhs.exponent())
    }
}

impl Neg for Phase {
    type Output = Phase;
    fn neg(self) -> Phase {
        self * Phase::MinusOne
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Phase::PlusOne => "+1",
            Phase::PlusI => "+i",
            Phase::MinusOne => "-1",
            Phase::MinusI => "-i",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Letter {
    X,
    Y,
    Z,
}

impl Letter {
    pub fn has_x(self) -> bool {
        matches!(self, Letter::X | Letter::Y)
    }

    pub fn has_z(self) -> bool {
        matches!(self, Letter::Z | Letter::Y)
    }

    fn from_parts(x: bool, z: bool) -> Option<Letter> {
        match (x, z) {
            (false, false) => None,
            (true, false) => Some(Letter::X),
            (false, true) => Some(Letter::Z),
            (true, true) => Some(Letter::Y),
        }
    }

    /// Single-qubit product `self * rhs = phase * letter`.
    pub fn product(self, rhs: Letter) -> (Phase, Option<Letter>) {
        use Letter::*;
        match (self, rhs) {
            (X, X) | (Y, Y) | (Z, Z) => (Phase::PlusOne, None),
            (X, Y) => (Phase::PlusI, Some(Z)),
            (Y, X) => (Phase::MinusI, Some(Z)),
            (Y, Z) => (Phase::PlusI, Some(X)),
            (Z, Y) => (Phase::MinusI, Some(X)),
            (Z, X) => (Phase::PlusI, Some(Y)),
            (X, Z) => (Phase::MinusI, Some(Y)),
        }
    }
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Letter::X => "X",
            Letter::Y => "Y",
            Letter::Z => "Z",
        })
    }
}

/// The two independent generator types at a position: a Y letter carries both.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum GenKind {
    X,
    Z,
}

/// One generator occurrence: `X_p` or `Z_p`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Generator {
    pub position: Position,
    pub kind: GenKind,
}

impl fmt::Display for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let k = match self.kind {
            GenKind::X => "X",
            GenKind::Z => "Z",
        };
        write!(f, "{k}{}", self.position)
    }
}

/// Which positions sit in the reference `|0>` state.
pub trait ReferenceZero {
    fn is_reference_zero(&self, p: Position) -> bool;
}

impl ReferenceZero for BTreeSet<Position> {
    fn is_reference_zero(&self, p: Position) -> bool {
        self.contains(&p)
    }
}

impl ReferenceZero for HashSet<Position> {
    fn is_reference_zero(&self, p: Position) -> bool {
        self.contains(&p)
    }
}

impl<F: Fn(Position) -> bool> ReferenceZero for F {
    fn is_reference_zero(&self, p: Position) -> bool {
        self(p)
    }
}

/// Phase times a sparse tensor product of Pauli letters.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PauliWord {
    phase: Phase,
    letters: BTreeMap<Position, Letter>,
}

impl Default for PauliWord {
    fn default() -> Self {
        PauliWord::identity()
    }
}

impl PauliWord {
    pub fn identity() -> PauliWord {
        PauliWord {
            phase: Phase::PlusOne,
            letters: BTreeMap::new(),
        }
    }

    pub fn single(position: Position, letter: Letter) -> PauliWord {
        let mut letters = BTreeMap::new();
        letters.insert(position, letter);
        PauliWord {
            phase: Phase::PlusOne,
            letters,
        }
    }

    pub fn x(p: u32) -> PauliWord {
        PauliWord::single(Position(p), Letter::X)
    }

    pub fn z(p: u32) -> PauliWord {
        PauliWord::single(Position(p), Letter::Z)
    }

    pub fn y(p: u32) -> PauliWord {
        PauliWord::single(Position(p), Letter::Y)
    }

    /// Builds a word from letters, dropping nothing: callers pass non-identity letters.
    pub fn from_letters<I>(phase: Phase, letters: I) -> PauliWord
    where
        I: IntoIterator<Item = (Position, Letter)>,
    {
        let mut w = PauliWord {
            phase,
            letters: BTreeMap::new(),
        };
        for (p, l) in letters {
            w = w * PauliWord::single(p, l);
        }
        w
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn letters(&self) -> &BTreeMap<Position, Letter> {
        &self.letters
    }

    pub fn letter(&self, p: Position) -> Option<Letter> {
        self.letters.get(&p).copied()
    }

    pub fn is_identity(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn weight(&self) -> usize {
        self.letters.len()
    }

    pub fn with_phase(mut self, phase: Phase) -> PauliWord {
        self.phase = phase;
        self
    }

    pub fn times_phase(mut self, phase: Phase) -> PauliWord {
        self.phase = self.phase * phase;
        self
    }

    /// Group inverse: letters are self-inverse, so only the phase conjugates.
    pub fn inverse(&self) -> PauliWord {
        PauliWord {
            phase: self.phase.conj(),
            letters: self.letters.clone(),
        }
    }

    pub fn positions(&self) -> impl Iterator<Item = Position> + '_ {
        self.letters.keys().copied()
    }

    /// Generator occurrences in position order, X before Z at a Y.
    pub fn generators(&self) -> impl Iterator<Item = Generator> + '_ {
        self.letters.iter().flat_map(|(&position, &l)| {
            let x = l.has_x().then_some(Generator {
                position,
                kind: GenKind::X,
            });
            let z = l.has_z().then_some(Generator {
                position,
                kind: GenKind::Z,
            });
            x.into_iter().chain(z)
        })
    }

    pub fn generator_set(&self) -> BTreeSet<Generator> {
        self.generators().collect()
    }

    /// True when the two words commute as operators.
    pub fn commutes_with(&self, other: &PauliWord) -> bool {
        let anti = self
            .letters
            .iter()
            .filter(|(p, l)| matches!(other.letters.get(p), Some(m) if m != *l))
            .count();
        anti % 2 == 0
    }

    /// Hermitian words have a real phase in letter form.
    pub fn is_hermitian(&self) -> bool {
        self.phase.is_real()
    }
}

/// Group product `a · b`.
pub fn word_mul(a: &PauliWord, b: &PauliWord) -> PauliWord {
    let mut phase = a.phase * b.phase;
    let mut letters = a.letters.clone();
    for (&p, &lb) in &b.letters {
        match letters.get(&p).copied() {
            None => {
                letters.insert(p, lb);
            }
            Some(la) => {
                let (ph, l) = la.product(lb);
                phase = phase * ph;
                match l {
                    Some(l) => {
                        letters.insert(p, l);
                    }
                    None => {
                        letters.remove(&p);
                    }
                }
            }
        }
    }
    PauliWord { phase, letters }
}

impl Mul for PauliWord {
    type Output = PauliWord;
    fn mul(self, rhs: PauliWord) -> PauliWord {
        word_mul(&self, &rhs)
    }
}

impl<'a> Mul<&'a PauliWord> for &'a PauliWord {
    type Output = PauliWord;
    fn mul(self, rhs: &'a PauliWord) -> PauliWord {
        word_mul(self, rhs)
    }
}

impl Neg for PauliWord {
    type Output = PauliWord;
    fn neg(mut self) -> PauliWord {
        self.phase = -self.phase;
        self
    }
}

/// Readout form of a word over reference positions: a phase and the set of
/// positions still carrying an X-type factor.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ReducedWord {
    pub phase: Phase,
    pub x_support: BTreeSet<Position>,
}

/// Reduces `w` for readout: on reference-zero positions Z is dropped and
/// `Y = i·X·Z` folds to `X` with the `i` moved into the phase. X letters on
/// symbolic positions pass through into `x_support`.
pub fn reduce<R: ReferenceZero + ?Sized>(
    w: &PauliWord,
    reference: &R,
) -> Result<ReducedWord, PauliError> {
    let mut phase = w.phase;
    let mut x_support = BTreeSet::new();
    for (&p, &l) in &w.letters {
        let is_ref = reference.is_reference_zero(p);
        match l {
            Letter::X => {
                x_support.insert(p);
            }
            Letter::Z | Letter::Y if !is_ref => {
                return Err(PauliError::NonReferenceReduction {
                    position: p,
                    letter: l,
                });
            }
            Letter::Z => {}
            Letter::Y => {
                phase = phase * Phase::PlusI;
                x_support.insert(p);
            }
        }
    }
    Ok(ReducedWord { phase, x_support })
}

/// Readout form that never fails: reference positions reduce as in
/// [`reduce`], symbolic positions keep their letters verbatim.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ReadoutForm {
    pub phase: Phase,
    pub x_support: BTreeSet<Position>,
    pub symbolic: BTreeMap<Position, Letter>,
}

pub fn readout_form<R: ReferenceZero + ?Sized>(w: &PauliWord, reference: &R) -> ReadoutForm {
    let mut phase = w.phase;
    let mut x_support = BTreeSet::new();
    let mut symbolic = BTreeMap::new();
    for (&p, &l) in &w.letters {
        if !reference.is_reference_zero(p) {
            symbolic.insert(p, l);
            continue;
        }
        match l {
            Letter::X => {
                x_support.insert(p);
            }
            Letter::Z => {}
            Letter::Y => {
                phase = phase * Phase::PlusI;
                x_support.insert(p);
            }
        }
    }
    ReadoutForm {
        phase,
        x_support,
        symbolic,
    }
}

/// `<0...0| w |0...0>` over reference positions: 0, +1 or -1.
pub fn expectation<R: ReferenceZero + ?Sized>(
    w: &PauliWord,
    reference: &R,
) -> Result<i8, PauliError> {
    if let Some(p) = w.positions().find(|&p| !reference.is_reference_zero(p)) {
        return Err(PauliError::SymbolicExpectation(p));
    }
    if w.letters.values().any(|l| l.has_x()) {
        return Ok(0);
    }
    w.phase.as_sign().ok_or(PauliError::PhaseNotReal(w.phase))
}

/// Expectation with every position in a product state described by its Bloch
/// vector `(<X>, <Y>, <Z>)`. Reference-zero positions are `(0, 0, 1)`.
pub fn concrete_expectation<F>(w: &PauliWord, bloch: F) -> Complex64
where
    F: Fn(Position) -> [f64; 3],
{
    let mut value = w.phase.to_complex();
    for (&p, &l) in &w.letters {
        let b = bloch(p);
        let factor = match l {
            Letter::X => b[0],
            Letter::Y => b[1],
            Letter::Z => b[2],
        };
        if factor == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        value *= factor;
    }
    value
}

impl fmt::Display for PauliWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.phase.prefix())?;
        if self.letters.is_empty() {
            return f.write_str("I");
        }
        for (i, (p, l)) in self.letters.iter().enumerate() {
            if i > 0 {
                f.write_str(".")?;
            }
            write!(f, "{l}{p}")?;
        }
        Ok(())
    }
}

impl FromStr for PauliWord {
    type Err = PauliError;

    fn from_str(s: &str) -> Result<PauliWord, PauliError> {
        let err = |reason: &str| PauliError::Parse {
            input: s.to_string(),
            reason: reason.to_string(),
        };
        let (phase, body) = if let Some(rest) = s.strip_prefix("-i") {
            (Phase::MinusI, rest)
        } else if let Some(rest) = s.strip_prefix('-') {
            (Phase::MinusOne, rest)
        } else if let Some(rest) = s.strip_prefix('i') {
            (Phase::PlusI, rest)
        } else if let Some(rest) = s.strip_prefix('+') {
            (Phase::PlusOne, rest)
        } else {
            (Phase::PlusOne, s)
        };
        if body == "I" {
            return Ok(PauliWord::identity().with_phase(phase));
        }
        if body.is_empty() {
            return Err(err("missing letters"));
        }
        let mut letters = BTreeMap::new();
        let mut last: Option<Position> = None;
        for part in body.split('.') {
            let mut chars = part.chars();
            let letter = match chars.next() {
                Some('X') => Letter::X,
                Some('Y') => Letter::Y,
                Some('Z') => Letter::Z,
                _ => return Err(err("expected X, Y or Z")),
            };
            let digits = chars.as_str();
            if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
                return Err(err("expected a position subscript"));
            }
            if digits.len() > 1 && digits.starts_with('0') {
                return Err(err("leading zero in position"));
            }
            let p = Position(digits.parse().map_err(|_| err("position out of range"))?);
            if last.is_some_and(|q| q >= p) {
                return Err(err("positions must be strictly increasing"));
            }
            last = Some(p);
            letters.insert(p, letter);
        }
        Ok(PauliWord { phase, letters })
    }
}

impl Serialize for PauliWord {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for PauliWord {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<PauliWord, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Builds a letter map from two generator bit-sets; used by tests and the flow replay.
pub fn word_from_generators(phase: Phase, gens: &BTreeSet<Generator>) -> PauliWord {
    let mut parts: BTreeMap<Position, (bool, bool)> = BTreeMap::new();
    for g in gens {
        let e = parts.entry(g.position).or_default();
        match g.kind {
            GenKind::X => e.0 = true,
            GenKind::Z => e.1 = true,
        }
    }
    let letters = parts
        .into_iter()
        .filter_map(|(p, (x, z))| Letter::from_parts(x, z).map(|l| (p, l)))
        .collect();
    PauliWord { phase, letters }
}

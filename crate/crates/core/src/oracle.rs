//! Brute-force Schrödinger-picture ground truth.
//!
//! Amplitude index bit `n-1-w` holds wire ordinal `w`, so wire 0 is the most
//! significant tensor factor (the same convention as density export).
//!
//! Measurements are not sampled: every outcome record with non-zero
//! probability becomes a [`Branch`] with its own normalized state vector and
//! classical bit values. Branches with equal bits and equal states (up to a
//! global phase) are merged.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dsl::{CircuitProgram, Prim};
use crate::machine::{Init, WireKind};
use crate::matrix::CMatrix;

pub const DEFAULT_MAX_WIRES: usize = 14;
pub const DEFAULT_MAX_BRANCHES: usize = 1 << 20;

const PRUNE_EPS: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("program has {wires} wires, the oracle cap is {cap}")]
    TooManyWires { wires: usize, cap: usize },
    #[error("more than {cap} outcome branches")]
    TooManyBranches { cap: usize },
    #[error("no state assigned to unknown wire {0}")]
    MissingAssignment(String),
    #[error("wire {0} is not a qubit of this state")]
    BadWire(usize),
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleConfig {
    pub max_wires: usize,
    pub max_branches: usize,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            max_wires: DEFAULT_MAX_WIRES,
            max_branches: DEFAULT_MAX_BRANCHES,
        }
    }
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn hadamard() -> CMatrix {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    CMatrix::from_real(&[&[h, h], &[h, -h]])
}

pub fn not_gate() -> CMatrix {
    CMatrix::from_real(&[&[0.0, 1.0], &[1.0, 0.0]])
}

pub fn z_gate() -> CMatrix {
    CMatrix::from_real(&[&[1.0, 0.0], &[0.0, -1.0]])
}

/// Control is the first (more significant) operand.
pub fn cnot_gate() -> CMatrix {
    CMatrix::from_real(&[
        &[1.0, 0.0, 0.0, 0.0],
        &[0.0, 1.0, 0.0, 0.0],
        &[0.0, 0.0, 0.0, 1.0],
        &[0.0, 0.0, 1.0, 0.0],
    ])
}

pub fn cz_gate() -> CMatrix {
    CMatrix::from_real(&[
        &[1.0, 0.0, 0.0, 0.0],
        &[0.0, 1.0, 0.0, 0.0],
        &[0.0, 0.0, 1.0, 0.0],
        &[0.0, 0.0, 0.0, -1.0],
    ])
}

pub fn swap_gate() -> CMatrix {
    CMatrix::from_real(&[
        &[1.0, 0.0, 0.0, 0.0],
        &[0.0, 0.0, 1.0, 0.0],
        &[0.0, 1.0, 0.0, 0.0],
        &[0.0, 0.0, 0.0, 1.0],
    ])
}

/// Largest `|U†U − I|` entry over the gate set.
pub fn gate_unitarity_error() -> f64 {
    [
        hadamard(),
        not_gate(),
        z_gate(),
        cnot_gate(),
        cz_gate(),
        swap_gate(),
    ]
    .iter()
    .map(|u| (&u.adjoint() * u).max_abs_diff(&CMatrix::identity(u.dim())))
    .fold(0.0, f64::max)
}

fn check_gates_once() {
    static CHECKED: OnceLock<()> = OnceLock::new();
    CHECKED.get_or_init(|| {
        let err = gate_unitarity_error();
        assert!(
            err <= 1e-12,
            "oracle gate matrices are not unitary (error {err})"
        );
    });
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    pub fn zero(n: usize) -> StateVector {
        let mut amps = vec![c(0.0, 0.0); 1 << n];
        amps[0] = c(1.0, 0.0);
        StateVector { n, amps }
    }

    pub fn from_amplitudes(amps: Vec<Complex64>) -> StateVector {
        assert!(
            amps.len().is_power_of_two(),
            "length must be a power of two"
        );
        let n = amps.len().trailing_zeros() as usize;
        StateVector { n, amps }
    }

    pub fn wires(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    fn mask(&self, wire: usize) -> usize {
        1 << (self.n - 1 - wire)
    }

    pub fn apply_1q(&mut self, u: &CMatrix, wire: usize) {
        let m = self.mask(wire);
        for i in 0..self.amps.len() {
            if i & m == 0 {
                let (a0, a1) = (self.amps[i], self.amps[i | m]);
                self.amps[i] = u[(0, 0)] * a0 + u[(0, 1)] * a1;
                self.amps[i | m] = u[(1, 0)] * a0 + u[(1, 1)] * a1;
            }
        }
    }

    /// Applies a 4×4 matrix with `a` as the more significant operand.
    pub fn apply_2q(&mut self, u: &CMatrix, a: usize, b: usize) {
        assert_ne!(a, b, "two-qubit gate on one wire");
        let (ma, mb) = (self.mask(a), self.mask(b));
        for i in 0..self.amps.len() {
            if i & ma == 0 && i & mb == 0 {
                let idx = [i, i | mb, i | ma, i | ma | mb];
                let old = idx.map(|j| self.amps[j]);
                for (r, &j) in idx.iter().enumerate() {
                    self.amps[j] = (0..4).map(|k| u[(r, k)] * old[k]).sum();
                }
            }
        }
    }

    /// Probability that `wire` reads 1.
    pub fn prob_one(&self, wire: usize) -> f64 {
        let m = self.mask(wire);
        self.amps
            .iter()
            .enumerate()
            .filter(|(i, _)| i & m != 0)
            .map(|(_, a)| a.norm_sqr())
            .sum()
    }

    /// Projects `wire` onto `value` and renormalizes; returns the probability.
    fn project(&mut self, wire: usize, value: u8) -> f64 {
        let m = self.mask(wire);
        let want = if value == 1 { m } else { 0 };
        let mut p = 0.0;
        for (i, a) in self.amps.iter_mut().enumerate() {
            if i & m != want {
                *a = c(0.0, 0.0);
            } else {
                p += a.norm_sqr();
            }
        }
        if p > 0.0 {
            let s = 1.0 / p.sqrt();
            for a in &mut self.amps {
                *a *= s;
            }
        }
        p
    }

    /// `|<self|other>|²`.
    pub fn overlap(&self, other: &StateVector) -> f64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum::<Complex64>()
            .norm_sqr()
    }
}

/// Partial trace keeping `keep` (in the listed order, first most significant).
pub fn reduced_density(sv: &StateVector, keep: &[usize]) -> Result<CMatrix, OracleError> {
    if keep.is_empty() {
        return Err(OracleError::BadWire(usize::MAX));
    }
    for (i, &w) in keep.iter().enumerate() {
        if w >= sv.n || keep[..i].contains(&w) {
            return Err(OracleError::BadWire(w));
        }
    }
    let k = keep.len();
    let mut rho = CMatrix::zeros(1 << k);
    let keep_mask: usize = keep.iter().map(|&w| sv.mask(w)).sum();
    let sub = |i: usize| -> usize {
        keep.iter()
            .fold(0, |acc, &w| (acc << 1) | usize::from(i & sv.mask(w) != 0))
    };
    // Group basis states by the traced-out bits.
    let mut groups: BTreeMap<usize, Vec<(usize, Complex64)>> = BTreeMap::new();
    for (i, &a) in sv.amps.iter().enumerate() {
        if a.norm_sqr() == 0.0 {
            continue;
        }
        groups.entry(i & !keep_mask).or_default().push((sub(i), a));
    }
    for entries in groups.values() {
        for &(r, ar) in entries {
            for &(col, ac) in entries {
                rho[(r, col)] += ar * ac.conj();
            }
        }
    }
    Ok(rho)
}

/// Max entrywise difference of two equally sized matrices.
pub fn compare(machine_export: &CMatrix, oracle: &CMatrix) -> Result<f64, OracleError> {
    if machine_export.dim() != oracle.dim() {
        return Err(OracleError::DimensionMismatch(
            machine_export.dim(),
            oracle.dim(),
        ));
    }
    Ok(machine_export.max_abs_diff(oracle))
}

/// Concrete states for the program's unknown wires, by wire name.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct UnknownAssignment {
    pub states: BTreeMap<String, [[f64; 2]; 2]>,
}

impl UnknownAssignment {
    pub fn insert(&mut self, name: &str, alpha: Complex64, beta: Complex64) {
        let n = (alpha.norm_sqr() + beta.norm_sqr()).sqrt();
        let (alpha, beta) = (alpha / n, beta / n);
        self.states
            .insert(name.to_string(), [[alpha.re, alpha.im], [beta.re, beta.im]]);
    }

    pub fn get(&self, name: &str) -> Option<(Complex64, Complex64)> {
        self.states
            .get(name)
            .map(|[a, b]| (c(a[0], a[1]), c(b[0], b[1])))
    }

    /// Seeded uniform points on the Bloch sphere for every unknown wire.
    pub fn seeded(program: &CircuitProgram, seed: u64) -> UnknownAssignment {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut a = UnknownAssignment::default();
        for (_, name) in program.unknown_wires() {
            let (alpha, beta) = random_qubit(&mut rng);
            a.insert(&name, alpha, beta);
        }
        a
    }

    /// Bloch vector `(<X>, <Y>, <Z>)` of a named state.
    pub fn bloch(&self, name: &str) -> Option<[f64; 3]> {
        self.get(name).map(|(a, b)| bloch_vector(a, b))
    }
}

pub fn bloch_vector(alpha: Complex64, beta: Complex64) -> [f64; 3] {
    let ab = alpha.conj() * beta;
    [2.0 * ab.re, 2.0 * ab.im, alpha.norm_sqr() - beta.norm_sqr()]
}

pub fn random_qubit<R: Rng>(rng: &mut R) -> (Complex64, Complex64) {
    let cos_theta: f64 = rng.gen_range(-1.0..=1.0);
    let phi: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
    let half = cos_theta.acos() / 2.0;
    (c(half.cos(), 0.0), Complex64::from_polar(half.sin(), phi))
}

#[derive(Debug, Clone)]
pub struct Branch {
    pub probability: f64,
    pub state: StateVector,
    /// Classical value per wire ordinal; `None` while the wire is a qubit.
    pub bits: Vec<Option<u8>>,
}

#[derive(Debug, Clone)]
pub struct Simulation {
    pub branches: Vec<Branch>,
    pub kinds: Vec<WireKind>,
}

impl Simulation {
    pub fn live_qubits(&self) -> Vec<usize> {
        (0..self.kinds.len())
            .filter(|&w| self.kinds[w] == WireKind::Qubit)
            .collect()
    }

    /// Mixture density over the kept qubits.
    pub fn density(&self, keep: &[usize]) -> Result<CMatrix, OracleError> {
        for &w in keep {
            if self.kinds.get(w) != Some(&WireKind::Qubit) {
                return Err(OracleError::BadWire(w));
            }
        }
        let mut rho = CMatrix::zeros(1 << keep.len());
        for b in &self.branches {
            let r = reduced_density(&b.state, keep)?;
            rho = &rho + &r.scale(c(b.probability, 0.0));
        }
        Ok(rho)
    }

    /// Probability that bit `wire` reads 1.
    pub fn marginal_one(&self, wire: usize) -> Result<f64, OracleError> {
        self.parity_one(&[wire])
    }

    /// Probability that the XOR of the bits is 1.
    pub fn parity_one(&self, wires: &[usize]) -> Result<f64, OracleError> {
        let mut p = 0.0;
        for b in &self.branches {
            let mut v = 0u8;
            for &w in wires {
                v ^= b
                    .bits
                    .get(w)
                    .copied()
                    .flatten()
                    .ok_or(OracleError::BadWire(w))?;
            }
            if v == 1 {
                p += b.probability;
            }
        }
        Ok(p)
    }

    /// Joint distribution of the listed bits.
    pub fn outcome_distribution(
        &self,
        wires: &[usize],
    ) -> Result<BTreeMap<Vec<u8>, f64>, OracleError> {
        let mut dist = BTreeMap::new();
        for b in &self.branches {
            let key = wires
                .iter()
                .map(|&w| {
                    b.bits
                        .get(w)
                        .copied()
                        .flatten()
                        .ok_or(OracleError::BadWire(w))
                })
                .collect::<Result<Vec<u8>, _>>()?;
            *dist.entry(key).or_insert(0.0) += b.probability;
        }
        Ok(dist)
    }

    pub fn total_probability(&self) -> f64 {
        self.branches.iter().map(|b| b.probability).sum()
    }
}

fn bit(b: &Branch, w: usize) -> Option<u8> {
    b.bits[w]
}

/// Splits a branch on the Z value of qubit `wire`.
fn split(b: Branch, wire: usize, mut on_outcome: impl FnMut(&mut Branch, u8)) -> Vec<Branch> {
    let p1 = b.state.prob_one(wire);
    let mut out = Vec::with_capacity(2);
    for v in [0u8, 1] {
        let pv = if v == 1 { p1 } else { 1.0 - p1 };
        if pv <= PRUNE_EPS {
            continue;
        }
        let mut nb = b.clone();
        nb.state.project(wire, v);
        nb.probability *= pv;
        on_outcome(&mut nb, v);
        out.push(nb);
    }
    out
}

fn merge(branches: Vec<Branch>) -> Vec<Branch> {
    let mut out: Vec<Branch> = Vec::with_capacity(branches.len());
    for b in branches {
        if let Some(existing) = out
            .iter_mut()
            .find(|e| e.bits == b.bits && (e.state.overlap(&b.state) - 1.0).abs() < 1e-12)
        {
            existing.probability += b.probability;
        } else {
            out.push(b);
        }
    }
    out
}

/// Runs `program` with the unknown wires set from `assign`.
pub fn simulate(
    program: &CircuitProgram,
    assign: &UnknownAssignment,
    config: OracleConfig,
) -> Result<Simulation, OracleError> {
    check_gates_once();
    let n = program.wire_count();
    if n > config.max_wires {
        return Err(OracleError::TooManyWires {
            wires: n,
            cap: config.max_wires,
        });
    }
    let (h, x, z) = (hadamard(), not_gate(), z_gate());
    let (cx, cz, sw) = (cnot_gate(), cz_gate(), swap_gate());
    let mut kinds = vec![WireKind::Qubit; n];
    let mut branches = vec![Branch {
        probability: 1.0,
        state: StateVector::zero(n),
        bits: vec![None; n],
    }];
    for stmt in program.lower() {
        match &stmt.prim {
            Prim::Alloc {
                wire,
                init: Init::Unknown,
                name,
                ..
            } => {
                let (alpha, beta) = assign
                    .get(name)
                    .ok_or_else(|| OracleError::MissingAssignment(name.clone()))?;
                // |0> → alpha|0> + beta|1>
                let prep = CMatrix::from_rows(&[&[alpha, -beta.conj()], &[beta, alpha.conj()]]);
                for b in &mut branches {
                    b.state.apply_1q(&prep, *wire);
                }
            }
            Prim::Alloc { .. } | Prim::Assert(_) => {}
            Prim::Not(w) => {
                for b in &mut branches {
                    match bit(b, *w) {
                        Some(v) => b.bits[*w] = Some(v ^ 1),
                        None => b.state.apply_1q(&x, *w),
                    }
                }
            }
            Prim::H(w) => branches.iter_mut().for_each(|b| b.state.apply_1q(&h, *w)),
            Prim::Swap(a, bw) => branches
                .iter_mut()
                .for_each(|b| b.state.apply_2q(&sw, *a, *bw)),
            Prim::Cnot(ctl, tgt) => {
                let (ctl, tgt) = (*ctl, *tgt);
                match (kinds[ctl], kinds[tgt]) {
                    (WireKind::Qubit, WireKind::Qubit) => {
                        branches
                            .iter_mut()
                            .for_each(|b| b.state.apply_2q(&cx, ctl, tgt));
                    }
                    (WireKind::Bit, WireKind::Qubit) => {
                        for b in &mut branches {
                            if bit(b, ctl) == Some(1) {
                                b.state.apply_1q(&x, tgt);
                            }
                        }
                    }
                    (WireKind::Bit, WireKind::Bit) => {
                        for b in &mut branches {
                            let v = bit(b, ctl).expect("bit wire") ^ bit(b, tgt).expect("bit wire");
                            b.bits[tgt] = Some(v);
                        }
                    }
                    (WireKind::Qubit, WireKind::Bit) => {
                        let old = std::mem::take(&mut branches);
                        for b in old {
                            branches.extend(split(b, ctl, |nb, v| {
                                nb.bits[tgt] = nb.bits[tgt].map(|t| t ^ v);
                            }));
                        }
                        branches = merge(branches);
                    }
                }
            }
            Prim::Cz(a, bw) => {
                let (a, bw) = (*a, *bw);
                match (kinds[a], kinds[bw]) {
                    (WireKind::Qubit, WireKind::Qubit) => {
                        branches
                            .iter_mut()
                            .for_each(|b| b.state.apply_2q(&cz, a, bw));
                    }
                    (WireKind::Bit, WireKind::Qubit) | (WireKind::Qubit, WireKind::Bit) => {
                        let (cbit, q) = if kinds[a] == WireKind::Bit {
                            (a, bw)
                        } else {
                            (bw, a)
                        };
                        for b in &mut branches {
                            if bit(b, cbit) == Some(1) {
                                b.state.apply_1q(&z, q);
                            }
                        }
                    }
                    (WireKind::Bit, WireKind::Bit) => {}
                }
            }
            Prim::MeasZ(w) => {
                let w = *w;
                kinds[w] = WireKind::Bit;
                let old = std::mem::take(&mut branches);
                for b in old {
                    branches.extend(split(b, w, |nb, v| nb.bits[w] = Some(v)));
                }
                branches = merge(branches);
            }
        }
        if branches.len() > config.max_branches {
            return Err(OracleError::TooManyBranches {
                cap: config.max_branches,
            });
        }
    }
    Ok(Simulation { branches, kinds })
}

//! Heisenberg-picture simulation of hybrid bit/qubit Clifford circuits.
//!
//! Qubit wires carry descriptor words `(q_x, q_z)`, bit wires carry a single
//! record word, and gates act locally by multiplying words. The crate also
//! ships a brute-force state-vector oracle, a small circuit language, flow
//! analysis over execution traces and a diagram renderer.

pub mod circuits;
pub mod compare;
pub mod dsl;
pub mod flow;
pub mod machine;
pub mod matrix;
pub mod oracle;
pub mod pauli;
pub mod protocols;
pub mod render;
pub mod stability;

pub use machine::{
    BitClassification, Component, Descriptor, Init, Machine, MachineError, WireId, WireKind,
};
pub use pauli::{Letter, PauliWord, Phase, Position};

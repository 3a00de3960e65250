//! Simulation of optically controlled quantum-dot spin qubits: ultrafast Raman
//! rotations of a three-level Λ system under a Lindblad master equation, and
//! cavity-mediated coherent-state bus gates.
//!
//! Units: time in picoseconds, frequencies and rates as angular frequencies in
//! rad/ps.

// `!(x > 0.0)` guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bus;
pub mod cavity;
pub mod dynamics;
pub mod effective;
pub mod error;
pub mod experiments;
pub mod pulses;
pub mod qcore;

pub use error::{Error, Result};

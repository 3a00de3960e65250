//! Coherent-state bus algebra: displacements and qubit-conditional phase-space
//! rotations acting on a coherent amplitude, tracked per joint qubit branch.
//!
//! Branch order is `(z1, z2) = (+,+), (+,−), (−,+), (−,−)`, i.e. the
//! computational states `|00⟩, |01⟩, |10⟩, |11⟩` with `|0⟩` at `z = +1`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qcore::{coherent_amplitudes, CMatrix, CVector, C64};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum BusOp {
    /// `D(β)`.
    Displace { beta: C64 },
    /// `exp(iθ z_q a†a)`.
    CondRotate { qubit: u8, theta: f64 },
}

/// Operations in application order (first element acts first).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BusProgram {
    pub ops: Vec<BusOp>,
}

impl BusProgram {
    pub fn new(ops: Vec<BusOp>) -> Result<Self> {
        let p = BusProgram { ops };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        for op in &self.ops {
            if let BusOp::CondRotate { qubit, .. } = op {
                if !matches!(qubit, 1 | 2) {
                    return Err(Error::InvalidParameter(format!("qubit id must be 1 or 2, got {qubit}")));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BranchState {
    pub z1: i8,
    pub z2: i8,
    pub amplitude: C64,
    pub phase: f64,
}

pub const BRANCHES: [(i8, i8); 4] = [(1, 1), (1, -1), (-1, 1), (-1, -1)];

/// Closure tolerance on the final amplitude.
pub const CLOSURE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BusEvaluation {
    pub branches: [BranchState; 4],
    /// Diagonal of the conditional gate, `e^{iφ(z1, z2)}`.
    pub gate: [C64; 4],
    pub closed: [bool; 4],
}

impl BusEvaluation {
    pub fn all_closed(&self) -> bool {
        self.closed.iter().all(|&c| c)
    }

    /// `Φ_e = φ(+,+) − φ(+,−) − φ(−,+) + φ(−,−)`.
    pub fn entangling_phase(&self) -> f64 {
        let p = |k: usize| self.branches[k].phase;
        p(0) - p(1) - p(2) + p(3)
    }
}

fn branch_z(op_qubit: u8, z1: i8, z2: i8) -> f64 {
    if op_qubit == 1 {
        z1 as f64
    } else {
        z2 as f64
    }
}

/// Runs `program` on `|start⟩` in every branch using
/// `D(β)|α⟩ = e^{i Im(β ᾱ)}|α + β⟩` and `e^{iθz a†a}|α⟩ = |α e^{iθz}⟩`.
pub fn evaluate(program: &BusProgram, start: C64) -> BusEvaluation {
    let branches = BRANCHES.map(|(z1, z2)| {
        let mut amp = start;
        let mut phase = 0.0;
        for op in &program.ops {
            match *op {
                BusOp::Displace { beta } => {
                    phase += (beta * amp.conj()).im;
                    amp += beta;
                }
                BusOp::CondRotate { qubit, theta } => {
                    amp *= C64::from_polar(1.0, branch_z(qubit, z1, z2) * theta);
                }
            }
        }
        BranchState {
            z1,
            z2,
            amplitude: amp,
            phase,
        }
    });
    BusEvaluation {
        gate: branches.map(|b| C64::from_polar(1.0, b.phase)),
        closed: branches.map(|b| (b.amplitude - start).norm() < CLOSURE_TOL),
        branches,
    }
}

/// Conditional-displacement commutator loop along orthogonal quadratures.
///
/// As an operator product this is
/// `[R₁(θ)D(β)R₁(−θ)] [R₂(θ)D(iβ)R₂(−θ)] [R₁(θ)D(−β)R₁(−θ)] [R₂(θ)D(−iβ)R₂(−θ)]`;
/// the returned program lists the same twelve factors in application order
/// (right to left). The entangling phase is `−8β² sin²θ`.
pub fn build_cz(beta: f64, theta: f64) -> BusProgram {
    let r = |qubit: u8, theta: f64| BusOp::CondRotate { qubit, theta };
    let d = |beta: C64| BusOp::Displace { beta };
    let bracket = |qubit: u8, b: C64| [r(qubit, theta), d(b), r(qubit, -theta)];
    let written: Vec<BusOp> = [
        bracket(1, C64::new(beta, 0.0)),
        bracket(2, C64::new(0.0, beta)),
        bracket(1, C64::new(-beta, 0.0)),
        bracket(2, C64::new(0.0, -beta)),
    ]
    .concat();
    BusProgram {
        ops: written.into_iter().rev().collect(),
    }
}

/// Loop parameters from a physical pass: `β = |α|` and per-pass rotation
/// `θ = ϑ/2` (each branch moves by `±ϑ/2` about the unconditional phase).
/// The pass condition `|αϑ| = √(π/2)` then reads `2β sin θ ≈ √(π/2)`,
/// equivalently `8β² sin²θ ≈ π`.
pub fn loop_parameters_from_pass(alpha: C64, vartheta: f64) -> (f64, f64) {
    (alpha.norm(), 0.5 * vartheta)
}

/// Fock-space leakage allowed in [`verify_against_fock`].
pub const FOCK_LEAKAGE_LIMIT: f64 = 1e-8;

const FOCK_PAD: usize = 40;

fn annihilation(dim: usize) -> CMatrix {
    let mut a = CMatrix::zeros(dim, dim);
    for n in 1..dim {
        a[(n - 1, n)] = C64::from((n as f64).sqrt());
    }
    a
}

/// Truncated displacement: `exp(βa† − β̄a)` on a padded space, cut back to
/// `n_max + 1` levels.
fn displacement_matrix(beta: C64, n_max: usize) -> CMatrix {
    let dim = n_max + 1 + FOCK_PAD;
    let a = annihilation(dim);
    let gen = a.adjoint() * beta - a * beta.conj();
    gen.exp().view((0, 0), (n_max + 1, n_max + 1)).into_owned()
}

/// Applies `program` to `|start⟩` with explicit truncated Fock matrices and
/// returns the largest distance, over branches, to `e^{iφ}|α_final⟩` as
/// predicted by [`evaluate`].
pub fn verify_against_fock(program: &BusProgram, start: C64, n_max: usize) -> Result<f64> {
    program.validate()?;
    let eval = evaluate(program, start);
    let dim = n_max + 1;
    let mut worst: f64 = 0.0;
    for b in &eval.branches {
        let mut v: CVector = coherent_amplitudes(start, n_max);
        let lost0 = 1.0 - v.norm_squared();
        if lost0 > FOCK_LEAKAGE_LIMIT {
            return Err(Error::TruncationLeakage {
                leakage: lost0,
                limit: FOCK_LEAKAGE_LIMIT,
                n_max,
            });
        }
        for op in &program.ops {
            match *op {
                BusOp::Displace { beta } => v = displacement_matrix(beta, n_max) * v,
                BusOp::CondRotate { qubit, theta } => {
                    let w = branch_z(qubit, b.z1, b.z2) * theta;
                    for n in 0..dim {
                        v[n] *= C64::from_polar(1.0, w * n as f64);
                    }
                }
            }
        }
        let lost = 1.0 - v.norm_squared();
        if lost > FOCK_LEAKAGE_LIMIT {
            return Err(Error::TruncationLeakage {
                leakage: lost,
                limit: FOCK_LEAKAGE_LIMIT,
                n_max,
            });
        }
        let expect = coherent_amplitudes(b.amplitude, n_max) * C64::from_polar(1.0, b.phase);
        worst = worst.max((v - expect).norm());
    }
    Ok(worst)
}

/// Product of pass fidelities times the waveguide transmission.
pub fn gate_fidelity_estimate(pass_fidelities: &[f64], waveguide_loss: f64) -> Result<f64> {
    if let Some(f) = pass_fidelities.iter().find(|f| !(0.0..=1.0).contains(*f)) {
        return Err(Error::InvalidParameter(format!(
            "pass fidelity must lie in [0, 1], got {f}"
        )));
    }
    crate::cavity::apply_waveguide_loss(pass_fidelities.iter().product(), waveguide_loss)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    #[test]
    fn empty_program() {
        let e = evaluate(&BusProgram::default(), C64::new(0.3, 0.1));
        assert!(e.all_closed());
        assert!(e.branches.iter().all(|b| b.phase == 0.0));
        assert!(verify_against_fock(&BusProgram::default(), C64::new(0.3, 0.1), 20).unwrap() < 1e-10);
    }

    #[test]
    fn there_and_back_from_vacuum() {
        let a = C64::new(0.7, -0.4);
        let p = BusProgram::new(vec![BusOp::Displace { beta: a }, BusOp::Displace { beta: -a }]).unwrap();
        let e = evaluate(&p, C64::from(0.0));
        assert!(e.all_closed());
        assert!(e.branches.iter().all(|b| b.phase.abs() < 1e-15));
    }

    #[test]
    fn symmetric_branches_agree() {
        let e = evaluate(&build_cz(0.8, 0.4), C64::from(0.0));
        assert_abs_diff_eq!(e.branches[0].phase, e.branches[3].phase, epsilon = 1e-14);
        assert_abs_diff_eq!(e.branches[1].phase, e.branches[2].phase, epsilon = 1e-14);
    }

    #[test]
    fn cz_structure() {
        let p = build_cz(1.0, 0.3);
        assert_eq!(p.ops.len(), 12);
        assert_eq!(p.ops[0], BusOp::CondRotate { qubit: 2, theta: -0.3 });
        assert_eq!(
            p.ops[1],
            BusOp::Displace {
                beta: C64::new(0.0, -1.0)
            }
        );
        assert!(evaluate(&build_cz(1e-9, 1e-9), C64::from(0.0)).entangling_phase().abs() < 1e-30);
    }

    #[test]
    fn cz_maximally_entangling() {
        let theta: f64 = 0.5;
        let beta = (PI / 8.0).sqrt() / theta.sin();
        let e = evaluate(&build_cz(beta, theta), C64::new(0.2, 0.3));
        assert!(e.all_closed());
        assert_abs_diff_eq!(e.entangling_phase(), -PI, epsilon = 1e-12);
    }

    #[test]
    fn single_displacement_matches_fock() {
        let p = BusProgram::new(vec![BusOp::Displace { beta: C64::from(0.5) }]).unwrap();
        assert!(verify_against_fock(&p, C64::from(0.0), 20).unwrap() < 1e-8);
    }

    #[test]
    fn fock_leakage_is_reported() {
        let p = BusProgram::new(vec![BusOp::Displace { beta: C64::from(4.0) }]).unwrap();
        assert!(matches!(
            verify_against_fock(&p, C64::from(0.0), 10),
            Err(Error::TruncationLeakage { .. })
        ));
    }

    #[test]
    fn rejects_bad_qubit() {
        assert!(BusProgram::new(vec![BusOp::CondRotate { qubit: 3, theta: 0.1 }]).is_err());
    }

    #[test]
    fn fidelity_estimate_examples() {
        assert_eq!(gate_fidelity_estimate(&[1.0, 1.0], 0.0).unwrap(), 1.0);
        assert_eq!(gate_fidelity_estimate(&[0.993], 0.0).unwrap(), 0.993);
        assert_abs_diff_eq!(
            gate_fidelity_estimate(&[0.99, 0.99], 0.01).unwrap(),
            0.970299,
            epsilon = 1e-15
        );
        assert!(gate_fidelity_estimate(&[1.2], 0.0).is_err());
    }
}

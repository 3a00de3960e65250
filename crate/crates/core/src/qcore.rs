//! Dense complex linear algebra over the dot and dot⊗photon Hilbert spaces.
//!
//! Basis ordering is fixed as `(|0⟩, |1⟩, |e⟩)` for the dot. Composite spaces
//! are ordered dot-major, photon-minor: index = `level * (n_max + 1) + n`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// One tensor factor of a basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Factor {
    /// Spin subspace `{|0⟩, |1⟩}`.
    Qubit,
    /// Three-level dot `{|0⟩, |1⟩, |e⟩}`.
    Dot3,
    /// Photon number states `|0⟩ … |n_max⟩`.
    Fock { n_max: usize },
}

impl Factor {
    pub fn dim(self) -> usize {
        match self {
            Factor::Qubit => 2,
            Factor::Dot3 => 3,
            Factor::Fock { n_max } => n_max + 1,
        }
    }
}

/// Ordered list of tensor factors. Tensoring concatenates factor lists, so the
/// product is associative on labels as well as on elements.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Basis(Vec<Factor>);

impl Basis {
    pub fn new(factors: Vec<Factor>) -> Self {
        Basis(factors)
    }

    pub fn qubit() -> Self {
        Basis(vec![Factor::Qubit])
    }

    pub fn dot3() -> Self {
        Basis(vec![Factor::Dot3])
    }

    pub fn fock(n_max: usize) -> Self {
        Basis(vec![Factor::Fock { n_max }])
    }

    pub fn dot3_fock(n_max: usize) -> Self {
        Basis(vec![Factor::Dot3, Factor::Fock { n_max }])
    }

    pub fn factors(&self) -> &[Factor] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.iter().map(|f| f.dim()).product()
    }

    pub fn tensor(&self, other: &Basis) -> Basis {
        let mut factors = self.0.clone();
        factors.extend_from_slice(&other.0);
        Basis(factors)
    }

    /// Photon cutoff when this is a `dot3` or `dot3⊗fock(N)` basis.
    /// `Some(0)` for the bare dot (a one-dimensional field space).
    pub fn dot_field_cutoff(&self) -> Option<usize> {
        match self.0.as_slice() {
            [Factor::Dot3] => Some(0),
            [Factor::Dot3, Factor::Fock { n_max }] => Some(*n_max),
            _ => None,
        }
    }
}

impl std::fmt::Display for Basis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let names: Vec<String> = self
            .0
            .iter()
            .map(|factor| match factor {
                Factor::Qubit => "qubit".to_string(),
                Factor::Dot3 => "dot3".to_string(),
                Factor::Fock { n_max } => format!("fock({n_max})"),
            })
            .collect();
        f.write_str(&names.join("⊗"))
    }
}

/// Dot level in the fixed ordering.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DotLevel {
    Ground0 = 0,
    Ground1 = 1,
    Excited = 2,
}

impl DotLevel {
    pub const ALL: [DotLevel; 3] = [DotLevel::Ground0, DotLevel::Ground1, DotLevel::Excited];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(j: usize) -> Result<Self> {
        match j {
            0 => Ok(DotLevel::Ground0),
            1 => Ok(DotLevel::Ground1),
            2 => Ok(DotLevel::Excited),
            _ => Err(Error::InvalidLevel(j)),
        }
    }
}

fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Normalized pure state.
#[derive(Debug, Clone, PartialEq)]
pub struct KetState {
    amplitudes: CVector,
    basis: Basis,
}

impl KetState {
    /// Builds a state from amplitudes, normalizing them.
    pub fn new(amplitudes: CVector, basis: Basis) -> Result<Self> {
        check_dim(basis.dim(), amplitudes.len())?;
        let norm = amplitudes.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::ZeroNorm);
        }
        Ok(KetState {
            amplitudes: amplitudes / C64::from(norm),
            basis,
        })
    }

    pub fn from_slice(amplitudes: &[C64], basis: Basis) -> Result<Self> {
        Self::new(CVector::from_column_slice(amplitudes), basis)
    }

    pub fn basis_state(basis: Basis, index: usize) -> Result<Self> {
        let dim = basis.dim();
        if index >= dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: index + 1,
            });
        }
        let mut v = CVector::zeros(dim);
        v[index] = ONE;
        Ok(KetState { amplitudes: v, basis })
    }

    pub fn dot(level: DotLevel) -> Self {
        Self::basis_state(Basis::dot3(), level.index()).expect("dot level in range")
    }

    /// Truncated coherent state `|β⟩` in `fock(n_max)`, renormalized after truncation.
    pub fn coherent(beta: C64, n_max: usize) -> Self {
        let v = coherent_amplitudes(beta, n_max);
        Self::new(v, Basis::fock(n_max)).expect("coherent state has nonzero norm")
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    pub fn basis(&self) -> &Basis {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn projector(&self) -> DensityMatrix {
        DensityMatrix {
            elements: &self.amplitudes * self.amplitudes.adjoint(),
            basis: self.basis.clone(),
        }
    }

    pub fn inner(&self, other: &KetState) -> Result<C64> {
        check_dim(self.dim(), other.dim())?;
        Ok(self.amplitudes.dotc(&other.amplitudes))
    }
}

/// Unnormalized coherent-state amplitudes `e^{-|β|²/2} βⁿ/√n!` for `n ≤ n_max`.
pub fn coherent_amplitudes(beta: C64, n_max: usize) -> CVector {
    let mut v = CVector::zeros(n_max + 1);
    let mut c = C64::from((-0.5 * beta.norm_sqr()).exp());
    v[0] = c;
    for n in 1..=n_max {
        c *= beta / (n as f64).sqrt();
        v[n] = c;
    }
    v
}

/// Density matrix. Physicality is not enforced at construction so that
/// unnormalized blocks (e.g. conditional field states) share the type.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    elements: CMatrix,
    basis: Basis,
}

impl DensityMatrix {
    pub fn new(elements: CMatrix, basis: Basis) -> Result<Self> {
        if elements.nrows() != elements.ncols() {
            return Err(Error::DimensionMismatch {
                expected: elements.nrows(),
                found: elements.ncols(),
            });
        }
        check_dim(basis.dim(), elements.nrows())?;
        Ok(DensityMatrix { elements, basis })
    }

    pub fn from_pure(psi: &KetState) -> Self {
        psi.projector()
    }

    pub fn maximally_mixed(basis: Basis) -> Self {
        let d = basis.dim();
        DensityMatrix {
            elements: CMatrix::identity(d, d) / C64::from(d as f64),
            basis,
        }
    }

    pub fn elements(&self) -> &CMatrix {
        &self.elements
    }

    pub fn into_elements(self) -> CMatrix {
        self.elements
    }

    pub fn basis(&self) -> &Basis {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.elements.nrows()
    }

    pub fn trace(&self) -> C64 {
        self.elements.trace()
    }

    /// `max |ρ − ρ†|` over elements.
    pub fn hermiticity_error(&self) -> f64 {
        hermiticity_error(&self.elements)
    }

    /// Smallest eigenvalue of the Hermitian part.
    pub fn min_eigenvalue(&self) -> f64 {
        let h = (&self.elements + self.elements.adjoint()) * C64::from(0.5);
        h.symmetric_eigenvalues().min()
    }

    pub fn symmetrize(&mut self) {
        symmetrize(&mut self.elements);
    }

    /// `tr(A ρ)`.
    pub fn expectation(&self, op: &OperatorMatrix) -> Result<C64> {
        check_dim(self.dim(), op.dim())?;
        Ok((&op.elements * &self.elements).trace())
    }

    /// `U ρ U†`.
    pub fn transformed(&self, u: &CMatrix) -> Result<DensityMatrix> {
        check_dim(self.dim(), u.nrows())?;
        Ok(DensityMatrix {
            elements: u * &self.elements * u.adjoint(),
            basis: self.basis.clone(),
        })
    }

    /// Dot-level block `⟨j|ρ|k⟩` of a `dot3` or `dot3⊗fock(N)` density matrix.
    pub fn dot_block(&self, j: DotLevel, k: DotLevel) -> Result<CMatrix> {
        let nf = self
            .basis
            .dot_field_cutoff()
            .ok_or_else(|| Error::BasisMismatch(format!("expected dot3⊗fock, got {}", self.basis)))?
            + 1;
        Ok(self
            .elements
            .view((j.index() * nf, k.index() * nf), (nf, nf))
            .into_owned())
    }
}

pub fn hermiticity_error(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for c in 0..n {
        for r in 0..=c {
            worst = worst.max((m[(r, c)] - m[(c, r)].conj()).norm());
        }
    }
    worst
}

/// In-place `ρ ← (ρ + ρ†)/2`.
pub fn symmetrize(m: &mut CMatrix) {
    let n = m.nrows();
    for c in 0..n {
        for r in 0..c {
            let avg = (m[(r, c)] + m[(c, r)].conj()) * 0.5;
            m[(r, c)] = avg;
            m[(c, r)] = avg.conj();
        }
        m[(c, c)] = C64::from(m[(c, c)].re);
    }
}

/// Square operator over a labelled basis.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrix {
    elements: CMatrix,
    basis: Basis,
}

impl OperatorMatrix {
    pub fn new(elements: CMatrix, basis: Basis) -> Result<Self> {
        if elements.nrows() != elements.ncols() {
            return Err(Error::DimensionMismatch {
                expected: elements.nrows(),
                found: elements.ncols(),
            });
        }
        check_dim(basis.dim(), elements.nrows())?;
        Ok(OperatorMatrix { elements, basis })
    }

    pub fn identity(basis: Basis) -> Self {
        let d = basis.dim();
        OperatorMatrix {
            elements: CMatrix::identity(d, d),
            basis,
        }
    }

    pub fn zeros(basis: Basis) -> Self {
        let d = basis.dim();
        OperatorMatrix {
            elements: CMatrix::zeros(d, d),
            basis,
        }
    }

    /// `|row⟩⟨col|` on the dot.
    pub fn dot_transition(row: DotLevel, col: DotLevel) -> Self {
        let mut m = CMatrix::zeros(3, 3);
        m[(row.index(), col.index())] = ONE;
        OperatorMatrix {
            elements: m,
            basis: Basis::dot3(),
        }
    }

    /// `P_j = |j⟩⟨j|`.
    pub fn projector(level: DotLevel) -> Self {
        Self::dot_transition(level, level)
    }

    /// `σ_j⁺ = |e⟩⟨j|`.
    pub fn raising(level: DotLevel) -> Self {
        Self::dot_transition(DotLevel::Excited, level)
    }

    /// `σ_j⁻ = |j⟩⟨e|`.
    pub fn lowering(level: DotLevel) -> Self {
        Self::dot_transition(level, DotLevel::Excited)
    }

    /// Photon annihilation operator on `fock(n_max)`.
    pub fn annihilation(n_max: usize) -> Self {
        let d = n_max + 1;
        let mut m = CMatrix::zeros(d, d);
        for n in 1..d {
            m[(n - 1, n)] = C64::from((n as f64).sqrt());
        }
        OperatorMatrix {
            elements: m,
            basis: Basis::fock(n_max),
        }
    }

    pub fn elements(&self) -> &CMatrix {
        &self.elements
    }

    pub fn into_elements(self) -> CMatrix {
        self.elements
    }

    pub fn basis(&self) -> &Basis {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.elements.nrows()
    }

    pub fn adjoint(&self) -> Self {
        OperatorMatrix {
            elements: self.elements.adjoint(),
            basis: self.basis.clone(),
        }
    }
}

/// Spin-½ operators on `{|0⟩, |1⟩}` with `|0⟩` as the +z state.
pub mod spin {
    use super::{CMatrix, C64, I, ONE, ZERO};

    pub fn sx() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]) * C64::from(0.5)
    }

    pub fn sy() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[ZERO, -I, I, ZERO]) * C64::from(0.5)
    }

    pub fn sz() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE]) * C64::from(0.5)
    }

    /// `exp(-i θ n̂·S)` for a unit axis `n̂`.
    pub fn rotation(axis: [f64; 3], theta: f64) -> CMatrix {
        let norm = (axis[0].powi(2) + axis[1].powi(2) + axis[2].powi(2)).sqrt();
        let (nx, ny, nz) = (axis[0] / norm, axis[1] / norm, axis[2] / norm);
        let (s, c) = (0.5 * theta).sin_cos();
        CMatrix::from_row_slice(
            2,
            2,
            &[
                C64::new(c, -s * nz),
                C64::new(-s * ny, -s * nx),
                C64::new(s * ny, -s * nx),
                C64::new(c, s * nz),
            ],
        )
    }

    /// Bloch vector `(⟨σx⟩, ⟨σy⟩, ⟨σz⟩)` of a 2×2 (possibly unnormalized) density matrix.
    pub fn bloch_vector(rho: &CMatrix) -> [f64; 3] {
        let r01 = rho[(0, 1)];
        [2.0 * r01.re, -2.0 * r01.im, (rho[(0, 0)] - rho[(1, 1)]).re]
    }

    /// Density matrix for a Bloch vector (trace one).
    pub fn from_bloch(v: [f64; 3]) -> CMatrix {
        CMatrix::from_row_slice(
            2,
            2,
            &[
                C64::from(0.5 * (1.0 + v[2])),
                C64::new(0.5 * v[0], -0.5 * v[1]),
                C64::new(0.5 * v[0], 0.5 * v[1]),
                C64::from(0.5 * (1.0 - v[2])),
            ],
        )
    }
}

/// Kronecker product preserving basis labels.
pub trait Tensor: Sized {
    fn tensor(&self, other: &Self) -> Self;
}

impl Tensor for KetState {
    fn tensor(&self, other: &Self) -> Self {
        let a = CMatrix::from_column_slice(self.dim(), 1, self.amplitudes.as_slice());
        let b = CMatrix::from_column_slice(other.dim(), 1, other.amplitudes.as_slice());
        let v = kron(&a, &b);
        KetState {
            amplitudes: CVector::from_column_slice(v.as_slice()),
            basis: self.basis.tensor(&other.basis),
        }
    }
}

impl Tensor for OperatorMatrix {
    fn tensor(&self, other: &Self) -> Self {
        OperatorMatrix {
            elements: kron(&self.elements, &other.elements),
            basis: self.basis.tensor(&other.basis),
        }
    }
}

impl Tensor for DensityMatrix {
    fn tensor(&self, other: &Self) -> Self {
        DensityMatrix {
            elements: kron(&self.elements, &other.elements),
            basis: self.basis.tensor(&other.basis),
        }
    }
}

pub fn tensor<T: Tensor>(a: &T, b: &T) -> T {
    a.tensor(b)
}

/// `F = ⟨ψ|ρ|ψ⟩`.
pub fn fidelity(rho: &DensityMatrix, psi: &KetState) -> Result<f64> {
    check_dim(rho.dim(), psi.dim())?;
    if rho.basis() != psi.basis() {
        return Err(Error::BasisMismatch(format!(
            "density matrix over {}, state over {}",
            rho.basis(),
            psi.basis()
        )));
    }
    let v = psi.amplitudes();
    let f = v.dotc(&(rho.elements() * v));
    debug_assert!(f.im.abs() < 1e-10, "fidelity has imaginary part {}", f.im);
    Ok(f.re)
}

/// Field-space block `⟨j|ρ|j⟩` of a `dot3⊗fock(N)` density matrix. Its trace is
/// the population of dot level `j`.
pub fn partial_trace_dot(rho: &DensityMatrix, level: DotLevel) -> Result<DensityMatrix> {
    let n_max = match rho.basis().factors() {
        [Factor::Dot3, Factor::Fock { n_max }] => *n_max,
        _ => return Err(Error::BasisMismatch(format!("expected dot3⊗fock, got {}", rho.basis()))),
    };
    Ok(DensityMatrix {
        elements: rho.dot_block(level, level)?,
        basis: Basis::fock(n_max),
    })
}

/// Sparse operator as a list of `(row, col, value)` entries; used for the
/// time-dependent Hamiltonian inside the master-equation right-hand side.
#[derive(Debug, Clone, Default)]
pub struct SparseOperator {
    dim: usize,
    entries: Vec<(usize, usize, C64)>,
}

impl SparseOperator {
    pub fn new(dim: usize) -> Self {
        SparseOperator {
            dim,
            entries: Vec::new(),
        }
    }

    pub fn clear(&mut self) {
        self.entries.clear();
    }

    pub fn push(&mut self, row: usize, col: usize, value: C64) {
        if value != ZERO {
            self.entries.push((row, col, value));
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[(usize, usize, C64)] {
        &self.entries
    }

    pub fn to_dense(&self) -> CMatrix {
        let mut m = CMatrix::zeros(self.dim, self.dim);
        for &(r, c, v) in &self.entries {
            m[(r, c)] += v;
        }
        m
    }

    /// `out += scale · (H ρ − ρ H)`.
    pub fn add_commutator(&self, rho: &CMatrix, scale: C64, out: &mut CMatrix) {
        let d = self.dim;
        for &(r, c, h) in &self.entries {
            let hs = h * scale;
            // (Hρ)_{r,k} += h ρ_{c,k}
            for k in 0..d {
                out[(r, k)] += hs * rho[(c, k)];
            }
            // (ρH)_{k,c} += ρ_{k,r} h
            let (src, dst) = (r, c);
            for k in 0..d {
                out[(k, dst)] -= rho[(k, src)] * hs;
            }
        }
    }
}

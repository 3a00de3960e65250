//! Rotating-frame Λ-system Hamiltonian, master-equation right-hand side and
//! adaptive integration.
//!
//! Basis ordering is `(|0⟩, |1⟩, |e⟩)`, optionally tensored with a truncated
//! photon space (dot index major, photon index minor).

mod rk;

pub use rk::IntegratorStats;

use serde::{Deserialize, Serialize};

use crate::error::{Error, IntegrationFailure, Result};
use crate::pulses::{envelope_at, unit_envelope, PulseShape};
use crate::qcore::{symmetrize, Basis, CMatrix, DensityMatrix, OperatorMatrix, SparseOperator, C64, I};

const G0: usize = 0;
const G1: usize = 1;
const EX: usize = 2;

/// Time-dependent complex Rabi envelope of one classical drive leg.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Envelope {
    Zero,
    Constant {
        value: C64,
    },
    Pulse {
        pulse: PulseShape,
    },
    /// Sum of several pulses (a scheduled train).
    Train {
        pulses: Vec<PulseShape>,
    },
}

impl Envelope {
    pub fn value(&self, t: f64) -> Result<C64> {
        let v = match self {
            Envelope::Zero => C64::new(0.0, 0.0),
            Envelope::Constant { value } => *value,
            Envelope::Pulse { pulse } => envelope_at(pulse, t),
            Envelope::Train { pulses } => pulses.iter().map(|p| envelope_at(p, t)).sum(),
        };
        if v.re.is_finite() && v.im.is_finite() {
            Ok(v)
        } else {
            Err(Error::UndefinedEnvelope { t })
        }
    }
}

/// Quantized cavity drive: both legs carry `g S(t) (a + α)`, with `α` the
/// constant displaced-frame amplitude.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CavityDrive {
    /// Vacuum Rabi coupling g (rad/ps).
    pub coupling: f64,
    /// Pulse whose unit-peak envelope supplies `S(t)`; its `peak_rabi` is unused.
    pub shape: PulseShape,
    pub frame_amplitude: C64,
    pub n_max: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "drive", rename_all = "snake_case")]
pub enum DriveSpec {
    Classical { omega0: Envelope, omega1: Envelope },
    Cavity(CavityDrive),
}

impl DriveSpec {
    pub fn none() -> Self {
        DriveSpec::Classical {
            omega0: Envelope::Zero,
            omega1: Envelope::Zero,
        }
    }

    /// The same pulse on both legs (symmetric Λ).
    pub fn symmetric_pulse(pulse: PulseShape) -> Self {
        DriveSpec::Classical {
            omega0: Envelope::Pulse { pulse },
            omega1: Envelope::Pulse { pulse },
        }
    }

    pub fn symmetric_train(pulses: Vec<PulseShape>) -> Self {
        DriveSpec::Classical {
            omega0: Envelope::Train { pulses: pulses.clone() },
            omega1: Envelope::Train { pulses },
        }
    }

    pub fn basis(&self) -> Basis {
        match self {
            DriveSpec::Classical { .. } => Basis::dot3(),
            DriveSpec::Cavity(c) => Basis::dot3_fock(c.n_max),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Dephasing {
    Off,
    T2 { t2: f64 },
}

impl Dephasing {
    fn rate(self) -> f64 {
        match self {
            Dephasing::Off => 0.0,
            Dephasing::T2 { t2 } => 1.0 / t2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaParams {
    /// Ground-state splitting δ (rad/ps).
    pub zeeman_splitting: f64,
    /// Detuning Δ (rad/ps).
    pub detuning: f64,
    /// Spontaneous emission rate Γ (1/ps).
    pub decay_rate: f64,
    pub dephasing: Dephasing,
    pub drive: DriveSpec,
}

impl LambdaParams {
    pub fn new(zeeman_splitting: f64, detuning: f64, decay_rate: f64, dephasing: Dephasing) -> Self {
        LambdaParams {
            zeeman_splitting,
            detuning,
            decay_rate,
            dephasing,
            drive: DriveSpec::none(),
        }
    }

    pub fn with_drive(mut self, drive: DriveSpec) -> Self {
        self.drive = drive;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if !self.zeeman_splitting.is_finite() || !self.detuning.is_finite() {
            return bad("splitting and detuning must be finite".into());
        }
        if !(self.decay_rate >= 0.0 && self.decay_rate.is_finite()) {
            return bad(format!("decay rate must be >= 0, got {}", self.decay_rate));
        }
        if let Dephasing::T2 { t2 } = self.dephasing {
            if !(t2 > 0.0) {
                return bad(format!("T2 must be > 0, got {t2}"));
            }
        }
        if let DriveSpec::Cavity(c) = &self.drive {
            if !c.coupling.is_finite() {
                return bad("cavity coupling must be finite".into());
            }
            c.shape.validate()?;
        }
        Ok(())
    }

    pub fn basis(&self) -> Basis {
        self.drive.basis()
    }

    /// Field-space dimension (1 for a classical drive).
    fn field_dim(&self) -> usize {
        match &self.drive {
            DriveSpec::Classical { .. } => 1,
            DriveSpec::Cavity(c) => c.n_max + 1,
        }
    }
}

/// Fills `h` with the sparse Hamiltonian at time `t`.
fn build_hamiltonian(params: &LambdaParams, t: f64, h: &mut SparseOperator) -> Result<()> {
    h.clear();
    let nf = params.field_dim();
    for n in 0..nf {
        h.push(G1 * nf + n, G1 * nf + n, C64::from(params.zeeman_splitting));
        h.push(EX * nf + n, EX * nf + n, C64::from(params.detuning));
    }
    match &params.drive {
        DriveSpec::Classical { omega0, omega1 } => {
            for (j, env) in [(G0, omega0), (G1, omega1)] {
                let w = env.value(t)? * 0.5;
                if w != C64::new(0.0, 0.0) {
                    h.push(EX, j, w);
                    h.push(j, EX, w.conj());
                }
            }
        }
        DriveSpec::Cavity(c) => {
            let s = c.coupling * unit_envelope(&c.shape, t);
            if !(s.re.is_finite() && s.im.is_finite()) {
                return Err(Error::UndefinedEnvelope { t });
            }
            let w = 0.5 * s;
            if w == C64::new(0.0, 0.0) {
                return Ok(());
            }
            // (w/2)|e⟩⟨j| ⊗ (a + α) + h.c.
            let alpha = c.frame_amplitude;
            for j in [G0, G1] {
                for n in 0..nf {
                    let (row, col) = (EX * nf + n, j * nf + n);
                    let v = w * alpha;
                    if v != C64::new(0.0, 0.0) {
                        h.push(row, col, v);
                        h.push(col, row, v.conj());
                    }
                    if n + 1 < nf {
                        // ⟨n|a|n+1⟩ = √(n+1)
                        let v = w * ((n + 1) as f64).sqrt();
                        let col = j * nf + n + 1;
                        h.push(row, col, v);
                        h.push(col, row, v.conj());
                    }
                }
            }
        }
    }
    Ok(())
}

/// Dense Hamiltonian `H(t)` in the fixed basis.
pub fn hamiltonian_at(params: &LambdaParams, t: f64) -> Result<OperatorMatrix> {
    let mut h = SparseOperator::new(params.basis().dim());
    build_hamiltonian(params, t, &mut h)?;
    OperatorMatrix::new(h.to_dense(), params.basis())
}

/// Reusable right-hand-side evaluator holding the Hamiltonian buffer.
struct Rhs<'a> {
    params: &'a LambdaParams,
    h: SparseOperator,
    nf: usize,
    half_gamma: f64,
    dephasing: f64,
}

impl<'a> Rhs<'a> {
    fn new(params: &'a LambdaParams) -> Self {
        Rhs {
            params,
            h: SparseOperator::new(params.basis().dim()),
            nf: params.field_dim(),
            half_gamma: 0.5 * params.decay_rate,
            dephasing: params.dephasing.rate(),
        }
    }

    fn eval(&mut self, t: f64, rho: &CMatrix, out: &mut CMatrix) -> Result<()> {
        build_hamiltonian(self.params, t, &mut self.h)?;
        out.fill(C64::new(0.0, 0.0));
        self.h.add_commutator(rho, -I, out);
        let nf = self.nf;
        let d = 3 * nf;
        let e0 = EX * nf;
        if self.half_gamma != 0.0 {
            let hg = self.half_gamma;
            // -(Γ/2)(P_e ρ + ρ P_e)
            for r in e0..d {
                for c in 0..d {
                    out[(r, c)] -= hg * rho[(r, c)];
                    out[(c, r)] -= hg * rho[(c, r)];
                }
            }
            // +(Γ/2) Σ_j σ_j⁻ ρ σ_j⁺ : the ee block feeds each ground block.
            for j in [G0, G1] {
                let j0 = j * nf;
                for r in 0..nf {
                    for c in 0..nf {
                        out[(j0 + r, j0 + c)] += hg * rho[(e0 + r, e0 + c)];
                    }
                }
            }
        }
        if self.dephasing != 0.0 {
            let g = self.dephasing;
            let (a0, a1) = (G0 * nf, G1 * nf);
            for r in 0..nf {
                for c in 0..nf {
                    out[(a1 + r, a0 + c)] -= g * rho[(a1 + r, a0 + c)];
                    out[(a0 + r, a1 + c)] -= g * rho[(a0 + r, a1 + c)];
                }
            }
        }
        Ok(())
    }
}

/// `dρ/dt` from the master equation.
pub fn master_rhs(params: &LambdaParams, rho: &DensityMatrix, t: f64) -> Result<CMatrix> {
    let basis = params.basis();
    if rho.basis() != &basis {
        return Err(Error::BasisMismatch(format!(
            "state is on {}, parameters need {}",
            rho.basis(),
            basis
        )));
    }
    let mut out = CMatrix::zeros(rho.dim(), rho.dim());
    Rhs::new(params).eval(t, rho.elements(), &mut out)?;
    Ok(out)
}

/// Which points of the trajectory to keep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Record {
    EveryStep,
    FinalOnly,
    /// The initial state, the final state, and the listed interior times
    /// (which the stepper lands on exactly).
    Times(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Largest allowed step (ps).
    pub max_step: f64,
    /// First trial step (ps); chosen automatically when absent.
    pub initial_step: Option<f64>,
    pub max_steps: usize,
    pub record: Record,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            rel_tol: 1e-10,
            abs_tol: 1e-10,
            max_step: f64::INFINITY,
            initial_step: None,
            max_steps: 5_000_000,
            record: Record::FinalOnly,
        }
    }
}

impl IntegratorConfig {
    pub fn with_tolerances(mut self, rel_tol: f64, abs_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self.abs_tol = abs_tol;
        self
    }

    pub fn with_max_step(mut self, max_step: f64) -> Self {
        self.max_step = max_step;
        self
    }

    pub fn with_record(mut self, record: Record) -> Self {
        self.record = record;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0) {
            return Err(Error::InvalidParameter("integrator tolerances must be > 0".into()));
        }
        if !(self.max_step > 0.0) {
            return Err(Error::InvalidParameter("max_step must be > 0".into()));
        }
        if let Some(h) = self.initial_step {
            if !(h > 0.0) {
                return Err(Error::InvalidParameter("initial_step must be > 0".into()));
            }
        }
        if self.max_steps == 0 {
            return Err(Error::InvalidParameter("max_steps must be > 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DensityMatrix>,
    pub stats: IntegratorStats,
}

impl Trajectory {
    /// Last recorded point.
    pub fn last(&self) -> Option<(f64, &DensityMatrix)> {
        self.times.last().copied().zip(self.states.last())
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Integrates the master equation from `t_span.0` to `t_span.1`.
pub fn integrate(
    params: &LambdaParams,
    rho0: &DensityMatrix,
    t_span: (f64, f64),
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    params.validate()?;
    cfg.validate()?;
    let basis = params.basis();
    if rho0.basis() != &basis {
        return Err(Error::BasisMismatch(format!(
            "state is on {}, parameters need {}",
            rho0.basis(),
            basis
        )));
    }
    let (t0, t1) = t_span;
    if !(t0.is_finite() && t1.is_finite() && t1 >= t0) {
        return Err(Error::InvalidParameter(format!("invalid time span ({t0}, {t1})")));
    }

    let ctl = rk::StepControl {
        rel_tol: cfg.rel_tol,
        abs_tol: cfg.abs_tol,
        max_step: cfg.max_step,
        initial_step: cfg.initial_step,
        max_steps: cfg.max_steps,
    };
    let mut stops: Vec<f64> = match &cfg.record {
        Record::Times(ts) => ts.iter().copied().filter(|&s| s > t0 && s < t1).collect(),
        _ => Vec::new(),
    };
    stops.sort_by(f64::total_cmp);
    stops.dedup();

    let mut rhs = Rhs::new(params);
    let mut times = Vec::new();
    let mut states: Vec<CMatrix> = Vec::new();
    let mut next_stop = 0usize;
    let observe = |t: f64, y: &CMatrix| {
        let keep = match &cfg.record {
            Record::EveryStep => true,
            Record::FinalOnly => false,
            Record::Times(_) => {
                if t == t0 {
                    true
                } else if next_stop < stops.len() && t == stops[next_stop] {
                    next_stop += 1;
                    true
                } else {
                    false
                }
            }
        };
        if keep {
            times.push(t);
            states.push(y.clone());
        }
    };

    let (y, stats, stop) = rk::dopri5(
        |t, y, out| rhs.eval(t, y, out),
        t0,
        t1,
        rho0.elements().clone(),
        &ctl,
        &stops,
        symmetrize,
        observe,
    );

    let wrap = |m: CMatrix| DensityMatrix::new(m, basis.clone()).expect("dimension preserved by the integrator");
    let mut traj = Trajectory {
        times,
        states: states.into_iter().map(wrap).collect(),
        stats,
    };
    match stop {
        None => {
            if traj.times.last() != Some(&t1) {
                traj.times.push(t1);
                traj.states.push(wrap(y));
            }
            Ok(traj)
        }
        Some(rk::Stop::Rhs(e)) => Err(e),
        Some(rk::Stop::Failed(kind, t)) => {
            if traj.times.last() != Some(&t) {
                traj.times.push(t);
                traj.states.push(wrap(y));
            }
            Err(Error::Integration(Box::new(IntegrationFailure {
                kind,
                t,
                partial: traj,
            })))
        }
    }
}

/// Final state of an integration.
pub fn evolve(
    params: &LambdaParams,
    rho0: &DensityMatrix,
    t_span: (f64, f64),
    cfg: &IntegratorConfig,
) -> Result<(DensityMatrix, IntegratorStats)> {
    let cfg = IntegratorConfig {
        record: Record::FinalOnly,
        ..cfg.clone()
    };
    let mut traj = integrate(params, rho0, t_span, &cfg)?;
    let rho = traj.states.pop().ok_or(Error::EmptyResult)?;
    Ok((rho, traj.stats))
}

/// Removes the free ground-state precession accumulated up to `t`:
/// `ρ_I = e^{iδP₁t} ρ e^{−iδP₁t}`. Works on `dot3` and `dot3⊗fock` states.
pub fn to_larmor_frame(rho: &DensityMatrix, zeeman_splitting: f64, t: f64) -> Result<DensityMatrix> {
    larmor_rotate(rho, zeeman_splitting * t)
}

/// Inverse of [`to_larmor_frame`].
pub fn from_larmor_frame(rho: &DensityMatrix, zeeman_splitting: f64, t: f64) -> Result<DensityMatrix> {
    larmor_rotate(rho, -zeeman_splitting * t)
}

fn larmor_rotate(rho: &DensityMatrix, angle: f64) -> Result<DensityMatrix> {
    let nf = rho
        .basis()
        .dot_field_cutoff()
        .ok_or_else(|| Error::BasisMismatch(format!("expected dot3 or dot3⊗fock, got {}", rho.basis())))?
        + 1;
    let phase = |k: usize| {
        if k / nf == G1 {
            C64::from_polar(1.0, angle)
        } else {
            C64::from(1.0)
        }
    };
    let mut m = rho.elements().clone();
    for ((r, c), v) in m.iter_mut().enumerate().map(|(i, v)| ((i % (3 * nf), i / (3 * nf)), v)) {
        *v *= phase(r) * phase(c).conj();
    }
    DensityMatrix::new(m, rho.basis().clone())
}

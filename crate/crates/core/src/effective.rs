//! Adiabatic-elimination effective theory: effective field, effective Rabi
//! frequency, delay-controlled rotations, the dispersive coupling, and an
//! SU(2) compiler onto clock-referenced pulse trains.
//!
//! Bloch convention: `|0⟩` is the +z pole and `S = σ/2`. With `H = δP₁`, free
//! precession over time `t` is `exp(iδt S_z)`, so one clock period is the
//! global sign `−I`.
//!
//! Delay law: a pulse arriving at fraction `f` of the clock period rotates
//! about the equatorial axis at azimuth `2πf` (in the frame co-rotating with
//! the Larmor precession, referenced to `t = 0`). The rotation unitary below
//! has axis `(cos φ, −sin φ, 0)`, i.e. azimuth `−φ`, so `f = −φ/2π mod 1`.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use serde::{Deserialize, Serialize};

use crate::dynamics::LambdaParams;
use crate::error::{Error, Result};
use crate::pulses::{PulseShape, PulseTrain, MIN_SEPARATION_FWHMS};
use crate::qcore::{spin, CMatrix, C64};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffectiveField {
    pub bx: f64,
    pub by: f64,
    pub bz: f64,
    /// Trace part `G` of the eliminated two-level Hamiltonian.
    pub global_phase_rate: f64,
}

fn lorentz_denominator(params: &LambdaParams) -> f64 {
    let d = params.detuning;
    let g = params.decay_rate;
    4.0 * d * d + g * g
}

/// Warns when the detuning is not large compared with the other rates.
pub fn check_adiabatic(params: &LambdaParams, max_rabi: f64) -> bool {
    let scale = max_rabi.max(params.zeeman_splitting.abs()).max(params.decay_rate);
    let ok = params.detuning.abs() >= 10.0 * scale;
    if !ok {
        log::warn!(
            "adiabatic elimination questionable: |Δ| = {} < 10 · {}",
            params.detuning.abs(),
            scale
        );
    }
    ok
}

pub fn effective_field(params: &LambdaParams, omega0: C64, omega1: C64) -> Result<EffectiveField> {
    let delta_det = params.detuning;
    if delta_det == 0.0 {
        return Err(Error::ZeroDetuning);
    }
    let delta = params.zeeman_splitting;
    let den = lorentz_denominator(params);
    let (p0, p1) = (omega0.norm_sqr(), omega1.norm_sqr());
    let bz = -delta + (delta_det * (p1 - p0) + delta * p0) / den;
    let bxy = -2.0 * delta_det * omega1.conj() * omega0 / den;
    Ok(EffectiveField {
        bx: bxy.re,
        by: -bxy.im,
        bz,
        global_phase_rate: 0.5 * delta - 0.5 * delta_det * (p0 + p1) / den,
    })
}

/// `√(4Δ²|Ω₁|⁴/(4Δ²+Γ²)² + δ²)` for a symmetric Λ.
pub fn effective_rabi(params: &LambdaParams, omega1: C64) -> f64 {
    let den = lorentz_denominator(params);
    let d = params.detuning;
    let p = omega1.norm_sqr();
    let delta = params.zeeman_splitting;
    if den == 0.0 {
        return delta.abs();
    }
    (4.0 * d * d * p * p / (den * den) + delta * delta).sqrt()
}

/// Rotation angle imparted by the Raman field alone, `∫ 2|Δ||Ω|²/(4Δ²+Γ²) dt`,
/// for a symmetric Λ driven by a Gaussian pulse. Free precession is not
/// included; it is accounted for by the clock-frame bookkeeping.
pub fn pulse_rotation_angle(params: &LambdaParams, pulse: &PulseShape) -> f64 {
    let den = lorentz_denominator(params);
    if den == 0.0 {
        return 0.0;
    }
    2.0 * params.detuning.abs() * pulse.intensity_area() / den
}

/// `∫|Ω_eff(t)| dt` with the exact radical (δ included) over `window`,
/// by composite Simpson quadrature.
pub fn radical_rotation_angle(params: &LambdaParams, pulse: &PulseShape, window: (f64, f64)) -> f64 {
    let n = 4000;
    let h = (window.1 - window.0) / n as f64;
    let f = |t: f64| effective_rabi(params, crate::pulses::envelope_at(pulse, t));
    let mut acc = f(window.0) + f(window.1);
    for k in 1..n {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(window.0 + k as f64 * h);
    }
    acc * h / 3.0
}

/// Peak Rabi frequency for which `pulse_rotation_angle` equals `theta`.
pub fn peak_rabi_for_angle(params: &LambdaParams, theta: f64, fwhm: f64) -> Result<f64> {
    if params.detuning == 0.0 {
        return Err(Error::ZeroDetuning);
    }
    let unit = PulseShape::gaussian(1.0, fwhm, 0.0)?;
    let per_intensity = pulse_rotation_angle(params, &unit);
    Ok((theta / per_intensity).sqrt())
}

/// Far-detuned magnitude `|Δ|` at which a pulse rotates by `theta`: the larger
/// root of `2|Δ|A = θ(4Δ² + Γ²)` with `A = Ω²σ√π`.
pub fn detuning_for_angle(theta: f64, pulse: &PulseShape, decay_rate: f64) -> Result<f64> {
    if !(theta > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "rotation angle must be > 0, got {theta}"
        )));
    }
    let a = pulse.intensity_area();
    let disc = a * a - 4.0 * theta * theta * decay_rate * decay_rate;
    if disc < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "pulse area too small for a {theta} rad rotation at this decay rate"
        )));
    }
    Ok((a + disc.sqrt()) / (4.0 * theta))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RotationSpec {
    pub theta: f64,
    pub phi: f64,
}

impl RotationSpec {
    /// Both angles reduced to `[0, 2π)`; `+ 0.0` turns `−0` into `0`.
    pub fn new(theta: f64, phi: f64) -> Self {
        RotationSpec {
            theta: theta.rem_euclid(TAU) + 0.0,
            phi: phi.rem_euclid(TAU) + 0.0,
        }
    }

    /// Clock phase for a pulse arriving at `delay_fraction` of the period.
    pub fn from_delay(theta: f64, delay_fraction: f64) -> Self {
        RotationSpec::new(theta, -TAU * delay_fraction)
    }

    pub fn delay_fraction(&self) -> f64 {
        let f = (-self.phi / TAU).rem_euclid(1.0);
        if f >= 1.0 {
            0.0
        } else {
            f
        }
    }

    /// Azimuth of the rotation axis in the equatorial plane, `−φ`.
    pub fn axis_azimuth(&self) -> f64 {
        (-self.phi).rem_euclid(TAU)
    }
}

/// `−exp[−iθ(S_x cos φ − S_y sin φ)]` on `{|0⟩, |1⟩}`.
pub fn rotation_unitary(spec: &RotationSpec) -> CMatrix {
    let axis = [spec.phi.cos(), -spec.phi.sin(), 0.0];
    -spin::rotation(axis, spec.theta)
}

/// `1 − |tr(U†V)|/2`, insensitive to global phase.
pub fn gate_distance(u: &CMatrix, v: &CMatrix) -> f64 {
    1.0 - (u.adjoint() * v).trace().norm() / 2.0
}

fn unitarity_error(u: &CMatrix) -> f64 {
    let n = u.nrows();
    (u.adjoint() * u - CMatrix::identity(n, n)).camax()
}

/// A rotation placed on the clock grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScheduledRotation {
    pub slot: u32,
    pub spec: RotationSpec,
}

impl ScheduledRotation {
    pub fn arrival(&self, clock_period: f64) -> f64 {
        (self.slot as f64 + self.spec.delay_fraction()) * clock_period
    }
}

/// Output of [`compile_su2`]: time-ordered rotations plus a trailing free
/// precession ("wait") expressed as a fraction of the clock period.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompiledGate {
    pub clock_period: f64,
    pub rotations: Vec<ScheduledRotation>,
    pub wait_fraction: f64,
}

impl CompiledGate {
    /// Composed unitary in the clock frame, up to global phase.
    pub fn unitary(&self) -> CMatrix {
        let specs: Vec<RotationSpec> = self.rotations.iter().map(|r| r.spec).collect();
        let wait = spin::rotation([0.0, 0.0, 1.0], -TAU * self.wait_fraction);
        wait * recompose(&specs)
    }

    /// Arrival time of the last pulse (ps); zero for an empty gate.
    pub fn last_arrival(&self) -> f64 {
        self.rotations.last().map_or(0.0, |r| r.arrival(self.clock_period))
    }

    /// Realizes the rotations as Gaussian pulses of intensity FWHM `fwhm`,
    /// with peak Rabi frequencies set from the Raman rotation angle at the
    /// detuning and decay rate of `params`.
    pub fn to_train(&self, params: &LambdaParams, fwhm: f64) -> Result<PulseTrain> {
        let mut train = PulseTrain::new(self.clock_period);
        for r in &self.rotations {
            let peak = peak_rabi_for_angle(params, r.spec.theta, fwhm)?;
            let pulse = PulseShape::gaussian(peak, fwhm, 0.0)?;
            train.push(r.slot, r.spec.delay_fraction(), pulse);
        }
        Ok(train)
    }
}

/// Product of rotation unitaries applied in order (first element acts first).
pub fn recompose(specs: &[RotationSpec]) -> CMatrix {
    specs
        .iter()
        .fold(CMatrix::identity(2, 2), |acc, s| rotation_unitary(s) * acc)
}

const ANGLE_EPS: f64 = 1e-12;

/// Z–X–Z Euler angles `(a, b, c)` with `U ∝ Rz(a) Rx(b) Rz(c)`, where
/// `R_n(t) = exp(−it n·S)` and `b ∈ [0, π]`.
fn zxz_angles(u: &CMatrix) -> (f64, f64, f64) {
    // Rz(a)Rx(b)Rz(c) has u11 = cos(b/2)e^{i(a+c)/2}, u10 = −i sin(b/2)e^{i(a−c)/2}.
    let scale = u.determinant().sqrt();
    let (u00, u01, u10, u11) = (
        u[(0, 0)] / scale,
        u[(0, 1)] / scale,
        u[(1, 0)] / scale,
        u[(1, 1)] / scale,
    );
    let b = 2.0 * u01.norm().atan2(u00.norm());
    let half_sum = (u11.norm() > ANGLE_EPS).then(|| u11.arg());
    let half_diff = (u10.norm() > ANGLE_EPS).then(|| u10.arg() + FRAC_PI_2);
    match (half_sum, half_diff) {
        (Some(s), Some(d)) => (s + d, b, s - d),
        (Some(s), None) => (2.0 * s, b, 0.0),
        (None, Some(d)) => (2.0 * d, b, 0.0),
        (None, None) => (0.0, b, 0.0),
    }
}

/// Distance of an angle from the nearest multiple of `period`.
fn wrapped(x: f64, period: f64) -> f64 {
    let r = x.rem_euclid(period);
    r.min(period - r)
}

/// Compiles a 2×2 unitary into at most three delayed pulses.
///
/// With `U ∝ Rz(a)Rx(b)Rz(c) = R_{axis a}(b) · Rz(a + c)`, the z factor is
/// realized by two π pulses whose axes differ by `(a + c)/2`, and the last
/// pulse rotates by `b` about azimuth `a`. Pure z targets produce no pulses and
/// a trailing wait instead. Pulses are packed into the earliest slots that
/// keep `MIN_SEPARATION_FWHMS` amplitude widths between arrivals; the free
/// axis of the π pair is chosen on a fixed grid to make the schedule shortest.
pub fn compile_su2(target: &CMatrix, clock_period: f64, fwhm: f64) -> Result<CompiledGate> {
    if target.shape() != (2, 2) {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: target.nrows(),
        });
    }
    let err = unitarity_error(target);
    if !(err < 1e-10) {
        return Err(Error::NotUnitary(err));
    }
    if !(clock_period > 0.0 && fwhm > 0.0) {
        return Err(Error::InvalidParameter(
            "clock period and pulse width must be > 0".into(),
        ));
    }

    let (a, b, c) = zxz_angles(target);
    let gamma = a + c;
    let has_x = wrapped(b, TAU) > ANGLE_EPS;
    let has_z = wrapped(gamma, TAU) > ANGLE_EPS;

    if !has_x {
        // Rz(γ) = exp(i(−γ) S_z): free precession through −γ.
        let wait_fraction = if has_z { (-gamma / TAU).rem_euclid(1.0) } else { 0.0 };
        return Ok(CompiledGate {
            clock_period,
            rotations: Vec::new(),
            wait_fraction,
        });
    }

    let last = |az: f64| RotationSpec::new(b, -az);
    let min_sep = MIN_SEPARATION_FWHMS * std::f64::consts::SQRT_2 * fwhm;

    if !has_z {
        let rotations = schedule(&[last(a)], clock_period, min_sep);
        return Ok(CompiledGate {
            clock_period,
            rotations,
            wait_fraction: 0.0,
        });
    }

    // R_{ψ2}(π) R_{ψ1}(π) = −Rz(2(ψ2 − ψ1)), so ψ2 = ψ1 + γ/2 up to a
    // half turn (reversing a π axis only flips the global sign). Likewise
    // R_{a}(b) = −R_{a+π}(2π − b).
    const GRID: usize = 720;
    let finals = [last(a), RotationSpec::new(TAU - b, -(a + PI))];
    let mut best: Option<(f64, Vec<ScheduledRotation>)> = None;
    for k in 0..GRID {
        let psi1 = TAU * k as f64 / GRID as f64;
        for flip in [0.0, PI] {
            let psi2 = psi1 + gamma / 2.0 + flip;
            for fin in finals {
                let specs = [RotationSpec::new(PI, -psi1), RotationSpec::new(PI, -psi2), fin];
                let cand = schedule(&specs, clock_period, min_sep);
                let end = cand.last().map_or(0.0, |r| r.arrival(clock_period));
                if best.as_ref().is_none_or(|(e, _)| end < e - 1e-12) {
                    best = Some((end, cand));
                }
            }
        }
    }
    Ok(CompiledGate {
        clock_period,
        rotations: best.expect("grid is nonempty").1,
        wait_fraction: 0.0,
    })
}

/// Places time-ordered rotations into the earliest slots respecting `min_sep`.
fn schedule(specs: &[RotationSpec], clock_period: f64, min_sep: f64) -> Vec<ScheduledRotation> {
    let mut out: Vec<ScheduledRotation> = Vec::with_capacity(specs.len());
    for spec in specs {
        let frac = spec.delay_fraction();
        let mut slot = out.last().map_or(0, |r| r.slot);
        if let Some(prev) = out.last() {
            let earliest = prev.arrival(clock_period) + min_sep;
            while (slot as f64 + frac) * clock_period < earliest - 1e-12 {
                slot += 1;
            }
        }
        out.push(ScheduledRotation { slot, spec: *spec });
    }
    out
}

/// `J = δg²/(4Δ² + Γ²)`.
pub fn dispersive_coupling(params: &LambdaParams, g: f64) -> f64 {
    let den = lorentz_denominator(params);
    if den == 0.0 {
        return 0.0;
    }
    params.zeeman_splitting * g * g / den
}

/// `r = Δg²|α|² / ((4Δ² + Γ²) δ)`; the dispersive picture needs `r ≪ 1`.
pub fn dispersive_validity(params: &LambdaParams, g: f64, alpha: C64) -> Result<f64> {
    let delta = params.zeeman_splitting;
    if delta == 0.0 {
        return Err(Error::InvalidParameter(
            "dispersive validity needs a nonzero splitting".into(),
        ));
    }
    let den = lorentz_denominator(params);
    if den == 0.0 {
        return Err(Error::ZeroDetuning);
    }
    Ok((params.detuning * g * g * alpha.norm_sqr() / den / delta).abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::Dephasing;
    use crate::qcore::spin::{sx, sy, sz};
    use approx::assert_abs_diff_eq;

    fn params(delta: f64, det: f64, gamma: f64) -> LambdaParams {
        LambdaParams::new(delta, det, gamma, Dephasing::Off)
    }

    fn expm_i(h: &CMatrix, t: f64) -> CMatrix {
        // exp(−i t h) for Hermitian h via eigen-decomposition.
        let eig = h.clone().symmetric_eigen();
        let phases = CMatrix::from_diagonal(&eig.eigenvalues.map(|l| C64::from_polar(1.0, -t * l)));
        &eig.eigenvectors * phases * eig.eigenvectors.adjoint()
    }

    #[test]
    fn field_free_limit() {
        let f = effective_field(&params(0.6, 50.0, 0.1), C64::from(0.0), C64::from(0.0)).unwrap();
        assert_eq!((f.bx, f.by, f.bz), (0.0, 0.0, -0.6));
    }

    #[test]
    fn field_symmetric_real_drive() {
        let (delta, det, om) = (0.6, 50.0, 7.0);
        let f = effective_field(&params(delta, det, 0.0), C64::from(om), C64::from(om)).unwrap();
        assert_abs_diff_eq!(f.bx, -om * om / (2.0 * det), epsilon = 1e-14);
        assert_eq!(f.by, 0.0);
        assert_abs_diff_eq!(f.bz, -delta + delta * om * om / (4.0 * det * det), epsilon = 1e-14);
    }

    #[test]
    fn field_quadrature_drive_sets_y() {
        let (det, om) = (50.0, 7.0);
        let f = effective_field(&params(0.6, det, 0.0), C64::from(om), C64::new(0.0, om)).unwrap();
        assert_abs_diff_eq!(f.bx, 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(f.by, -om * om / (2.0 * det), epsilon = 1e-14);
    }

    #[test]
    fn field_needs_detuning() {
        assert!(matches!(
            effective_field(&params(0.6, 0.0, 0.1), C64::from(1.0), C64::from(1.0)),
            Err(Error::ZeroDetuning)
        ));
    }

    #[test]
    fn rabi_limits() {
        let p = params(0.6, 40.0, 0.2);
        assert_abs_diff_eq!(effective_rabi(&p, C64::from(0.0)), 0.6, epsilon = 1e-15);
        let q = params(0.0, 40.0, 0.0);
        assert_abs_diff_eq!(effective_rabi(&q, C64::from(5.0)), 25.0 / 80.0, epsilon = 1e-15);
    }

    #[test]
    fn rabi_far_detuned_example() {
        let delta = TAU * 0.1;
        let det = TAU * 1e4;
        let p = params(delta, det, 0.005);
        let om = (10.0 * delta * 2.0 * det).sqrt();
        let expect = 101f64.sqrt() * delta;
        assert!((effective_rabi(&p, C64::from(om)) / expect - 1.0).abs() < 5e-3);
    }

    #[test]
    fn rotation_unitary_examples() {
        let id = rotation_unitary(&RotationSpec::new(0.0, 0.0));
        assert_abs_diff_eq!((id + CMatrix::identity(2, 2)).camax(), 0.0, epsilon = 1e-15);

        // −exp(−iπS_x) = i σ_x
        let x = rotation_unitary(&RotationSpec::new(PI, 0.0));
        let expect = sx() * C64::new(0.0, 2.0);
        assert_abs_diff_eq!((x - expect).camax(), 0.0, epsilon = 1e-15);

        // φ = π/2: axis (0, −1, 0), so −exp(iπS_y) = −i σ_y.
        let y = rotation_unitary(&RotationSpec::new(PI, PI / 2.0));
        let expect = sy() * C64::new(0.0, -2.0);
        assert_abs_diff_eq!((y - expect).camax(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn rotation_unitary_matches_precession_sandwich() {
        for &(theta, phi) in &[(0.3, 0.0), (PI, 1.2), (2.5, 4.0), (1.0, 6.0)] {
            let u = rotation_unitary(&RotationSpec::new(theta, phi));
            let v = expm_i(&sz(), -phi) * expm_i(&sx(), theta) * expm_i(&sz(), -(TAU - phi));
            assert_abs_diff_eq!((u - v).camax(), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn delay_roundtrip() {
        for f in [0.0, 0.25, 0.5, 0.9] {
            let s = RotationSpec::from_delay(1.0, f);
            assert_abs_diff_eq!(s.delay_fraction(), f, epsilon = 1e-15);
            assert_abs_diff_eq!(s.axis_azimuth(), TAU * f, epsilon = 1e-14);
        }
    }

    #[test]
    fn compile_identity_is_empty() {
        let g = compile_su2(&CMatrix::identity(2, 2), 10.0, 0.1).unwrap();
        assert!(g.rotations.is_empty());
        assert_eq!(g.wait_fraction, 0.0);
    }

    #[test]
    fn compile_x_pi_is_single_pulse() {
        let target = spin::rotation([1.0, 0.0, 0.0], PI);
        let g = compile_su2(&target, 10.0, 0.1).unwrap();
        assert_eq!(g.rotations.len(), 1);
        assert_abs_diff_eq!(g.rotations[0].spec.theta, PI, epsilon = 1e-12);
        assert_abs_diff_eq!(g.rotations[0].spec.delay_fraction(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn compile_hadamard_three_pulses_within_one_period() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let h = CMatrix::from_row_slice(2, 2, &[C64::from(s), C64::from(s), C64::from(s), C64::from(-s)]);
        let g = compile_su2(&h, 10.0, 0.1).unwrap();
        assert_eq!(g.rotations.len(), 3);
        assert!(gate_distance(&h, &g.unitary()) < 1e-9);
        assert!(g.last_arrival() < 10.0);
    }

    #[test]
    fn compile_pure_z_emits_wait() {
        let target = spin::rotation([0.0, 0.0, 1.0], 0.7);
        let g = compile_su2(&target, 10.0, 0.1).unwrap();
        assert!(g.rotations.is_empty());
        assert!(gate_distance(&target, &g.unitary()) < 1e-12);
    }

    #[test]
    fn compile_rejects_non_unitary() {
        let m = CMatrix::from_element(2, 2, C64::from(1.0));
        assert!(matches!(compile_su2(&m, 10.0, 0.1), Err(Error::NotUnitary(_))));
    }

    #[test]
    fn dispersive_limits() {
        assert_eq!(dispersive_coupling(&params(0.6, 25.0, 0.1), 0.0), 0.0);
        assert_eq!(dispersive_coupling(&params(0.0, 25.0, 0.1), 0.4), 0.0);
        assert_abs_diff_eq!(
            dispersive_coupling(&params(0.6, 25.0, 0.0), 0.4),
            0.6 * 0.16 / 2500.0,
            epsilon = 1e-18
        );
        let p = params(0.6, 25.0, 0.1);
        assert_eq!(dispersive_validity(&p, 0.4, C64::from(0.0)).unwrap(), 0.0);
        assert_eq!(dispersive_validity(&p, 0.0, C64::from(3.0)).unwrap(), 0.0);
        let r1 = dispersive_validity(&p, 0.4, C64::new(1.0, 2.0)).unwrap();
        let r2 = dispersive_validity(&p, 0.4, C64::new(2.0, 4.0)).unwrap();
        assert_abs_diff_eq!(r2 / r1, 4.0, epsilon = 1e-12);
        assert!(dispersive_validity(&params(0.0, 25.0, 0.1), 0.4, C64::from(1.0)).is_err());
    }

    #[test]
    fn angle_inverses() {
        let p = params(0.6, -900.0, 0.005);
        let peak = peak_rabi_for_angle(&p, PI / 2.0, 0.1).unwrap();
        let pulse = PulseShape::gaussian(peak, 0.1, 0.0).unwrap();
        assert_abs_diff_eq!(pulse_rotation_angle(&p, &pulse), PI / 2.0, epsilon = 1e-12);
        let det = detuning_for_angle(PI / 2.0, &pulse, 0.005).unwrap();
        assert_abs_diff_eq!(det, 900.0, epsilon = 1e-8);
    }
}

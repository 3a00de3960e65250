//! Single-pulse rotation fidelity and the detuning optimization behind the
//! single-qubit sweep.

use crate::dynamics::{evolve, to_larmor_frame, Dephasing, DriveSpec, IntegratorConfig, IntegratorStats, LambdaParams};
use crate::effective::{detuning_for_angle, pulse_rotation_angle};
use crate::error::{Error, Result};
use crate::pulses::PulseShape;
use crate::qcore::{fidelity, Basis, DensityMatrix, DotLevel, KetState, C64};

/// Detuning scan in units of the peak Rabi frequency.
pub const SCAN_SPAN: (f64, f64) = (10.0, 1e4);
pub const SCAN_POINTS_PER_DECADE: f64 = 20.0;
/// Scan points above this multiple of the detuning that nominally gives the
/// target angle are skipped: beyond it the pulse under-rotates by 4x or more.
pub const SCAN_PRUNE_FACTOR: f64 = 4.0;
/// Golden-section stopping width in `ln Δ`.
pub const REFINE_TOL: f64 = 1e-5;

const INV_PHI: f64 = 0.618_033_988_749_894_8;

#[derive(Debug, Clone, PartialEq)]
pub struct SingleQubitSetup {
    pub zeeman_splitting: f64,
    pub decay_rate: f64,
    pub dephasing: Dephasing,
    pub fwhm: f64,
    /// Target rotation angle (rad).
    pub theta: f64,
    /// Sign applied to the scanned detuning magnitude.
    pub detuning_sign: f64,
    pub window_sigmas: f64,
    pub integrator: IntegratorConfig,
}

impl SingleQubitSetup {
    pub fn window(&self) -> Result<(f64, f64)> {
        let sigma = PulseShape::gaussian(1.0, self.fwhm, 0.0)?.sigma();
        Ok((-self.window_sigmas * sigma, self.window_sigmas * sigma))
    }

    fn params(&self, pulse: PulseShape, detuning: f64) -> LambdaParams {
        LambdaParams::new(self.zeeman_splitting, detuning, self.decay_rate, self.dephasing)
            .with_drive(DriveSpec::symmetric_pulse(pulse))
    }

    /// Ideal output for input `|0⟩`. A pulse at negative detuning rotates
    /// about `+x`, one at positive detuning about `−x`.
    pub fn target_state(&self) -> KetState {
        let (c, s) = ((0.5 * self.theta).cos(), (0.5 * self.theta).sin());
        let sign = if self.detuning_sign < 0.0 { -1.0 } else { 1.0 };
        KetState::from_slice(&[C64::from(c), C64::new(0.0, sign * s), C64::from(0.0)], Basis::dot3())
            .expect("three amplitudes")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RotationOutcome {
    pub fidelity: f64,
    pub excited_population: f64,
    pub stats: IntegratorStats,
}

/// Full master-equation run of one pulse centred at `t = 0`, starting in
/// `|0⟩`; fidelity is taken in the Larmor frame referenced to `t = 0`.
pub fn simulate_rotation(setup: &SingleQubitSetup, peak_rabi: f64, detuning: f64) -> Result<RotationOutcome> {
    let pulse = PulseShape::gaussian(peak_rabi, setup.fwhm, 0.0)?;
    let params = setup.params(pulse, detuning);
    let window = setup.window()?;
    let rho0 = DensityMatrix::from_pure(&KetState::dot(DotLevel::Ground0));
    let (rho, stats) = evolve(&params, &rho0, window, &setup.integrator)?;
    let rho = to_larmor_frame(&rho, setup.zeeman_splitting, window.1)?;
    Ok(RotationOutcome {
        fidelity: fidelity(&rho, &setup.target_state())?,
        excited_population: rho.elements()[(DotLevel::Excited.index(), DotLevel::Excited.index())].re,
        stats,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetuningOptimum {
    /// Signed optimal detuning (rad/ps).
    pub detuning: f64,
    pub fidelity: f64,
    pub excited_population: f64,
    /// Rotation angle predicted by the adiabatic formula at the optimum.
    pub predicted_angle: f64,
    pub evaluations: usize,
    pub stats: IntegratorStats,
}

/// Log-spaced scan magnitudes for `peak_rabi`.
pub fn scan_grid(setup: &SingleQubitSetup, peak_rabi: f64) -> Result<Vec<f64>> {
    if !(peak_rabi > 0.0 && peak_rabi.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "peak Rabi frequency must be > 0, got {peak_rabi}"
        )));
    }
    let lo = SCAN_SPAN.0 * peak_rabi;
    let mut hi = SCAN_SPAN.1 * peak_rabi;
    if setup.theta > 0.0 {
        let pulse = PulseShape::gaussian(peak_rabi, setup.fwhm, 0.0)?;
        match detuning_for_angle(setup.theta, &pulse, setup.decay_rate) {
            Ok(d) => hi = hi.min(SCAN_PRUNE_FACTOR * d),
            Err(_) => hi = lo,
        }
    }
    if hi <= lo {
        return Err(Error::InvalidParameter(format!(
            "no detuning above {lo:.4e} rad/ps reaches {:.4} rad at peak Rabi frequency {peak_rabi:.4e} rad/ps",
            setup.theta
        )));
    }
    let decades = (hi / lo).log10();
    let n = (decades * SCAN_POINTS_PER_DECADE).ceil() as usize + 1;
    Ok((0..n)
        .map(|k| lo * 10f64.powf(decades * k as f64 / (n - 1) as f64))
        .collect())
}

/// Grid scan over `|Δ|` followed by golden-section refinement in `ln|Δ|`
/// around the best grid point.
pub fn optimize_detuning(setup: &SingleQubitSetup, peak_rabi: f64) -> Result<DetuningOptimum> {
    let sign = if setup.detuning_sign < 0.0 { -1.0 } else { 1.0 };
    let mut stats = IntegratorStats::default();
    let mut evaluations = 0;
    let mut eval = |mag: f64| -> Result<RotationOutcome> {
        let out = simulate_rotation(setup, peak_rabi, sign * mag)?;
        stats += out.stats;
        evaluations += 1;
        Ok(out)
    };

    let grid = scan_grid(setup, peak_rabi)?;
    let mut scores = Vec::with_capacity(grid.len());
    for &d in &grid {
        scores.push(eval(d)?);
    }
    let best = (0..grid.len())
        .max_by(|&a, &b| scores[a].fidelity.total_cmp(&scores[b].fidelity))
        .expect("grid is nonempty");
    let (mut best_mag, mut best_out) = (grid[best], scores[best].clone());

    let mut a = grid[best.saturating_sub(1)].ln();
    let mut b = grid[(best + 1).min(grid.len() - 1)].ln();
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = eval(x1.exp())?;
    let mut f2 = eval(x2.exp())?;
    while b - a > REFINE_TOL {
        if f1.fidelity >= f2.fidelity {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = eval(x1.exp())?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = eval(x2.exp())?;
        }
        for (x, f) in [(x1, &f1), (x2, &f2)] {
            if f.fidelity > best_out.fidelity {
                best_mag = x.exp();
                best_out = f.clone();
            }
        }
    }

    let detuning = sign * best_mag;
    let pulse = PulseShape::gaussian(peak_rabi, setup.fwhm, 0.0)?;
    Ok(DetuningOptimum {
        detuning,
        fidelity: best_out.fidelity,
        excited_population: best_out.excited_population,
        predicted_angle: pulse_rotation_angle(&setup.params(pulse, detuning), &pulse),
        evaluations,
        stats,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{PI, TAU};

    fn setup(theta: f64) -> SingleQubitSetup {
        SingleQubitSetup {
            zeeman_splitting: TAU * 0.1,
            decay_rate: 1.0 / 200.0,
            dephasing: Dephasing::T2 { t2: 1e7 },
            fwhm: 0.1,
            theta,
            detuning_sign: -1.0,
            window_sigmas: 8.0,
            integrator: IntegratorConfig::default().with_tolerances(1e-9, 1e-9),
        }
    }

    #[test]
    fn no_pulse_keeps_ground_state() {
        let out = simulate_rotation(&setup(0.0), 1e-6, -100.0).unwrap();
        assert!((out.fidelity - 1.0).abs() < 1e-10);
    }

    #[test]
    fn grid_spans_and_prunes() {
        let s = setup(0.0);
        let g = scan_grid(&s, 10.0).unwrap();
        assert_eq!(g.len(), 61);
        assert!((g[0] - 100.0).abs() < 1e-9 && (g[60] - 1e5).abs() < 1e-6);
        let g = scan_grid(&setup(PI), 1200.0).unwrap();
        let pulse = PulseShape::gaussian(1200.0, 0.1, 0.0).unwrap();
        let d = detuning_for_angle(PI, &pulse, 1.0 / 200.0).unwrap();
        assert!(*g.last().unwrap() <= 4.0 * d * (1.0 + 1e-12));
        assert!(scan_grid(&setup(PI), 50.0).is_err());
    }

    #[test]
    fn optimum_sits_near_the_nominal_detuning() {
        let s = setup(PI);
        let opt = optimize_detuning(&s, 1500.0).unwrap();
        let pulse = PulseShape::gaussian(1500.0, 0.1, 0.0).unwrap();
        let nominal = detuning_for_angle(PI, &pulse, s.decay_rate).unwrap();
        assert!(opt.detuning < 0.0);
        assert!(
            (opt.detuning.abs() / nominal - 1.0).abs() < 0.05,
            "{} vs {nominal}",
            opt.detuning
        );
        assert!(opt.fidelity > 0.99);
        assert!((opt.predicted_angle - PI).abs() < 0.2);
    }
}

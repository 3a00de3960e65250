//! Rotation-axis extraction from simulated single-pulse channels.

use nalgebra::{Matrix3, Vector3};

use crate::dynamics::{
    evolve, from_larmor_frame, to_larmor_frame, Dephasing, DriveSpec, IntegratorConfig, IntegratorStats, LambdaParams,
};
use crate::effective::{peak_rabi_for_angle, RotationSpec};
use crate::error::{Error, Result};
use crate::pulses::PulseShape;
use crate::qcore::{spin, Basis, CMatrix, DensityMatrix, C64};

/// Affine Bloch map `r ↦ M r + c` of the ground-state qubit in the Larmor
/// frame referenced to `t = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochChannel {
    pub matrix: Matrix3<f64>,
    pub offset: Vector3<f64>,
}

impl BlochChannel {
    pub fn apply(&self, r: Vector3<f64>) -> Vector3<f64> {
        self.matrix * r + self.offset
    }
}

fn embed_qubit(r: [f64; 3]) -> DensityMatrix {
    let q = spin::from_bloch(r);
    let mut m = CMatrix::zeros(3, 3);
    m.view_mut((0, 0), (2, 2)).copy_from(&q);
    DensityMatrix::new(m, Basis::dot3()).expect("3x3 state")
}

fn qubit_bloch(rho: &DensityMatrix) -> Vector3<f64> {
    let q = rho.elements().view((0, 0), (2, 2)).into_owned();
    Vector3::from(spin::bloch_vector(&q))
}

/// Propagates a Larmor-frame Bloch vector through `params` over `window`.
pub fn evolve_bloch(
    params: &LambdaParams,
    window: (f64, f64),
    r0: Vector3<f64>,
    cfg: &IntegratorConfig,
) -> Result<(Vector3<f64>, IntegratorStats)> {
    let delta = params.zeeman_splitting;
    let rho0 = from_larmor_frame(&embed_qubit([r0.x, r0.y, r0.z]), delta, window.0)?;
    let (rho, stats) = evolve(params, &rho0, window, cfg)?;
    Ok((qubit_bloch(&to_larmor_frame(&rho, delta, window.1)?), stats))
}

/// Reconstructs the channel from the images of `±z`, `+x` and `+y`.
pub fn bloch_channel(
    params: &LambdaParams,
    window: (f64, f64),
    cfg: &IntegratorConfig,
) -> Result<(BlochChannel, IntegratorStats)> {
    let mut stats = IntegratorStats::default();
    let mut run = |r: [f64; 3]| -> Result<Vector3<f64>> {
        let (out, s) = evolve_bloch(params, window, Vector3::from(r), cfg)?;
        stats += s;
        Ok(out)
    };
    let zp = run([0.0, 0.0, 1.0])?;
    let zm = run([0.0, 0.0, -1.0])?;
    let xp = run([1.0, 0.0, 0.0])?;
    let yp = run([0.0, 1.0, 0.0])?;
    let offset = 0.5 * (zp + zm);
    let matrix = Matrix3::from_columns(&[xp - offset, yp - offset, 0.5 * (zp - zm)]);
    Ok((BlochChannel { matrix, offset }, stats))
}

/// Nearest proper rotation to `m` (polar factor).
pub fn nearest_rotation(m: &Matrix3<f64>) -> Result<Matrix3<f64>> {
    let svd = m.svd(true, true);
    let (u, vt) = (svd.u.ok_or(Error::ZeroNorm)?, svd.v_t.ok_or(Error::ZeroNorm)?);
    let mut d = Matrix3::identity();
    if (u * vt).determinant() < 0.0 {
        d[(2, 2)] = -1.0;
    }
    Ok(u * d * vt)
}

/// Unit axis and angle in `[0, π]` of a rotation matrix. Near `π` the axis
/// comes from the symmetric part, with its sign fixed by the antisymmetric part.
pub fn rotation_axis_angle(r: &Matrix3<f64>) -> (Vector3<f64>, f64) {
    let cos = ((r.trace() - 1.0) / 2.0).clamp(-1.0, 1.0);
    let anti = Vector3::new(r[(2, 1)] - r[(1, 2)], r[(0, 2)] - r[(2, 0)], r[(1, 0)] - r[(0, 1)]);
    let angle = anti.norm().atan2(r.trace() - 1.0);
    if cos > 0.0 {
        let n = anti.norm();
        let axis = if n > 0.0 { anti / n } else { Vector3::z() };
        return (axis, angle);
    }
    // R + Rᵀ = 2cosθ I + 2(1 − cosθ) n nᵀ
    let sym = (r + r.transpose() - Matrix3::identity() * (2.0 * cos)) / (2.0 * (1.0 - cos));
    let k = (0..3)
        .max_by(|&a, &b| sym[(a, a)].total_cmp(&sym[(b, b)]))
        .expect("three rows");
    let mut axis = sym.column(k).into_owned();
    axis /= axis.norm();
    if axis.dot(&anti) < 0.0 {
        axis = -axis;
    }
    (axis, angle)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AxisSetup {
    pub zeeman_splitting: f64,
    pub detuning: f64,
    pub decay_rate: f64,
    pub dephasing: Dephasing,
    pub fwhm: f64,
    pub theta: f64,
    pub window_sigmas: f64,
    pub integrator: IntegratorConfig,
}

impl AxisSetup {
    pub fn clock_period(&self) -> f64 {
        std::f64::consts::TAU / self.zeeman_splitting
    }

    /// Equatorial azimuth the axis should have: `2πf` at negative detuning,
    /// turned by `π` at positive detuning.
    pub fn expected_azimuth(&self, delay_fraction: f64) -> f64 {
        let base = RotationSpec::from_delay(self.theta, delay_fraction).axis_azimuth();
        if self.detuning > 0.0 {
            (base + std::f64::consts::PI).rem_euclid(std::f64::consts::TAU)
        } else {
            base
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AxisMeasurement {
    pub delay_fraction: f64,
    pub axis: Vector3<f64>,
    pub angle: f64,
    pub azimuth: f64,
    /// Elevation of the axis above the equator (rad).
    pub elevation: f64,
    pub expected_azimuth: f64,
    /// Angle between the measured and the expected axis (rad).
    pub axis_error: f64,
    pub peak_rabi: f64,
    pub stats: IntegratorStats,
}

pub fn measure_axis(setup: &AxisSetup, delay_fraction: f64) -> Result<AxisMeasurement> {
    let base = LambdaParams::new(
        setup.zeeman_splitting,
        setup.detuning,
        setup.decay_rate,
        setup.dephasing,
    );
    let peak = peak_rabi_for_angle(&base, setup.theta, setup.fwhm)?;
    let centre = delay_fraction * setup.clock_period();
    let pulse = PulseShape::gaussian(peak, setup.fwhm, centre)?;
    let half = setup.window_sigmas * pulse.sigma();
    let params = base.with_drive(DriveSpec::symmetric_pulse(pulse));
    let (channel, stats) = bloch_channel(&params, (centre - half, centre + half), &setup.integrator)?;
    let (axis, angle) = rotation_axis_angle(&nearest_rotation(&channel.matrix)?);
    let expected_azimuth = setup.expected_azimuth(delay_fraction);
    let expected = Vector3::new(expected_azimuth.cos(), expected_azimuth.sin(), 0.0);
    Ok(AxisMeasurement {
        delay_fraction,
        azimuth: axis.y.atan2(axis.x).rem_euclid(std::f64::consts::TAU),
        elevation: axis.z.clamp(-1.0, 1.0).asin(),
        axis_error: axis.cross(&expected).norm().atan2(axis.dot(&expected)),
        axis,
        angle,
        expected_azimuth,
        peak_rabi: peak,
        stats,
    })
}

/// Bloch vector of a qubit pure state given as amplitudes on `|0⟩, |1⟩`.
pub fn bloch_of(c0: C64, c1: C64) -> Vector3<f64> {
    let rho = CMatrix::from_row_slice(2, 2, &[c0 * c0.conj(), c0 * c1.conj(), c1 * c0.conj(), c1 * c1.conj()]);
    Vector3::from(spin::bloch_vector(&rho))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn rot(axis: Vector3<f64>, angle: f64) -> Matrix3<f64> {
        nalgebra::Rotation3::from_axis_angle(&nalgebra::Unit::new_normalize(axis), angle).into_inner()
    }

    #[test]
    fn axis_extraction_small_and_near_pi() {
        for &angle in &[1e-3, 0.7, 2.0, PI - 1e-9, PI] {
            let axis = Vector3::new(0.3, -0.8, 0.52).normalize();
            let (a, t) = rotation_axis_angle(&rot(axis, angle));
            assert_abs_diff_eq!(t, angle, epsilon = 1e-9);
            let err = if angle == PI {
                a.cross(&axis).norm()
            } else {
                (a - axis).norm()
            };
            assert!(err < 1e-7, "angle {angle}: {a:?}");
        }
    }

    #[test]
    fn polar_factor_removes_shrinking() {
        let r = rot(Vector3::new(1.0, 1.0, 0.0), 0.4);
        let shrunk = r * Matrix3::from_diagonal(&Vector3::new(0.9, 0.95, 0.99));
        let p = nearest_rotation(&shrunk).unwrap();
        assert!((p.transpose() * p - Matrix3::identity()).norm() < 1e-12);
        assert!((p - r).norm() < 0.1);
    }

    #[test]
    fn bloch_of_plus_states() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert_abs_diff_eq!(bloch_of(C64::from(h), C64::from(h)).x, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(bloch_of(C64::from(h), C64::new(0.0, h)).y, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn free_evolution_channel_is_identity_in_larmor_frame() {
        let p = LambdaParams::new(0.6, -50.0, 0.0, Dephasing::Off);
        let (ch, _) = bloch_channel(&p, (-0.3, 0.9), &IntegratorConfig::default()).unwrap();
        assert!((ch.matrix - Matrix3::identity()).norm() < 1e-8);
        assert!(ch.offset.norm() < 1e-8);
    }
}

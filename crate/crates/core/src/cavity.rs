//! One dot–cavity bus pass: the Λ system coupled to a truncated photon mode in
//! a frame displaced by the bus amplitude, plus the cavity-QED rate bookkeeping.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::dynamics::{evolve, CavityDrive, Dephasing, DriveSpec, IntegratorConfig, IntegratorStats, LambdaParams};
use crate::effective::{dispersive_coupling, dispersive_validity};
use crate::error::{Error, Result};
use crate::pulses::{filtered_envelope, CavityFilter, PulseShape};
use crate::qcore::{coherent_amplitudes, tensor, Basis, CVector, DensityMatrix, DotLevel, KetState, C64};

/// Speed of light in nm/ps.
pub const SPEED_OF_LIGHT_NM_PER_PS: f64 = 2.997_924_58e5;

/// Default free-space emitter decay rate Γ₀ (1/ps).
pub const DEFAULT_GAMMA0: f64 = 1.0 / 200.0;

/// Validity ratio above which a pass is refused.
pub const VALIDITY_CEILING: f64 = 1.0;
/// Validity ratio above which a pass is flagged.
pub const VALIDITY_WARNING: f64 = 0.5;
/// Population allowed in the two highest Fock levels.
pub const LEAKAGE_LIMIT: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CavityParams {
    pub q_factor: f64,
    /// Mode volume in cubic wavelengths in the medium.
    pub mode_volume: f64,
    /// Vacuum wavelength (nm).
    pub wavelength_nm: f64,
    pub refractive_index: f64,
    /// Free-space decay rate Γ₀ (1/ps).
    pub gamma0: f64,
    /// Emission rate into non-cavity modes Γ_L (1/ps).
    pub gamma_l: f64,
    /// Out-coupling efficiency κ_c/κ.
    pub kappa_c_fraction: f64,
    /// Replaces the derived vacuum Rabi coupling g (rad/ps) when set.
    pub coupling_override: Option<f64>,
}

impl Default for CavityParams {
    fn default() -> Self {
        CavityParams {
            q_factor: 1000.0,
            mode_volume: 1.0,
            wavelength_nm: 920.0,
            refractive_index: 3.5,
            gamma0: DEFAULT_GAMMA0,
            gamma_l: 0.1 * DEFAULT_GAMMA0,
            kappa_c_fraction: 1.0,
            coupling_override: None,
        }
    }
}

impl CavityParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if !(self.mode_volume > 0.0) {
            return bad(format!("mode volume must be > 0, got {}", self.mode_volume));
        }
        if !(self.wavelength_nm > 0.0) {
            return bad(format!("wavelength must be > 0, got {}", self.wavelength_nm));
        }
        if !(self.q_factor > 0.0) {
            return bad(format!("Q must be > 0, got {}", self.q_factor));
        }
        if !(self.refractive_index > 0.0) {
            return bad(format!("refractive index must be > 0, got {}", self.refractive_index));
        }
        if !(self.gamma0 > 0.0 && self.gamma_l > 0.0) {
            return bad("Γ₀ and Γ_L must be > 0".into());
        }
        if !(0.0..=1.0).contains(&self.kappa_c_fraction) {
            return bad(format!("κ_c/κ must lie in [0, 1], got {}", self.kappa_c_fraction));
        }
        if let Some(g) = self.coupling_override {
            if !(g >= 0.0 && g.is_finite()) {
                return bad(format!("coupling override must be >= 0, got {g}"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CavityRates {
    /// Vacuum Rabi coupling g (rad/ps).
    pub g: f64,
    /// Total energy decay rate κ (1/ps).
    pub kappa: f64,
    pub kappa_c: f64,
    /// Resonant Purcell factor F_P.
    pub purcell_resonant: f64,
    /// Detuned Purcell factor F(Δ).
    pub purcell: f64,
    /// Effective excited-state decay Γ = Γ_L + (1 − κ_c/κ) F(Δ) Γ₀ (1/ps).
    pub gamma: f64,
}

/// Standard cavity-QED rates at detuning `detuning` (rad/ps) from the cavity.
///
/// With `ω = 2πc/λ`, `c_m = c/n` and `V_m = V (λ/n)³`:
/// `κ = ω/Q`, `g² = 3π c_m³ Γ₀ / (2ω² V_m)`, `F_P = 3Q λ_m³ / (4π² V_m)`,
/// `F(Δ) = F_P (κ/2)² / (Δ² + (κ/2)²)`.
pub fn derive_cavity_rates(cavity: &CavityParams, detuning: f64) -> Result<CavityRates> {
    cavity.validate()?;
    let n = cavity.refractive_index;
    let lambda = cavity.wavelength_nm;
    let omega = TAU * SPEED_OF_LIGHT_NM_PER_PS / lambda;
    let kappa = omega / cavity.q_factor;
    let lambda_m = lambda / n;
    let c_m = SPEED_OF_LIGHT_NM_PER_PS / n;
    let v_m = cavity.mode_volume * lambda_m.powi(3);
    let g_derived = (3.0 * PI * c_m.powi(3) * cavity.gamma0 / (2.0 * omega * omega * v_m)).sqrt();
    let g = cavity.coupling_override.unwrap_or(g_derived);
    let purcell_resonant = 3.0 * cavity.q_factor * lambda_m.powi(3) / (4.0 * PI * PI * v_m);
    let hk = 0.5 * kappa;
    let purcell = purcell_resonant * hk * hk / (detuning * detuning + hk * hk);
    let gamma = cavity.gamma_l + (1.0 - cavity.kappa_c_fraction) * purcell * cavity.gamma0;
    Ok(CavityRates {
        g,
        kappa,
        kappa_c: cavity.kappa_c_fraction * kappa,
        purcell_resonant,
        purcell,
        gamma,
    })
}

/// One bus pass past a dot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QubusRun {
    /// δ (rad/ps).
    pub zeeman_splitting: f64,
    /// Δ (rad/ps).
    pub detuning: f64,
    pub dephasing: Dephasing,
    pub cavity: CavityParams,
    /// Bus amplitude, also the displaced-frame origin.
    pub alpha: C64,
    /// Intensity FWHM of the input pulse (ps).
    pub pulse_fwhm: f64,
    /// Fock cutoff; derived from the expected excursion when absent.
    pub n_max: Option<usize>,
    pub integrator: IntegratorConfig,
}

impl QubusRun {
    pub fn rates(&self) -> Result<CavityRates> {
        derive_cavity_rates(&self.cavity, self.detuning)
    }

    /// Unit-peak filtered pulse supplying `S(t)`, centred at `t = 0`.
    pub fn shape(&self) -> Result<PulseShape> {
        let rates = self.rates()?;
        PulseShape::filtered_gaussian(1.0, self.pulse_fwhm, 0.0, CavityFilter::new(rates.kappa)?)
    }

    /// Integration window: the span where `S` exceeds 1e-8 of its peak.
    pub fn window(&self) -> Result<(f64, f64)> {
        Ok(self.shape()?.support(1e-8))
    }

    fn base_params(&self, rates: &CavityRates) -> LambdaParams {
        LambdaParams::new(self.zeeman_splitting, self.detuning, rates.gamma, self.dephasing)
    }

    pub fn validity_ratio(&self) -> Result<f64> {
        let rates = self.rates()?;
        dispersive_validity(&self.base_params(&rates), rates.g, self.alpha)
    }

    /// `ceil(4|α ϑ_pred|² + 10)` unless overridden.
    pub fn resolved_n_max(&self) -> Result<usize> {
        if let Some(n) = self.n_max {
            return Ok(n);
        }
        let x = self.alpha.norm() * predict_phase(self)?.abs();
        Ok((4.0 * x * x + 10.0).ceil() as usize)
    }

    pub fn lambda_params(&self) -> Result<LambdaParams> {
        let rates = self.rates()?;
        let drive = DriveSpec::Cavity(CavityDrive {
            coupling: rates.g,
            shape: self.shape()?,
            frame_amplitude: self.alpha,
            n_max: self.resolved_n_max()?,
        });
        Ok(self.base_params(&rates).with_drive(drive))
    }
}

/// Conditional field data extracted after a pass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldRecord {
    /// Populations of `|0⟩, |1⟩, |e⟩`.
    pub populations: [f64; 3],
    /// Mean displaced-frame amplitudes `tr(aρ_j)/tr ρ_j` for `j = 0, 1`.
    pub displaced_means: [C64; 2],
    /// Lab-frame amplitudes `α + tr(aρ_j)/tr ρ_j`.
    pub lab_amplitudes: [C64; 2],
    /// `⟨α_j|ρ_jj|α_j⟩ / tr ρ_jj` with fitted coherent states.
    pub coherent_overlaps: [f64; 2],
    pub leakage: f64,
}

#[derive(Debug, Clone)]
pub struct PassResult {
    pub rho_final: DensityMatrix,
    /// `arg α₁ − arg α₀` in `(−π, π]`; `None` when a branch amplitude vanishes.
    pub conditional_phase: Option<f64>,
    /// Overlap with the fitted target, maximized over the relative qubit phase.
    pub pass_fidelity: f64,
    pub optimal_chi: f64,
    /// Overlap with the fitted target at zero relative phase in the frame
    /// co-rotating with the Larmor precession.
    pub fidelity_fixed_chi: f64,
    pub predicted_phase: f64,
    pub validity_ratio: f64,
    pub validity_warning: bool,
    pub n_max: usize,
    pub field: FieldRecord,
    pub stats: IntegratorStats,
}

fn wrap_angle(x: f64) -> f64 {
    let r = x.rem_euclid(TAU);
    if r > PI {
        r - TAU
    } else {
        r
    }
}

/// `tr(a ρ)` for a field-space matrix.
fn mean_annihilation(rho: &crate::qcore::CMatrix) -> C64 {
    (1..rho.nrows()).map(|n| (n as f64).sqrt() * rho[(n, n - 1)]).sum()
}

/// `⟨u|m|v⟩`.
fn sandwich(u: &CVector, m: &crate::qcore::CMatrix, v: &CVector) -> C64 {
    (u.adjoint() * m * v)[(0, 0)]
}

/// Integrates one pass from `(|0⟩+|1⟩)/√2 ⊗ |n=0⟩` in the displaced frame and
/// extracts the conditional phase and pass fidelity.
///
/// With an automatic cutoff the pass is repeated at twice the cutoff while the
/// top Fock levels leak, up to [`AUTO_N_MAX_LIMIT`].
pub fn simulate_pass(run: &QubusRun) -> Result<PassResult> {
    if run.n_max.is_some() {
        return pass_with_cutoff(run);
    }
    let mut n = run.resolved_n_max()?;
    loop {
        let fixed = QubusRun {
            n_max: Some(n),
            ..run.clone()
        };
        match pass_with_cutoff(&fixed) {
            Err(Error::TruncationLeakage { .. }) if 2 * n <= AUTO_N_MAX_LIMIT => {
                log::debug!("Fock cutoff {n} leaks; retrying with {}", 2 * n);
                n *= 2;
            }
            other => return other,
        }
    }
}

/// Largest automatic Fock cutoff tried by [`simulate_pass`].
pub const AUTO_N_MAX_LIMIT: usize = 176;

fn pass_with_cutoff(run: &QubusRun) -> Result<PassResult> {
    let rates = run.rates()?;
    let base = run.base_params(&rates);
    let validity_ratio = dispersive_validity(&base, rates.g, run.alpha)?;
    if validity_ratio > VALIDITY_CEILING {
        return Err(Error::DispersiveValidity {
            ratio: validity_ratio,
            ceiling: VALIDITY_CEILING,
        });
    }
    let validity_warning = validity_ratio > VALIDITY_WARNING;
    if validity_warning {
        log::warn!("dispersive validity ratio {validity_ratio:.3} exceeds {VALIDITY_WARNING}");
    }

    let params = run.lambda_params()?;
    let n_max = run.resolved_n_max()?;
    let nf = n_max + 1;
    let plus = KetState::from_slice(&[C64::from(1.0), C64::from(1.0), C64::from(0.0)], Basis::dot3())?;
    let psi0 = tensor(&plus, &KetState::basis_state(Basis::fock(n_max), 0)?);
    let rho0 = DensityMatrix::from_pure(&psi0);
    let window = run.window()?;
    let (rho, stats) = evolve(&params, &rho0, window, &run.integrator)?;

    let e = rho.elements();
    let leakage: f64 = (0..3)
        .flat_map(|j| [j * nf + n_max, j * nf + n_max.saturating_sub(1)])
        .map(|k| e[(k, k)].re)
        .sum();
    if leakage > LEAKAGE_LIMIT {
        return Err(Error::TruncationLeakage {
            leakage,
            limit: LEAKAGE_LIMIT,
            n_max,
        });
    }

    let b00 = rho.dot_block(DotLevel::Ground0, DotLevel::Ground0)?;
    let b11 = rho.dot_block(DotLevel::Ground1, DotLevel::Ground1)?;
    let b01 = rho.dot_block(DotLevel::Ground0, DotLevel::Ground1)?;
    let bee = rho.dot_block(DotLevel::Excited, DotLevel::Excited)?;
    let p = [b00.trace().re, b11.trace().re, bee.trace().re];

    let means = [mean_annihilation(&b00) / p[0], mean_annihilation(&b11) / p[1]];
    let lab = [run.alpha + means[0], run.alpha + means[1]];
    let conditional_phase = if lab[0].norm() > 1e-12 && lab[1].norm() > 1e-12 {
        Some(wrap_angle(lab[1].arg() - lab[0].arg()))
    } else {
        None
    };

    let m0 = coherent_amplitudes(means[0], n_max);
    let m1 = coherent_amplitudes(means[1], n_max);
    let a = sandwich(&m0, &b00, &m0).re;
    let b = sandwich(&m1, &b11, &m1).re;
    let c = sandwich(&m0, &b01, &m1);
    let pass_fidelity = 0.5 * (a + b + 2.0 * c.norm());
    let optimal_chi = wrap_angle(-c.arg());

    // Lab target |0⟩|α₀⟩ + |1⟩|α₁⟩ in the Larmor frame, expressed in the
    // displaced rotating frame: D(α)|m⟩ = e^{i Im(α m̄)}|α + m⟩, and |1⟩
    // carries e^{-iδT} over the window.
    let elapsed = window.1 - window.0;
    let chi_fixed =
        -run.zeeman_splitting * elapsed + (run.alpha * means[0].conj()).im - (run.alpha * means[1].conj()).im;
    let fidelity_fixed_chi = 0.5 * (a + b + 2.0 * (C64::from_polar(1.0, chi_fixed) * c).re);

    Ok(PassResult {
        rho_final: rho,
        conditional_phase,
        pass_fidelity,
        optimal_chi,
        fidelity_fixed_chi,
        predicted_phase: predict_phase(run)?,
        validity_ratio,
        validity_warning,
        n_max,
        field: FieldRecord {
            populations: p,
            displaced_means: means,
            lab_amplitudes: lab,
            coherent_overlaps: [a / p[0], b / p[1]],
            leakage,
        },
        stats,
    })
}

/// `ϑ_pred = ∫ δ g² S²(t) / (4Δ² + Γ²) dt`, by composite Simpson quadrature
/// over the pass window.
pub fn predict_phase(run: &QubusRun) -> Result<f64> {
    let rates = run.rates()?;
    let j = dispersive_coupling(&run.base_params(&rates), rates.g);
    let shape = run.shape()?;
    let filter = CavityFilter::new(rates.kappa)?;
    let (t0, t1) = shape.support(1e-8);
    let n = 20_000;
    let h = (t1 - t0) / n as f64;
    let s2 = |t: f64| filtered_envelope(&shape, &filter, t).powi(2);
    let mut acc = s2(t0) + s2(t1);
    for k in 1..n {
        acc += if k % 2 == 1 { 4.0 } else { 2.0 } * s2(t0 + k as f64 * h);
    }
    Ok(j * acc * h / 3.0)
}

/// Fidelity after a waveguide loss of `loss_fraction`.
pub fn apply_waveguide_loss(fidelity: f64, loss_fraction: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&loss_fraction) {
        return Err(Error::InvalidParameter(format!(
            "loss fraction must lie in [0, 1], got {loss_fraction}"
        )));
    }
    Ok(fidelity * (1.0 - loss_fraction))
}

/// `|α ϑ|` target for bus logic.
pub const BUS_CONDITION: f64 = 1.253_314_137_315_500_3;

/// Largest `|α|` allowed by the validity ceiling.
pub fn alpha_ceiling(run: &QubusRun) -> Result<f64> {
    let unit = QubusRun {
        alpha: C64::from(1.0),
        ..run.clone()
    };
    let r1 = unit.validity_ratio()?;
    if r1 == 0.0 {
        return Ok(f64::INFINITY);
    }
    // Just inside the ceiling so that rounding cannot push the ratio over it.
    Ok((VALIDITY_CEILING / r1).sqrt() * (1.0 - 1e-9))
}

/// Tunes real `α > 0` by bisection so that `|α ϑ(α)| = target`, without
/// crossing the validity ceiling.
pub fn tune_alpha(run: &QubusRun, target: f64) -> Result<(f64, PassResult)> {
    let hi_limit = alpha_ceiling(run)?;
    if !hi_limit.is_finite() {
        return Err(Error::AlphaTuning("no coupling: the phase vanishes for every α".into()));
    }
    let eval = |alpha: f64| -> Result<(f64, PassResult)> {
        let r = simulate_pass(&QubusRun {
            alpha: C64::from(alpha),
            ..run.clone()
        })?;
        let phase = r
            .conditional_phase
            .ok_or_else(|| Error::AlphaTuning("branch amplitude vanished".into()))?;
        Ok((alpha * phase.abs() - target, r))
    };
    let (f_hi, r_hi) = eval(hi_limit)?;
    if f_hi < 0.0 {
        return Err(Error::AlphaTuning(format!(
            "|αϑ| reaches only {:.4} at the validity ceiling (α = {hi_limit:.4}); target {target:.4}",
            f_hi + target
        )));
    }
    let (mut lo, mut hi, mut best) = (0.0, hi_limit, (hi_limit, r_hi));
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        let (f, r) = eval(mid)?;
        if f >= 0.0 {
            hi = mid;
            best = (mid, r);
        } else {
            lo = mid;
        }
        if hi - lo <= 1e-9 * hi {
            break;
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn kappa_c_equal_kappa_removes_cavity_channel() {
        let c = CavityParams::default();
        let r = derive_cavity_rates(&c, TAU * 4.0).unwrap();
        assert_eq!(r.gamma, c.gamma_l);
    }

    #[test]
    fn far_detuned_purcell_vanishes() {
        let c = CavityParams {
            kappa_c_fraction: 0.3,
            ..Default::default()
        };
        let r = derive_cavity_rates(&c, 1e12).unwrap();
        assert!(r.purcell < 1e-20);
        assert_relative_eq!(r.gamma, c.gamma_l, max_relative = 1e-15);
    }

    #[test]
    fn resonant_purcell_factor() {
        let r = derive_cavity_rates(&CavityParams::default(), 0.0).unwrap();
        assert_relative_eq!(r.purcell_resonant, 3000.0 / (4.0 * PI * PI), max_relative = 1e-12);
        assert_relative_eq!(r.purcell, r.purcell_resonant, max_relative = 1e-15);
    }

    #[test]
    fn rejects_degenerate_geometry() {
        for c in [
            CavityParams {
                mode_volume: 0.0,
                ..Default::default()
            },
            CavityParams {
                wavelength_nm: 0.0,
                ..Default::default()
            },
        ] {
            assert!(derive_cavity_rates(&c, 1.0).is_err());
        }
    }

    #[test]
    fn waveguide_loss_examples() {
        assert_eq!(apply_waveguide_loss(0.97, 0.0).unwrap(), 0.97);
        assert_relative_eq!(
            apply_waveguide_loss(0.993, 0.01).unwrap(),
            0.98307,
            max_relative = 1e-14
        );
        assert_eq!(apply_waveguide_loss(0.993, 1.0).unwrap(), 0.0);
        assert!(apply_waveguide_loss(0.9, 1.5).is_err());
        assert!(apply_waveguide_loss(0.9, -0.1).is_err());
    }

    #[test]
    fn bus_condition_constant() {
        assert_relative_eq!(BUS_CONDITION, std::f64::consts::FRAC_PI_2.sqrt(), max_relative = 1e-15);
    }
}

//! Experiment configuration (TOML).
//!
//! Every section rejects unknown keys. Dimensional values carry unit
//! suffixes; dimensionless ratios, angles (rad) and counts are bare numbers.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::units::{FrequencyQ, LengthQ, RateQ, TimeQ};
use crate::cavity::{CavityParams, DEFAULT_GAMMA0};
use crate::dynamics::{Dephasing, IntegratorConfig};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    SingleQubitFidelitySweep,
    DetuningOptimization,
    AxisDelayDemo,
    QubusPassSweep,
    QubusGateReport,
    CompileSu2,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<LambdaSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pulse: Option<PulseSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cavity: Option<CavitySection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub single_qubit: Option<SingleQubitSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub axis_demo: Option<AxisDemoSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub qubus: Option<QubusSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gate: Option<GateSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub compile: Option<CompileSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub integrator: Option<IntegratorSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputSection>,
}

/// Three-level dot parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LambdaSection {
    pub zeeman_splitting: FrequencyQ,
    /// Optical detuning; sweeps that optimize it ignore this value.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detuning: Option<FrequencyQ>,
    pub decay_rate: RateQ,
    /// Ground-state coherence time; absent means no dephasing.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t2: Option<TimeQ>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseSection {
    /// Intensity full width at half maximum.
    pub fwhm: TimeQ,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub peak_rabi: Option<FrequencyQ>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CavitySection {
    pub q_factor: f64,
    /// Mode volume in units of the cubed material wavelength.
    pub mode_volume: f64,
    pub wavelength: LengthQ,
    pub refractive_index: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma0: Option<RateQ>,
    /// Leaky-mode emission rate as a multiple of the free-space rate.
    pub gamma_l_ratio: f64,
    pub kappa_c_fraction: f64,
    /// Replaces the coupling derived from the mode volume.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coupling_override: Option<FrequencyQ>,
}

/// Swept bounds: frequencies for `peak_rabi`, bare numbers for ratios.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SweepBound {
    Number(f64),
    Quantity(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub variable: String,
    pub min: SweepBound,
    pub max: SweepBound,
    pub points: usize,
    #[serde(default)]
    pub log_scale: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RotationTarget {
    Pi,
    HalfPi,
    Identity,
}

impl RotationTarget {
    pub fn angle(self) -> f64 {
        match self {
            RotationTarget::Pi => std::f64::consts::PI,
            RotationTarget::HalfPi => std::f64::consts::FRAC_PI_2,
            RotationTarget::Identity => 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetuningSign {
    Negative,
    Positive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SingleQubitSection {
    pub target: RotationTarget,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detuning_sign: Option<DetuningSign>,
    /// Half-width of the simulated window in Gaussian sigmas.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window_sigmas: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisDemoSection {
    /// Rotation angle per pulse (rad).
    pub theta: f64,
    /// Arrival delays as fractions of the clock period.
    pub delays: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window_sigmas: Option<f64>,
}

/// How α is chosen at a qubus sweep point: `"tuned"` or a fixed real value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AlphaMode {
    Fixed(f64),
    Keyword(AlphaKeyword),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlphaKeyword {
    Tuned,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QubusSection {
    pub pulse_fwhm: TimeQ,
    pub detuning: FrequencyQ,
    pub gamma_l_ratios: Vec<f64>,
    pub kappa_c_fractions: Vec<f64>,
    pub alphas: Vec<AlphaMode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_max: Option<usize>,
    /// Target for `|αϑ|` in tuned mode; defaults to `√(π/2)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_product: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GateSection {
    /// Bus amplitude used by the loop; with `vartheta` the loop rotation is
    /// derived from a pass, otherwise `theta` is used directly.
    pub beta: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vartheta: Option<f64>,
    pub pass_fidelities: Vec<f64>,
    pub waveguide_loss: f64,
    pub fock_n_max: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NamedGate {
    Identity,
    Hadamard,
    X,
    Y,
    Z,
    S,
    T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompileSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gate: Option<NamedGate>,
    /// Alternative to `gate`: rotation by `angle` (rad) about `axis`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub axis: Option<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub angle: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorSection {
    pub rel_tol: f64,
    pub abs_tol: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_steps: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_step: Option<TimeQ>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Csv,
    Record,
}

impl std::str::FromStr for OutputFormat {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "record" => Ok(OutputFormat::Record),
            _ => Err(format!("unknown output format {s:?} (expected csv or record)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub path: String,
    pub format: OutputFormat,
}

fn missing(section: &str) -> Error {
    Error::Config(format!("missing [{section}] section"))
}

fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

impl ExperimentConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(s).map_err(|e| config_err(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| config_err(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| config_err(e.to_string()))
    }

    /// Checks that the sections needed by `experiment` are present and
    /// internally consistent.
    pub fn validate(&self) -> Result<()> {
        use ExperimentKind::*;
        match self.experiment {
            SingleQubitFidelitySweep => {
                self.lambda_section()?;
                self.pulse_section()?;
                self.single_qubit_section()?;
                let sweep = self.sweep.as_ref().ok_or_else(|| missing("sweep"))?;
                if sweep.variable != "peak_rabi" {
                    return Err(config_err(format!(
                        "single-qubit sweeps vary peak_rabi, not {:?}",
                        sweep.variable
                    )));
                }
                self.sweep_values()?;
            }
            DetuningOptimization => {
                self.lambda_section()?;
                self.single_qubit_section()?;
                if self.pulse_section()?.peak_rabi.is_none() {
                    return Err(config_err("detuning optimization needs pulse.peak_rabi"));
                }
            }
            AxisDelayDemo => {
                self.lambda_section()?;
                self.pulse_section()?;
                let lam = self.lambda_section()?;
                if lam.detuning.is_none() {
                    return Err(config_err("axis demo needs lambda.detuning"));
                }
                let a = self.axis_demo.as_ref().ok_or_else(|| missing("axis_demo"))?;
                if a.delays.is_empty() || !(a.theta > 0.0) {
                    return Err(config_err("axis demo needs delays and a positive theta"));
                }
            }
            QubusPassSweep => {
                self.lambda_section()?;
                self.cavity_section()?;
                let q = self.qubus.as_ref().ok_or_else(|| missing("qubus"))?;
                if q.gamma_l_ratios.is_empty() || q.kappa_c_fractions.is_empty() || q.alphas.is_empty() {
                    return Err(config_err("qubus grid lists must be nonempty"));
                }
            }
            QubusGateReport => {
                let g = self.gate.as_ref().ok_or_else(|| missing("gate"))?;
                if g.theta.is_some() == g.vartheta.is_some() {
                    return Err(config_err("gate needs exactly one of theta or vartheta"));
                }
            }
            CompileSu2 => {
                self.lambda_section()?;
                self.pulse_section()?;
                let c = self.compile.as_ref().ok_or_else(|| missing("compile"))?;
                let axis_form = c.axis.is_some() && c.angle.is_some();
                if c.gate.is_some() == axis_form || c.axis.is_some() != c.angle.is_some() {
                    return Err(config_err("compile needs either gate or both axis and angle"));
                }
            }
        }
        self.integrator_config()?;
        Ok(())
    }

    pub fn lambda_section(&self) -> Result<&LambdaSection> {
        self.lambda.as_ref().ok_or_else(|| missing("lambda"))
    }

    pub fn pulse_section(&self) -> Result<&PulseSection> {
        self.pulse.as_ref().ok_or_else(|| missing("pulse"))
    }

    pub fn cavity_section(&self) -> Result<&CavitySection> {
        self.cavity.as_ref().ok_or_else(|| missing("cavity"))
    }

    pub fn single_qubit_section(&self) -> Result<&SingleQubitSection> {
        self.single_qubit.as_ref().ok_or_else(|| missing("single_qubit"))
    }

    pub fn dephasing(&self) -> Result<Dephasing> {
        Ok(match &self.lambda_section()?.t2 {
            Some(t2) => Dephasing::T2 { t2: t2.internal() },
            None => Dephasing::Off,
        })
    }

    pub fn integrator_config(&self) -> Result<IntegratorConfig> {
        let mut cfg = IntegratorConfig::default();
        if let Some(s) = &self.integrator {
            cfg = cfg.with_tolerances(s.rel_tol, s.abs_tol);
            if let Some(n) = s.max_steps {
                cfg.max_steps = n;
            }
            if let Some(h) = &s.max_step {
                cfg = cfg.with_max_step(h.internal());
            }
        }
        cfg.validate().map_err(|e| config_err(e.to_string()))?;
        Ok(cfg)
    }

    pub fn cavity_params(&self) -> Result<CavityParams> {
        let c = self.cavity_section()?;
        let gamma0 = c.gamma0.as_ref().map(|g| g.internal()).unwrap_or(DEFAULT_GAMMA0);
        let p = CavityParams {
            q_factor: c.q_factor,
            mode_volume: c.mode_volume,
            wavelength_nm: c.wavelength.internal(),
            refractive_index: c.refractive_index,
            gamma0,
            gamma_l: c.gamma_l_ratio * gamma0,
            kappa_c_fraction: c.kappa_c_fraction,
            coupling_override: c.coupling_override.as_ref().map(|g| g.internal()),
        };
        p.validate().map_err(|e| config_err(e.to_string()))?;
        Ok(p)
    }

    /// Grid of swept values in internal units.
    pub fn sweep_values(&self) -> Result<Vec<f64>> {
        let s = self.sweep.as_ref().ok_or_else(|| missing("sweep"))?;
        let bound = |b: &SweepBound| -> Result<f64> {
            match (s.variable.as_str(), b) {
                ("peak_rabi", SweepBound::Quantity(q)) => Ok(q.parse::<FrequencyQ>().map_err(config_err)?.internal()),
                ("peak_rabi", SweepBound::Number(_)) => {
                    Err(config_err("sweep bounds for peak_rabi need a frequency unit"))
                }
                (v, _) => Err(config_err(format!("unknown sweep variable {v:?}"))),
            }
        };
        let (lo, hi) = (bound(&s.min)?, bound(&s.max)?);
        grid(lo, hi, s.points, s.log_scale)
    }
}

/// `points` values from `lo` to `hi` inclusive, linear or logarithmic.
pub fn grid(lo: f64, hi: f64, points: usize, log_scale: bool) -> Result<Vec<f64>> {
    if points == 0 {
        return Err(config_err("sweep needs at least one point"));
    }
    if !(lo.is_finite() && hi.is_finite()) || hi < lo {
        return Err(config_err(format!("invalid sweep range [{lo}, {hi}]")));
    }
    if log_scale && !(lo > 0.0) {
        return Err(config_err("log-scale sweep needs positive bounds"));
    }
    if points == 1 {
        return Ok(vec![lo]);
    }
    let n = (points - 1) as f64;
    Ok((0..points)
        .map(|k| {
            let u = k as f64 / n;
            if log_scale {
                (lo.ln() + u * (hi.ln() - lo.ln())).exp()
            } else {
                lo + u * (hi - lo)
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    const SINGLE: &str = r#"
experiment = "single_qubit_fidelity_sweep"

[lambda]
zeeman_splitting = "100GHz"
decay_rate = "0.005/ps"
t2 = "10us"

[pulse]
fwhm = "100fs"

[sweep]
variable = "peak_rabi"
min = "600rad/ps"
max = "2400rad/ps"
points = 3
log_scale = true

[single_qubit]
target = "pi"
detuning_sign = "negative"
"#;

    #[test]
    fn parses_and_converts() {
        let cfg = ExperimentConfig::from_toml_str(SINGLE).unwrap();
        let lam = cfg.lambda_section().unwrap();
        assert!((lam.zeeman_splitting.internal() - 0.2 * std::f64::consts::PI).abs() < 1e-15);
        assert_eq!(cfg.dephasing().unwrap(), Dephasing::T2 { t2: 1e7 });
        let v = cfg.sweep_values().unwrap();
        assert_eq!(v.len(), 3);
        assert!((v[1] - 1200.0).abs() < 1e-9);
    }

    #[test]
    fn round_trip_is_identity() {
        let cfg = ExperimentConfig::from_toml_str(SINGLE).unwrap();
        let again = ExperimentConfig::from_toml_str(&cfg.to_toml_string().unwrap()).unwrap();
        assert_eq!(cfg, again);
    }

    #[test]
    fn rejects_unknown_keys_and_bare_frequencies() {
        let extra = SINGLE.replace("t2 = \"10us\"", "t2 = \"10us\"\nbogus = 1");
        assert!(matches!(ExperimentConfig::from_toml_str(&extra), Err(Error::Config(_))));
        let bare = SINGLE.replace("\"100GHz\"", "100.0");
        assert!(ExperimentConfig::from_toml_str(&bare).is_err());
        let bare_bound = SINGLE.replace("\"600rad/ps\"", "600.0");
        assert!(ExperimentConfig::from_toml_str(&bare_bound).is_err());
    }

    #[test]
    fn missing_section_is_reported() {
        let cut = SINGLE.replace("[single_qubit]\ntarget = \"pi\"\ndetuning_sign = \"negative\"\n", "");
        let err = ExperimentConfig::from_toml_str(&cut).unwrap_err();
        assert!(err.to_string().contains("single_qubit"));
    }

    #[test]
    fn grids() {
        assert_eq!(grid(1.0, 3.0, 3, false).unwrap(), vec![1.0, 2.0, 3.0]);
        assert!(grid(0.0, 1.0, 3, true).is_err());
        assert!(grid(1.0, 0.0, 3, false).is_err());
    }
}

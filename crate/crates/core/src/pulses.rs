//! Transform-limited Gaussian envelopes, clock-referenced pulse trains and the
//! cavity-filtered envelope `S(t)`.
//!
//! Envelopes live in the rotating frame: the carrier and the detuning are
//! already absorbed into the Hamiltonian, so a pulse is a real positive shape
//! times a constant phase.

use errorfunctions::RealErrorFunctions;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, SQRT_2};

use crate::error::{Error, Result};
use crate::qcore::C64;

/// Single-pole cavity response acting on the field amplitude.
///
/// Impulse response `h(τ) = (κ/2) e^{-κτ/2}` for `τ ≥ 0`, unit DC gain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CavityFilter {
    /// Cavity energy decay rate κ (1/ps).
    pub kappa: f64,
}

impl CavityFilter {
    pub fn new(kappa: f64) -> Result<Self> {
        if !(kappa > 0.0 && kappa.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "cavity kappa must be > 0, got {kappa}"
            )));
        }
        Ok(CavityFilter { kappa })
    }

    fn half_width(&self) -> f64 {
        0.5 * self.kappa
    }

    /// Response to a unit step switched on at `t = 0`.
    pub fn step_response(&self, t: f64) -> f64 {
        if t <= 0.0 {
            0.0
        } else {
            -(-self.half_width() * t).exp_m1()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PulseKind {
    Gaussian,
    /// Gaussian input seen through the cavity filter, `Ω_peak · S(t)`.
    FilteredGaussian {
        filter: CavityFilter,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseShape {
    pub kind: PulseKind,
    /// Peak Rabi frequency of the unfiltered amplitude envelope (rad/ps).
    pub peak_rabi: f64,
    /// Full width at half maximum of the intensity envelope `|Ω|²` (ps).
    pub fwhm: f64,
    /// Envelope centre (ps).
    pub center: f64,
    pub carrier_phase: f64,
}

impl PulseShape {
    pub fn gaussian(peak_rabi: f64, fwhm: f64, center: f64) -> Result<Self> {
        let p = PulseShape {
            kind: PulseKind::Gaussian,
            peak_rabi,
            fwhm,
            center,
            carrier_phase: 0.0,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn filtered_gaussian(peak_rabi: f64, fwhm: f64, center: f64, filter: CavityFilter) -> Result<Self> {
        let p = PulseShape {
            kind: PulseKind::FilteredGaussian { filter },
            peak_rabi,
            fwhm,
            center,
            carrier_phase: 0.0,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_carrier_phase(mut self, phase: f64) -> Self {
        self.carrier_phase = phase;
        self
    }

    pub fn with_center(mut self, center: f64) -> Self {
        self.center = center;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.fwhm > 0.0 && self.fwhm.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "pulse fwhm must be > 0, got {}",
                self.fwhm
            )));
        }
        if !(self.peak_rabi >= 0.0 && self.peak_rabi.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "peak Rabi frequency must be >= 0, got {}",
                self.peak_rabi
            )));
        }
        if let PulseKind::FilteredGaussian { filter } = self.kind {
            CavityFilter::new(filter.kappa)?;
        }
        Ok(())
    }

    /// Amplitude standard deviation σ, with `|Ω|² ∝ exp(-t²/σ²)` so that the
    /// intensity FWHM is `2σ√ln2`.
    pub fn sigma(&self) -> f64 {
        self.fwhm / (2.0 * std::f64::consts::LN_2.sqrt())
    }

    /// FWHM of the amplitude envelope, `√2 · fwhm`.
    pub fn amplitude_fwhm(&self) -> f64 {
        SQRT_2 * self.fwhm
    }

    /// Real envelope normalized to unit peak (before filtering).
    pub fn unit_shape(&self, t: f64) -> f64 {
        let s = (t - self.center) / self.sigma();
        (-0.5 * s * s).exp()
    }

    /// `∫|Ω(t)|² dt = Ω_peak² σ √π` for the unfiltered Gaussian.
    pub fn intensity_area(&self) -> f64 {
        self.peak_rabi * self.peak_rabi * self.sigma() * PI.sqrt()
    }

    /// Half-width of a window outside which the unfiltered envelope falls
    /// below `rel` of its peak.
    pub fn half_window(&self, rel: f64) -> f64 {
        self.sigma() * (-2.0 * rel.ln()).sqrt()
    }

    /// Time span over which the envelope is non-negligible (to `rel` of peak),
    /// including the filter's exponential tail.
    pub fn support(&self, rel: f64) -> (f64, f64) {
        let hw = self.half_window(rel);
        let tail = match self.kind {
            PulseKind::Gaussian => 0.0,
            PulseKind::FilteredGaussian { filter } => -rel.ln() / filter.half_width(),
        };
        (self.center - hw, self.center + hw + tail)
    }
}

/// Complex Rabi envelope `Ω(t)` in rad/ps.
pub fn envelope_at(p: &PulseShape, t: f64) -> C64 {
    p.peak_rabi * unit_envelope(p, t)
}

/// Envelope with the peak Rabi frequency set to one: the bare shape times the
/// carrier phase. For a filtered pulse this is `S(t) e^{iφ}`.
pub fn unit_envelope(p: &PulseShape, t: f64) -> C64 {
    let shape = match p.kind {
        PulseKind::Gaussian => p.unit_shape(t),
        PulseKind::FilteredGaussian { filter } => filtered_envelope(p, &filter, t),
    };
    C64::from_polar(shape, p.carrier_phase)
}

/// `S(t)`: the unit-peak Gaussian amplitude of `p` convolved with the cavity
/// impulse response, in closed form via the scaled complementary error function.
pub fn filtered_envelope(p: &PulseShape, f: &CavityFilter, t: f64) -> f64 {
    let sigma = p.sigma();
    let k = f.half_width();
    let s = t - p.center;
    // S = kσ√(π/2) · exp(-s²/2σ²) · erfcx((kσ² - s)/(√2σ))
    let x = (k * sigma * sigma - s) / (SQRT_2 * sigma);
    let pref = k * sigma * (0.5 * PI).sqrt();
    let gauss = (-0.5 * s * s / (sigma * sigma)).exp();
    if x >= -5.0 {
        pref * gauss * x.erfcx()
    } else {
        // erfcx(x) = 2e^{x²} − erfcx(−x); keep the growing part in log space.
        let tail = (0.5 * k * k * sigma * sigma - k * s).exp();
        2.0 * pref * tail - pref * gauss * (-x).erfcx()
    }
}

/// One entry of a clock-referenced train: the pulse arrives at
/// `(slot + delay_fraction) · clock_period`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainEntry {
    pub slot: u32,
    pub delay_fraction: f64,
    pub pulse: PulseShape,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulseTrain {
    /// `2π/δ` (ps).
    pub clock_period: f64,
    pub entries: Vec<TrainEntry>,
}

/// Minimum allowed separation between pulse centres, in amplitude FWHMs.
pub const MIN_SEPARATION_FWHMS: f64 = 5.0;

impl PulseTrain {
    pub fn new(clock_period: f64) -> Self {
        PulseTrain {
            clock_period,
            entries: Vec::new(),
        }
    }

    pub fn push(&mut self, slot: u32, delay_fraction: f64, pulse: PulseShape) {
        self.entries.push(TrainEntry {
            slot,
            delay_fraction,
            pulse,
        });
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }
}

/// Expands a train into absolute arrival times, sorted, with each pulse
/// recentred on its arrival time.
pub fn train_schedule(train: &PulseTrain) -> Result<Vec<(f64, PulseShape)>> {
    if !(train.clock_period > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "clock period must be > 0, got {}",
            train.clock_period
        )));
    }
    let mut out: Vec<(f64, PulseShape)> = train
        .entries
        .iter()
        .map(|e| {
            let frac = e.delay_fraction.rem_euclid(1.0);
            let t = (e.slot as f64 + frac) * train.clock_period;
            (t, e.pulse.with_center(t))
        })
        .collect();
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    for w in out.windows(2) {
        let (t0, p0) = &w[0];
        let (t1, p1) = &w[1];
        let min_sep = MIN_SEPARATION_FWHMS * p0.amplitude_fwhm().max(p1.amplitude_fwhm());
        if t1 - t0 < min_sep {
            return Err(Error::OverlappingPulses {
                first: *t0,
                second: *t1,
                min_separation: min_sep,
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn pulse() -> PulseShape {
        PulseShape::gaussian(3.0, 0.1, 0.4).unwrap()
    }

    #[test]
    fn envelope_peak_and_fwhm() {
        let p = pulse();
        assert_relative_eq!(envelope_at(&p, p.center).re, 3.0, epsilon = 1e-15);
        for sign in [-1.0, 1.0] {
            let v = envelope_at(&p, p.center + sign * p.fwhm / 2.0);
            assert_relative_eq!(v.norm_sqr(), 9.0 / 2.0, max_relative = 1e-12);
        }
        let zero = PulseShape::gaussian(0.0, 0.1, 0.0).unwrap();
        for t in [-1.0, 0.0, 0.05, 3.0] {
            assert_eq!(envelope_at(&zero, t).norm(), 0.0);
        }
    }

    #[test]
    fn carrier_phase_is_constant() {
        let p = pulse().with_carrier_phase(0.7);
        for t in [0.3, 0.4, 0.45] {
            assert_relative_eq!(envelope_at(&p, t).arg(), 0.7, epsilon = 1e-14);
        }
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(PulseShape::gaussian(1.0, 0.0, 0.0).is_err());
        assert!(PulseShape::gaussian(-1.0, 1.0, 0.0).is_err());
        assert!(CavityFilter::new(0.0).is_err());
    }

    #[test]
    fn filter_unit_dc_gain() {
        // A very wide Gaussian is a constant input near its centre.
        let f = CavityFilter::new(2.0).unwrap();
        let p = PulseShape::gaussian(1.0, 1e7, 0.0).unwrap();
        assert_relative_eq!(filtered_envelope(&p, &f, 0.0), 1.0, epsilon = 1e-9);
    }

    #[test]
    fn filter_step_response() {
        let f = CavityFilter::new(2.0).unwrap();
        for t in [0.1, 1.0, 3.0] {
            assert_relative_eq!(f.step_response(t), 1.0 - (-t).exp(), epsilon = 1e-15);
        }
        assert_eq!(f.step_response(-1.0), 0.0);
    }

    #[test]
    fn filter_tails_are_finite() {
        let f = CavityFilter::new(0.05).unwrap();
        let p = PulseShape::gaussian(1.0, 1.0, 0.0).unwrap();
        for t in [-40.0, -5.0, 0.0, 5.0, 50.0, 500.0] {
            let s = filtered_envelope(&p, &f, t);
            assert!(s.is_finite() && (0.0..=1.0).contains(&s), "S({t}) = {s}");
        }
    }

    #[test]
    fn schedule_examples() {
        let shape = PulseShape::gaussian(1.0, 0.1, 0.0).unwrap();
        let mut train = PulseTrain::new(10.0);
        train.push(0, 0.0, shape);
        let s = train_schedule(&train).unwrap();
        assert_eq!(s[0].0, 0.0);

        let mut train = PulseTrain::new(10.0);
        train.push(2, 0.25, shape);
        let s = train_schedule(&train).unwrap();
        assert_relative_eq!(s[0].0, 22.5, epsilon = 1e-12);
        assert_relative_eq!(s[0].1.center, 22.5, epsilon = 1e-12);

        let mut train = PulseTrain::new(10.0);
        train.push(1, 0.10, shape);
        train.push(1, 0.15, shape);
        assert!(matches!(train_schedule(&train), Err(Error::OverlappingPulses { .. })));
    }

    #[test]
    fn schedule_sorts_and_wraps_delays() {
        let shape = PulseShape::gaussian(1.0, 0.1, 0.0).unwrap();
        let mut train = PulseTrain::new(10.0);
        train.push(1, 0.5, shape);
        train.push(0, 1.25, shape);
        let s = train_schedule(&train).unwrap();
        assert_relative_eq!(s[0].0, 2.5, epsilon = 1e-12);
        assert_relative_eq!(s[1].0, 15.0, epsilon = 1e-12);
    }
}

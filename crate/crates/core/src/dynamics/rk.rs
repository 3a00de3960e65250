//! Dormand–Prince 5(4) with FSAL and standard step-size control, stepping a
//! complex matrix state.

use crate::error::{Error, IntegrationFailureKind};
use crate::qcore::CMatrix;

// Butcher tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

// Difference between the 5th- and embedded 4th-order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 5.0;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct IntegratorStats {
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    pub rhs_evaluations: usize,
}

impl std::ops::AddAssign for IntegratorStats {
    fn add_assign(&mut self, o: Self) {
        self.accepted_steps += o.accepted_steps;
        self.rejected_steps += o.rejected_steps;
        self.rhs_evaluations += o.rhs_evaluations;
    }
}

pub(crate) struct StepControl {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: f64,
    pub initial_step: Option<f64>,
    pub max_steps: usize,
}

pub(crate) enum Stop {
    Failed(IntegrationFailureKind, f64),
    Rhs(Error),
}

/// `out = y + h Σ a_i k_i`.
fn combine(out: &mut CMatrix, y: &CMatrix, h: f64, terms: &[(f64, &CMatrix)]) {
    out.copy_from(y);
    for &(a, k) in terms {
        if a != 0.0 {
            let s = h * a;
            out.zip_apply(k, |o, kv| *o += kv * s);
        }
    }
}

fn error_norm(err: &CMatrix, y: &CMatrix, y_new: &CMatrix, ctl: &StepControl) -> f64 {
    let mut acc = 0.0;
    for ((e, a), b) in err.iter().zip(y.iter()).zip(y_new.iter()) {
        let sc = ctl.abs_tol + ctl.rel_tol * a.norm().max(b.norm());
        let r = e.norm() / sc;
        acc += r * r;
    }
    (acc / err.len() as f64).sqrt()
}

fn rms(m: &CMatrix, y: &CMatrix, ctl: &StepControl) -> f64 {
    let mut acc = 0.0;
    for (v, a) in m.iter().zip(y.iter()) {
        let r = v.norm() / (ctl.abs_tol + ctl.rel_tol * a.norm());
        acc += r * r;
    }
    (acc / m.len() as f64).sqrt()
}

/// Integrates `dy/dt = f(t, y)` from `t0` to `t1`.
///
/// `observe` is called with every accepted `(t, y)` (after `post_step`), and
/// `stops` lists interior times the stepper must land on exactly.
#[allow(clippy::too_many_arguments)]
pub(crate) fn dopri5<F, P, O>(
    mut f: F,
    t0: f64,
    t1: f64,
    y0: CMatrix,
    ctl: &StepControl,
    stops: &[f64],
    mut post_step: P,
    mut observe: O,
) -> (CMatrix, IntegratorStats, Option<Stop>)
where
    F: FnMut(f64, &CMatrix, &mut CMatrix) -> Result<(), Error>,
    P: FnMut(&mut CMatrix),
    O: FnMut(f64, &CMatrix),
{
    let mut stats = IntegratorStats::default();
    let mut y = y0;
    let (nr, nc) = y.shape();
    let zeros = || CMatrix::zeros(nr, nc);
    let (mut k1, mut k2, mut k3, mut k4, mut k5, mut k6, mut k7) =
        (zeros(), zeros(), zeros(), zeros(), zeros(), zeros(), zeros());
    let mut tmp = zeros();
    let mut y_new = zeros();
    let mut err = zeros();

    let mut t = t0;
    observe(t, &y);
    if t1 <= t0 {
        return (y, stats, None);
    }
    let span = t1 - t0;
    let max_step = ctl.max_step.min(span);

    macro_rules! eval {
        ($t:expr, $y:expr, $k:expr) => {{
            stats.rhs_evaluations += 1;
            if let Err(e) = f($t, $y, $k) {
                return (y, stats, Some(Stop::Rhs(e)));
            }
        }};
    }

    eval!(t, &y, &mut k1);

    let mut h = match ctl.initial_step {
        Some(h0) => h0.min(max_step),
        None => {
            // Hairer & Wanner's starting-step heuristic.
            let d0 = rms(&y, &y, ctl);
            let d1 = rms(&k1, &y, ctl);
            let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
            let h0 = h0.min(max_step);
            combine(&mut tmp, &y, h0, &[(1.0, &k1)]);
            eval!(t + h0, &tmp, &mut k2);
            k2 -= &k1;
            let d2 = rms(&k2, &y, ctl) / h0;
            let h1 = if d1.max(d2) <= 1e-15 {
                (h0 * 1e-3).max(1e-6)
            } else {
                (0.01 / d1.max(d2)).powf(0.2)
            };
            (100.0 * h0).min(h1).min(max_step)
        }
    };

    let mut stop_iter = stops.iter().copied().filter(|&s| s > t0 && s < t1).peekable();
    let mut last_rejected = false;

    loop {
        if stats.accepted_steps + stats.rejected_steps >= ctl.max_steps {
            return (
                y,
                stats,
                Some(Stop::Failed(IntegrationFailureKind::MaxStepsExceeded, t)),
            );
        }
        let target = stop_iter.peek().copied().unwrap_or(t1);
        let mut landing = false;
        if t + h >= target - 1e-12 * target.abs().max(1.0) {
            h = target - t;
            landing = true;
        }
        if h < 1e-14 * t.abs().max(1.0) {
            return (
                y,
                stats,
                Some(Stop::Failed(IntegrationFailureKind::StepSizeUnderflow, t)),
            );
        }

        combine(&mut tmp, &y, h, &[(A21, &k1)]);
        eval!(t + C2 * h, &tmp, &mut k2);
        combine(&mut tmp, &y, h, &[(A31, &k1), (A32, &k2)]);
        eval!(t + C3 * h, &tmp, &mut k3);
        combine(&mut tmp, &y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]);
        eval!(t + C4 * h, &tmp, &mut k4);
        combine(&mut tmp, &y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]);
        eval!(t + C5 * h, &tmp, &mut k5);
        combine(
            &mut tmp,
            &y,
            h,
            &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
        );
        eval!(t + h, &tmp, &mut k6);
        combine(
            &mut y_new,
            &y,
            h,
            &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)],
        );
        eval!(t + h, &y_new, &mut k7);

        combine(
            &mut err,
            &CMatrix::zeros(nr, nc),
            h,
            &[(E1, &k1), (E3, &k3), (E4, &k4), (E5, &k5), (E6, &k6), (E7, &k7)],
        );
        let en = error_norm(&err, &y, &y_new, ctl);

        if !en.is_finite() {
            stats.rejected_steps += 1;
            h *= FAC_MIN;
            last_rejected = true;
            if h < 1e-14 * t.abs().max(1.0) {
                return (y, stats, Some(Stop::Failed(IntegrationFailureKind::NonFinite, t)));
            }
            continue;
        }

        if en <= 1.0 {
            stats.accepted_steps += 1;
            t = if landing { target } else { t + h };
            std::mem::swap(&mut y, &mut y_new);
            post_step(&mut y);
            std::mem::swap(&mut k1, &mut k7);
            observe(t, &y);
            if landing {
                if stop_iter.peek().is_some() {
                    stop_iter.next();
                } else {
                    return (y, stats, None);
                }
            }
            let fac = if en == 0.0 { FAC_MAX } else { SAFETY * en.powf(-0.2) };
            let fac_max = if last_rejected { 1.0 } else { FAC_MAX };
            h *= fac.clamp(FAC_MIN, fac_max);
            h = h.min(max_step);
            last_rejected = false;
        } else {
            stats.rejected_steps += 1;
            h *= (SAFETY * en.powf(-0.2)).max(FAC_MIN);
            last_rejected = true;
        }
    }
}

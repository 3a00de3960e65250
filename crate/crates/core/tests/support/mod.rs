//! Reference implementations used as test oracles. Written against the
//! model equations directly; nothing here calls the integrator or the
//! Hamiltonian builder under test. Shared with the acceptance suite.

#![allow(dead_code)]

use nalgebra::DMatrix;
use num_complex::Complex64 as C;
use qubus_core::dynamics::{Dephasing, DriveSpec, Envelope, LambdaParams};
use qubus_core::pulses::PulseShape;
use rand::{Rng, RngExt};

pub type M = DMatrix<C>;

/// Boxed drive envelope.
pub type Drive = Box<dyn Fn(f64) -> C>;

/// Amplitude of a Gaussian pulse with intensity FWHM `fwhm`:
/// `Ω(t) = Ω₀ exp(−(t − c)² / 2σ²)`, `σ = fwhm / (2√ln 2)`.
pub fn gaussian(peak: f64, fwhm: f64, center: f64) -> impl Fn(f64) -> f64 + Clone {
    let sigma = fwhm / (2.0 * std::f64::consts::LN_2.sqrt());
    move |t: f64| peak * (-(t - center).powi(2) / (2.0 * sigma * sigma)).exp()
}

/// Classically driven three-level model with explicit envelopes.
pub struct Model<F: Fn(f64) -> C> {
    pub delta: f64,
    pub big_delta: f64,
    pub gamma: f64,
    /// `1/T2`, zero without dephasing.
    pub dephasing: f64,
    pub omega0: F,
    pub omega1: F,
}

impl<F: Fn(f64) -> C> Model<F> {
    pub fn hamiltonian(&self, t: f64) -> M {
        let mut h = M::zeros(3, 3);
        h[(1, 1)] = C::from(self.delta);
        h[(2, 2)] = C::from(self.big_delta);
        let (w0, w1) = ((self.omega0)(t) * 0.5, (self.omega1)(t) * 0.5);
        h[(2, 0)] = w0;
        h[(0, 2)] = w0.conj();
        h[(2, 1)] = w1;
        h[(1, 2)] = w1.conj();
        h
    }

    /// `dρ/dt` with emission from `|e⟩` split equally into both ground
    /// states and pure dephasing acting only on the `0↔1` coherence.
    pub fn rhs(&self, t: f64, rho: &M) -> M {
        let h = self.hamiltonian(t);
        let i = C::new(0.0, 1.0);
        let mut d = -(&h * rho - rho * &h) * i;
        let g = self.gamma;
        for k in 0..3 {
            d[(2, k)] -= rho[(2, k)] * (0.5 * g);
            d[(k, 2)] -= rho[(k, 2)] * (0.5 * g);
        }
        d[(0, 0)] += rho[(2, 2)] * (0.5 * g);
        d[(1, 1)] += rho[(2, 2)] * (0.5 * g);
        d[(0, 1)] -= rho[(0, 1)] * self.dephasing;
        d[(1, 0)] -= rho[(1, 0)] * self.dephasing;
        d
    }

    /// Classical fourth-order Runge–Kutta with a fixed step.
    pub fn rk4(&self, rho0: &M, t0: f64, t1: f64, h: f64) -> M {
        let n = ((t1 - t0) / h).round().max(1.0) as usize;
        let h = (t1 - t0) / n as f64;
        let mut y = rho0.clone();
        for k in 0..n {
            let t = t0 + k as f64 * h;
            let k1 = self.rhs(t, &y);
            let k2 = self.rhs(t + 0.5 * h, &(&y + &k1 * C::from(0.5 * h)));
            let k3 = self.rhs(t + 0.5 * h, &(&y + &k2 * C::from(0.5 * h)));
            let k4 = self.rhs(t + h, &(&y + &k3 * C::from(h)));
            y += (k1 + k2 * C::from(2.0) + k3 * C::from(2.0) + k4) * C::from(h / 6.0);
        }
        y
    }
}

/// Populations of `|0⟩, |1⟩, |e⟩` after free decay from `|e⟩` for time `t`.
pub fn decay_populations(gamma: f64, t: f64) -> [f64; 3] {
    let pe = (-gamma * t).exp();
    [(1.0 - pe) / 2.0, (1.0 - pe) / 2.0, pe]
}

/// Excited population of a two-level system starting in the lower level,
/// driven at Rabi frequency `omega` with detuning `d`.
pub fn rabi_excited(omega: f64, d: f64, t: f64) -> f64 {
    let w = (omega * omega + d * d).sqrt();
    omega * omega / (w * w) * (0.5 * w * t).sin().powi(2)
}

/// Random pure three-level state as a density matrix.
pub fn random_pure<R: Rng>(rng: &mut R) -> M {
    let v: Vec<C> = (0..3)
        .map(|_| C::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect();
    let norm: f64 = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let v = nalgebra::DVector::from_iterator(3, v.into_iter().map(|z| z / norm));
    &v * v.adjoint()
}

/// Uniform random unit vector.
pub fn random_unit<R: Rng>(rng: &mut R) -> [f64; 3] {
    let z: f64 = rng.random_range(-1.0..1.0);
    let phi: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    let r = (1.0 - z * z).sqrt();
    [r * phi.cos(), r * phi.sin(), z]
}

/// Random SU(2) matrix from a uniformly drawn unit quaternion.
pub fn random_su2<R: Rng>(rng: &mut R) -> M {
    let mut q = [0.0f64; 4];
    loop {
        for x in q.iter_mut() {
            *x = rng.random_range(-1.0..1.0);
        }
        let n: f64 = q.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-3 && n <= 1.0 {
            q.iter_mut().for_each(|x| *x /= n);
            break;
        }
    }
    let (a, b) = (C::new(q[0], q[1]), C::new(q[2], q[3]));
    M::from_row_slice(2, 2, &[a, -b.conj(), b, a.conj()])
}

pub fn max_abs(m: &M) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// A random classical drive: constant on both legs or a Gaussian pulse with
/// unequal leg amplitudes.
pub struct Case {
    pub params: LambdaParams,
    pub model: Model<Drive>,
    pub rho0: M,
    pub t_end: f64,
}

pub fn random_case<R: Rng>(rng: &mut R) -> Case {
    let delta = rng.random_range(0.1..1.0);
    let big_delta = rng.random_range(-10.0..10.0);
    let gamma = rng.random_range(0.0..0.5);
    let t2: Option<f64> = rng.random_bool(0.7).then(|| rng.random_range(1.0..1e3));
    let t_end = rng.random_range(2.0..10.0);
    let (env0, env1, f0, f1): (Envelope, Envelope, Drive, Drive) = if rng.random_bool(0.3) {
        let a = C::new(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
        let b = C::new(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
        (
            Envelope::Constant { value: a },
            Envelope::Constant { value: b },
            Box::new(move |_| a),
            Box::new(move |_| b),
        )
    } else {
        let fwhm = rng.random_range(0.5..3.0);
        let centre = rng.random_range(0.2 * t_end..0.8 * t_end);
        let (p0, p1) = (rng.random_range(0.0..5.0), rng.random_range(0.0..5.0));
        let phase = rng.random_range(0.0..std::f64::consts::TAU);
        let s0 = PulseShape::gaussian(p0, fwhm, centre)
            .unwrap()
            .with_carrier_phase(phase);
        let s1 = PulseShape::gaussian(p1, fwhm, centre).unwrap();
        let (g0, g1) = (gaussian(p0, fwhm, centre), gaussian(p1, fwhm, centre));
        let rot = C::from_polar(1.0, phase);
        (
            Envelope::Pulse { pulse: s0 },
            Envelope::Pulse { pulse: s1 },
            Box::new(move |t| rot * g0(t)),
            Box::new(move |t| C::from(g1(t))),
        )
    };
    let dephasing = t2.map_or(Dephasing::Off, |t2| Dephasing::T2 { t2 });
    let params = LambdaParams::new(delta, big_delta, gamma, dephasing).with_drive(DriveSpec::Classical {
        omega0: env0,
        omega1: env1,
    });
    let model = Model {
        delta,
        big_delta,
        gamma,
        dephasing: t2.map_or(0.0, |t| 1.0 / t),
        omega0: f0,
        omega1: f1,
    };
    Case {
        params,
        model,
        rho0: random_pure(rng),
        t_end,
    }
}

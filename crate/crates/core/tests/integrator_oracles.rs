mod support;

use num_complex::Complex64 as C;
use qubus_core::dynamics::{
    hamiltonian_at, integrate, master_rhs, Dephasing, DriveSpec, Envelope, IntegratorConfig, LambdaParams, Record,
};
use qubus_core::qcore::{Basis, DensityMatrix, DotLevel, KetState};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use support::{decay_populations, max_abs, rabi_excited, random_case, random_pure, Model};

fn tight() -> IntegratorConfig {
    IntegratorConfig::default().with_tolerances(1e-11, 1e-11)
}

#[test]
fn hamiltonian_and_rhs_match_the_reference_model() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..100 {
        let case = random_case(&mut rng);
        let t = rng.random_range(0.0..case.t_end);
        let h = hamiltonian_at(&case.params, t).unwrap();
        assert!(max_abs(&(h.elements() - case.model.hamiltonian(t))) < 1e-12);
        let rho = DensityMatrix::new(case.rho0.clone(), Basis::dot3()).unwrap();
        let d = master_rhs(&case.params, &rho, t).unwrap();
        assert!(max_abs(&(d - case.model.rhs(t, &case.rho0))) < 1e-12);
    }
}

#[test]
fn adaptive_matches_fixed_step_oracle_on_random_draws() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let case = random_case(&mut rng);
        let rho0 = DensityMatrix::new(case.rho0.clone(), Basis::dot3()).unwrap();
        let traj = integrate(
            &case.params,
            &rho0,
            (0.0, case.t_end),
            &tight().with_record(Record::EveryStep),
        )
        .unwrap();
        for rho in &traj.states {
            assert!((rho.trace().re - 1.0).abs() < 1e-8 && rho.trace().im.abs() < 1e-12);
            assert!(rho.hermiticity_error() < 1e-10);
            // Dephasing of the 0↔1 coherence alone is not completely
            // positive, so positivity is only guaranteed without it.
            if case.model.dephasing == 0.0 {
                assert!(rho.min_eigenvalue() > -1e-9);
            }
        }
        let (_, last) = traj.last().unwrap();
        let oracle = case.model.rk4(&case.rho0, 0.0, case.t_end, 1e-4);
        worst = worst.max(max_abs(&(last.elements() - &oracle)));
    }
    assert!(worst < 1e-7, "worst deviation {worst:e}");
}

#[test]
fn decay_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..100 {
        let gamma = rng.random_range(0.001..2.0);
        let t = rng.random_range(0.1..10.0);
        let p = LambdaParams::new(
            rng.random_range(0.0..2.0),
            rng.random_range(-50.0..50.0),
            gamma,
            Dephasing::Off,
        );
        let rho0 = DensityMatrix::from_pure(&KetState::dot(DotLevel::Excited));
        let traj = integrate(&p, &rho0, (0.0, t), &tight()).unwrap();
        let e = traj.last().unwrap().1.elements();
        let want = decay_populations(gamma, t);
        for k in 0..3 {
            assert!((e[(k, k)].re - want[k]).abs() < 1e-6);
        }
    }
}

#[test]
fn rabi_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..100 {
        let omega = rng.random_range(0.1..5.0);
        let d = rng.random_range(-3.0..3.0);
        let delta = rng.random_range(0.0..1.0);
        let t = rng.random_range(0.1..10.0);
        // Only |1⟩ ↔ |e⟩ is driven; the pair is detuned by Δ − δ.
        let p = LambdaParams::new(delta, delta + d, 0.0, Dephasing::Off).with_drive(DriveSpec::Classical {
            omega0: Envelope::Zero,
            omega1: Envelope::Constant { value: C::from(omega) },
        });
        let rho0 = DensityMatrix::from_pure(&KetState::dot(DotLevel::Ground1));
        let traj = integrate(&p, &rho0, (0.0, t), &tight()).unwrap();
        let pe = traj.last().unwrap().1.elements()[(2, 2)].re;
        assert!((pe - rabi_excited(omega, d, t)).abs() < 1e-6);
    }
}

#[test]
fn dephasing_damps_only_the_spin_coherence() {
    let t2 = 3.0;
    let p = LambdaParams::new(0.4, 5.0, 0.0, Dephasing::T2 { t2 });
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let psi = KetState::from_slice(&[C::from(h), C::from(h), C::from(0.0)], Basis::dot3()).unwrap();
    let traj = integrate(&p, &DensityMatrix::from_pure(&psi), (0.0, 2.0), &tight()).unwrap();
    let r01 = traj.last().unwrap().1.elements()[(0, 1)];
    let want = C::from_polar(0.5 * (-2.0 / t2).exp(), 0.4 * 2.0);
    assert!((r01 - want).norm() < 1e-9);
}

/// With a loose tolerance and a step cap the adaptive scheme takes equal
/// steps, so halving the cap exposes its order.
#[test]
fn fifth_order_convergence() {
    let model_err = |h: f64| {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let case = random_case(&mut rng);
        let rho0 = DensityMatrix::new(case.rho0.clone(), Basis::dot3()).unwrap();
        let cfg = IntegratorConfig {
            rel_tol: 1.0,
            abs_tol: 1.0,
            max_step: h,
            initial_step: Some(h),
            ..Default::default()
        };
        let traj = integrate(&case.params, &rho0, (0.0, 2.0), &cfg).unwrap();
        let oracle = case.model.rk4(&case.rho0, 0.0, 2.0, 1e-4);
        max_abs(&(traj.last().unwrap().1.elements() - oracle))
    };
    let (e1, e2) = (model_err(0.04), model_err(0.02));
    let order = (e1 / e2).log2();
    assert!((4.5..5.8).contains(&order), "observed order {order} ({e1:e}, {e2:e})");
}

#[test]
fn reference_rk4_is_fourth_order() {
    let drive = |_t: f64| C::from(1.5);
    let model = Model {
        delta: 0.5,
        big_delta: 2.0,
        gamma: 0.1,
        dephasing: 0.05,
        omega0: drive,
        omega1: drive,
    };
    let rho0 = random_pure(&mut ChaCha8Rng::seed_from_u64(1));
    let exact = model.rk4(&rho0, 0.0, 2.0, 1e-4);
    let e1 = max_abs(&(model.rk4(&rho0, 0.0, 2.0, 0.1) - &exact));
    let e2 = max_abs(&(model.rk4(&rho0, 0.0, 2.0, 0.05) - &exact));
    assert!(((e1 / e2).log2() - 4.0).abs() < 0.3);
}

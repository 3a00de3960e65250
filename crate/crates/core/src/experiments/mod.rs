//! Experiment orchestration: configuration in, one table row per point out.
//!
//! Points are independent and run on a rayon pool; results are collected in
//! grid order so the output does not depend on the worker count.

pub mod axis;
pub mod config;
pub mod single;
pub mod table;
pub mod units;

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use rayon::prelude::*;

use crate::bus::{build_cz, evaluate, gate_fidelity_estimate, loop_parameters_from_pass, verify_against_fock};
use crate::cavity::{simulate_pass, tune_alpha, PassResult, QubusRun, BUS_CONDITION};
use crate::effective::{compile_su2, gate_distance, peak_rabi_for_angle};
use crate::error::{Error, Result};
use crate::qcore::{spin, CMatrix, C64};

use axis::{measure_axis, AxisSetup};
use config::{AlphaKeyword, AlphaMode, DetuningSign, ExperimentConfig, ExperimentKind, NamedGate};
use single::{optimize_detuning, SingleQubitSetup};
use table::{col, Cell, ResultTable};

pub use config::OutputFormat;
pub use table::{emit, render};

/// Default window half-width in Gaussian sigmas for classical pulses.
pub const DEFAULT_WINDOW_SIGMAS: f64 = 8.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RunOptions {
    /// Worker threads; 0 uses rayon's default.
    pub workers: usize,
}

fn parallel_map<T, R, F>(opts: RunOptions, items: &[T], f: F) -> Result<Vec<R>>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.workers)
        .build()
        .map_err(|e| Error::InvalidParameter(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(|| items.par_iter().map(&f).collect()))
}

pub fn run_experiment(cfg: &ExperimentConfig, opts: RunOptions) -> Result<ResultTable> {
    cfg.validate()?;
    match cfg.experiment {
        ExperimentKind::SingleQubitFidelitySweep => run_single_qubit_sweep(cfg, opts),
        ExperimentKind::DetuningOptimization => run_detuning_optimization(cfg, opts),
        ExperimentKind::AxisDelayDemo => run_axis_delay_demo(cfg, opts),
        ExperimentKind::QubusPassSweep => run_qubus_sweep(cfg, opts),
        ExperimentKind::QubusGateReport => run_gate_report(cfg),
        ExperimentKind::CompileSu2 => run_compile(cfg),
    }
}

fn single_setup(cfg: &ExperimentConfig) -> Result<SingleQubitSetup> {
    let lam = cfg.lambda_section()?;
    let sq = cfg.single_qubit_section()?;
    Ok(SingleQubitSetup {
        zeeman_splitting: lam.zeeman_splitting.internal(),
        decay_rate: lam.decay_rate.internal(),
        dephasing: cfg.dephasing()?,
        fwhm: cfg.pulse_section()?.fwhm.internal(),
        theta: sq.target.angle(),
        detuning_sign: match sq.detuning_sign.unwrap_or(DetuningSign::Negative) {
            DetuningSign::Negative => -1.0,
            DetuningSign::Positive => 1.0,
        },
        window_sigmas: sq.window_sigmas.unwrap_or(DEFAULT_WINDOW_SIGMAS),
        integrator: cfg.integrator_config()?,
    })
}

fn single_table(points: &[f64], setup: &SingleQubitSetup, opts: RunOptions, name: &'static str) -> Result<ResultTable> {
    let mut table = ResultTable::new(
        name,
        vec![
            col("peak_rabi", "rad/ps"),
            col("optimal_detuning", "rad/ps"),
            col("fidelity", ""),
            col("excited_population", ""),
            col("predicted_angle", "rad"),
            col("evaluations", ""),
            col("accepted_steps", ""),
            col("rejected_steps", ""),
            col("status", ""),
        ],
    );
    let results = parallel_map(opts, points, |&omega| optimize_detuning(setup, omega))?;
    for (&omega, r) in points.iter().zip(results) {
        table.push(match r {
            Ok(o) => vec![
                omega.into(),
                o.detuning.into(),
                o.fidelity.into(),
                o.excited_population.into(),
                o.predicted_angle.into(),
                o.evaluations.into(),
                o.stats.accepted_steps.into(),
                o.stats.rejected_steps.into(),
                "ok".into(),
            ],
            Err(e) => failed_row(vec![omega.into()], 9, &e),
        });
    }
    Ok(table)
}

fn failed_row(mut leading: Vec<Cell>, width: usize, e: &Error) -> Vec<Cell> {
    leading.resize(width - 1, Cell::Missing);
    leading.push(e.code().into());
    leading
}

/// Fidelity of the requested rotation at the best detuning, per peak Rabi
/// frequency of the sweep.
pub fn run_single_qubit_sweep(cfg: &ExperimentConfig, opts: RunOptions) -> Result<ResultTable> {
    single_table(
        &cfg.sweep_values()?,
        &single_setup(cfg)?,
        opts,
        "single_qubit_fidelity_sweep",
    )
}

/// Best detuning for the configured `pulse.peak_rabi`.
pub fn run_detuning_optimization(cfg: &ExperimentConfig, opts: RunOptions) -> Result<ResultTable> {
    let peak = cfg
        .pulse_section()?
        .peak_rabi
        .as_ref()
        .ok_or_else(|| Error::Config("detuning optimization needs pulse.peak_rabi".into()))?
        .internal();
    single_table(&[peak], &single_setup(cfg)?, opts, "detuning_optimization")
}

/// Measured rotation axis for each configured pulse delay.
pub fn run_axis_delay_demo(cfg: &ExperimentConfig, opts: RunOptions) -> Result<ResultTable> {
    let lam = cfg.lambda_section()?;
    let demo = cfg
        .axis_demo
        .as_ref()
        .ok_or_else(|| Error::Config("missing [axis_demo] section".into()))?;
    let setup = AxisSetup {
        zeeman_splitting: lam.zeeman_splitting.internal(),
        detuning: lam
            .detuning
            .as_ref()
            .ok_or_else(|| Error::Config("axis demo needs lambda.detuning".into()))?
            .internal(),
        decay_rate: lam.decay_rate.internal(),
        dephasing: cfg.dephasing()?,
        fwhm: cfg.pulse_section()?.fwhm.internal(),
        theta: demo.theta,
        window_sigmas: demo.window_sigmas.unwrap_or(DEFAULT_WINDOW_SIGMAS),
        integrator: cfg.integrator_config()?,
    };
    let mut table = ResultTable::new(
        "axis_delay_demo",
        vec![
            col("delay_fraction", ""),
            col("axis_x", ""),
            col("axis_y", ""),
            col("axis_z", ""),
            col("azimuth", "rad"),
            col("expected_azimuth", "rad"),
            col("elevation", "rad"),
            col("axis_error", "rad"),
            col("rotation_angle", "rad"),
            col("peak_rabi", "rad/ps"),
            col("accepted_steps", ""),
            col("status", ""),
        ],
    );
    let results = parallel_map(opts, &demo.delays, |&f| measure_axis(&setup, f))?;
    for (&f, r) in demo.delays.iter().zip(results) {
        table.push(match r {
            Ok(m) => vec![
                f.into(),
                m.axis.x.into(),
                m.axis.y.into(),
                m.axis.z.into(),
                m.azimuth.into(),
                m.expected_azimuth.into(),
                m.elevation.into(),
                m.axis_error.into(),
                m.angle.into(),
                m.peak_rabi.into(),
                m.stats.accepted_steps.into(),
                "ok".into(),
            ],
            Err(e) => failed_row(vec![f.into()], 12, &e),
        });
    }
    Ok(table)
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct QubusPoint {
    gamma_l_ratio: f64,
    kappa_c_fraction: f64,
    alpha: AlphaMode,
}

/// Threshold below which a conditional phase is reported as absent.
pub const ZERO_PHASE: f64 = 1e-12;

/// Pass fidelity over the `Γ_L/Γ₀ × κ_c/κ × α` grid, in that nesting order.
pub fn run_qubus_sweep(cfg: &ExperimentConfig, opts: RunOptions) -> Result<ResultTable> {
    let lam = cfg.lambda_section()?;
    let q = cfg
        .qubus
        .as_ref()
        .ok_or_else(|| Error::Config("missing [qubus] section".into()))?;
    let cavity = cfg.cavity_params()?;
    let base = QubusRun {
        zeeman_splitting: lam.zeeman_splitting.internal(),
        detuning: q.detuning.internal(),
        dephasing: cfg.dephasing()?,
        cavity,
        alpha: C64::from(1.0),
        pulse_fwhm: q.pulse_fwhm.internal(),
        n_max: q.n_max,
        integrator: cfg.integrator_config()?,
    };
    let target = q.target_product.unwrap_or(BUS_CONDITION);
    let mut points = Vec::new();
    for &gamma_l_ratio in &q.gamma_l_ratios {
        for &kappa_c_fraction in &q.kappa_c_fractions {
            for &alpha in &q.alphas {
                points.push(QubusPoint {
                    gamma_l_ratio,
                    kappa_c_fraction,
                    alpha,
                });
            }
        }
    }
    let run_point = |p: &QubusPoint| -> Result<(f64, PassResult)> {
        let mut run = base.clone();
        run.cavity.gamma_l = p.gamma_l_ratio * run.cavity.gamma0;
        run.cavity.kappa_c_fraction = p.kappa_c_fraction;
        run.cavity.validate()?;
        match p.alpha {
            AlphaMode::Fixed(a) => {
                run.alpha = C64::from(a);
                simulate_pass(&run).map(|r| (a, r))
            }
            AlphaMode::Keyword(AlphaKeyword::Tuned) => tune_alpha(&run, target),
        }
    };
    let mut table = ResultTable::new(
        "qubus_pass_sweep",
        vec![
            col("gamma_l_ratio", ""),
            col("kappa_c_fraction", ""),
            col("alpha_mode", ""),
            col("alpha", ""),
            col("conditional_phase", "rad"),
            col("predicted_phase", "rad"),
            col("alpha_phase_product", ""),
            col("pass_fidelity", ""),
            col("fidelity_fixed_chi", ""),
            col("validity_ratio", ""),
            col("n_max", ""),
            col("leakage", ""),
            col("accepted_steps", ""),
            col("rejected_steps", ""),
            col("status", ""),
        ],
    );
    let results = parallel_map(opts, &points, run_point)?;
    for (p, r) in points.iter().zip(results) {
        let mode = match p.alpha {
            AlphaMode::Fixed(_) => "fixed",
            AlphaMode::Keyword(AlphaKeyword::Tuned) => "tuned",
        };
        let lead = vec![p.gamma_l_ratio.into(), p.kappa_c_fraction.into(), mode.into()];
        table.push(match r {
            Ok((alpha, pass)) => {
                let status = match pass.conditional_phase {
                    None => "no_phase",
                    Some(v) if v.abs() < ZERO_PHASE => "zero_phase",
                    _ if pass.validity_warning => "validity_warning",
                    _ => "ok",
                };
                let mut row = lead;
                row.extend([
                    alpha.into(),
                    pass.conditional_phase.into(),
                    pass.predicted_phase.into(),
                    pass.conditional_phase.map(|v| (alpha * v).abs()).into(),
                    pass.pass_fidelity.into(),
                    pass.fidelity_fixed_chi.into(),
                    pass.validity_ratio.into(),
                    pass.n_max.into(),
                    pass.field.leakage.into(),
                    pass.stats.accepted_steps.into(),
                    pass.stats.rejected_steps.into(),
                    status.into(),
                ]);
                row
            }
            Err(e) => failed_row(lead, 15, &e),
        });
    }
    Ok(table)
}

/// Commutator-loop gate built from the configured bus parameters.
pub fn run_gate_report(cfg: &ExperimentConfig) -> Result<ResultTable> {
    let g = cfg
        .gate
        .as_ref()
        .ok_or_else(|| Error::Config("missing [gate] section".into()))?;
    let (beta, theta) = match (g.theta, g.vartheta) {
        (Some(theta), None) => (g.beta, theta),
        (None, Some(vartheta)) => loop_parameters_from_pass(C64::from(g.beta), vartheta),
        _ => return Err(Error::Config("gate needs exactly one of theta or vartheta".into())),
    };
    let estimate =
        gate_fidelity_estimate(&g.pass_fidelities, g.waveguide_loss).map_err(|e| Error::Config(e.to_string()))?;
    let program = build_cz(beta, theta);
    let start = C64::from(0.0);
    let eval = evaluate(&program, start);
    let residual = eval
        .branches
        .iter()
        .map(|b| (b.amplitude - start).norm())
        .fold(0.0, f64::max);
    let mut table = ResultTable::new(
        "qubus_gate_report",
        vec![
            col("beta", ""),
            col("theta", "rad"),
            col("entangling_phase", "rad"),
            col("closure_residual", ""),
            col("fock_deviation", ""),
            col("gate_fidelity_estimate", ""),
            col("status", ""),
        ],
    );
    let (fock, status) = match verify_against_fock(&program, start, g.fock_n_max) {
        Ok(d) => (Cell::Float(d), if eval.all_closed() { "ok" } else { "open_loop" }),
        Err(e) => (Cell::Missing, e.code()),
    };
    table.push(vec![
        beta.into(),
        theta.into(),
        eval.entangling_phase().into(),
        residual.into(),
        fock,
        estimate.into(),
        status.into(),
    ]);
    Ok(table)
}

/// Two-by-two unitary for a named gate.
pub fn named_unitary(g: NamedGate) -> CMatrix {
    let c = |re: f64, im: f64| C64::new(re, im);
    let h = FRAC_1_SQRT_2;
    let m = |v: [C64; 4]| CMatrix::from_row_slice(2, 2, &v);
    match g {
        NamedGate::Identity => m([c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]),
        NamedGate::Hadamard => m([c(h, 0.0), c(h, 0.0), c(h, 0.0), c(-h, 0.0)]),
        NamedGate::X => m([c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]),
        NamedGate::Y => m([c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0)]),
        NamedGate::Z => m([c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)]),
        NamedGate::S => m([c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 1.0)]),
        NamedGate::T => m([c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), C64::from_polar(1.0, PI / 4.0)]),
    }
}

/// Pulse schedule for the configured target: one row per pulse plus a
/// closing `wait` row.
pub fn run_compile(cfg: &ExperimentConfig) -> Result<ResultTable> {
    let lam = cfg.lambda_section()?;
    let c = cfg
        .compile
        .as_ref()
        .ok_or_else(|| Error::Config("missing [compile] section".into()))?;
    let target = match (c.gate, c.axis, c.angle) {
        (Some(g), None, None) => named_unitary(g),
        (None, Some(axis), Some(angle)) => {
            if !(axis.iter().map(|x| x * x).sum::<f64>() > 0.0) {
                return Err(Error::Config("compile axis must be nonzero".into()));
            }
            spin::rotation(axis, angle)
        }
        _ => return Err(Error::Config("compile needs either gate or both axis and angle".into())),
    };
    let delta = lam.zeeman_splitting.internal();
    if !(delta > 0.0) {
        return Err(Error::Config("compile needs a positive zeeman_splitting".into()));
    }
    let fwhm = cfg.pulse_section()?.fwhm.internal();
    let gate = compile_su2(&target, std::f64::consts::TAU / delta, fwhm)?;
    let distance = gate_distance(&target, &gate.unitary());
    let base = match &lam.detuning {
        Some(d) => Some(crate::dynamics::LambdaParams::new(
            delta,
            d.internal(),
            lam.decay_rate.internal(),
            cfg.dephasing()?,
        )),
        None => None,
    };
    let mut table = ResultTable::new(
        "compile_su2",
        vec![
            col("step", ""),
            col("kind", ""),
            col("slot", ""),
            col("delay_fraction", ""),
            col("arrival", "ps"),
            col("theta", "rad"),
            col("phi", "rad"),
            col("axis_azimuth", "rad"),
            col("peak_rabi", "rad/ps"),
            col("gate_distance", ""),
        ],
    );
    for (k, r) in gate.rotations.iter().enumerate() {
        let peak = match &base {
            Some(p) => Cell::Float(peak_rabi_for_angle(p, r.spec.theta, fwhm)?),
            None => Cell::Missing,
        };
        table.push(vec![
            k.into(),
            "pulse".into(),
            (r.slot as usize).into(),
            r.spec.delay_fraction().into(),
            r.arrival(gate.clock_period).into(),
            r.spec.theta.into(),
            r.spec.phi.into(),
            r.spec.axis_azimuth().into(),
            peak,
            distance.into(),
        ]);
    }
    table.push(vec![
        gate.rotations.len().into(),
        "wait".into(),
        Cell::Missing,
        gate.wait_fraction.into(),
        Cell::Missing,
        Cell::Missing,
        Cell::Missing,
        Cell::Missing,
        Cell::Missing,
        distance.into(),
    ]);
    Ok(table)
}

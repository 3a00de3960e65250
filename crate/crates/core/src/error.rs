use thiserror::Error;

use crate::dynamics::Trajectory;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("basis mismatch: {0}")]
    BasisMismatch(String),

    #[error("state has zero norm")]
    ZeroNorm,

    #[error("invalid dot level index {0} (expected 0, 1 or 2)")]
    InvalidLevel(usize),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("envelope is not finite at t = {t} ps")]
    UndefinedEnvelope { t: f64 },

    #[error("adiabatic elimination requires a nonzero detuning")]
    ZeroDetuning,

    #[error("pulses at {first} ps and {second} ps overlap (separation below {min_separation} ps)")]
    OverlappingPulses {
        first: f64,
        second: f64,
        min_separation: f64,
    },

    #[error("matrix is not unitary (deviation {0:e})")]
    NotUnitary(f64),

    #[error("integration failed: {0}")]
    Integration(#[from] Box<IntegrationFailure>),

    #[error("dispersive validity ratio {ratio} exceeds the hard ceiling {ceiling}")]
    DispersiveValidity { ratio: f64, ceiling: f64 },

    #[error("Fock truncation leakage {leakage:e} exceeds {limit:e}; increase n_max (currently {n_max})")]
    TruncationLeakage { leakage: f64, limit: f64, n_max: usize },

    #[error("alpha tuning failed: {0}")]
    AlphaTuning(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("empty result")]
    EmptyResult,

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Integrator failure carrying the trajectory recorded up to the failure point.
#[derive(Debug, Error)]
#[error("{kind} at t = {t} ps")]
pub struct IntegrationFailure {
    pub kind: IntegrationFailureKind,
    pub t: f64,
    pub partial: Trajectory,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IntegrationFailureKind {
    MaxStepsExceeded,
    StepSizeUnderflow,
    NonFinite,
}

impl std::fmt::Display for IntegrationFailureKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::MaxStepsExceeded => f.write_str("maximum step count exceeded"),
            Self::StepSizeUnderflow => f.write_str("tolerance not met at minimum step size"),
            Self::NonFinite => f.write_str("non-finite state"),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    /// Short machine-readable code used in sweep rows.
    pub fn code(&self) -> &'static str {
        match self {
            Self::DimensionMismatch { .. } | Self::BasisMismatch(_) => "dimension_mismatch",
            Self::ZeroNorm => "zero_norm",
            Self::InvalidLevel(_) | Self::InvalidParameter(_) => "invalid_parameter",
            Self::UndefinedEnvelope { .. } => "undefined_envelope",
            Self::ZeroDetuning => "zero_detuning",
            Self::OverlappingPulses { .. } => "overlapping_pulses",
            Self::NotUnitary(_) => "not_unitary",
            Self::Integration(f) => match f.kind {
                IntegrationFailureKind::MaxStepsExceeded => "integrator_max_steps",
                IntegrationFailureKind::StepSizeUnderflow => "integrator_step_underflow",
                IntegrationFailureKind::NonFinite => "integrator_non_finite",
            },
            Self::DispersiveValidity { .. } => "validity_ceiling",
            Self::TruncationLeakage { .. } => "truncation_leakage",
            Self::AlphaTuning(_) => "alpha_tuning",
            Self::Config(_) => "config",
            Self::EmptyResult => "empty_result",
            Self::Io(_) => "io",
        }
    }
}

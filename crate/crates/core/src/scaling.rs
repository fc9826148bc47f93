//! The extended scaling group `f* = λ f`, `η* = λ^δ η`, `h* = λ^σ h`.
//!
//! Everything here is closed-form algebra: recovering the group parameter
//! from the asymptotic value of the starred solution, evaluating the
//! transformation function, and mapping starred trajectories back to the
//! physical variables.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ivp::{IntegrationStatus, Trajectory};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScalingError {
    #[error("group exponent delta must differ from 1")]
    DeltaIsOne,
    #[error("group exponent sigma must be non-zero")]
    SigmaIsZero,
    #[error("non-positive base {base} in the group-parameter formula")]
    NonPositiveBase { base: f64 },
    #[error("group parameter must be positive and finite, got {0}")]
    InvalidLambda(f64),
    #[error("cannot rescale a trajectory that did not complete ({0:?})")]
    IncompleteTrajectory(IntegrationStatus),
    #[error("trajectory states need at least 3 components (f, f', f''), got {0}")]
    TooFewComponents(usize),
}

/// Exponents of the extended scaling group.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtendedScalingGroup {
    delta: f64,
    sigma: f64,
}

impl ExtendedScalingGroup {
    pub fn new(delta: f64, sigma: f64) -> Result<Self, ScalingError> {
        if delta == 1.0 {
            return Err(ScalingError::DeltaIsOne);
        }
        if sigma == 0.0 {
            return Err(ScalingError::SigmaIsZero);
        }
        Ok(Self { delta, sigma })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Exponent `e` with `f*^{(k)} = λ^e f^{(k)}` for the k-th derivative.
    pub fn derivative_exponent(&self, order: u32) -> f64 {
        1.0 - order as f64 * self.delta
    }
}

/// How the condition at infinity enters the group-parameter formula.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticSpec {
    d: f64,
    homogeneous: bool,
}

impl AsymptoticSpec {
    /// `f'(∞) = d` with `d ≠ 0`.
    pub fn target(d: f64) -> Self {
        Self {
            d,
            homogeneous: false,
        }
    }

    /// `f'(∞) = 0`, handled by shifting the target to `1 - h^{(1-δ)/σ}`.
    pub fn homogeneous() -> Self {
        Self {
            d: 0.0,
            homogeneous: true,
        }
    }

    pub fn d(&self) -> f64 {
        self.d
    }

    pub fn is_homogeneous(&self) -> bool {
        self.homogeneous
    }
}

/// Outcome class of one transformation-function probe.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ProbeStatus {
    Ok,
    BlowUp,
    StepFailure,
    /// The group parameter could not be formed (non-positive base or `h* <= 0`).
    InvalidLambda,
    /// Not evaluated: outside the window a caller allows around its last root.
    OutOfWindow,
}

impl ProbeStatus {
    pub fn is_ok(&self) -> bool {
        matches!(self, ProbeStatus::Ok)
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            ProbeStatus::Ok => "ok",
            ProbeStatus::BlowUp => "blowup",
            ProbeStatus::StepFailure => "step_failure",
            ProbeStatus::InvalidLambda => "invalid_lambda",
            ProbeStatus::OutOfWindow => "out_of_window",
        }
    }
}

impl From<IntegrationStatus> for ProbeStatus {
    fn from(status: IntegrationStatus) -> Self {
        match status {
            IntegrationStatus::Completed => ProbeStatus::Ok,
            IntegrationStatus::BlowUp(_) => ProbeStatus::BlowUp,
            IntegrationStatus::StepFailure(_) => ProbeStatus::StepFailure,
        }
    }
}

/// Value of the transformation function reported for failed probes.
pub const FAILED_PROBE_GAMMA: f64 = -1.0;

/// One evaluation of the transformation function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaEvaluation {
    pub h_star: f64,
    pub lambda: f64,
    pub gamma: f64,
    /// Rescaled missing initial condition `f''(0)`.
    pub skin_friction: f64,
    pub status: ProbeStatus,
}

impl GammaEvaluation {
    pub fn failed(h_star: f64, status: ProbeStatus) -> Self {
        debug_assert!(!status.is_ok());
        Self {
            h_star,
            lambda: f64::NAN,
            gamma: FAILED_PROBE_GAMMA,
            skin_friction: f64::NAN,
            status,
        }
    }
}

/// Group parameter from the value of `df*/dη*` at the truncated boundary.
///
/// Non-homogeneous: `λ = (f*'(η∞)/d)^{1/(1-δ)}`. Homogeneous:
/// `λ = (f*'(η∞) + h*^{(1-δ)/σ})^{1/(1-δ)}`.
pub fn lambda_from_endpoint(
    fprime_end: f64,
    h_star: f64,
    group: &ExtendedScalingGroup,
    asym: &AsymptoticSpec,
) -> Result<f64, ScalingError> {
    let one_minus_delta = 1.0 - group.delta();
    let base = if asym.is_homogeneous() {
        fprime_end + h_star.powf(one_minus_delta / group.sigma())
    } else {
        fprime_end / asym.d()
    };
    if !(base > 0.0) || !base.is_finite() {
        return Err(ScalingError::NonPositiveBase { base });
    }
    Ok(base.powf(1.0 / one_minus_delta))
}

/// `Γ(h*) = λ^{-σ} h* - 1`.
pub fn gamma_value(h_star: f64, lambda: f64, group: &ExtendedScalingGroup) -> f64 {
    lambda.powf(-group.sigma()) * h_star - 1.0
}

/// Maps a starred trajectory to physical variables:
/// `η = λ^{-δ} η*`, `f = λ^{-1} f*`, `f' = λ^{-(1-δ)} f*'`, `f'' = λ^{-(1-2δ)} f*''`.
///
/// Only the first three state components are carried over.
pub fn rescale_trajectory(
    starred: &Trajectory,
    lambda: f64,
    group: &ExtendedScalingGroup,
) -> Result<Trajectory, ScalingError> {
    if !starred.status.is_completed() {
        return Err(ScalingError::IncompleteTrajectory(starred.status));
    }
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(ScalingError::InvalidLambda(lambda));
    }
    if let Some(state) = starred.states.first() {
        if state.len() < 3 {
            return Err(ScalingError::TooFewComponents(state.len()));
        }
    }
    let eta_factor = lambda.powf(-group.delta());
    let factors = [
        lambda.recip(),
        lambda.powf(-group.derivative_exponent(1)),
        lambda.powf(-group.derivative_exponent(2)),
    ];
    Ok(Trajectory {
        nodes: starred.nodes.iter().map(|eta| eta_factor * eta).collect(),
        states: starred
            .states
            .iter()
            .map(|state| factors.iter().zip(state).map(|(k, v)| k * v).collect())
            .collect(),
        status: IntegrationStatus::Completed,
    })
}

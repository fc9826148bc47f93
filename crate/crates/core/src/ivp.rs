//! Initial-value integration for first-order ODE systems.
//!
//! Two integrators are provided: the classical fixed-step fourth-order
//! Runge–Kutta sweep and an adaptive Dormand–Prince 5(4) embedded pair.
//! Both treat mathematical blow-up as an expected outcome and report it
//! through [`IntegrationStatus`] instead of an error, because the
//! transformation-method drivers probe parameter values for which the
//! auxiliary problem may escape to infinity before the truncated boundary.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Magnitude cap applied to every state component unless overridden.
pub const DEFAULT_BLOWUP_THRESHOLD: f64 = 1e8;

/// A first-order system `y' = F(x, y)`.
pub trait OdeSystem {
    /// Number of state components.
    fn dimension(&self) -> usize;

    /// Writes `F(x, y)` into `dydx`. Both slices have length `dimension()`.
    fn rhs(&self, x: f64, y: &[f64], dydx: &mut [f64]);

    /// Named scalar parameters of the system, in a fixed order.
    fn parameters(&self) -> Vec<(&'static str, f64)> {
        Vec::new()
    }
}

/// How an integration ended.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum IntegrationStatus {
    Completed,
    /// A state component exceeded the magnitude cap at this abscissa.
    BlowUp(f64),
    /// The right-hand side became non-finite, or the adaptive step collapsed.
    StepFailure(f64),
}

impl IntegrationStatus {
    pub fn is_completed(&self) -> bool {
        matches!(self, IntegrationStatus::Completed)
    }
}

/// Discrete solution of an initial-value problem.
///
/// `nodes` is strictly increasing and `states[i]` is the state at `nodes[i]`.
/// When the integration stops early the trajectory is truncated at the last
/// finite state inside the magnitude cap.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub nodes: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub status: IntegrationStatus,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn first_state(&self) -> &[f64] {
        &self.states[0]
    }

    pub fn last_node(&self) -> f64 {
        *self
            .nodes
            .last()
            .expect("trajectory has at least the initial node")
    }

    pub fn last_state(&self) -> &[f64] {
        self.states
            .last()
            .expect("trajectory has at least the initial node")
    }

    /// Linear interpolation of the state at `x`.
    ///
    /// Returns `None` outside `[nodes[0], last_node()]`.
    pub fn sample(&self, x: f64) -> Option<Vec<f64>> {
        let first = *self.nodes.first()?;
        let last = self.last_node();
        if !(first..=last).contains(&x) {
            return None;
        }
        let upper = self.nodes.partition_point(|&node| node < x);
        if upper == 0 {
            return Some(self.states[0].clone());
        }
        let (x0, x1) = (self.nodes[upper - 1], self.nodes[upper]);
        let weight = (x - x0) / (x1 - x0);
        let (y0, y1) = (&self.states[upper - 1], &self.states[upper]);
        Some(
            y0.iter()
                .zip(y1)
                .map(|(a, b)| a + weight * (b - a))
                .collect(),
        )
    }

    /// The values of one state component along the trajectory.
    pub fn component(&self, index: usize) -> Vec<f64> {
        self.states.iter().map(|state| state[index]).collect()
    }
}

/// Settings of the embedded-pair integrator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdaptiveSettings {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub initial_step: f64,
    pub min_step: f64,
    pub max_step: f64,
}

impl AdaptiveSettings {
    /// Equal relative and absolute tolerance with default step bounds.
    pub fn with_tolerance(tol: f64) -> Self {
        Self {
            rel_tol: tol,
            abs_tol: tol,
            initial_step: 1e-3,
            min_step: 1e-12,
            max_step: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum StepMode {
    FixedRk4 { step: f64 },
    Adaptive(AdaptiveSettings),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    pub mode: StepMode,
    pub blowup_threshold: f64,
}

impl IntegratorConfig {
    pub fn fixed(step: f64) -> Self {
        Self {
            mode: StepMode::FixedRk4 { step },
            blowup_threshold: DEFAULT_BLOWUP_THRESHOLD,
        }
    }

    pub fn adaptive(tol: f64) -> Self {
        Self {
            mode: StepMode::Adaptive(AdaptiveSettings::with_tolerance(tol)),
            blowup_threshold: DEFAULT_BLOWUP_THRESHOLD,
        }
    }

    pub fn with_blowup_threshold(mut self, threshold: f64) -> Self {
        self.blowup_threshold = threshold;
        self
    }

    pub fn validate(&self) -> Result<(), IvpError> {
        if !(self.blowup_threshold > 0.0) {
            return Err(IvpError::InvalidConfig(format!(
                "blowup threshold must be positive, got {}",
                self.blowup_threshold
            )));
        }
        match self.mode {
            StepMode::FixedRk4 { step } => {
                if !(step > 0.0 && step.is_finite()) {
                    return Err(IvpError::InvalidConfig(format!(
                        "fixed step must be positive, got {step}"
                    )));
                }
            }
            StepMode::Adaptive(s) => {
                for (name, tol) in [("rel_tol", s.rel_tol), ("abs_tol", s.abs_tol)] {
                    if !(tol > 0.0 && tol < 1.0) {
                        return Err(IvpError::InvalidConfig(format!(
                            "{name} must lie in (0, 1), got {tol}"
                        )));
                    }
                }
                if !(s.min_step > 0.0
                    && s.min_step <= s.initial_step
                    && s.initial_step <= s.max_step)
                {
                    return Err(IvpError::InvalidConfig(format!(
                        "step bounds must satisfy 0 < min ({}) <= initial ({}) <= max ({})",
                        s.min_step, s.initial_step, s.max_step
                    )));
                }
            }
        }
        Ok(())
    }
}

impl Default for IntegratorConfig {
    /// Adaptive pair at `1e-10`, comfortably below the six-digit resolution
    /// of the reported boundary-layer quantities.
    fn default() -> Self {
        Self::adaptive(1e-10)
    }
}

/// Precondition violations. Blow-up is not an error; see [`IntegrationStatus`].
#[derive(Debug, Error, Clone, PartialEq)]
pub enum IvpError {
    #[error("integration span [{0}, {1}] is empty or reversed")]
    InvalidSpan(f64, f64),
    #[error("initial state has {got} components, system expects {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("initial state is not finite")]
    NonFiniteInitialState,
    #[error("invalid integrator configuration: {0}")]
    InvalidConfig(String),
}

fn check_inputs<S: OdeSystem + ?Sized>(
    system: &S,
    y0: &[f64],
    span: (f64, f64),
) -> Result<(), IvpError> {
    let (a, b) = span;
    if !(a < b) || !a.is_finite() || !b.is_finite() {
        return Err(IvpError::InvalidSpan(a, b));
    }
    if y0.len() != system.dimension() {
        return Err(IvpError::DimensionMismatch {
            expected: system.dimension(),
            got: y0.len(),
        });
    }
    if y0.iter().any(|v| !v.is_finite()) {
        return Err(IvpError::NonFiniteInitialState);
    }
    Ok(())
}

fn exceeds(state: &[f64], threshold: f64) -> bool {
    state.iter().any(|v| v.abs() > threshold)
}

fn all_finite(values: &[f64]) -> bool {
    values.iter().all(|v| v.is_finite())
}

/// Dispatches on `config.mode`.
pub fn integrate<S: OdeSystem + ?Sized>(
    system: &S,
    y0: &[f64],
    span: (f64, f64),
    config: &IntegratorConfig,
) -> Result<Trajectory, IvpError> {
    config.validate()?;
    match config.mode {
        StepMode::FixedRk4 { step } => {
            integrate_fixed(system, y0, span, step, config.blowup_threshold)
        }
        StepMode::Adaptive(settings) => {
            integrate_adaptive(system, y0, span, &settings, config.blowup_threshold)
        }
    }
}

/// Classical RK4 with a uniform step; the last step is shortened to land on
/// `span.1` exactly.
pub fn integrate_fixed<S: OdeSystem + ?Sized>(
    system: &S,
    y0: &[f64],
    span: (f64, f64),
    step: f64,
    blowup_threshold: f64,
) -> Result<Trajectory, IvpError> {
    check_inputs(system, y0, span)?;
    if !(step > 0.0 && step.is_finite()) {
        return Err(IvpError::InvalidConfig(format!(
            "fixed step must be positive, got {step}"
        )));
    }
    let (a, b) = span;
    let n = y0.len();
    let mut trajectory = Trajectory {
        nodes: vec![a],
        states: vec![y0.to_vec()],
        status: IntegrationStatus::Completed,
    };
    if exceeds(y0, blowup_threshold) {
        trajectory.status = IntegrationStatus::BlowUp(a);
        return Ok(trajectory);
    }

    let mut k1 = vec![0.0; n];
    let mut k2 = vec![0.0; n];
    let mut k3 = vec![0.0; n];
    let mut k4 = vec![0.0; n];
    let mut tmp = vec![0.0; n];
    let mut x = a;
    let mut y = y0.to_vec();
    // Steps within this fraction of `step` of the end are merged into the last one.
    let landing_slack = 1e-9 * step;

    while x < b {
        let remaining = b - x;
        let (h, last) = if remaining <= step + landing_slack {
            (remaining, true)
        } else {
            (step, false)
        };

        system.rhs(x, &y, &mut k1);
        for i in 0..n {
            tmp[i] = y[i] + 0.5 * h * k1[i];
        }
        system.rhs(x + 0.5 * h, &tmp, &mut k2);
        for i in 0..n {
            tmp[i] = y[i] + 0.5 * h * k2[i];
        }
        system.rhs(x + 0.5 * h, &tmp, &mut k3);
        for i in 0..n {
            tmp[i] = y[i] + h * k3[i];
        }
        system.rhs(x + h, &tmp, &mut k4);

        if ![&k1, &k2, &k3, &k4].iter().all(|k| all_finite(k)) {
            trajectory.status = IntegrationStatus::StepFailure(x);
            return Ok(trajectory);
        }
        for i in 0..n {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        x = if last { b } else { x + h };

        if !all_finite(&y) {
            trajectory.status = IntegrationStatus::StepFailure(x);
            return Ok(trajectory);
        }
        if exceeds(&y, blowup_threshold) {
            trajectory.status = IntegrationStatus::BlowUp(x);
            return Ok(trajectory);
        }
        trajectory.nodes.push(x);
        trajectory.states.push(y.clone());
    }
    Ok(trajectory)
}

// Dormand–Prince 5(4) tableau.
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
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// Difference between the fifth-order weights and the embedded fourth-order ones.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const SAFETY: f64 = 0.9;
const MAX_GROWTH: f64 = 5.0;
const MIN_SHRINK: f64 = 0.2;

/// Adaptive Dormand–Prince 5(4) integration with per-component control
/// `|err_i| <= rel_tol * |y_i| + abs_tol`. Every accepted step is recorded.
pub fn integrate_adaptive<S: OdeSystem + ?Sized>(
    system: &S,
    y0: &[f64],
    span: (f64, f64),
    settings: &AdaptiveSettings,
    blowup_threshold: f64,
) -> Result<Trajectory, IvpError> {
    check_inputs(system, y0, span)?;
    IntegratorConfig {
        mode: StepMode::Adaptive(*settings),
        blowup_threshold,
    }
    .validate()?;

    let (a, b) = span;
    let n = y0.len();
    let mut trajectory = Trajectory {
        nodes: vec![a],
        states: vec![y0.to_vec()],
        status: IntegrationStatus::Completed,
    };
    if exceeds(y0, blowup_threshold) {
        trajectory.status = IntegrationStatus::BlowUp(a);
        return Ok(trajectory);
    }

    let mut k = vec![vec![0.0; n]; 7];
    let mut tmp = vec![0.0; n];
    let mut y_new = vec![0.0; n];
    let mut x = a;
    let mut y = y0.to_vec();
    let mut h = settings.initial_step.min(b - a);

    system.rhs(x, &y, &mut k[0]);
    if !all_finite(&k[0]) {
        trajectory.status = IntegrationStatus::StepFailure(x);
        return Ok(trajectory);
    }

    while x < b {
        let remaining = b - x;
        let last = h >= remaining * (1.0 - 1e-12);
        if last {
            h = remaining;
        }

        let stages: [(f64, &[f64]); 5] = [
            (C2, &[A21]),
            (C3, &[A31, A32]),
            (C4, &[A41, A42, A43]),
            (C5, &[A51, A52, A53, A54]),
            (1.0, &[A61, A62, A63, A64, A65]),
        ];
        for (stage, (c, row)) in stages.iter().enumerate() {
            for i in 0..n {
                let mut acc = 0.0;
                for (j, coeff) in row.iter().enumerate() {
                    acc += coeff * k[j][i];
                }
                tmp[i] = y[i] + h * acc;
            }
            system.rhs(x + c * h, &tmp, &mut k[stage + 1]);
        }
        for i in 0..n {
            y_new[i] = y[i]
                + h * (B1 * k[0][i] + B3 * k[2][i] + B4 * k[3][i] + B5 * k[4][i] + B6 * k[5][i]);
        }
        let x_new = if last { b } else { x + h };
        system.rhs(x_new, &y_new, &mut k[6]);

        let finite = all_finite(&y_new) && k.iter().all(|stage| all_finite(stage));
        let error_ratio = if finite {
            let mut worst: f64 = 0.0;
            for i in 0..n {
                let err = h
                    * (E1 * k[0][i]
                        + E3 * k[2][i]
                        + E4 * k[3][i]
                        + E5 * k[4][i]
                        + E6 * k[5][i]
                        + E7 * k[6][i]);
                let scale = settings.abs_tol + settings.rel_tol * y[i].abs().max(y_new[i].abs());
                worst = worst.max((err / scale).abs());
            }
            worst
        } else {
            f64::INFINITY
        };

        if error_ratio <= 1.0 {
            x = x_new;
            std::mem::swap(&mut y, &mut y_new);
            if exceeds(&y, blowup_threshold) {
                trajectory.status = IntegrationStatus::BlowUp(x);
                return Ok(trajectory);
            }
            trajectory.nodes.push(x);
            trajectory.states.push(y.clone());
            // First-same-as-last: the final stage is the next step's first.
            k.swap(0, 6);
            let factor = if error_ratio == 0.0 {
                MAX_GROWTH
            } else {
                (SAFETY * error_ratio.powf(-0.2)).clamp(MIN_SHRINK, MAX_GROWTH)
            };
            h = (h * factor).min(settings.max_step);
        } else {
            let factor = if error_ratio.is_finite() {
                (SAFETY * error_ratio.powf(-0.2)).clamp(MIN_SHRINK, 1.0)
            } else {
                MIN_SHRINK
            };
            h *= factor;
            if h < settings.min_step {
                trajectory.status = IntegrationStatus::StepFailure(x);
                return Ok(trajectory);
            }
        }
    }
    Ok(trajectory)
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Linear(f64);

    impl OdeSystem for Linear {
        fn dimension(&self) -> usize {
            1
        }
        fn rhs(&self, _x: f64, y: &[f64], dydx: &mut [f64]) {
            dydx[0] = self.0 * y[0];
        }
        fn parameters(&self) -> Vec<(&'static str, f64)> {
            vec![("rate", self.0)]
        }
    }

    struct NanAfter(f64);

    impl OdeSystem for NanAfter {
        fn dimension(&self) -> usize {
            1
        }
        fn rhs(&self, x: f64, _y: &[f64], dydx: &mut [f64]) {
            dydx[0] = if x > self.0 { f64::NAN } else { 1.0 };
        }
    }

    /// y' = y^2 blows up at x = 1 from y(0) = 1.
    struct Riccati;

    impl OdeSystem for Riccati {
        fn dimension(&self) -> usize {
            1
        }
        fn rhs(&self, _x: f64, y: &[f64], dydx: &mut [f64]) {
            dydx[0] = y[0] * y[0];
        }
    }

    #[test]
    fn rk4_exponential() {
        let t = integrate_fixed(&Linear(1.0), &[1.0], (0.0, 1.0), 0.1, 1e8).unwrap();
        assert!(t.status.is_completed());
        assert_eq!(t.last_node(), 1.0);
        assert!((t.last_state()[0] - 1f64.exp()).abs() < 1e-5);
        assert_eq!(t.len(), 11);
    }

    #[test]
    fn rk4_lands_on_endpoint_with_uneven_step() {
        let t = integrate_fixed(&Linear(1.0), &[1.0], (0.0, 1.0), 0.3, 1e8).unwrap();
        assert_eq!(t.last_node(), 1.0);
        assert_eq!(t.len(), 5);
        assert!(t.nodes.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn adaptive_decay() {
        let settings = AdaptiveSettings::with_tolerance(1e-6);
        let t = integrate_adaptive(&Linear(-1.0), &[1.0], (0.0, 5.0), &settings, 1e8).unwrap();
        assert!(t.status.is_completed());
        assert_eq!(t.last_node(), 5.0);
        assert!((t.last_state()[0] - (-5f64).exp()).abs() < 1e-6);
    }

    #[test]
    fn blowup_is_reported_and_truncated() {
        let t = integrate_fixed(&Riccati, &[1.0], (0.0, 2.0), 1e-3, 1e8).unwrap();
        match t.status {
            IntegrationStatus::BlowUp(x) => assert!(x > 0.99 && x < 1.0 + 2e-3, "{x}"),
            other => panic!("expected blow-up, got {other:?}"),
        }
        assert!(t
            .states
            .iter()
            .all(|s| s[0].is_finite() && s[0].abs() <= 1e8));

        let settings = AdaptiveSettings::with_tolerance(1e-8);
        let t = integrate_adaptive(&Riccati, &[1.0], (0.0, 2.0), &settings, 1e8).unwrap();
        assert!(matches!(t.status, IntegrationStatus::BlowUp(x) if x < 1.0));
        assert!(t.states.iter().all(|s| s[0].abs() <= 1e8));
    }

    #[test]
    fn non_finite_rhs_is_step_failure() {
        let t = integrate_fixed(&NanAfter(0.5), &[0.0], (0.0, 1.0), 0.1, 1e8).unwrap();
        assert!(matches!(t.status, IntegrationStatus::StepFailure(x) if (0.4..=0.5).contains(&x)));
        assert!(t.states.iter().all(|s| s[0].is_finite()));

        let settings = AdaptiveSettings::with_tolerance(1e-6);
        let t = integrate_adaptive(&NanAfter(0.5), &[0.0], (0.0, 1.0), &settings, 1e8).unwrap();
        assert!(matches!(t.status, IntegrationStatus::StepFailure(_)));
    }

    #[test]
    fn precondition_errors() {
        assert_eq!(
            integrate_fixed(&Linear(1.0), &[1.0], (1.0, 0.0), 0.1, 1e8),
            Err(IvpError::InvalidSpan(1.0, 0.0))
        );
        assert_eq!(
            integrate_fixed(&Linear(1.0), &[1.0, 2.0], (0.0, 1.0), 0.1, 1e8),
            Err(IvpError::DimensionMismatch {
                expected: 1,
                got: 2
            })
        );
        let mut bad = AdaptiveSettings::with_tolerance(1e-6);
        bad.min_step = 1.0;
        assert!(matches!(
            integrate_adaptive(&Linear(1.0), &[1.0], (0.0, 1.0), &bad, 1e8),
            Err(IvpError::InvalidConfig(_))
        ));
    }

    #[test]
    fn sample_interpolates_linearly() {
        let t = Trajectory {
            nodes: vec![0.0, 1.0, 3.0],
            states: vec![vec![0.0], vec![2.0], vec![6.0]],
            status: IntegrationStatus::Completed,
        };
        assert_eq!(t.sample(0.5).unwrap(), vec![1.0]);
        assert_eq!(t.sample(2.0).unwrap(), vec![4.0]);
        assert_eq!(t.sample(0.0).unwrap(), vec![0.0]);
        assert_eq!(t.sample(3.0).unwrap(), vec![6.0]);
        assert!(t.sample(3.5).is_none());
    }

    #[test]
    fn parameters_are_reported() {
        assert_eq!(Linear(2.0).parameters(), vec![("rate", 2.0)]);
    }
}

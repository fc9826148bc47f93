//! Drivers: Töpfer's non-iterative algorithm, the iterative transformation
//! method, transformation-function profiles, multi-branch solving and
//! continuation in the Falkner–Skan parameter toward the fold.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ivp::{integrate, IntegratorConfig, IvpError, Trajectory};
use crate::problems::{gamma_derivative, Family, ProblemSpec, SakiadisSensitivity, Sign};
use crate::roots::{
    bracket_scan, newton_solve, regula_falsi_solve, secant_solve, IterationRecord, RootConfig,
    RootError, RootSolution, Spacing,
};
use crate::scaling::{
    gamma_value, lambda_from_endpoint, rescale_trajectory, ExtendedScalingGroup, GammaEvaluation,
    ProbeStatus, ScalingError,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error("root finder did not converge: {source}")]
    NotConverged {
        #[source]
        source: RootError,
    },
    #[error("continuation stalled at beta = {beta} with step {step:e}")]
    ContinuationStalled {
        beta: f64,
        step: f64,
        partial: Box<ContinuationResult>,
    },
    #[error("no sign change of the transformation function for beta = {beta} ({branch:?} branch)")]
    NoBracket { beta: f64, branch: Sign },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Ivp(#[from] IvpError),
    #[error(transparent)]
    Scaling(#[from] ScalingError),
}

impl EngineError {
    /// Probes performed before a root-finder failure.
    pub fn log(&self) -> &[IterationRecord] {
        match self {
            EngineError::NotConverged { source } => source.log(),
            _ => &[],
        }
    }
}

fn check_eta_inf(eta_inf: f64) -> Result<(), EngineError> {
    if eta_inf > 0.0 && eta_inf.is_finite() {
        Ok(())
    } else {
        Err(EngineError::InvalidInput(format!(
            "truncated boundary must be positive, got {eta_inf}"
        )))
    }
}

/// Integrates the auxiliary problem of `problem` at `h_star` on `[0, eta_inf]`.
pub fn integrate_auxiliary(
    problem: &ProblemSpec,
    h_star: f64,
    integrator: &IntegratorConfig,
    eta_inf: f64,
) -> Result<Trajectory, IvpError> {
    let system = problem.auxiliary_system(h_star);
    integrate(
        &system,
        &problem.auxiliary_initial_state(h_star),
        (0.0, eta_inf),
        integrator,
    )
}

/// Turns the endpoint slope of a starred solution into a probe result.
fn evaluation_from_endpoint(
    problem: &ProblemSpec,
    h_star: f64,
    fprime_end: f64,
) -> GammaEvaluation {
    let group = problem.group();
    match lambda_from_endpoint(fprime_end, h_star, &group, &problem.asymptotic()) {
        Ok(lambda) => GammaEvaluation {
            h_star,
            lambda,
            gamma: gamma_value(h_star, lambda, &group),
            skin_friction: lambda.powf(-group.derivative_exponent(2)) * problem.sign().value(),
            status: ProbeStatus::Ok,
        },
        Err(_) => GammaEvaluation::failed(h_star, ProbeStatus::InvalidLambda),
    }
}

/// One probe of the transformation function.
///
/// Never fails: integration trouble and an unusable endpoint are reported
/// through the status, with `Γ = -1`.
pub fn evaluate_gamma(
    problem: &ProblemSpec,
    h_star: f64,
    integrator: &IntegratorConfig,
    eta_inf: f64,
) -> GammaEvaluation {
    if !(h_star > 0.0) || !h_star.is_finite() {
        return GammaEvaluation::failed(h_star, ProbeStatus::InvalidLambda);
    }
    let trajectory = match integrate_auxiliary(problem, h_star, integrator, eta_inf) {
        Ok(t) => t,
        Err(_) => return GammaEvaluation::failed(h_star, ProbeStatus::StepFailure),
    };
    if !trajectory.status.is_completed() {
        return GammaEvaluation::failed(h_star, trajectory.status.into());
    }
    evaluation_from_endpoint(problem, h_star, trajectory.last_state()[1])
}

/// Probe plus `dΓ/dh*` from the sensitivity system. Sakiadis only.
pub fn evaluate_gamma_with_derivative(
    problem: &ProblemSpec,
    h_star: f64,
    integrator: &IntegratorConfig,
    eta_inf: f64,
) -> Result<(GammaEvaluation, f64), EngineError> {
    if problem.family() != Family::Sakiadis {
        return Err(EngineError::Unsupported(format!(
            "no sensitivity system for {}",
            problem.family()
        )));
    }
    if !(h_star > 0.0) || !h_star.is_finite() {
        return Ok((
            GammaEvaluation::failed(h_star, ProbeStatus::InvalidLambda),
            f64::NAN,
        ));
    }
    let system = SakiadisSensitivity { h_star };
    let trajectory = integrate(
        &system,
        &system.initial_state(problem.sign()),
        (0.0, eta_inf),
        integrator,
    )?;
    if !trajectory.status.is_completed() {
        return Ok((
            GammaEvaluation::failed(h_star, trajectory.status.into()),
            f64::NAN,
        ));
    }
    let end = trajectory.last_state();
    let eval = evaluation_from_endpoint(problem, h_star, end[1]);
    let derivative = gamma_derivative(end[1], end[4], h_star).unwrap_or(f64::NAN);
    Ok((eval, derivative))
}

/// Root-finder selection for [`itm_solve`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Finder {
    Secant {
        h0: f64,
        h1: f64,
    },
    /// Uses the sensitivity system; Sakiadis only.
    Newton {
        h0: f64,
    },
    RegulaFalsi {
        lo: f64,
        hi: f64,
    },
}

/// A converged iterative-transformation run.
#[derive(Debug, Clone, PartialEq)]
pub struct ItmRun {
    pub problem: ProblemSpec,
    pub eta_inf: f64,
    pub records: Vec<IterationRecord>,
    pub converged: bool,
    pub final_h_star: f64,
    pub final_lambda: f64,
    pub final_gamma: f64,
    pub skin_friction: f64,
    /// Solution of the original problem on `[0, λ^{-δ} η*_∞]`.
    pub physical_solution: Trajectory,
}

impl ItmRun {
    /// Truncated boundary of the physical solution.
    pub fn physical_eta_inf(&self) -> f64 {
        self.physical_solution.last_node()
    }

    pub fn probe_count(&self) -> usize {
        self.records.len()
    }

    /// How well the physical solution satisfies the original problem.
    ///
    /// The ODE defect re-integrates the original equation across every
    /// grid interval from the stored left state and compares with the stored
    /// right state.
    pub fn residuals(&self, integrator: &IntegratorConfig) -> Result<Residuals, IvpError> {
        let bc = self.problem.boundary();
        let start = self.physical_solution.first_state();
        let end = self.physical_solution.last_state();
        let boundary = [
            (start[0] - bc.a).abs(),
            (start[1] - bc.b - bc.c * start[2]).abs(),
            (end[1] - bc.d).abs(),
        ]
        .into_iter()
        .fold(0.0, f64::max);

        let system = self.problem.physical_system();
        let nodes = &self.physical_solution.nodes;
        let states = &self.physical_solution.states;
        let mut ode = 0.0f64;
        for k in 1..nodes.len() {
            if nodes[k] <= nodes[k - 1] {
                continue;
            }
            let piece = integrate(
                &system,
                &states[k - 1],
                (nodes[k - 1], nodes[k]),
                integrator,
            )?;
            let defect = piece
                .last_state()
                .iter()
                .zip(&states[k])
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            ode = ode.max(defect);
        }
        Ok(Residuals { boundary, ode })
    }
}

/// Largest boundary-condition and ODE defects of a physical solution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Residuals {
    pub boundary: f64,
    pub ode: f64,
}

impl Residuals {
    pub fn max(&self) -> f64 {
        self.boundary.max(self.ode)
    }
}

/// How far outside a rejected regula-falsi bracket the fallback scan reaches.
const FALLBACK_WIDENING: f64 = 10.0;
const FALLBACK_SAMPLES: usize = 64;

/// Solves `Γ(h*) = 0` and rescales the final starred solution.
pub fn itm_solve(
    problem: &ProblemSpec,
    finder: Finder,
    integrator: &IntegratorConfig,
    eta_inf: f64,
    root_config: &RootConfig,
) -> Result<ItmRun, EngineError> {
    check_eta_inf(eta_inf)?;
    integrator.validate()?;
    let probe = |h: f64| evaluate_gamma(problem, h, integrator, eta_inf);
    let solved = match finder {
        Finder::Secant { h0, h1 } => secant_solve(probe, h0, h1, root_config),
        Finder::Newton { h0 } => {
            if problem.family() != Family::Sakiadis {
                return Err(EngineError::Unsupported(format!(
                    "Newton needs a sensitivity system, which {} does not have",
                    problem.family()
                )));
            }
            newton_solve(
                |h| {
                    evaluate_gamma_with_derivative(problem, h, integrator, eta_inf).unwrap_or((
                        GammaEvaluation::failed(h, ProbeStatus::StepFailure),
                        f64::NAN,
                    ))
                },
                h0,
                root_config,
            )
        }
        Finder::RegulaFalsi { lo, hi } => {
            regula_falsi_with_fallback(problem, (lo, hi), integrator, eta_inf, root_config)
        }
    };
    let solution = solved.map_err(|source| EngineError::NotConverged { source })?;
    finish_run(problem, solution, integrator, eta_inf)
}

/// Regula falsi; an invalid bracket is replaced by the sign change found by a
/// scan over the widened pair that lies closest to it.
fn regula_falsi_with_fallback(
    problem: &ProblemSpec,
    bracket: (f64, f64),
    integrator: &IntegratorConfig,
    eta_inf: f64,
    root_config: &RootConfig,
) -> Result<RootSolution, RootError> {
    let probe = |h: f64| evaluate_gamma(problem, h, integrator, eta_inf);
    match regula_falsi_solve(probe, bracket, root_config) {
        Err(RootError::InvalidBracket { lo, hi, log }) => {
            let (a, b) = (lo.min(hi), lo.max(hi));
            if !(a > 0.0) {
                return Err(RootError::InvalidBracket { lo, hi, log });
            }
            let scan = bracket_scan(
                probe,
                (a / FALLBACK_WIDENING, b * FALLBACK_WIDENING),
                FALLBACK_SAMPLES,
                Spacing::Log,
            )?;
            let centre = (a * b).sqrt().ln();
            let nearest = scan.brackets.iter().min_by(|x, y| {
                let dx = ((x.0 * x.1).sqrt().ln() - centre).abs();
                let dy = ((y.0 * y.1).sqrt().ln() - centre).abs();
                dx.total_cmp(&dy)
            });
            match nearest {
                Some(&found) => {
                    let mut solved = regula_falsi_solve(probe, found, root_config)?;
                    let mut full = log;
                    full.extend(scan.samples.iter().map(|s| IterationRecord::new(0, s)));
                    full.append(&mut solved.log);
                    for (k, r) in full.iter_mut().enumerate() {
                        r.index = k;
                    }
                    solved.log = full;
                    Ok(solved)
                }
                None => Err(RootError::InvalidBracket { lo, hi, log }),
            }
        }
        other => other,
    }
}

fn finish_run(
    problem: &ProblemSpec,
    solution: RootSolution,
    integrator: &IntegratorConfig,
    eta_inf: f64,
) -> Result<ItmRun, EngineError> {
    let eval = solution.evaluation;
    let starred = integrate_auxiliary(problem, eval.h_star, integrator, eta_inf)?;
    let physical = rescale_trajectory(&starred, eval.lambda, &problem.group())?;
    Ok(ItmRun {
        problem: *problem,
        eta_inf,
        records: solution.log,
        converged: true,
        final_h_star: eval.h_star,
        final_lambda: eval.lambda,
        final_gamma: eval.gamma,
        skin_friction: eval.skin_friction,
        physical_solution: physical,
    })
}

/// Result of Töpfer's non-iterative Blasius algorithm.
#[derive(Debug, Clone, PartialEq)]
pub struct TopferResult {
    /// `f''(0)` from the last checkpoint.
    pub lambda: f64,
    /// `(η*_j, λ_j)` for every checkpoint.
    pub checkpoint_lambdas: Vec<(f64, f64)>,
    /// `|λ_last - λ_previous|`, absent with a single checkpoint.
    pub agreement: Option<f64>,
    pub physical_solution: Trajectory,
}

impl TopferResult {
    pub fn agrees_within(&self, tol: f64) -> bool {
        self.agreement.is_some_and(|a| a <= tol)
    }
}

/// Integrates the Blasius auxiliary problem `f*''(0) = 1` once, reading
/// `λ_j = f*'(η*_j)^{-3/2}` at each checkpoint. The integration is split at
/// the checkpoints so each one is a node of the trajectory.
pub fn topfer_solve(
    integrator: &IntegratorConfig,
    checkpoints: &[f64],
) -> Result<TopferResult, EngineError> {
    if checkpoints.is_empty() {
        return Err(EngineError::InvalidInput("no checkpoints".into()));
    }
    if checkpoints[0] <= 0.0 || checkpoints.windows(2).any(|w| w[0] >= w[1]) {
        return Err(EngineError::InvalidInput(
            "checkpoints must be positive and strictly ascending".into(),
        ));
    }
    let problem = ProblemSpec::blasius();
    let system = problem.auxiliary_system(1.0);
    let mut starred = Trajectory {
        nodes: vec![0.0],
        states: vec![problem.auxiliary_initial_state(1.0).to_vec()],
        status: crate::ivp::IntegrationStatus::Completed,
    };
    let mut checkpoint_lambdas = Vec::with_capacity(checkpoints.len());
    let mut previous_slope = 0.0;
    for &eta in checkpoints {
        let start = starred.last_node();
        let segment = integrate(&system, starred.last_state(), (start, eta), integrator)?;
        if !segment.status.is_completed() {
            return Err(EngineError::InvalidInput(format!(
                "auxiliary integration stopped early: {:?}",
                segment.status
            )));
        }
        starred.nodes.extend_from_slice(&segment.nodes[1..]);
        starred.states.extend(segment.states.into_iter().skip(1));
        let slope = starred.last_state()[1];
        if !(slope > previous_slope) {
            return Err(EngineError::InvalidInput(format!(
                "auxiliary slope is not increasing at eta* = {eta}"
            )));
        }
        previous_slope = slope;
        checkpoint_lambdas.push((eta, slope.powf(-1.5)));
    }
    let lambda = checkpoint_lambdas.last().map(|c| c.1).unwrap_or(f64::NAN);
    let agreement = match checkpoint_lambdas.as_slice() {
        [.., a, b] => Some((b.1 - a.1).abs()),
        _ => None,
    };
    // f* = μ f with μ = λ^{-1/3}, η* = μ^{-1} η.
    let group = ExtendedScalingGroup::new(-1.0, 1.0)?;
    let physical_solution = rescale_trajectory(&starred, lambda.powf(-1.0 / 3.0), &group)?;
    Ok(TopferResult {
        lambda,
        checkpoint_lambdas,
        agreement,
        physical_solution,
    })
}

/// Samples of the transformation function and the sign changes among them.
#[derive(Debug, Clone, PartialEq)]
pub struct GammaProfile {
    pub samples: Vec<GammaEvaluation>,
    pub brackets: Vec<(f64, f64)>,
    pub zero_count_evidence: usize,
}

pub fn gamma_profile(
    problem: &ProblemSpec,
    range: (f64, f64),
    n_samples: usize,
    spacing: Spacing,
    integrator: &IntegratorConfig,
    eta_inf: f64,
) -> Result<GammaProfile, EngineError> {
    check_eta_inf(eta_inf)?;
    integrator.validate()?;
    let scan = bracket_scan(
        |h| evaluate_gamma(problem, h, integrator, eta_inf),
        range,
        n_samples,
        spacing,
    )
    .map_err(|source| EngineError::NotConverged { source })?;
    Ok(GammaProfile {
        zero_count_evidence: scan.brackets.len(),
        brackets: scan.brackets,
        samples: scan.samples,
    })
}

/// One regula-falsi run per sign change of the profile, ordered by `h*`.
/// An empty list is evidence of nonexistence in the range.
pub fn solve_all_branches(
    problem: &ProblemSpec,
    range: (f64, f64),
    n_samples: usize,
    spacing: Spacing,
    integrator: &IntegratorConfig,
    eta_inf: f64,
    root_config: &RootConfig,
) -> Result<Vec<ItmRun>, EngineError> {
    let profile = gamma_profile(problem, range, n_samples, spacing, integrator, eta_inf)?;
    profile
        .brackets
        .par_iter()
        .map(|&(lo, hi)| {
            itm_solve(
                problem,
                Finder::RegulaFalsi { lo, hi },
                integrator,
                eta_inf,
                root_config,
            )
        })
        .collect()
}

/// Step schedule for [`beta_min_continuation`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepControl {
    pub initial_step: f64,
    pub min_step: f64,
    /// Both branches below this `|f''(0)|` ends the march.
    pub skin_friction_floor: f64,
    /// Both branches below this `|f''(0)|` switch to `shrunk_eta_inf`.
    pub shrink_below: f64,
    pub eta_inf: f64,
    pub shrunk_eta_inf: f64,
    /// Log-spaced `h*` range scanned to pick up each branch at the start.
    pub acquisition_range: (f64, f64),
    pub acquisition_samples: usize,
    pub max_steps: usize,
}

impl Default for StepControl {
    fn default() -> Self {
        Self {
            initial_step: 1e-3,
            min_step: 1e-12,
            skin_friction_floor: 1e-5,
            shrink_below: 1e-3,
            eta_inf: crate::problems::FALKNER_SKAN_ETA_INF,
            shrunk_eta_inf: 1.0,
            acquisition_range: (1.0, 1e6),
            acquisition_samples: 48,
            max_steps: 400,
        }
    }
}

/// Accepted continuation steps, β descending.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ContinuationResult {
    pub beta_values: Vec<f64>,
    pub skin_frictions_normal: Vec<f64>,
    pub skin_frictions_reverse: Vec<f64>,
    pub h_star_normal: Vec<f64>,
    pub h_star_reverse: Vec<f64>,
    pub eta_inf_values: Vec<f64>,
    pub beta_min_estimate: f64,
}

impl ContinuationResult {
    fn push(&mut self, beta: f64, normal: &ItmRun, reverse: &ItmRun, eta_inf: f64) {
        self.beta_values.push(beta);
        self.skin_frictions_normal.push(normal.skin_friction);
        self.skin_frictions_reverse.push(reverse.skin_friction);
        self.h_star_normal.push(normal.final_h_star);
        self.h_star_reverse.push(reverse.final_h_star);
        self.eta_inf_values.push(eta_inf);
        self.beta_min_estimate = beta;
    }

    pub fn len(&self) -> usize {
        self.beta_values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.beta_values.is_empty()
    }
}

/// Marches `β` downward from `start_beta`, solving the normal (`p = +1`) and
/// reverse (`p = -1`) branches at every step.
///
/// Each branch is first picked up from the largest-`h*` sign change of a
/// scan. Later steps warm-start the secant from `(h*_prev, 1.05 h*_prev)`.
/// A step is accepted only when both branches converge and both skin
/// frictions shrink in magnitude; otherwise `Δβ` is halved. The march ends
/// once both `|f''(0)|` fall below the floor.
pub fn beta_min_continuation(
    start_beta: f64,
    control: &StepControl,
    integrator: &IntegratorConfig,
    root_config: &RootConfig,
) -> Result<ContinuationResult, EngineError> {
    if !(control.initial_step > 0.0
        && control.min_step > 0.0
        && control.min_step <= control.initial_step)
    {
        return Err(EngineError::InvalidInput(
            "continuation steps must satisfy 0 < min_step <= initial_step".into(),
        ));
    }
    check_eta_inf(control.eta_inf)?;
    check_eta_inf(control.shrunk_eta_inf)?;
    let branches = [Sign::Positive, Sign::Negative];
    let mut eta_inf = control.eta_inf;
    let mut current = Vec::with_capacity(2);
    for branch in branches {
        current.push(acquire_branch(
            start_beta,
            branch,
            control,
            integrator,
            eta_inf,
            root_config,
        )?);
    }
    let mut result = ContinuationResult::default();
    result.push(start_beta, &current[0], &current[1], eta_inf);

    let mut beta = start_beta;
    let mut step = control.initial_step;
    let below = |runs: &[ItmRun], level: f64| runs.iter().all(|r| r.skin_friction.abs() < level);
    for _ in 0..control.max_steps {
        if below(&current, control.skin_friction_floor) {
            return Ok(result);
        }
        if eta_inf != control.shrunk_eta_inf && below(&current, control.shrink_below) {
            let resolved: Option<Vec<ItmRun>> = current
                .iter()
                .map(|run| warm_solve(beta, run, integrator, control.shrunk_eta_inf, root_config))
                .collect();
            if let Some(runs) = resolved {
                eta_inf = control.shrunk_eta_inf;
                current = runs;
                result.push(beta, &current[0], &current[1], eta_inf);
                continue;
            }
        }
        let trial = beta - step;
        let attempt: Option<Vec<ItmRun>> = current
            .iter()
            .map(|run| {
                warm_solve(trial, run, integrator, eta_inf, root_config)
                    .filter(|next| next.skin_friction.abs() <= run.skin_friction.abs())
            })
            .collect();
        match attempt {
            Some(runs) => {
                beta = trial;
                current = runs;
                result.push(beta, &current[0], &current[1], eta_inf);
            }
            None => {
                step *= 0.5;
                if step < control.min_step {
                    return Err(EngineError::ContinuationStalled {
                        beta,
                        step,
                        partial: Box::new(result),
                    });
                }
            }
        }
    }
    Err(EngineError::ContinuationStalled {
        beta,
        step,
        partial: Box::new(result),
    })
}

fn acquire_branch(
    beta: f64,
    branch: Sign,
    control: &StepControl,
    integrator: &IntegratorConfig,
    eta_inf: f64,
    root_config: &RootConfig,
) -> Result<ItmRun, EngineError> {
    let problem = ProblemSpec::falkner_skan(beta, branch);
    let profile = gamma_profile(
        &problem,
        control.acquisition_range,
        control.acquisition_samples,
        Spacing::Log,
        integrator,
        eta_inf,
    )?;
    let &(lo, hi) = profile
        .brackets
        .last()
        .ok_or(EngineError::NoBracket { beta, branch })?;
    itm_solve(
        &problem,
        Finder::RegulaFalsi { lo, hi },
        integrator,
        eta_inf,
        root_config,
    )
}

/// Continuation probes stay within this factor of the previous root; the
/// secant otherwise extrapolates past the fold to `h*` values whose
/// physical domains are enormous.
const WARM_WINDOW: f64 = 10.0;

fn warm_solve(
    beta: f64,
    previous: &ItmRun,
    integrator: &IntegratorConfig,
    eta_inf: f64,
    root_config: &RootConfig,
) -> Option<ItmRun> {
    let problem = ProblemSpec::falkner_skan(beta, previous.problem.sign());
    let h = previous.final_h_star;
    let window = (h / WARM_WINDOW, h * WARM_WINDOW);
    let probe = |x: f64| {
        if x < window.0 || x > window.1 {
            GammaEvaluation::failed(x, ProbeStatus::OutOfWindow)
        } else {
            evaluate_gamma(&problem, x, integrator, eta_inf)
        }
    };
    let solution = secant_solve(probe, h, 1.05 * h, root_config).ok()?;
    finish_run(&problem, solution, integrator, eta_inf).ok()
}

//! Scalar root finders on the transformation function.
//!
//! All finders take a probe `h* -> GammaEvaluation` and log every probe
//! invocation. A probe whose status is not `Ok` never enters an update
//! formula: the secant and Newton drivers fall back to the midpoint between
//! the failed abscissa and the last successful one, regula falsi bisects
//! its bracket.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scaling::{GammaEvaluation, ProbeStatus};

/// How many times a failed probe is pulled back toward the last good one.
pub const MAX_RECOVERY_ATTEMPTS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RootConfig {
    pub tol_gamma: f64,
    pub tol_rel: f64,
    pub tol_abs: f64,
    pub max_iter: usize,
}

impl Default for RootConfig {
    fn default() -> Self {
        Self {
            tol_gamma: 1e-9,
            tol_rel: 1e-6,
            tol_abs: 1e-6,
            max_iter: 50,
        }
    }
}

impl RootConfig {
    pub fn validate(&self) -> Result<(), RootError> {
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if !positive(self.tol_gamma) || !positive(self.tol_rel) || !positive(self.tol_abs) {
            return Err(RootError::InvalidConfig(
                "tolerances must be positive and finite".into(),
            ));
        }
        if self.max_iter < 2 {
            return Err(RootError::InvalidConfig(
                "max_iter must be at least 2".into(),
            ));
        }
        Ok(())
    }

    fn step_small(&self, h_new: f64, h_old: f64) -> bool {
        (h_new - h_old).abs() <= self.tol_rel * h_new.abs() + self.tol_abs
    }
}

/// One row of an iteration table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub index: usize,
    pub h_star: f64,
    pub gamma: f64,
    pub lambda: f64,
    pub skin_friction: f64,
    pub status: ProbeStatus,
}

impl IterationRecord {
    pub fn new(index: usize, eval: &GammaEvaluation) -> Self {
        Self {
            index,
            h_star: eval.h_star,
            gamma: eval.gamma,
            lambda: eval.lambda,
            skin_friction: eval.skin_friction,
            status: eval.status,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RootError {
    #[error("no convergence within {} probes", log.len())]
    MaxIterExceeded { log: Vec<IterationRecord> },
    #[error("secant update undefined: equal transformation-function values")]
    DegenerateSecant { log: Vec<IterationRecord> },
    #[error("failed probe could not be recovered by bisecting toward the last successful one")]
    FailedProbeRecovery { log: Vec<IterationRecord> },
    #[error("derivative of the transformation function vanished or is not finite")]
    ZeroDerivative { log: Vec<IterationRecord> },
    #[error("[{lo}, {hi}] is not a sign-change bracket")]
    InvalidBracket {
        lo: f64,
        hi: f64,
        log: Vec<IterationRecord>,
    },
    #[error("invalid root-finder configuration: {0}")]
    InvalidConfig(String),
}

impl RootError {
    /// Probes performed before the failure.
    pub fn log(&self) -> &[IterationRecord] {
        match self {
            RootError::MaxIterExceeded { log }
            | RootError::DegenerateSecant { log }
            | RootError::FailedProbeRecovery { log }
            | RootError::ZeroDerivative { log }
            | RootError::InvalidBracket { log, .. } => log,
            RootError::InvalidConfig(_) => &[],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RootSolution {
    pub root: f64,
    /// Evaluation at the returned root.
    pub evaluation: GammaEvaluation,
    pub log: Vec<IterationRecord>,
}

/// Probe wrapper that records every call and enforces the probe budget.
/// Probes return the evaluation and an optional derivative (NaN if absent).
struct Logger<P> {
    probe: P,
    log: Vec<IterationRecord>,
    max_iter: usize,
}

type Probed = (GammaEvaluation, f64);

impl<P: FnMut(f64) -> Probed> Logger<P> {
    fn new(probe: P, max_iter: usize) -> Self {
        Self {
            probe,
            log: Vec::new(),
            max_iter,
        }
    }

    fn eval(&mut self, h: f64) -> Result<Probed, RootError> {
        if self.log.len() >= self.max_iter {
            return Err(RootError::MaxIterExceeded {
                log: std::mem::take(&mut self.log),
            });
        }
        let out = (self.probe)(h);
        self.log.push(IterationRecord::new(self.log.len(), &out.0));
        Ok(out)
    }

    /// Probes `h`, pulling it halfway toward `anchor` while the probe fails.
    fn eval_recovering(&mut self, mut h: f64, anchor: f64) -> Result<Probed, RootError> {
        let mut out = self.eval(h)?;
        let mut attempts = 0;
        while !out.0.status.is_ok() {
            if attempts == MAX_RECOVERY_ATTEMPTS {
                return Err(self.fail_recovery());
            }
            attempts += 1;
            h = 0.5 * (h + anchor);
            out = self.eval(h)?;
        }
        Ok(out)
    }

    fn fail_recovery(&mut self) -> RootError {
        RootError::FailedProbeRecovery {
            log: std::mem::take(&mut self.log),
        }
    }

    fn finish(self, eval: GammaEvaluation) -> RootSolution {
        RootSolution {
            root: eval.h_star,
            evaluation: eval,
            log: self.log,
        }
    }
}

/// Secant iteration `h_{j+1} = h_j - Γ_j (h_j - h_{j-1}) / (Γ_j - Γ_{j-1})`.
///
/// Stops at the first iterate with `|Γ| <= tol_gamma` and a step below
/// `tol_rel |h| + tol_abs`.
pub fn secant_solve<P>(
    mut probe: P,
    h0: f64,
    h1: f64,
    config: &RootConfig,
) -> Result<RootSolution, RootError>
where
    P: FnMut(f64) -> GammaEvaluation,
{
    config.validate()?;
    if h0 == h1 || !h0.is_finite() || !h1.is_finite() {
        return Err(RootError::InvalidConfig(format!(
            "secant needs two distinct finite seeds, got {h0} and {h1}"
        )));
    }
    let mut lg = Logger::new(|h| (probe(h), f64::NAN), config.max_iter);

    let mut prev = lg.eval(h0)?.0;
    let mut curr = lg.eval(h1)?.0;
    match (prev.status.is_ok(), curr.status.is_ok()) {
        (true, true) => {}
        (false, false) => return Err(lg.fail_recovery()),
        (true, false) => curr = lg.eval_recovering(0.5 * (h1 + h0), h0)?.0,
        (false, true) => prev = lg.eval_recovering(0.5 * (h0 + h1), h1)?.0,
    }

    loop {
        if curr.gamma.abs() <= config.tol_gamma && config.step_small(curr.h_star, prev.h_star) {
            return Ok(lg.finish(curr));
        }
        let dg = curr.gamma - prev.gamma;
        let scale = curr.gamma.abs().max(prev.gamma.abs());
        if dg.abs() <= 4.0 * f64::EPSILON * scale {
            return Err(RootError::DegenerateSecant { log: lg.log });
        }
        let next = curr.h_star - curr.gamma * (curr.h_star - prev.h_star) / dg;
        if !next.is_finite() {
            return Err(RootError::DegenerateSecant { log: lg.log });
        }
        let e = lg.eval_recovering(next, curr.h_star)?.0;
        prev = curr;
        curr = e;
    }
}

/// Newton iteration `h_{j+1} = h_j - Γ_j / Γ'_j`.
///
/// The probe returns the evaluation together with `dΓ/dh*`; the derivative
/// of a failed probe is never used.
pub fn newton_solve<P>(probe: P, h0: f64, config: &RootConfig) -> Result<RootSolution, RootError>
where
    P: FnMut(f64) -> (GammaEvaluation, f64),
{
    config.validate()?;
    let mut lg = Logger::new(probe, config.max_iter);

    let (mut curr, mut deriv) = lg.eval(h0)?;
    if !curr.status.is_ok() {
        return Err(lg.fail_recovery());
    }
    let mut prev_h: Option<f64> = None;
    loop {
        if curr.gamma.abs() <= config.tol_gamma
            && prev_h.is_some_and(|p| config.step_small(curr.h_star, p))
        {
            return Ok(lg.finish(curr));
        }
        if deriv == 0.0 || !deriv.is_finite() {
            return Err(RootError::ZeroDerivative { log: lg.log });
        }
        let next = curr.h_star - curr.gamma / deriv;
        let (e, d) = lg.eval_recovering(next, curr.h_star)?;
        prev_h = Some(curr.h_star);
        curr = e;
        deriv = d;
    }
}

/// Plain regula falsi on a validated sign-change bracket.
///
/// Stops when `|Γ| <= tol_gamma`. A failed interior probe is replaced by the
/// bracket midpoint.
pub fn regula_falsi_solve<P>(
    mut probe: P,
    bracket: (f64, f64),
    config: &RootConfig,
) -> Result<RootSolution, RootError>
where
    P: FnMut(f64) -> GammaEvaluation,
{
    config.validate()?;
    let (lo_h, hi_h) = if bracket.0 <= bracket.1 {
        bracket
    } else {
        (bracket.1, bracket.0)
    };
    let mut lg = Logger::new(|h| (probe(h), f64::NAN), config.max_iter);
    let mut lo = lg.eval(lo_h)?.0;
    let mut hi = lg.eval(hi_h)?.0;
    if !lo.status.is_ok() || !hi.status.is_ok() || lo.gamma * hi.gamma > 0.0 {
        return Err(RootError::InvalidBracket {
            lo: lo_h,
            hi: hi_h,
            log: lg.log,
        });
    }
    for end in [lo, hi] {
        if end.gamma.abs() <= config.tol_gamma {
            return Ok(lg.finish(end));
        }
    }

    loop {
        let mut h = (lo.h_star * hi.gamma - hi.h_star * lo.gamma) / (hi.gamma - lo.gamma);
        if !(h > lo.h_star && h < hi.h_star) {
            h = 0.5 * (lo.h_star + hi.h_star);
        }
        let mut e = lg.eval(h)?.0;
        let mut attempts = 0;
        while !e.status.is_ok() {
            if attempts == MAX_RECOVERY_ATTEMPTS {
                return Err(lg.fail_recovery());
            }
            attempts += 1;
            // Shrink toward whichever end is closer so the bracket stays valid.
            let target = if h - lo.h_star < hi.h_star - h {
                lo.h_star
            } else {
                hi.h_star
            };
            h = 0.5 * (h + target);
            e = lg.eval(h)?.0;
        }
        if e.gamma.abs() <= config.tol_gamma {
            return Ok(lg.finish(e));
        }
        if (e.gamma < 0.0) == (lo.gamma < 0.0) {
            lo = e;
        } else {
            hi = e;
        }
    }
}

/// Sample spacing for [`bracket_scan`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Spacing {
    #[default]
    Log,
    Linear,
}

impl Spacing {
    /// `n` abscissae covering `[lo, hi]` inclusively.
    pub fn grid(self, lo: f64, hi: f64, n: usize) -> Vec<f64> {
        if n == 1 {
            return vec![lo];
        }
        let last = (n - 1) as f64;
        (0..n)
            .map(|k| {
                if k == n - 1 {
                    return hi;
                }
                let t = k as f64 / last;
                match self {
                    Spacing::Linear => lo + t * (hi - lo),
                    Spacing::Log => (lo.ln() + t * (hi.ln() - lo.ln())).exp(),
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BracketScan {
    /// Every probe, ascending in `h*`.
    pub samples: Vec<GammaEvaluation>,
    /// Consecutive pairs of successful probes with opposite signs; a sample
    /// with `Γ = 0` exactly appears as a zero-width bracket.
    pub brackets: Vec<(f64, f64)>,
}

/// Samples `Γ` on `[h_min, h_max]` and collects sign-change brackets.
///
/// Samples are evaluated in parallel. An empty bracket list is evidence
/// that no zero exists in the range.
pub fn bracket_scan<P>(
    probe: P,
    range: (f64, f64),
    n_samples: usize,
    spacing: Spacing,
) -> Result<BracketScan, RootError>
where
    P: Fn(f64) -> GammaEvaluation + Sync,
{
    let (lo, hi) = range;
    if !(lo > 0.0) || !(hi > lo) || !hi.is_finite() {
        return Err(RootError::InvalidConfig(format!(
            "scan range [{lo}, {hi}] must satisfy 0 < lo < hi"
        )));
    }
    if n_samples < 2 {
        return Err(RootError::InvalidConfig(
            "a scan needs at least 2 samples".into(),
        ));
    }
    let samples: Vec<GammaEvaluation> = spacing
        .grid(lo, hi, n_samples)
        .into_par_iter()
        .map(&probe)
        .collect();
    Ok(BracketScan {
        brackets: brackets_of(&samples),
        samples,
    })
}

/// Sign-change brackets of an ascending list of samples.
pub fn brackets_of(samples: &[GammaEvaluation]) -> Vec<(f64, f64)> {
    let mut brackets = Vec::new();
    for (k, s) in samples.iter().enumerate() {
        if !s.status.is_ok() {
            continue;
        }
        if s.gamma == 0.0 {
            brackets.push((s.h_star, s.h_star));
            continue;
        }
        if let Some(next) = samples.get(k + 1) {
            if next.status.is_ok() && next.gamma != 0.0 && (s.gamma < 0.0) != (next.gamma < 0.0) {
                brackets.push((s.h_star, next.h_star));
            }
        }
    }
    brackets
}

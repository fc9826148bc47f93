//! Independent checks: the Blasius power series, the a-posteriori
//! truncation bound for the coefficient-1 Blasius problem, and a bisection
//! shooting solver that never touches the scaling machinery.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ivp::{integrate, IntegratorConfig, IvpError, Trajectory};
use crate::problems::{ProblemSpec, Sign};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("series supports 1 to 4 terms, got {0}")]
    InvalidTermCount(usize),
    #[error("residual does not change sign on [{lo}, {hi}] (R = {r_lo:e}, {r_hi:e})")]
    InvalidBracket {
        lo: f64,
        hi: f64,
        r_lo: f64,
        r_hi: f64,
    },
    #[error("integration blew up for s = {s}; shrink the bracket")]
    BlowUpInsideBracket { s: f64 },
    #[error("truncated solution must have f(M) > 0, got {0}")]
    NonPositiveEndpoint(f64),
    #[error("trajectory ends at {got}, expected M = {expected}")]
    EndpointMismatch { expected: f64, got: f64 },
    #[error(transparent)]
    Ivp(#[from] IvpError),
}

/// Nonzero coefficients of `f = Σ C_k λ^k η^{3k-1}` for the ½-coefficient
/// Blasius equation with `f''(0) = λ`.
pub const SERIES_COEFFICIENTS: [f64; 4] = [
    1.0 / 2.0,
    -1.0 / (2.0 * 120.0),
    11.0 / (4.0 * 40_320.0),
    -375.0 / (8.0 * 39_916_800.0),
];

/// Truncated Blasius power series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesApproximation {
    pub lambda: f64,
    pub n_terms: usize,
}

impl SeriesApproximation {
    pub fn new(lambda: f64, n_terms: usize) -> Result<Self, OracleError> {
        if !(1..=SERIES_COEFFICIENTS.len()).contains(&n_terms) {
            return Err(OracleError::InvalidTermCount(n_terms));
        }
        Ok(Self { lambda, n_terms })
    }

    /// `(f, f', f'')` at `eta`.
    pub fn eval(&self, eta: f64) -> [f64; 3] {
        let mut out = [0.0; 3];
        for (k, c) in SERIES_COEFFICIENTS[..self.n_terms].iter().enumerate() {
            let k = k as i32 + 1;
            let n = 3 * k - 1;
            let coeff = c * self.lambda.powi(k);
            out[0] += coeff * eta.powi(n);
            out[1] += coeff * n as f64 * eta.powi(n - 1);
            out[2] += coeff * (n * (n - 1)) as f64 * eta.powi(n - 2);
        }
        out
    }

    /// Magnitude of the last included term of `f` at `eta`.
    pub fn last_term(&self, eta: f64) -> f64 {
        let k = self.n_terms as i32;
        (SERIES_COEFFICIENTS[self.n_terms - 1] * self.lambda.powi(k) * eta.powi(3 * k - 1)).abs()
    }
}

pub fn blasius_series_eval(lambda: f64, eta: f64, n_terms: usize) -> Result<[f64; 3], OracleError> {
    Ok(SeriesApproximation::new(lambda, n_terms)?.eval(eta))
}

/// Truncation-error bound `M f_M''(M) / f_M(M)` for `f''' + f f'' = 0`,
/// `f(0) = f'(0) = 0`, `f'(M) = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RubelBound {
    pub m: f64,
    pub f_m_at_m: f64,
    pub f_m_second_at_m: f64,
    pub bound: f64,
}

/// Reads the bound off a solution of the truncated problem on `[0, M]`.
pub fn rubel_error_bound(truncated: &Trajectory, m: f64) -> Result<RubelBound, OracleError> {
    let end = truncated.last_node();
    if (end - m).abs() > 1e-9 * m.abs().max(1.0) {
        return Err(OracleError::EndpointMismatch {
            expected: m,
            got: end,
        });
    }
    let state = truncated.last_state();
    let (f, fpp) = (state[0], state[2]);
    if !(f > 0.0) {
        return Err(OracleError::NonPositiveEndpoint(f));
    }
    Ok(RubelBound {
        m,
        f_m_at_m: f,
        f_m_second_at_m: fpp,
        bound: m * fpp / f,
    })
}

/// The coefficient-1 Blasius problem truncated at `M`, solved by shooting.
/// It coincides with Falkner–Skan at `β = 0`.
pub fn truncated_blasius(
    m: f64,
    integrator: &IntegratorConfig,
    tol: f64,
) -> Result<(f64, Trajectory), OracleError> {
    shooting_oracle(
        &ProblemSpec::falkner_skan(0.0, Sign::Positive),
        (0.1, 2.0),
        m,
        integrator,
        tol,
    )
}

const MAX_BISECTIONS: usize = 200;

/// Bisection shooting on the original problem: finds `s = f''(0)` with
/// `|f'(eta_inf; s) - d| <= tol`.
pub fn shooting_oracle(
    problem: &ProblemSpec,
    s_bracket: (f64, f64),
    eta_inf: f64,
    integrator: &IntegratorConfig,
    tol: f64,
) -> Result<(f64, Trajectory), OracleError> {
    let system = problem.physical_system();
    let target = problem.boundary().d;
    let shoot = |s: f64| -> Result<(f64, Trajectory), OracleError> {
        let t = integrate(
            &system,
            &problem.physical_initial_state(s),
            (0.0, eta_inf),
            integrator,
        )?;
        if !t.status.is_completed() {
            return Err(OracleError::BlowUpInsideBracket { s });
        }
        Ok((t.last_state()[1] - target, t))
    };

    let (mut lo, mut hi) = s_bracket;
    let (mut r_lo, t_lo) = shoot(lo)?;
    let (r_hi, t_hi) = shoot(hi)?;
    if r_lo.abs() <= tol {
        return Ok((lo, t_lo));
    }
    if r_hi.abs() <= tol {
        return Ok((hi, t_hi));
    }
    if r_lo * r_hi > 0.0 {
        return Err(OracleError::InvalidBracket { lo, hi, r_lo, r_hi });
    }
    let mut best = if r_lo.abs() < r_hi.abs() {
        (lo, t_lo)
    } else {
        (hi, t_hi)
    };
    for _ in 0..MAX_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        let (r, t) = shoot(mid)?;
        if r.abs() <= tol {
            return Ok((mid, t));
        }
        best = (mid, t);
        if (r < 0.0) == (r_lo < 0.0) {
            lo = mid;
            r_lo = r;
        } else {
            hi = mid;
        }
    }
    Ok(best)
}

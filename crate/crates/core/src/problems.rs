//! Concrete boundary-layer problems.
//!
//! Every problem belongs to the class
//!
//! ```text
//! f''' = φ(η, f, f', f''),  f(0) = a,  f'(0) = b + c f''(0),  f'(∞) = d
//! ```
//!
//! and is embedded in a one-parameter family invariant under the extended
//! scaling group. The embedded right-hand side is
//! `h^{(1-3δ)/σ} φ(h^{-δ/σ} η, h^{-1/σ} f, h^{(δ-1)/σ} f', h^{(2δ-1)/σ} f'')`
//! and the starred initial data are
//! `f*(0) = h*^{1/σ} a`, `f*'(0) = h*^{(1-δ)/σ} b + h*^{δ/σ} c p`, `f*''(0) = p`.

use std::fmt;

use crate::ivp::OdeSystem;
use crate::scaling::{AsymptoticSpec, ExtendedScalingGroup, ScalingError};

/// The concrete problems handled by the engine.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Family {
    /// `f''' + ½ f f'' = 0`, `f(0) = f'(0) = 0`, `f'(∞) = 1`.
    Blasius,
    /// Moving plate in a quiescent fluid: `f'(0) = 1`, `f'(∞) = 0`.
    Sakiadis,
    /// Slip at the wall: `f'(0) = c f''(0)`.
    Slip { c: f64 },
    /// Moving surface: `f'(0) = b`.
    MovingSurface { b: f64 },
    /// `f''' + f f'' + β (1 - f'^2) = 0`.
    FalknerSkan { beta: f64 },
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::Blasius => "blasius",
            Family::Sakiadis => "sakiadis",
            Family::Slip { .. } => "slip",
            Family::MovingSurface { .. } => "moving",
            Family::FalknerSkan { .. } => "falkner-skan",
        }
    }

    /// Physical (`h = 1`) right-hand side `φ`.
    pub fn phi(&self, _eta: f64, f: f64, fp: f64, fpp: f64) -> f64 {
        match *self {
            Family::FalknerSkan { beta } => -f * fpp - beta * (1.0 - fp * fp),
            _ => -0.5 * f * fpp,
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Family::Blasius | Family::Sakiadis => write!(out, "{}", self.name()),
            Family::Slip { c } => write!(out, "slip(c={c})"),
            Family::MovingSurface { b } => write!(out, "moving(b={b})"),
            Family::FalknerSkan { beta } => write!(out, "falkner-skan(beta={beta})"),
        }
    }
}

/// User-chosen sign of the starred missing condition `f*''(0) = p`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Positive,
    Negative,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Positive => 1.0,
            Sign::Negative => -1.0,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Sign::Positive => Sign::Negative,
            Sign::Negative => Sign::Positive,
        }
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sign::Positive => "p = +1",
            Sign::Negative => "p = -1",
        })
    }
}

/// Constants of `f(0) = a`, `f'(0) = b + c f''(0)`, `f'(∞) = d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundarySpec {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

/// Truncated boundary used by default for the starred problems.
pub const DEFAULT_ETA_INF: f64 = 10.0;
/// Truncated boundary used by default for Falkner–Skan.
pub const FALKNER_SKAN_ETA_INF: f64 = 20.0;

/// One boundary-layer problem together with its invariance group.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProblemSpec {
    family: Family,
    boundary: BoundarySpec,
    group: ExtendedScalingGroup,
    p: Sign,
    asym: AsymptoticSpec,
}

fn group(delta: f64, sigma: f64) -> ExtendedScalingGroup {
    ExtendedScalingGroup::new(delta, sigma).expect("family exponents are valid")
}

impl ProblemSpec {
    /// Blasius. The starred problem does not depend on `h*`, so any `σ`
    /// works; `σ = 2` makes it the `b = 0` member of the moving-surface family.
    pub fn blasius() -> Self {
        Self {
            family: Family::Blasius,
            boundary: BoundarySpec {
                a: 0.0,
                b: 0.0,
                c: 0.0,
                d: 1.0,
            },
            group: group(-1.0, 2.0),
            p: Sign::Positive,
            asym: AsymptoticSpec::target(1.0),
        }
    }

    pub fn sakiadis() -> Self {
        Self {
            family: Family::Sakiadis,
            boundary: BoundarySpec {
                a: 0.0,
                b: 1.0,
                c: 0.0,
                d: 0.0,
            },
            group: group(-1.0, 4.0),
            p: Sign::Negative,
            asym: AsymptoticSpec::homogeneous(),
        }
    }

    pub fn slip(c: f64) -> Self {
        Self {
            family: Family::Slip { c },
            boundary: BoundarySpec {
                a: 0.0,
                b: 0.0,
                c,
                d: 1.0,
            },
            group: group(-1.0, -1.0),
            p: Sign::Positive,
            asym: AsymptoticSpec::target(1.0),
        }
    }

    pub fn moving_surface(b: f64) -> Self {
        Self {
            family: Family::MovingSurface { b },
            boundary: BoundarySpec {
                a: 0.0,
                b,
                c: 0.0,
                d: 1.0,
            },
            group: group(-1.0, 2.0),
            p: Sign::Positive,
            asym: AsymptoticSpec::target(1.0),
        }
    }

    /// `p = +1` selects the normal-flow branch, `p = -1` the reverse-flow one.
    pub fn falkner_skan(beta: f64, p: Sign) -> Self {
        Self {
            family: Family::FalknerSkan { beta },
            boundary: BoundarySpec {
                a: 0.0,
                b: 0.0,
                c: 0.0,
                d: 1.0,
            },
            group: group(-1.0, 4.0),
            p,
            asym: AsymptoticSpec::target(1.0),
        }
    }

    pub fn with_sign(mut self, p: Sign) -> Self {
        self.p = p;
        self
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn boundary(&self) -> BoundarySpec {
        self.boundary
    }

    pub fn group(&self) -> ExtendedScalingGroup {
        self.group
    }

    pub fn sign(&self) -> Sign {
        self.p
    }

    pub fn asymptotic(&self) -> AsymptoticSpec {
        self.asym
    }

    pub fn default_eta_inf(&self) -> f64 {
        match self.family {
            Family::FalknerSkan { .. } => FALKNER_SKAN_ETA_INF,
            _ => DEFAULT_ETA_INF,
        }
    }

    /// The `h`-embedded system for a given `h*`.
    pub fn auxiliary_system(&self, h_star: f64) -> EmbeddedSystem {
        EmbeddedSystem::new(self.family, self.group, h_star)
    }

    /// The original problem (`h = 1`).
    pub fn physical_system(&self) -> EmbeddedSystem {
        self.auxiliary_system(1.0)
    }

    /// `(f*(0), f*'(0), f*''(0))` of the auxiliary initial-value problem.
    pub fn auxiliary_initial_state(&self, h_star: f64) -> [f64; 3] {
        let BoundarySpec { a, b, c, .. } = self.boundary;
        let (delta, sigma) = (self.group.delta(), self.group.sigma());
        let p = self.p.value();
        let mut fp = 0.0;
        if b != 0.0 {
            fp += h_star.powf((1.0 - delta) / sigma) * b;
        }
        if c != 0.0 {
            fp += h_star.powf(delta / sigma) * c * p;
        }
        let f = if a != 0.0 {
            h_star.powf(1.0 / sigma) * a
        } else {
            0.0
        };
        [f, fp, p]
    }

    /// Initial state of the original problem for a trial missing condition `s = f''(0)`.
    pub fn physical_initial_state(&self, s: f64) -> [f64; 3] {
        let BoundarySpec { a, b, c, .. } = self.boundary;
        [a, b + c * s, s]
    }
}

/// First-order form of the `h`-embedded third-order equation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmbeddedSystem {
    family: Family,
    h_star: f64,
    outer: f64,
    eta_scale: f64,
    f_scale: f64,
    fp_scale: f64,
    fpp_scale: f64,
}

impl EmbeddedSystem {
    pub fn new(family: Family, group: ExtendedScalingGroup, h_star: f64) -> Self {
        let (delta, sigma) = (group.delta(), group.sigma());
        let power = |e: f64| {
            if h_star == 1.0 {
                1.0
            } else {
                h_star.powf(e / sigma)
            }
        };
        Self {
            family,
            h_star,
            outer: power(1.0 - 3.0 * delta),
            eta_scale: power(-delta),
            f_scale: power(-1.0),
            fp_scale: power(delta - 1.0),
            fpp_scale: power(2.0 * delta - 1.0),
        }
    }

    pub fn h_star(&self) -> f64 {
        self.h_star
    }

    pub fn third_derivative(&self, eta: f64, state: &[f64]) -> f64 {
        self.outer
            * self.family.phi(
                self.eta_scale * eta,
                self.f_scale * state[0],
                self.fp_scale * state[1],
                self.fpp_scale * state[2],
            )
    }

    pub fn derivative(&self, eta: f64, state: &[f64; 3]) -> [f64; 3] {
        [state[1], state[2], self.third_derivative(eta, state)]
    }
}

impl OdeSystem for EmbeddedSystem {
    fn dimension(&self) -> usize {
        3
    }

    fn rhs(&self, eta: f64, y: &[f64], dydx: &mut [f64]) {
        dydx[0] = y[1];
        dydx[1] = y[2];
        dydx[2] = self.third_derivative(eta, y);
    }

    fn parameters(&self) -> Vec<(&'static str, f64)> {
        let mut params = match self.family {
            Family::Slip { c } => vec![("c", c)],
            Family::MovingSurface { b } => vec![("b", b)],
            Family::FalknerSkan { beta } => vec![("beta", beta)],
            Family::Blasius | Family::Sakiadis => Vec::new(),
        };
        params.push(("h_star", self.h_star));
        params
    }
}

/// Sakiadis problem augmented with its sensitivities with respect to `h`:
/// `u1..u3 = (f, f', f'')`, `u4..u6 = ∂(u1..u3)/∂h`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SakiadisSensitivity {
    pub h_star: f64,
}

impl SakiadisSensitivity {
    pub fn initial_state(&self, p: Sign) -> [f64; 6] {
        let root = self.h_star.sqrt();
        [0.0, root, p.value(), 0.0, 0.5 / root, 0.0]
    }

    pub fn derivative(&self, u: &[f64; 6]) -> [f64; 6] {
        [
            u[1],
            u[2],
            -0.5 * u[0] * u[2],
            u[4],
            u[5],
            -0.5 * (u[3] * u[2] + u[0] * u[5]),
        ]
    }
}

impl OdeSystem for SakiadisSensitivity {
    fn dimension(&self) -> usize {
        6
    }

    fn rhs(&self, _eta: f64, u: &[f64], du: &mut [f64]) {
        du[0] = u[1];
        du[1] = u[2];
        du[2] = -0.5 * u[0] * u[2];
        du[3] = u[4];
        du[4] = u[5];
        du[5] = -0.5 * (u[3] * u[2] + u[0] * u[5]);
    }

    fn parameters(&self) -> Vec<(&'static str, f64)> {
        vec![("h_star", self.h_star)]
    }
}

/// `dΓ/dh*` for the Sakiadis transformation function, from the endpoint
/// values of `u2` and its sensitivity `u5`.
pub fn gamma_derivative(u2_end: f64, u5_end: f64, h_star: f64) -> Result<f64, ScalingError> {
    let root = h_star.sqrt();
    let base = u2_end + root;
    if !(base > 0.0) || !base.is_finite() {
        return Err(ScalingError::NonPositiveBase { base });
    }
    Ok(base.powi(-2) * (1.0 - 2.0 * (u5_end + 0.5 / root) / base * h_star))
}

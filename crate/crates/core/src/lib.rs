//! Iterative transformation methods for third-order boundary-layer problems
//! posed on semi-infinite intervals.
//!
//! A boundary-value problem is embedded in a family invariant under an
//! extended scaling group, and the free parameter of that family is found
//! by a root finder on the transformation function. Each evaluation of the
//! transformation function costs one initial-value integration.

// `!(x > 0.0)` is used on purpose so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod engine;
pub mod ivp;
pub mod oracles;
pub mod problems;
pub mod roots;
pub mod scaling;

pub use engine::{
    beta_min_continuation, evaluate_gamma, gamma_profile, itm_solve, solve_all_branches,
    topfer_solve, ContinuationResult, EngineError, Finder, GammaProfile, ItmRun, Residuals,
    StepControl, TopferResult,
};
pub use ivp::{IntegrationStatus, IntegratorConfig, OdeSystem, Trajectory};
pub use oracles::{blasius_series_eval, rubel_error_bound, shooting_oracle, RubelBound};
pub use problems::{Family, ProblemSpec, Sign};
pub use roots::{IterationRecord, RootConfig, Spacing};
pub use scaling::{ExtendedScalingGroup, GammaEvaluation, ProbeStatus};

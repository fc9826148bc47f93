//! Acceptance criteria 1-10. Runs as a plain binary so every criterion
//! prints its PASS/FAIL line even when the run as a whole fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use itm_core::ivp::integrate_fixed;
use itm_core::oracles::truncated_blasius;
use itm_core::scaling::rescale_trajectory;
use itm_core::{
    beta_min_continuation, blasius_series_eval, evaluate_gamma, gamma_profile, itm_solve,
    rubel_error_bound, shooting_oracle, solve_all_branches, topfer_solve, EngineError,
    ExtendedScalingGroup, Finder, IntegratorConfig, ItmRun, ProblemSpec, RootConfig, Sign, Spacing,
    StepControl, Trajectory,
};

const TOPFER_LAMBDA: f64 = 0.3320573;
const TOPFER_LAMBDA_TOL: f64 = 1e-6;
const TOPFER_AGREEMENT_TOL: f64 = 1e-5;
const ITERATE_TOL: f64 = 1e-4;
const SKIN_FRICTION_TOL: f64 = 1e-5;
const GAMMA_TOL: f64 = 1e-9;
const DERIVATIVE_TOL: f64 = 1e-5;
const BETA_MIN: f64 = -0.19884;
const BETA_MIN_TOL: f64 = 5e-4;
const RESIDUAL_TOL: f64 = 1e-5;
const ORACLE_TOL: f64 = 1e-6;
const GROUP_LAW_TOL: f64 = 1e-13;
const SERIES_TOL: f64 = 1e-6;
const ORDER_FACTOR: (f64, f64) = (14.0, 18.0);
const NONEXISTENCE_BUDGET: Duration = Duration::from_secs(60);

#[derive(Default)]
struct Criterion {
    lines: Vec<String>,
    failed: bool,
}

impl Criterion {
    fn check(&mut self, ok: bool, what: impl Into<String>) {
        self.lines.push(format!(
            "    [{}] {}",
            if ok { "ok" } else { "FAIL" },
            what.into()
        ));
        self.failed |= !ok;
    }

    fn close(&mut self, x: f64, expected: f64, tol: f64, what: &str) {
        self.check(
            (x - expected).abs() <= tol,
            format!("{what} = {x:.8} (expected {expected} ± {tol:e})"),
        );
    }
}

fn ic() -> IntegratorConfig {
    IntegratorConfig::default()
}

fn solve(problem: ProblemSpec, finder: Finder, eta_inf: f64) -> Result<ItmRun, EngineError> {
    itm_solve(&problem, finder, &ic(), eta_inf, &RootConfig::default())
}

fn fresh_gamma(run: &ItmRun) -> f64 {
    evaluate_gamma(&run.problem, run.final_h_star, &ic(), run.eta_inf).gamma
}

fn criterion_1(c: &mut Criterion) {
    match topfer_solve(&IntegratorConfig::adaptive(1e-8), &[10.0]) {
        Ok(r) => c.close(
            r.lambda,
            TOPFER_LAMBDA,
            TOPFER_LAMBDA_TOL,
            "λ (adaptive 1e-8, η∞ = 10)",
        ),
        Err(e) => c.check(false, format!("Töpfer failed: {e}")),
    }
    match topfer_solve(&IntegratorConfig::fixed(0.1), &[4.0, 6.0]) {
        Ok(r) => {
            let a = r.agreement.unwrap_or(f64::INFINITY);
            c.check(
                r.agrees_within(TOPFER_AGREEMENT_TOL),
                format!(
                    "|λ_6 - λ_4| = {a:.3e} (≤ {TOPFER_AGREEMENT_TOL:e}), λ_6 = {:.8}",
                    r.lambda
                ),
            );
        }
        Err(e) => c.check(false, format!("Töpfer checkpoints failed: {e}")),
    }
}

fn sakiadis_triple(c: &mut Criterion, run: &ItmRun, max_probes: usize) {
    c.check(
        run.final_gamma.abs() <= GAMMA_TOL && fresh_gamma(run).abs() <= GAMMA_TOL,
        format!(
            "|Γ| = {:.2e} (fresh probe {:.2e})",
            run.final_gamma.abs(),
            fresh_gamma(run).abs()
        ),
    );
    c.close(run.final_h_star, 2.954391, ITERATE_TOL, "h*");
    c.close(run.final_lambda, 1.311043, ITERATE_TOL, "λ");
    c.close(run.skin_friction, -0.443761, SKIN_FRICTION_TOL, "f''(0)");
    c.check(
        run.probe_count() <= max_probes,
        format!("{} probes (≤ {max_probes})", run.probe_count()),
    );
}

fn criterion_2(c: &mut Criterion) {
    match solve(
        ProblemSpec::sakiadis(),
        Finder::Secant { h0: 2.5, h1: 3.5 },
        10.0,
    ) {
        Ok(run) => sakiadis_triple(c, &run, 12),
        Err(e) => c.check(false, format!("secant failed: {e}")),
    }
}

fn criterion_3(c: &mut Criterion) {
    match solve(ProblemSpec::sakiadis(), Finder::Newton { h0: 2.5 }, 10.0) {
        Ok(run) => sakiadis_triple(c, &run, 8),
        Err(e) => c.check(false, format!("Newton failed: {e}")),
    }
    let problem = ProblemSpec::sakiadis();
    let tight = IntegratorConfig::adaptive(1e-12);
    let eps = 1e-4;
    for h in [2.5, 2.954391, 4.0] {
        let analytic = itm_core::engine::evaluate_gamma_with_derivative(&problem, h, &tight, 10.0)
            .map(|(_, d)| d)
            .unwrap_or(f64::NAN);
        let fd = (evaluate_gamma(&problem, h + eps, &tight, 10.0).gamma
            - evaluate_gamma(&problem, h - eps, &tight, 10.0).gamma)
            / (2.0 * eps);
        c.check(
            (analytic - fd).abs() <= DERIVATIVE_TOL,
            format!("dΓ/dh*({h}) = {analytic:.8}, central difference {fd:.8}"),
        );
    }
}

fn criterion_4(c: &mut Criterion) {
    let rows = [
        (1.0, 0.293841, 0.293841),
        (5.0, 0.718686, 0.143737),
        (10.0, 0.842545, 0.084255),
        (50.0, 0.965399, 0.019308),
    ];
    for (slip, fp0, fpp0) in rows {
        match solve(
            ProblemSpec::slip(slip),
            Finder::RegulaFalsi { lo: 0.1, hi: 1.0 },
            10.0,
        ) {
            Ok(run) => {
                let start = run.physical_solution.first_state();
                c.close(
                    start[1],
                    fp0,
                    SKIN_FRICTION_TOL,
                    &format!("c = {slip}: f'(0)"),
                );
                c.close(
                    start[2],
                    fpp0,
                    SKIN_FRICTION_TOL,
                    &format!("c = {slip}: f''(0)"),
                );
            }
            Err(e) => c.check(false, format!("c = {slip} failed: {e}")),
        }
    }
    match solve(
        ProblemSpec::slip(0.0),
        Finder::RegulaFalsi { lo: 0.1, hi: 1.0 },
        10.0,
    ) {
        Ok(run) => c.close(
            run.skin_friction,
            0.332061,
            SKIN_FRICTION_TOL,
            "c = 0: f''(0)",
        ),
        Err(e) => c.check(false, format!("c = 0 failed: {e}")),
    }
}

fn moving_branches(b: f64, range: (f64, f64), samples: usize) -> Result<Vec<ItmRun>, EngineError> {
    solve_all_branches(
        &ProblemSpec::moving_surface(b),
        range,
        samples,
        Spacing::Log,
        &ic(),
        10.0,
        &RootConfig::default(),
    )
}

fn criterion_5(c: &mut Criterion) {
    match gamma_profile(
        &ProblemSpec::moving_surface(-0.25),
        (1.0, 150.0),
        64,
        Spacing::Log,
        &ic(),
        10.0,
    ) {
        Ok(p) => c.check(
            p.zero_count_evidence == 2,
            format!("b = -0.25: {} Γ-zeros", p.zero_count_evidence),
        ),
        Err(e) => c.check(false, format!("profile failed: {e}")),
    }
    match moving_branches(-0.25, (1.0, 150.0), 64) {
        Ok(runs) if runs.len() == 2 => {
            c.close(
                runs[0].skin_friction,
                0.283928,
                SKIN_FRICTION_TOL,
                "b = -0.25 first branch f''(0)",
            );
            c.close(
                runs[1].skin_friction,
                0.032094,
                SKIN_FRICTION_TOL,
                "b = -0.25 second branch f''(0)",
            );
        }
        Ok(runs) => c.check(false, format!("b = -0.25: {} branches", runs.len())),
        Err(e) => c.check(false, format!("b = -0.25 failed: {e}")),
    }
    match gamma_profile(
        &ProblemSpec::moving_surface(-0.4),
        (1.0, 150.0),
        64,
        Spacing::Log,
        &ic(),
        10.0,
    ) {
        Ok(p) => c.check(
            p.brackets.is_empty(),
            format!("b = -0.4: {} brackets", p.brackets.len()),
        ),
        Err(e) => c.check(false, format!("profile failed: {e}")),
    }
    // Near the fold both zeros sit within 2% of each other; a coarse grid
    // over [1, 150] cannot separate them.
    match moving_branches(-0.3541, (2.0, 6.0), 256) {
        Ok(runs) if runs.len() == 2 => {
            let (hi, lo) = (runs[0].skin_friction, runs[1].skin_friction);
            c.check(
                lo < 0.148850 && 0.148850 < hi && hi - lo < 0.15,
                format!("b = -0.3541: branches f''(0) = {hi:.6}, {lo:.6} around 0.148850"),
            );
        }
        Ok(runs) => c.check(false, format!("b = -0.3541: {} branches", runs.len())),
        Err(e) => c.check(false, format!("b = -0.3541 failed: {e}")),
    }
}

fn falkner_skan(c: &mut Criterion, beta: f64, sign: Sign, seeds: (f64, f64), expected: f64) {
    let label = format!("β = {beta}, {sign}: f''(0)");
    match solve(
        ProblemSpec::falkner_skan(beta, sign),
        Finder::Secant {
            h0: seeds.0,
            h1: seeds.1,
        },
        20.0,
    ) {
        Ok(run) => c.close(run.skin_friction, expected, SKIN_FRICTION_TOL, &label),
        Err(e) => c.check(false, format!("{label} failed: {e}")),
    }
}

fn criterion_6(c: &mut Criterion) {
    falkner_skan(c, -0.01, Sign::Positive, (5.0, 10.0), 0.456455);
    falkner_skan(c, -0.01, Sign::Negative, (75.0, 150.0), -0.042321);
}

fn criterion_7(c: &mut Criterion) {
    let rows = [
        (-0.025, -0.074366),
        (-0.05, -0.108271),
        (-0.1, -0.140546),
        (-0.15, -0.133421),
        (-0.18, -0.097692),
    ];
    for (beta, expected) in rows {
        falkner_skan(c, beta, Sign::Negative, (15.0, 25.0), expected);
    }
}

fn criterion_8(c: &mut Criterion) {
    let control = StepControl::default();
    match beta_min_continuation(-0.1988, &control, &ic(), &RootConfig::default()) {
        Ok(r) => {
            c.close(
                r.beta_min_estimate,
                BETA_MIN,
                BETA_MIN_TOL,
                "β_min estimate",
            );
            let normal = *r.skin_frictions_normal.last().unwrap_or(&f64::NAN);
            let reverse = *r.skin_frictions_reverse.last().unwrap_or(&f64::NAN);
            c.check(
                normal.abs() <= control.skin_friction_floor
                    && reverse.abs() <= control.skin_friction_floor,
                format!("terminal skin frictions {normal:.3e}, {reverse:.3e}"),
            );
            let monotone = r.skin_frictions_normal.windows(2).all(|w| w[1] <= w[0]);
            c.check(
                monotone,
                format!("normal branch decreasing over {} steps", r.len()),
            );
        }
        Err(e) => c.check(false, format!("continuation failed: {e}")),
    }
    let started = Instant::now();
    let outcome = beta_min_continuation(-0.21, &control, &ic(), &RootConfig::default());
    let elapsed = started.elapsed();
    c.check(
        matches!(
            outcome,
            Err(EngineError::NoBracket { .. } | EngineError::NotConverged { .. })
        ) && elapsed < NONEXISTENCE_BUDGET,
        format!(
            "β = -0.21: {} after {:.2} s",
            outcome
                .as_ref()
                .err()
                .map(ToString::to_string)
                .unwrap_or_else(|| "no error".into()),
            elapsed.as_secs_f64()
        ),
    );
}

/// One row of the oracle matrix: an ITM run and an independent shooting bracket.
struct OracleCase {
    label: String,
    run: Result<ItmRun, EngineError>,
    bracket: (f64, f64),
}

fn oracle_matrix() -> Vec<OracleCase> {
    let case =
        |label: &str, problem: ProblemSpec, finder: Finder, bracket: (f64, f64)| OracleCase {
            label: label.to_string(),
            run: solve(problem, finder, problem.default_eta_inf()),
            bracket,
        };
    let rf = |lo, hi| Finder::RegulaFalsi { lo, hi };
    let secant = |h0, h1| Finder::Secant { h0, h1 };
    vec![
        case(
            "Blasius",
            ProblemSpec::blasius(),
            secant(1.0, 2.0),
            (0.3, 0.4),
        ),
        case(
            "Sakiadis",
            ProblemSpec::sakiadis(),
            secant(2.5, 3.5),
            (-0.5, -0.4),
        ),
        case(
            "slip c = 1",
            ProblemSpec::slip(1.0),
            rf(0.1, 1.0),
            (0.25, 0.35),
        ),
        case(
            "slip c = 5",
            ProblemSpec::slip(5.0),
            rf(0.1, 1.0),
            (0.1, 0.2),
        ),
        case(
            "slip c = 10",
            ProblemSpec::slip(10.0),
            rf(0.1, 1.0),
            (0.05, 0.12),
        ),
        case(
            "slip c = 50",
            ProblemSpec::slip(50.0),
            rf(0.1, 1.0),
            (0.01, 0.03),
        ),
        case(
            "moving b = -0.25 first",
            ProblemSpec::moving_surface(-0.25),
            rf(1.0, 3.0),
            (0.25, 0.32),
        ),
        case(
            "moving b = -0.25 second",
            ProblemSpec::moving_surface(-0.25),
            rf(3.0, 10.0),
            (0.02, 0.045),
        ),
        case(
            "Falkner-Skan β = -0.01 normal",
            ProblemSpec::falkner_skan(-0.01, Sign::Positive),
            secant(5.0, 10.0),
            (0.4, 0.5),
        ),
        case(
            "Falkner-Skan β = -0.01 reverse",
            ProblemSpec::falkner_skan(-0.01, Sign::Negative),
            secant(75.0, 150.0),
            (-0.045, -0.04),
        ),
        case(
            "Falkner-Skan β = -0.1 normal",
            ProblemSpec::falkner_skan(-0.1, Sign::Positive),
            secant(5.0, 10.0),
            (0.28, 0.36),
        ),
        case(
            "Falkner-Skan β = -0.1 reverse",
            ProblemSpec::falkner_skan(-0.1, Sign::Negative),
            secant(15.0, 25.0),
            (-0.2, -0.05),
        ),
    ]
}

fn max_abs_diff(a: &Trajectory, b: &Trajectory) -> f64 {
    a.states
        .iter()
        .flatten()
        .zip(b.states.iter().flatten())
        .map(|(x, y)| ((x - y) / y.abs().max(1.0)).abs())
        .fold(0.0, f64::max)
}

fn criterion_9(c: &mut Criterion) {
    // Group law: rescaling by λ1 then λ2 equals rescaling by λ1·λ2.
    let sample = integrate_fixed(
        &ProblemSpec::blasius().auxiliary_system(1.7),
        &ProblemSpec::blasius().auxiliary_initial_state(1.7),
        (0.0, 6.0),
        0.05,
        1e8,
    )
    .expect("valid span");
    let mut worst = 0.0f64;
    for (delta, sigma) in [(-1.0, 2.0), (-1.0, 4.0), (-1.0, -1.0), (0.5, 3.0)] {
        let group = ExtendedScalingGroup::new(delta, sigma).expect("valid exponents");
        for (l1, l2) in [(0.3, 2.5), (1.7, 0.9), (4.0, 0.25)] {
            let twice = rescale_trajectory(
                &rescale_trajectory(&sample, l1, &group).unwrap(),
                l2,
                &group,
            )
            .unwrap();
            let once = rescale_trajectory(&sample, l1 * l2, &group).unwrap();
            let nodes = twice
                .nodes
                .iter()
                .zip(&once.nodes)
                .map(|(x, y)| (x - y).abs() / y.abs().max(1.0))
                .fold(0.0, f64::max);
            worst = worst.max(nodes).max(max_abs_diff(&twice, &once));
        }
    }
    c.check(
        worst <= GROUP_LAW_TOL,
        format!("group-law composition error {worst:.2e}"),
    );

    // Residuals and oracle equivalence over the problem matrix.
    for case in oracle_matrix() {
        let run = match case.run {
            Ok(run) => run,
            Err(e) => {
                c.check(false, format!("{}: ITM failed: {e}", case.label));
                continue;
            }
        };
        match run.residuals(&ic()) {
            Ok(r) => c.check(
                r.max() <= RESIDUAL_TOL,
                format!(
                    "{}: residuals boundary {:.1e}, ODE {:.1e}",
                    case.label, r.boundary, r.ode
                ),
            ),
            Err(e) => c.check(false, format!("{}: residual check failed: {e}", case.label)),
        }
        match shooting_oracle(
            &run.problem,
            case.bracket,
            run.physical_eta_inf(),
            &ic(),
            1e-12,
        ) {
            Ok((s, _)) => c.check(
                (s - run.skin_friction).abs() <= ORACLE_TOL,
                format!(
                    "{}: ITM {:.8}, shooting {s:.8} (Δ {:.1e})",
                    case.label,
                    run.skin_friction,
                    (s - run.skin_friction).abs()
                ),
            ),
            Err(e) => c.check(false, format!("{}: oracle failed: {e}", case.label)),
        }
    }

    // RK4 order: successive halvings shrink the error differences by ~16.
    let system = ProblemSpec::blasius().physical_system();
    let y0 = [0.0, 0.0, 0.332057];
    let end = |step: f64| {
        integrate_fixed(&system, &y0, (0.0, 5.0), step, 1e8)
            .unwrap()
            .last_state()[0]
    };
    let (a, b, d) = (end(0.1), end(0.05), end(0.025));
    let factor = (a - b) / (b - d);
    c.check(
        (ORDER_FACTOR.0..=ORDER_FACTOR.1).contains(&factor),
        format!("RK4 order factor {factor:.3}"),
    );

    // Series against integration on [0, 0.5].
    let traj = integrate_fixed(&system, &y0, (0.0, 0.5), 1e-3, 1e8).unwrap();
    let series_gap = traj
        .nodes
        .iter()
        .zip(&traj.states)
        .map(|(&eta, state)| {
            let s = blasius_series_eval(y0[2], eta, 4).unwrap();
            (0..3).map(|k| (s[k] - state[k]).abs()).fold(0.0, f64::max)
        })
        .fold(0.0, f64::max);
    c.check(
        series_gap <= SERIES_TOL,
        format!("series vs integration on [0, 0.5]: {series_gap:.2e}"),
    );

    // Truncation bound against the observed change from M to 2M.
    let rk = IntegratorConfig::fixed(1e-3);
    for m in [4.0, 6.0] {
        let outcome = truncated_blasius(m, &rk, 1e-13).and_then(|(_, short)| {
            let bound = rubel_error_bound(&short, m)?;
            let (_, long) = truncated_blasius(2.0 * m, &rk, 1e-13)?;
            let observed = short
                .nodes
                .iter()
                .zip(&short.states)
                .filter_map(|(&eta, state)| long.sample(eta).map(|l| (l[0] - state[0]).abs()))
                .fold(0.0, f64::max);
            Ok((bound, observed))
        });
        match outcome {
            Ok((bound, observed)) => c.check(
                bound.bound >= observed,
                format!(
                    "M = {m}: bound {:.3e} ≥ observed {observed:.3e}",
                    bound.bound
                ),
            ),
            Err(e) => c.check(false, format!("M = {m}: {e}")),
        }
    }
}

fn criterion_10(c: &mut Criterion) {
    match gamma_profile(
        &ProblemSpec::sakiadis().with_sign(Sign::Positive),
        (0.1, 50.0),
        64,
        Spacing::Log,
        &ic(),
        10.0,
    ) {
        Ok(p) => {
            let ok_samples = p.samples.iter().filter(|s| s.status.is_ok()).count();
            c.check(
                p.brackets.is_empty(),
                format!(
                    "{} sign changes over {} samples ({ok_samples} Ok)",
                    p.brackets.len(),
                    p.samples.len()
                ),
            );
        }
        Err(e) => c.check(false, format!("profile failed: {e}")),
    }
}

type Check = fn(&mut Criterion);

fn main() -> ExitCode {
    let criteria: [(&str, Check); 10] = [
        ("Blasius via Töpfer", criterion_1),
        ("Sakiadis secant", criterion_2),
        ("Sakiadis Newton", criterion_3),
        ("slip flow", criterion_4),
        ("moving surface branches", criterion_5),
        ("Falkner-Skan β = -0.01 branches", criterion_6),
        ("Falkner-Skan reverse-flow sweep", criterion_7),
        ("β_min continuation", criterion_8),
        ("property suite", criterion_9),
        ("Sakiadis p = +1 uniqueness", criterion_10),
    ];
    let mut failures = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let mut c = Criterion::default();
        let started = Instant::now();
        run(&mut c);
        for line in &c.lines {
            println!("{line}");
        }
        println!(
            "criterion {:>2} {}: {} ({:.2} s)",
            k + 1,
            if c.failed { "FAIL" } else { "PASS" },
            name,
            started.elapsed().as_secs_f64()
        );
        failures += usize::from(c.failed);
    }
    println!(
        "acceptance: {} of {} criteria passed",
        criteria.len() - failures,
        criteria.len()
    );
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

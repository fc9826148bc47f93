//! Argument parsing and dispatch to the engine.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{error::ErrorKind, Args, Parser, Subcommand};
use thiserror::Error;

use itm_core::oracles::{truncated_blasius, OracleError};
use itm_core::{
    beta_min_continuation, blasius_series_eval, gamma_profile, itm_solve, rubel_error_bound,
    shooting_oracle, solve_all_branches, topfer_solve, ContinuationResult, EngineError, Family,
    Finder, IntegratorConfig, ItmRun, ProblemSpec, RootConfig, Sign, Spacing, StepControl,
};

use crate::config::{load_config, ConfigError, FinderArg, ProblemName, RunConfig, Span};
use crate::document::{write_results, Metadata, OutputError, ResultDocument, Table};

/// Environment variable naming the default output directory.
pub const OUTPUT_DIR_ENV: &str = "ITM_OUTPUT_DIR";

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DIAGNOSIS: i32 = 2;

const DEFAULT_TOL: f64 = 1e-10;
const DEFAULT_SAMPLES: usize = 64;
const DEFAULT_CHECKPOINT: f64 = 10.0;
const DEFAULT_AGREEMENT: f64 = 1e-5;
const DEFAULT_START_BETA: f64 = -0.1988;
const DEFAULT_RUBEL_M: f64 = 6.0;
const DEFAULT_SERIES_LAMBDA: f64 = 0.332057336215;
const DEFAULT_SERIES_ETA: f64 = 0.5;
const DEFAULT_SERIES_TERMS: usize = 4;
const DEFAULT_ORACLE_TOL: f64 = 1e-12;

#[derive(Debug, Parser)]
#[command(
    name = "itm",
    version,
    about = "Transformation methods for boundary-layer problems"
)]
pub struct Cli {
    /// Flat key-value file; flags override its entries.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve one problem by the iterative transformation method.
    Solve(Invocation),
    /// Töpfer's non-iterative method for the Blasius problem.
    Topfer(Invocation),
    /// Sample the transformation function and count sign changes.
    GammaScan(Invocation),
    /// Solve every bracketed zero of the transformation function.
    Branches(Invocation),
    /// March the Falkner–Skan parameter down toward the fold.
    Continuation(Invocation),
    /// Compare the Blasius power series with integration.
    SeriesCheck(Invocation),
    /// Truncation-error bound of the truncated Blasius problem.
    RubelBound(Invocation),
    /// Bisection shooting on the original problem.
    Oracle(Invocation),
}

#[derive(Debug, Args)]
pub struct Invocation {
    #[arg(value_enum)]
    pub problem: Option<ProblemName>,
    #[command(flatten)]
    pub flags: RunConfig,
}

impl Command {
    fn parts(self) -> (&'static str, Invocation) {
        match self {
            Command::Solve(i) => ("solve", i),
            Command::Topfer(i) => ("topfer", i),
            Command::GammaScan(i) => ("gamma-scan", i),
            Command::Branches(i) => ("branches", i),
            Command::Continuation(i) => ("continuation", i),
            Command::SeriesCheck(i) => ("series-check", i),
            Command::RubelBound(i) => ("rubel-bound", i),
            Command::Oracle(i) => ("oracle", i),
        }
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid --{flag}: {message} (default: {default})")]
    Usage {
        flag: &'static str,
        message: String,
        default: String,
    },
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Output(#[from] OutputError),
    #[error("{0}")]
    Engine(#[from] EngineError),
}

fn usage(flag: &'static str, message: impl Into<String>, default: impl ToString) -> CliError {
    CliError::Usage {
        flag,
        message: message.into(),
        default: default.to_string(),
    }
}

/// Result of a command that ran to completion.
#[derive(Debug)]
pub struct Outcome {
    pub exit_code: i32,
    pub documents: Vec<ResultDocument>,
    pub written: Vec<PathBuf>,
}

/// Parses `argv` (program name first), runs the command and writes results.
/// Returns the process exit code and the documents produced.
pub fn run_command<I, T>(argv: I) -> (i32, Vec<ResultDocument>)
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
            let _ = e.print();
            return (code, Vec::new());
        }
    };
    match execute(cli) {
        Ok(outcome) => {
            for doc in &outcome.documents {
                print_summary(doc);
            }
            for path in &outcome.written {
                println!("wrote {}", path.display());
            }
            (outcome.exit_code, outcome.documents)
        }
        Err(e) => {
            eprintln!("error: {e}");
            (EXIT_USAGE, Vec::new())
        }
    }
}

pub fn execute(cli: Cli) -> Result<Outcome, CliError> {
    let (name, invocation) = cli.command.parts();
    let file = match &cli.config {
        Some(path) => load_config(path)?,
        None => RunConfig::default(),
    };
    let mut cfg = invocation.flags.over(file);
    cfg.problem = invocation.problem.or(cfg.problem);

    let (exit_code, documents) = match name {
        "solve" => solve(&cfg)?,
        "topfer" => topfer(&cfg)?,
        "gamma-scan" => scan(&cfg)?,
        "branches" => branches(&cfg)?,
        "continuation" => continuation(&cfg)?,
        "series-check" => series_check(&cfg)?,
        "rubel-bound" => rubel(&cfg)?,
        "oracle" => oracle(&cfg)?,
        _ => unreachable!("clap only yields known subcommands"),
    };

    let mut written = Vec::new();
    if let Some(stem) = output_stem(&cfg, name) {
        let format = cfg.format.unwrap_or_default();
        let many = documents.len() > 1;
        for doc in &documents {
            let path = if many {
                let file = format!(
                    "{}_{}",
                    stem.file_name()
                        .map(|n| n.to_string_lossy().into_owned())
                        .unwrap_or_default(),
                    doc.metadata.label
                );
                stem.with_file_name(file)
            } else {
                stem.clone()
            };
            written.extend(write_results(doc, format, &path)?);
        }
    }
    Ok(Outcome {
        exit_code,
        documents,
        written,
    })
}

fn output_stem(cfg: &RunConfig, command: &str) -> Option<PathBuf> {
    if let Some(path) = &cfg.output {
        return Some(path.clone());
    }
    let dir = std::env::var_os(OUTPUT_DIR_ENV)?;
    let stem = match cfg.problem {
        Some(p) => format!("{command}_{p}"),
        None => command.to_string(),
    };
    Some(PathBuf::from(dir).join(stem))
}

fn print_summary(doc: &ResultDocument) {
    println!("[{} {}]", doc.metadata.command, doc.metadata.label);
    for (k, v) in &doc.scalars {
        println!("  {k:<24} {v:.10e}");
    }
    if let Some(d) = &doc.diagnosis {
        println!("  diagnosis: {d}");
    }
}

fn positive(x: f64, flag: &'static str, default: impl ToString) -> Result<f64, CliError> {
    if x > 0.0 && x.is_finite() {
        Ok(x)
    } else {
        Err(usage(flag, format!("must be positive, got {x}"), default))
    }
}

fn integrator(cfg: &RunConfig) -> Result<IntegratorConfig, CliError> {
    let ic = match cfg.fixed_step {
        Some(step) => IntegratorConfig::fixed(positive(step, "fixed-step", "adaptive")?),
        None => IntegratorConfig::adaptive(positive(
            cfg.tol.unwrap_or(DEFAULT_TOL),
            "tol",
            DEFAULT_TOL,
        )?),
    };
    Ok(ic)
}

fn root_config(cfg: &RunConfig) -> Result<RootConfig, CliError> {
    let d = RootConfig::default();
    let rc = RootConfig {
        tol_gamma: positive(
            cfg.tol_gamma.unwrap_or(d.tol_gamma),
            "tol-gamma",
            d.tol_gamma,
        )?,
        tol_rel: positive(cfg.tol_rel.unwrap_or(d.tol_rel), "tol-rel", d.tol_rel)?,
        tol_abs: positive(cfg.tol_abs.unwrap_or(d.tol_abs), "tol-abs", d.tol_abs)?,
        max_iter: cfg.max_iter.unwrap_or(d.max_iter),
    };
    if rc.max_iter < 2 {
        return Err(usage("max-iter", "needs at least 2 probes", d.max_iter));
    }
    Ok(rc)
}

fn eta_inf(cfg: &RunConfig, problem: &ProblemSpec) -> Result<f64, CliError> {
    let default = problem.default_eta_inf();
    positive(cfg.eta_inf.unwrap_or(default), "eta-inf", default)
}

fn problem(cfg: &RunConfig, fallback: ProblemName) -> Result<ProblemSpec, CliError> {
    let p = cfg.problem_spec(fallback);
    match p.family() {
        Family::Slip { c } if c.is_nan() || c < 0.0 => Err(usage(
            "c",
            format!("slip coefficient must be non-negative, got {c}"),
            crate::config::DEFAULT_SLIP,
        )),
        _ => Ok(p),
    }
}

/// Family-specific seeds: secant pair, or bracket for regula falsi.
fn default_pair(p: &ProblemSpec) -> (f64, f64) {
    match (p.family(), p.sign()) {
        (Family::Blasius, _) => (1.0, 2.0),
        (Family::Sakiadis, _) => (2.5, 3.5),
        (Family::Slip { .. }, _) => (0.1, 1.0),
        (Family::MovingSurface { .. }, _) => (1.0, 3.0),
        (Family::FalknerSkan { .. }, Sign::Positive) => (5.0, 10.0),
        (Family::FalknerSkan { .. }, Sign::Negative) => (15.0, 25.0),
    }
}

fn default_finder(p: &ProblemSpec) -> FinderArg {
    match p.family() {
        Family::Slip { .. } | Family::MovingSurface { .. } => FinderArg::RegulaFalsi,
        _ => FinderArg::Secant,
    }
}

fn finder(cfg: &RunConfig, p: &ProblemSpec) -> Result<Finder, CliError> {
    let (a, b) = default_pair(p);
    let f = match cfg.finder.unwrap_or(default_finder(p)) {
        FinderArg::Secant => Finder::Secant {
            h0: cfg.h0.unwrap_or(a),
            h1: cfg.h1.unwrap_or(b),
        },
        FinderArg::Newton => {
            if p.family() != Family::Sakiadis {
                return Err(usage(
                    "finder",
                    format!("newton needs the sensitivity system, which exists only for sakiadis, not {}", p.family().name()),
                    format!("{:?}", default_finder(p)).to_lowercase(),
                ));
            }
            Finder::Newton {
                h0: cfg.h0.unwrap_or(a),
            }
        }
        FinderArg::RegulaFalsi => {
            let Span(lo, hi) = cfg
                .bracket
                .unwrap_or_else(|| Span(cfg.h0.unwrap_or(a), cfg.h1.unwrap_or(b)));
            Finder::RegulaFalsi { lo, hi }
        }
    };
    Ok(f)
}

fn scan_range(cfg: &RunConfig, p: &ProblemSpec) -> Result<(f64, f64, usize, Spacing), CliError> {
    let default = match p.family() {
        Family::MovingSurface { .. } => Span(1.0, 150.0),
        Family::FalknerSkan { .. } => Span(1.0, 1e3),
        _ => Span(0.1, 100.0),
    };
    let Span(lo, hi) = cfg.range.unwrap_or(default);
    if !(lo > 0.0 && hi > lo && hi.is_finite()) {
        return Err(usage(
            "range",
            format!("need 0 < lo < hi, got {lo}:{hi}"),
            default,
        ));
    }
    let n = cfg.samples.unwrap_or(DEFAULT_SAMPLES);
    if n < 2 {
        return Err(usage(
            "samples",
            format!("need at least 2, got {n}"),
            DEFAULT_SAMPLES,
        ));
    }
    Ok((
        lo,
        hi,
        n,
        cfg.spacing.map(Spacing::from).unwrap_or_default(),
    ))
}

fn echo(cfg: &RunConfig, p: Option<&ProblemSpec>) -> RunConfig {
    let mut out = cfg.clone();
    if let Some(p) = p {
        out.problem = Some(ProblemName::from(p.family()));
    }
    out
}

fn run_document(command: &str, label: &str, cfg: &RunConfig, run: &ItmRun) -> ResultDocument {
    let mut doc = ResultDocument::new(Metadata::new(
        command,
        label,
        &echo(cfg, Some(&run.problem)),
    ));
    doc.iterations = Table::iterations(&run.records);
    doc.solution = Table::solution(&run.physical_solution);
    let group = run.problem.group();
    let start = run.physical_solution.first_state();
    let end = run.physical_solution.last_state();
    doc.scalar("h_star", run.final_h_star);
    doc.scalar("lambda", run.final_lambda);
    doc.scalar("gamma", run.final_gamma);
    doc.scalar("skin_friction", run.skin_friction);
    doc.scalar("fprime_wall", start[1]);
    doc.scalar("eta_inf_starred", run.eta_inf);
    doc.scalar("eta_inf_physical", run.physical_eta_inf());
    doc.scalar(
        "fprime_starred_end",
        run.final_lambda.powf(group.derivative_exponent(1)) * end[1],
    );
    doc.scalar("probes", run.probe_count() as f64);
    doc
}

type Produced = (i32, Vec<ResultDocument>);

fn diagnosis(
    command: &str,
    cfg: &RunConfig,
    p: Option<&ProblemSpec>,
    message: String,
) -> ResultDocument {
    let mut doc = ResultDocument::new(Metadata::new(command, "main", &echo(cfg, p)));
    doc.diagnosis = Some(message);
    doc
}

fn solve(cfg: &RunConfig) -> Result<Produced, CliError> {
    let p = problem(cfg, ProblemName::Sakiadis)?;
    let finder = finder(cfg, &p)?;
    match itm_solve(
        &p,
        finder,
        &integrator(cfg)?,
        eta_inf(cfg, &p)?,
        &root_config(cfg)?,
    ) {
        Ok(run) => Ok((EXIT_OK, vec![run_document("solve", "main", cfg, &run)])),
        Err(e @ EngineError::NotConverged { .. }) => {
            let mut doc = diagnosis("solve", cfg, Some(&p), e.to_string());
            doc.iterations = Table::iterations(e.log());
            Ok((EXIT_DIAGNOSIS, vec![doc]))
        }
        Err(e) => Err(e.into()),
    }
}

fn topfer(cfg: &RunConfig) -> Result<Produced, CliError> {
    let checkpoints = cfg
        .checkpoints
        .clone()
        .unwrap_or_else(|| vec![DEFAULT_CHECKPOINT]);
    if checkpoints.is_empty()
        || checkpoints.windows(2).any(|w| w[1] <= w[0])
        || checkpoints[0] <= 0.0
    {
        return Err(usage(
            "checkpoints",
            "need a positive ascending list",
            DEFAULT_CHECKPOINT,
        ));
    }
    let agreement = positive(
        cfg.agreement.unwrap_or(DEFAULT_AGREEMENT),
        "agreement",
        DEFAULT_AGREEMENT,
    )?;
    let r = topfer_solve(&integrator(cfg)?, &checkpoints)?;
    let mut doc = ResultDocument::new(Metadata::new(
        "topfer",
        "main",
        &echo(cfg, Some(&ProblemSpec::blasius())),
    ));
    doc.scalar("lambda", r.lambda);
    doc.scalar("skin_friction", r.lambda);
    let mut table = Table::new(&["eta_star", "lambda"]);
    for &(eta, lambda) in &r.checkpoint_lambdas {
        table.push(vec![eta.into(), lambda.into()]);
    }
    doc.tables.insert("checkpoints".into(), table);
    doc.solution = Table::solution(&r.physical_solution);
    let mut code = EXIT_OK;
    if let Some(a) = r.agreement {
        doc.scalar("agreement", a);
        if !r.agrees_within(agreement) {
            doc.diagnosis = Some(format!(
                "last two checkpoints differ by {a:e}, above the agreement tolerance {agreement:e}"
            ));
            code = EXIT_DIAGNOSIS;
        }
    }
    Ok((code, vec![doc]))
}

fn scan(cfg: &RunConfig) -> Result<Produced, CliError> {
    let p = problem(cfg, ProblemName::Sakiadis)?;
    let (lo, hi, n, spacing) = scan_range(cfg, &p)?;
    let profile = gamma_profile(
        &p,
        (lo, hi),
        n,
        spacing,
        &integrator(cfg)?,
        eta_inf(cfg, &p)?,
    )?;
    let mut doc = ResultDocument::new(Metadata::new("gamma-scan", "main", &echo(cfg, Some(&p))));
    let mut samples = Table::new(&["h_star", "gamma", "lambda", "skin_friction", "status"]);
    for s in &profile.samples {
        samples.push(vec![
            s.h_star.into(),
            s.gamma.into(),
            s.lambda.into(),
            s.skin_friction.into(),
            s.status.as_str().into(),
        ]);
    }
    let mut brackets = Table::new(&["lo", "hi"]);
    for &(a, b) in &profile.brackets {
        brackets.push(vec![a.into(), b.into()]);
    }
    doc.tables.insert("profile".into(), samples);
    doc.tables.insert("brackets".into(), brackets);
    doc.scalar("zero_count", profile.zero_count_evidence as f64);
    let code = if profile.brackets.is_empty() {
        doc.diagnosis = Some(format!(
            "no sign change of the transformation function on [{lo}, {hi}]"
        ));
        EXIT_DIAGNOSIS
    } else {
        EXIT_OK
    };
    Ok((code, vec![doc]))
}

fn branches(cfg: &RunConfig) -> Result<Produced, CliError> {
    let p = problem(cfg, ProblemName::Moving)?;
    let (lo, hi, n, spacing) = scan_range(cfg, &p)?;
    let runs = match solve_all_branches(
        &p,
        (lo, hi),
        n,
        spacing,
        &integrator(cfg)?,
        eta_inf(cfg, &p)?,
        &root_config(cfg)?,
    ) {
        Ok(runs) => runs,
        Err(e @ EngineError::NotConverged { .. }) => {
            return Ok((
                EXIT_DIAGNOSIS,
                vec![diagnosis("branches", cfg, Some(&p), e.to_string())],
            ));
        }
        Err(e) => return Err(e.into()),
    };
    if runs.is_empty() {
        let doc = diagnosis(
            "branches",
            cfg,
            Some(&p),
            format!("no sign change of the transformation function on [{lo}, {hi}]"),
        );
        return Ok((EXIT_DIAGNOSIS, vec![doc]));
    }
    let docs = runs
        .iter()
        .enumerate()
        .map(|(k, run)| run_document("branches", &format!("branch{}", k + 1), cfg, run))
        .collect();
    Ok((EXIT_OK, docs))
}

fn continuation_table(r: &ContinuationResult) -> Table {
    let mut t = Table::new(&[
        "beta",
        "skin_friction_normal",
        "skin_friction_reverse",
        "h_star_normal",
        "h_star_reverse",
        "eta_inf",
    ]);
    for k in 0..r.len() {
        t.push(vec![
            r.beta_values[k].into(),
            r.skin_frictions_normal[k].into(),
            r.skin_frictions_reverse[k].into(),
            r.h_star_normal[k].into(),
            r.h_star_reverse[k].into(),
            r.eta_inf_values[k].into(),
        ]);
    }
    t
}

fn continuation(cfg: &RunConfig) -> Result<Produced, CliError> {
    let d = StepControl::default();
    let start = cfg.start_beta.unwrap_or(DEFAULT_START_BETA);
    let control = StepControl {
        initial_step: positive(
            cfg.beta_step.unwrap_or(d.initial_step),
            "beta-step",
            d.initial_step,
        )?,
        skin_friction_floor: positive(
            cfg.floor.unwrap_or(d.skin_friction_floor),
            "floor",
            d.skin_friction_floor,
        )?,
        eta_inf: positive(cfg.eta_inf.unwrap_or(d.eta_inf), "eta-inf", d.eta_inf)?,
        ..d
    };
    let echoed = echo(cfg, Some(&ProblemSpec::falkner_skan(start, Sign::Positive)));
    let mut doc = ResultDocument::new(Metadata::new("continuation", "main", &echoed));
    let outcome = beta_min_continuation(start, &control, &integrator(cfg)?, &root_config(cfg)?);
    let (code, result) = match outcome {
        Ok(r) => (EXIT_OK, r),
        Err(EngineError::ContinuationStalled {
            beta,
            step,
            partial,
        }) => {
            doc.diagnosis = Some(format!(
                "continuation stalled at beta = {beta} with step {step:e}"
            ));
            (EXIT_DIAGNOSIS, *partial)
        }
        Err(e @ (EngineError::NoBracket { .. } | EngineError::NotConverged { .. })) => {
            doc.diagnosis = Some(e.to_string());
            (EXIT_DIAGNOSIS, ContinuationResult::default())
        }
        Err(e) => return Err(e.into()),
    };
    if !result.is_empty() {
        doc.scalar("beta_min_estimate", result.beta_min_estimate);
        doc.scalar(
            "skin_friction_normal",
            *result.skin_frictions_normal.last().unwrap_or(&f64::NAN),
        );
        doc.scalar(
            "skin_friction_reverse",
            *result.skin_frictions_reverse.last().unwrap_or(&f64::NAN),
        );
    }
    doc.tables
        .insert("continuation".into(), continuation_table(&result));
    Ok((code, vec![doc]))
}

fn series_check(cfg: &RunConfig) -> Result<Produced, CliError> {
    let lambda = cfg.lambda.unwrap_or(DEFAULT_SERIES_LAMBDA);
    let eta = positive(
        cfg.eta.unwrap_or(DEFAULT_SERIES_ETA),
        "eta",
        DEFAULT_SERIES_ETA,
    )?;
    let terms = cfg.terms.unwrap_or(DEFAULT_SERIES_TERMS);
    if !(1..=4).contains(&terms) {
        return Err(usage(
            "terms",
            format!("must be 1 to 4, got {terms}"),
            DEFAULT_SERIES_TERMS,
        ));
    }
    let system = ProblemSpec::blasius().physical_system();
    let trajectory =
        itm_core::ivp::integrate(&system, &[0.0, 0.0, lambda], (0.0, eta), &integrator(cfg)?)
            .map_err(EngineError::from)?;
    let mut table = Table::new(&[
        "eta",
        "f_series",
        "f_integrated",
        "fprime_series",
        "fprime_integrated",
    ]);
    let mut gap = 0.0f64;
    for (&x, y) in trajectory.nodes.iter().zip(&trajectory.states) {
        let s = blasius_series_eval(lambda, x, terms).expect("term count checked");
        gap = gap.max((s[0] - y[0]).abs()).max((s[1] - y[1]).abs());
        table.push(vec![
            x.into(),
            s[0].into(),
            y[0].into(),
            s[1].into(),
            y[1].into(),
        ]);
    }
    let mut doc = ResultDocument::new(Metadata::new(
        "series-check",
        "main",
        &echo(cfg, Some(&ProblemSpec::blasius())),
    ));
    doc.scalar("max_difference", gap);
    doc.scalar(
        "last_term_at_eta",
        itm_core::oracles::SeriesApproximation::new(lambda, terms)
            .expect("term count checked")
            .last_term(eta),
    );
    doc.tables.insert("series".into(), table);
    Ok((EXIT_OK, vec![doc]))
}

fn oracle_failure(e: OracleError) -> Result<ResultDocument, CliError> {
    match e {
        OracleError::InvalidBracket { .. } | OracleError::BlowUpInsideBracket { .. } => Ok(
            diagnosis("oracle", &RunConfig::default(), None, e.to_string()),
        ),
        other => Err(usage("s-bracket", other.to_string(), "family specific")),
    }
}

fn rubel(cfg: &RunConfig) -> Result<Produced, CliError> {
    let m = positive(cfg.m.unwrap_or(DEFAULT_RUBEL_M), "m", DEFAULT_RUBEL_M)?;
    let tol = positive(
        cfg.oracle_tol.unwrap_or(DEFAULT_ORACLE_TOL),
        "oracle-tol",
        DEFAULT_ORACLE_TOL,
    )?;
    let ic = integrator(cfg)?;
    let solved = truncated_blasius(m, &ic, tol).and_then(|(s, short)| {
        let bound = rubel_error_bound(&short, m)?;
        let (_, long) = truncated_blasius(2.0 * m, &ic, tol)?;
        Ok((s, short, bound, long))
    });
    let (s, short, bound, long) = match solved {
        Ok(v) => v,
        Err(e) => {
            let mut doc = oracle_failure(e)?;
            doc.metadata = Metadata::new("rubel-bound", "main", cfg);
            return Ok((EXIT_DIAGNOSIS, vec![doc]));
        }
    };
    let observed = short
        .nodes
        .iter()
        .zip(&short.states)
        .filter_map(|(&eta, y)| long.sample(eta).map(|l| (l[0] - y[0]).abs()))
        .fold(0.0, f64::max);
    let mut doc = ResultDocument::new(Metadata::new("rubel-bound", "main", cfg));
    doc.scalar("m", m);
    doc.scalar("bound", bound.bound);
    doc.scalar("f_at_m", bound.f_m_at_m);
    doc.scalar("fsecond_at_m", bound.f_m_second_at_m);
    doc.scalar("fsecond_wall", s);
    doc.scalar("observed_difference_to_2m", observed);
    doc.solution = Table::solution(&short);
    Ok((EXIT_OK, vec![doc]))
}

fn default_s_bracket(p: &ProblemSpec) -> Option<Span> {
    match (p.family(), p.sign()) {
        (Family::Blasius, _) => Some(Span(0.3, 0.4)),
        (Family::Sakiadis, _) => Some(Span(-0.5, -0.4)),
        (Family::FalknerSkan { .. }, Sign::Negative) => Some(Span(-0.2, -0.05)),
        _ => None,
    }
}

fn oracle(cfg: &RunConfig) -> Result<Produced, CliError> {
    let p = problem(cfg, ProblemName::Blasius)?;
    let Span(lo, hi) = cfg
        .s_bracket
        .or_else(|| default_s_bracket(&p))
        .ok_or_else(|| {
            usage(
                "s-bracket",
                format!("no default bracket for {}", p.family().name()),
                "none",
            )
        })?;
    let tol = positive(
        cfg.oracle_tol.unwrap_or(DEFAULT_ORACLE_TOL),
        "oracle-tol",
        DEFAULT_ORACLE_TOL,
    )?;
    let eta = eta_inf(cfg, &p)?;
    match shooting_oracle(&p, (lo, hi), eta, &integrator(cfg)?, tol) {
        Ok((s, t)) => {
            let mut doc =
                ResultDocument::new(Metadata::new("oracle", "main", &echo(cfg, Some(&p))));
            doc.scalar("skin_friction", s);
            doc.scalar("fprime_wall", t.first_state()[1]);
            doc.scalar("residual", t.last_state()[1] - p.boundary().d);
            doc.solution = Table::solution(&t);
            Ok((EXIT_OK, vec![doc]))
        }
        Err(e) => {
            let mut doc = oracle_failure(e)?;
            doc.metadata = Metadata::new("oracle", "main", &echo(cfg, Some(&p)));
            Ok((EXIT_DIAGNOSIS, vec![doc]))
        }
    }
}

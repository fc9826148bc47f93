//! Run configuration: flags, an optional flat key-value file, and
//! per-family defaults, in that order of precedence.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, ValueEnum};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use itm_core::{Family, ProblemSpec, Sign, Spacing};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot parse config {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("unknown config key `{key}`{}", suggestion_text(.suggestion))]
    UnknownKey {
        key: String,
        suggestion: Option<String>,
    },
}

fn suggestion_text(suggestion: &Option<String>) -> String {
    match suggestion {
        Some(s) => format!(" (did you mean `{s}`?)"),
        None => String::new(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProblemName {
    Blasius,
    Sakiadis,
    Slip,
    Moving,
    FalknerSkan,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SignArg {
    Positive,
    Negative,
}

impl From<SignArg> for Sign {
    fn from(s: SignArg) -> Self {
        match s {
            SignArg::Positive => Sign::Positive,
            SignArg::Negative => Sign::Negative,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FinderArg {
    Secant,
    Newton,
    RegulaFalsi,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpacingArg {
    Log,
    Linear,
}

impl From<SpacingArg> for Spacing {
    fn from(s: SpacingArg) -> Self {
        match s {
            SpacingArg::Log => Spacing::Log,
            SpacingArg::Linear => Spacing::Linear,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// Closed interval written `lo:hi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Span(pub f64, pub f64);

impl FromStr for Span {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (lo, hi) = s
            .split_once(':')
            .ok_or_else(|| format!("expected `lo:hi`, got `{s}`"))?;
        let parse = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("`{t}`: {e}"));
        Ok(Span(parse(lo)?, parse(hi)?))
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.0, self.1)
    }
}

impl Serialize for Span {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        [self.0, self.1].serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Span {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Pair([f64; 2]),
            Text(String),
        }
        match Repr::deserialize(deserializer)? {
            Repr::Pair([lo, hi]) => Ok(Span(lo, hi)),
            Repr::Text(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// Every tunable of every subcommand. `None` means "not given here".
#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[arg(skip)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub problem: Option<ProblemName>,
    /// Falkner–Skan pressure-gradient parameter.
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    /// Slip coefficient.
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    /// Wall velocity of the moving surface.
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    /// Sign of the starred missing condition.
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sign: Option<SignArg>,
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub finder: Option<FinderArg>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h0: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h1: Option<f64>,
    /// Regula-falsi bracket in h*, `lo:hi`.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bracket: Option<Span>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta_inf: Option<f64>,
    /// Local error tolerance of the adaptive integrator.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    /// Use classical RK4 with this step instead of the adaptive pair.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fixed_step: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol_gamma: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol_rel: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol_abs: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_iter: Option<usize>,
    /// Scan range in h*, `lo:hi`.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub range: Option<Span>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spacing: Option<SpacingArg>,
    /// Töpfer checkpoints, comma separated.
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub checkpoints: Option<Vec<f64>>,
    /// Töpfer agreement tolerance between the last two checkpoints.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub agreement: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub start_beta: Option<f64>,
    /// Initial continuation step in β.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta_step: Option<f64>,
    /// Skin-friction magnitude that ends the continuation.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub floor: Option<f64>,
    /// Truncated boundary of the Rubel bound.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<f64>,
    /// Series parameter f''(0).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    /// Right end of the series comparison interval.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub terms: Option<usize>,
    /// Shooting bracket in f''(0), `lo:hi`.
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s_bracket: Option<Span>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle_tol: Option<f64>,
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub format: Option<Format>,
    /// Output path stem; files get table suffixes and extensions.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

/// Keys accepted in a config file.
pub const CONFIG_KEYS: &[&str] = &[
    "problem",
    "beta",
    "c",
    "b",
    "sign",
    "finder",
    "h0",
    "h1",
    "bracket",
    "eta_inf",
    "tol",
    "fixed_step",
    "tol_gamma",
    "tol_rel",
    "tol_abs",
    "max_iter",
    "range",
    "samples",
    "spacing",
    "checkpoints",
    "agreement",
    "start_beta",
    "beta_step",
    "floor",
    "m",
    "lambda",
    "eta",
    "terms",
    "s_bracket",
    "oracle_tol",
    "format",
    "output",
];

macro_rules! overlay {
    ($top:expr, $base:expr, $($field:ident),+ $(,)?) => {
        RunConfig { $($field: $top.$field.or($base.$field)),+ }
    };
}

impl RunConfig {
    /// Fields set here win; the rest come from `base`.
    pub fn over(self, base: RunConfig) -> RunConfig {
        overlay!(
            self,
            base,
            problem,
            beta,
            c,
            b,
            sign,
            finder,
            h0,
            h1,
            bracket,
            eta_inf,
            tol,
            fixed_step,
            tol_gamma,
            tol_rel,
            tol_abs,
            max_iter,
            range,
            samples,
            spacing,
            checkpoints,
            agreement,
            start_beta,
            beta_step,
            floor,
            m,
            lambda,
            eta,
            terms,
            s_bracket,
            oracle_tol,
            format,
            output,
        )
    }

    /// The problem these settings describe, with family defaults.
    pub fn problem_spec(&self, fallback: ProblemName) -> ProblemSpec {
        let sign = self.sign.map(Sign::from);
        let spec = match self.problem.unwrap_or(fallback) {
            ProblemName::Blasius => ProblemSpec::blasius(),
            ProblemName::Sakiadis => ProblemSpec::sakiadis(),
            ProblemName::Slip => ProblemSpec::slip(self.c.unwrap_or(DEFAULT_SLIP)),
            ProblemName::Moving => {
                ProblemSpec::moving_surface(self.b.unwrap_or(DEFAULT_WALL_VELOCITY))
            }
            ProblemName::FalknerSkan => ProblemSpec::falkner_skan(
                self.beta.unwrap_or(DEFAULT_BETA),
                sign.unwrap_or(Sign::Positive),
            ),
        };
        match sign {
            Some(s) => spec.with_sign(s),
            None => spec,
        }
    }
}

pub const DEFAULT_SLIP: f64 = 1.0;
pub const DEFAULT_WALL_VELOCITY: f64 = -0.25;
pub const DEFAULT_BETA: f64 = -0.01;

/// Reads a flat `key = value` TOML file. Hyphens in keys are accepted as
/// underscores so keys can be copied from flag names.
pub fn load_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = fs::read_to_string(path).map_err(|source| ConfigError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    let table: toml::Table = text
        .parse()
        .map_err(|e: toml::de::Error| ConfigError::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
    let mut normalized = toml::Table::new();
    for (key, value) in table {
        let k = key.replace('-', "_");
        if !CONFIG_KEYS.contains(&k.as_str()) {
            return Err(ConfigError::UnknownKey {
                suggestion: nearest_key(&k),
                key,
            });
        }
        normalized.insert(k, value);
    }
    toml::Value::Table(normalized)
        .try_into()
        .map_err(|e: toml::de::Error| ConfigError::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
}

fn nearest_key(key: &str) -> Option<String> {
    CONFIG_KEYS
        .iter()
        .map(|k| (strsim::jaro_winkler(key, k), *k))
        .max_by(|a, b| a.0.total_cmp(&b.0))
        .filter(|(score, _)| *score > 0.7)
        .map(|(_, k)| k.to_string())
}

impl fmt::Display for ProblemName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(
            self.to_possible_value()
                .expect("no skipped variants")
                .get_name(),
        )
    }
}

impl From<Family> for ProblemName {
    fn from(f: Family) -> Self {
        match f {
            Family::Blasius => ProblemName::Blasius,
            Family::Sakiadis => ProblemName::Sakiadis,
            Family::Slip { .. } => ProblemName::Slip,
            Family::MovingSurface { .. } => ProblemName::Moving,
            Family::FalknerSkan { .. } => ProblemName::FalknerSkan,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn file(text: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(text.as_bytes()).unwrap();
        f
    }

    #[test]
    fn empty_file_is_all_defaults() {
        let f = file("");
        let cfg = load_config(f.path()).unwrap();
        assert_eq!(cfg, RunConfig::default());
        assert_eq!(
            cfg.problem_spec(ProblemName::Sakiadis).default_eta_inf(),
            10.0
        );
    }

    #[test]
    fn flags_beat_file() {
        let f = file("eta_inf=20\nbeta = -0.15\nrange = \"1:150\"\ncheckpoints = [4, 6]\n");
        let from_file = load_config(f.path()).unwrap();
        assert_eq!(from_file.beta, Some(-0.15));
        assert_eq!(from_file.range, Some(Span(1.0, 150.0)));
        assert_eq!(from_file.checkpoints, Some(vec![4.0, 6.0]));
        let flags = RunConfig {
            eta_inf: Some(15.0),
            ..RunConfig::default()
        };
        let merged = flags.over(from_file);
        assert_eq!(merged.eta_inf, Some(15.0));
        assert_eq!(merged.beta, Some(-0.15));
    }

    #[test]
    fn hyphenated_keys_and_enums() {
        let f = file("eta-inf = 12\nfinder = \"regula-falsi\"\nproblem = \"falkner-skan\"\nsign = \"negative\"\n");
        let cfg = load_config(f.path()).unwrap();
        assert_eq!(cfg.eta_inf, Some(12.0));
        assert_eq!(cfg.finder, Some(FinderArg::RegulaFalsi));
        let spec = cfg.problem_spec(ProblemName::Blasius);
        assert_eq!(spec.sign(), Sign::Negative);
        assert_eq!(spec.family(), Family::FalknerSkan { beta: DEFAULT_BETA });
    }

    #[test]
    fn unknown_key_names_nearest() {
        let f = file("eta_infty = 3\n");
        match load_config(f.path()) {
            Err(ConfigError::UnknownKey { key, suggestion }) => {
                assert_eq!(key, "eta_infty");
                assert_eq!(suggestion.as_deref(), Some("eta_inf"));
            }
            other => panic!("{other:?}"),
        }
        let f = file("zzzz = 1\n");
        assert!(matches!(
            load_config(f.path()),
            Err(ConfigError::UnknownKey {
                suggestion: None,
                ..
            })
        ));
    }

    #[test]
    fn bad_values_are_parse_errors() {
        let f = file("samples = \"many\"\n");
        assert!(matches!(
            load_config(f.path()),
            Err(ConfigError::Parse { .. })
        ));
        let f = file("range = \"1-150\"\n");
        assert!(matches!(
            load_config(f.path()),
            Err(ConfigError::Parse { .. })
        ));
    }

    #[test]
    fn every_field_is_a_key() {
        let full = RunConfig {
            problem: Some(ProblemName::Slip),
            beta: Some(0.0),
            c: Some(0.0),
            b: Some(0.0),
            sign: Some(SignArg::Positive),
            finder: Some(FinderArg::Secant),
            h0: Some(0.0),
            h1: Some(0.0),
            bracket: Some(Span(0.0, 1.0)),
            eta_inf: Some(0.0),
            tol: Some(0.0),
            fixed_step: Some(0.0),
            tol_gamma: Some(0.0),
            tol_rel: Some(0.0),
            tol_abs: Some(0.0),
            max_iter: Some(0),
            range: Some(Span(0.0, 1.0)),
            samples: Some(0),
            spacing: Some(SpacingArg::Log),
            checkpoints: Some(vec![]),
            agreement: Some(0.0),
            start_beta: Some(0.0),
            beta_step: Some(0.0),
            floor: Some(0.0),
            m: Some(0.0),
            lambda: Some(0.0),
            eta: Some(0.0),
            terms: Some(0),
            s_bracket: Some(Span(0.0, 1.0)),
            oracle_tol: Some(0.0),
            format: Some(Format::Json),
            output: Some(PathBuf::from("x")),
        };
        let value = serde_json::to_value(&full).unwrap();
        let keys: Vec<&str> = value
            .as_object()
            .unwrap()
            .keys()
            .map(String::as_str)
            .collect();
        let mut expected = CONFIG_KEYS.to_vec();
        expected.sort_unstable();
        let mut keys = keys;
        keys.sort_unstable();
        assert_eq!(keys, expected);
    }
}

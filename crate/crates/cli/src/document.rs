//! Result documents and their CSV/JSON serialization.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use itm_core::{IterationRecord, Trajectory};

use crate::config::{Format, RunConfig};

#[derive(Debug, Error)]
pub enum OutputError {
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot encode {path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("cannot write {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub command: String,
    /// Distinguishes several documents produced by one command.
    pub label: String,
    pub config: RunConfig,
    pub timestamp: String,
    pub version: String,
}

impl Metadata {
    pub fn new(command: &str, label: &str, config: &RunConfig) -> Self {
        Self {
            command: command.to_string(),
            label: label.to_string(),
            config: config.clone(),
            timestamp: chrono::Utc::now().to_rfc3339(),
            version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }
}

/// One table cell. Non-finite numbers are stored as `Missing`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Cell {
    Number(f64),
    Text(String),
    Missing,
}

impl Cell {
    pub fn num(x: f64) -> Self {
        if x.is_finite() {
            Cell::Number(x)
        } else {
            Cell::Missing
        }
    }

    fn render(&self) -> String {
        match self {
            Cell::Number(x) => format!("{x:.16e}"),
            Cell::Text(s) => s.clone(),
            Cell::Missing => String::new(),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::num(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Number(x as f64)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn iterations(records: &[IterationRecord]) -> Self {
        let mut t = Table::new(&["j", "h_star", "lambda", "gamma", "skin_friction", "status"]);
        for r in records {
            t.push(vec![
                r.index.into(),
                r.h_star.into(),
                r.lambda.into(),
                r.gamma.into(),
                r.skin_friction.into(),
                r.status.as_str().into(),
            ]);
        }
        t
    }

    pub fn solution(trajectory: &Trajectory) -> Self {
        let mut t = Table::new(&["eta", "f", "fprime", "fsecond"]);
        for (eta, y) in trajectory.nodes.iter().zip(&trajectory.states) {
            t.push(vec![(*eta).into(), y[0].into(), y[1].into(), y[2].into()]);
        }
        t
    }
}

/// Everything one command reports: configuration echo, the iteration
/// table, final scalars, the solution curve and any further tables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultDocument {
    pub metadata: Metadata,
    pub scalars: BTreeMap<String, f64>,
    pub iterations: Table,
    pub solution: Table,
    pub tables: BTreeMap<String, Table>,
    /// Why the command reported nonexistence or non-convergence.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnosis: Option<String>,
}

impl ResultDocument {
    pub fn new(metadata: Metadata) -> Self {
        Self {
            metadata,
            scalars: BTreeMap::new(),
            iterations: Table::default(),
            solution: Table::default(),
            tables: BTreeMap::new(),
            diagnosis: None,
        }
    }

    /// Records a scalar; non-finite values are dropped.
    pub fn scalar(&mut self, name: &str, value: f64) {
        if value.is_finite() {
            self.scalars.insert(name.to_string(), value);
        }
    }

    fn named_tables(&self) -> Vec<(String, Table)> {
        let mut out = Vec::new();
        if !self.scalars.is_empty() {
            let mut t = Table::new(&["name", "value"]);
            for (k, v) in &self.scalars {
                t.push(vec![k.as_str().into(), (*v).into()]);
            }
            out.push(("scalars".to_string(), t));
        }
        if !self.iterations.is_empty() {
            out.push(("iterations".to_string(), self.iterations.clone()));
        }
        if !self.solution.is_empty() {
            out.push(("solution".to_string(), self.solution.clone()));
        }
        out.extend(self.tables.iter().map(|(k, t)| (k.clone(), t.clone())));
        out
    }

    fn metadata_line(&self) -> String {
        let config = serde_json::to_string(&self.metadata.config).unwrap_or_default();
        format!(
            "# itm {} command={} label={} timestamp={} config={}",
            self.metadata.version,
            self.metadata.command,
            self.metadata.label,
            self.metadata.timestamp,
            config
        )
    }
}

fn with_suffix(stem: &Path, suffix: &str, ext: &str) -> PathBuf {
    let name = stem
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let file = if suffix.is_empty() {
        format!("{name}.{ext}")
    } else {
        format!("{name}_{suffix}.{ext}")
    };
    stem.with_file_name(file)
}

/// Writes `doc` next to the path stem `stem`: `<stem>.json`, or one
/// `<stem>_<table>.csv` per non-empty table. Returns the files written.
pub fn write_results(
    doc: &ResultDocument,
    format: Format,
    stem: &Path,
) -> Result<Vec<PathBuf>, OutputError> {
    if let Some(dir) = stem.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|source| OutputError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
    }
    match format {
        Format::Json => {
            let path = with_suffix(stem, "", "json");
            let io = |source| OutputError::Io {
                path: path.clone(),
                source,
            };
            let mut w = BufWriter::new(File::create(&path).map_err(io)?);
            serde_json::to_writer_pretty(&mut w, doc).map_err(|source| OutputError::Json {
                path: path.clone(),
                source,
            })?;
            w.write_all(b"\n").and_then(|_| w.flush()).map_err(io)?;
            Ok(vec![path])
        }
        Format::Csv => {
            let header = doc.metadata_line();
            let mut written = Vec::new();
            for (name, table) in doc.named_tables() {
                let path = with_suffix(stem, &name, "csv");
                write_csv(&path, &header, &table)?;
                written.push(path);
            }
            Ok(written)
        }
    }
}

fn write_csv(path: &Path, header: &str, table: &Table) -> Result<(), OutputError> {
    let io = |source| OutputError::Io {
        path: path.to_path_buf(),
        source,
    };
    let csv_err = |source| OutputError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut file = BufWriter::new(File::create(path).map_err(io)?);
    writeln!(file, "{header}").map_err(io)?;
    let mut w = csv::Writer::from_writer(file);
    w.write_record(&table.columns).map_err(csv_err)?;
    for row in &table.rows {
        w.write_record(row.iter().map(Cell::render))
            .map_err(csv_err)?;
    }
    w.flush().map_err(io)
}

/// Parses a document written with [`Format::Json`].
pub fn read_json(path: &Path) -> Result<ResultDocument, OutputError> {
    let text = fs::read_to_string(path).map_err(|source| OutputError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|source| OutputError::Json {
        path: path.to_path_buf(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use itm_core::{GammaEvaluation, ProbeStatus};

    fn sample() -> ResultDocument {
        let mut doc = ResultDocument::new(Metadata::new("solve", "main", &RunConfig::default()));
        doc.scalar("lambda", 1.311043217);
        doc.scalar("skipped", f64::NAN);
        let ok = GammaEvaluation {
            h_star: 2.5,
            lambda: 1.0617,
            gamma: 0.967345,
            skin_friction: -0.835517,
            status: ProbeStatus::Ok,
        };
        let failed = GammaEvaluation::failed(0.1, ProbeStatus::BlowUp);
        doc.iterations = Table::iterations(&[
            IterationRecord::new(0, &ok),
            IterationRecord::new(1, &failed),
        ]);
        doc.tables.insert("extra".into(), {
            let mut t = Table::new(&["x"]);
            t.push(vec![(1.0 / 3.0).into()]);
            t
        });
        doc
    }

    #[test]
    fn json_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let doc = sample();
        let files = write_results(&doc, Format::Json, &dir.path().join("run")).unwrap();
        assert_eq!(files, vec![dir.path().join("run.json")]);
        assert_eq!(read_json(&files[0]).unwrap(), doc);
        assert!(!doc.scalars.contains_key("skipped"));
    }

    #[test]
    fn csv_tables() {
        let dir = tempfile::tempdir().unwrap();
        let files = write_results(&sample(), Format::Csv, &dir.path().join("sub/run")).unwrap();
        let names: Vec<String> = files
            .iter()
            .map(|p| p.file_name().unwrap().to_string_lossy().into_owned())
            .collect();
        assert_eq!(
            names,
            ["run_scalars.csv", "run_iterations.csv", "run_extra.csv"]
        );
        let text = fs::read_to_string(&files[1]).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines[0].starts_with("# itm "));
        assert_eq!(lines[1], "j,h_star,lambda,gamma,skin_friction,status");
        assert!(lines[2].starts_with("0.0000000000000000e0,2.5000000000000000e0,"));
        assert!(lines[3].ends_with(",,-1.0000000000000000e0,,blowup"));
        let extra = fs::read_to_string(&files[2]).unwrap();
        let value: f64 = extra.lines().nth(2).unwrap().parse().unwrap();
        assert_eq!(value, 1.0 / 3.0);
    }

    #[test]
    fn solution_columns() {
        let t = Trajectory {
            nodes: vec![0.0, 1.0],
            states: vec![vec![0.0, 0.0, 0.3], vec![0.15, 0.3, 0.3]],
            status: itm_core::IntegrationStatus::Completed,
        };
        let table = Table::solution(&t);
        assert_eq!(table.columns, ["eta", "f", "fprime", "fsecond"]);
        assert_eq!(table.rows[1][2], Cell::Number(0.3));
    }

    #[test]
    fn unwritable_path_reports_it() {
        let dir = tempfile::tempdir().unwrap();
        let blocker = dir.path().join("file");
        fs::write(&blocker, "").unwrap();
        let err = write_results(&sample(), Format::Json, &blocker.join("run")).unwrap_err();
        assert!(err.to_string().contains("file"), "{err}");
    }
}

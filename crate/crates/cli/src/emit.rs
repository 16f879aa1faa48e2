//! CSV and JSON output of result records, dense trajectories and saved
//! solutions.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use flexcolloc_core::assessment::AssessmentReport;
use serde::{Deserialize, Serialize};

use crate::config::Format;
use crate::runner::{ResultRecord, Samples, SavedSolution};
use crate::CliError;

/// Column order of the record table.
pub const COLUMNS: [&str; 23] = [
    "problem",
    "mode",
    "degree",
    "intervals",
    "flex",
    "constrained",
    "tol",
    "max_iter",
    "seed",
    "warm_start",
    "status",
    "error",
    "iterations",
    "attempts",
    "wall_time_s",
    "objective",
    "kkt_residual",
    "cost",
    "inequality_violation",
    "dynamic_violation",
    "l2_error",
    "max_abs",
    "breakpoints",
];

fn io(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

fn opt(v: Option<f64>) -> String {
    v.map_or(String::new(), |v| v.to_string())
}

/// List-valued fields are `;` separated inside one CSV cell.
fn list(v: &[f64]) -> String {
    v.iter().map(f64::to_string).collect::<Vec<_>>().join(";")
}

fn row(r: &ResultRecord) -> Vec<String> {
    vec![
        r.problem.clone(),
        r.mode.clone(),
        r.degree.to_string(),
        r.intervals.to_string(),
        list(&r.flex),
        r.constrained.to_string(),
        r.tol.to_string(),
        r.max_iter.to_string(),
        r.seed.to_string(),
        r.warm_start.to_string(),
        r.status.clone(),
        r.error.clone().unwrap_or_default(),
        r.iterations.to_string(),
        r.attempts.to_string(),
        r.wall_time_s.to_string(),
        opt(r.objective),
        opt(r.kkt_residual),
        opt(r.cost),
        opt(r.inequality_violation),
        opt(r.dynamic_violation),
        opt(r.l2_error),
        opt(r.max_abs),
        list(&r.breakpoints),
    ]
}

/// Records as CSV (header plus one row each) or a JSON array.
pub fn write_records<W: Write>(records: &[ResultRecord], format: Format, out: W) -> Result<(), CliError> {
    if records.is_empty() {
        return Err(CliError::Config("no records to write".into()));
    }
    let err = |e: &dyn std::fmt::Display| CliError::Io(e.to_string());
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(out);
            w.write_record(COLUMNS).map_err(|e| err(&e))?;
            for r in records {
                w.write_record(row(r)).map_err(|e| err(&e))?;
            }
            w.flush().map_err(|e| err(&e))
        }
        Format::Json => {
            let mut out = out;
            serde_json::to_writer_pretty(&mut out, records).map_err(|e| err(&e))?;
            writeln!(out).map_err(|e| err(&e))
        }
    }
}

pub fn read_records_json(text: &str) -> Result<Vec<ResultRecord>, CliError> {
    serde_json::from_str(text).map_err(|e| CliError::Io(e.to_string()))
}

pub fn write_samples<W: Write>(samples: &Samples, out: W) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(out);
    let err = |e: csv::Error| CliError::Io(e.to_string());
    w.write_record(&samples.columns).map_err(err)?;
    for r in &samples.rows {
        w.write_record(r.iter().map(f64::to_string)).map_err(err)?;
    }
    w.flush().map_err(|e| CliError::Io(e.to_string()))
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
    }
    Ok(BufWriter::new(File::create(path).map_err(|e| io(path, e))?))
}

/// `stem` with `suffix` appended to its file name.
pub fn sibling(stem: &Path, suffix: &str) -> PathBuf {
    let mut name = stem.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(suffix);
    stem.with_file_name(name)
}

pub fn write_records_file(stem: &Path, records: &[ResultRecord], format: Format) -> Result<PathBuf, CliError> {
    let path = sibling(stem, &format!(".{}", format.extension()));
    let mut w = create(&path)?;
    write_records(records, format, &mut w)?;
    w.flush().map_err(|e| io(&path, e))?;
    Ok(path)
}

pub fn write_samples_file(path: &Path, samples: &Samples) -> Result<(), CliError> {
    let mut w = create(path)?;
    write_samples(samples, &mut w)?;
    w.flush().map_err(|e| io(path, e))
}

pub fn write_solution_file(path: &Path, solution: &SavedSolution) -> Result<(), CliError> {
    let mut w = create(path)?;
    serde_json::to_writer(&mut w, solution).map_err(|e| io(path, e))?;
    w.flush().map_err(|e| io(path, e))
}

pub fn read_solution_file(path: &Path) -> Result<SavedSolution, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| io(path, e))?;
    serde_json::from_str(&text).map_err(|e| io(path, e))
}

/// Flat summary written by the `assess` verb.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AssessmentRecord {
    pub problem: String,
    pub cost: f64,
    pub inequality_violation: f64,
    pub dynamic_violation: f64,
}

impl AssessmentRecord {
    pub fn new(problem: &str, r: &AssessmentReport) -> Self {
        Self {
            problem: problem.to_string(),
            cost: r.cost,
            inequality_violation: r.inequality_violation,
            dynamic_violation: r.dynamic_violation,
        }
    }
}

pub fn write_assessment<W: Write>(rec: &AssessmentRecord, format: Format, mut out: W) -> Result<(), CliError> {
    let err = |e: &dyn std::fmt::Display| CliError::Io(e.to_string());
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(out);
            w.serialize(rec).map_err(|e| err(&e))?;
            w.flush().map_err(|e| err(&e))
        }
        Format::Json => {
            serde_json::to_writer_pretty(&mut out, rec).map_err(|e| err(&e))?;
            writeln!(out).map_err(|e| err(&e))
        }
    }
}

//! Experiment configuration: defaults, `key = value` files and overrides.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use flexcolloc_core::problems::ProblemKind;
use flexcolloc_core::transcription::ConstraintMode;
use serde::{Deserialize, Serialize};

use crate::CliError;

const SECTIONS: [&str; 4] = ["experiment", "solver", "output", "sweep"];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(CliError::Config(format!("unknown format '{s}' (expected csv or json)"))),
        }
    }
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepAxis {
    Degree,
    Flex,
}

impl FromStr for SweepAxis {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "degree" => Ok(SweepAxis::Degree),
            "flex" | "flexibility" => Ok(SweepAxis::Flex),
            _ => Err(CliError::Config(format!("unknown sweep axis '{s}' (expected degree or flex)"))),
        }
    }
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SweepAxis::Degree => "degree",
            SweepAxis::Flex => "flex",
        })
    }
}

pub fn parse_mode(s: &str) -> Result<ConstraintMode, CliError> {
    ConstraintMode::from_letter(s).ok_or_else(|| CliError::Config(format!("unknown mode '{s}' (expected a, b or c)")))
}

/// A single flexibility or one per sub-interval, comma separated.
pub fn parse_flex(s: &str) -> Result<Vec<f64>, CliError> {
    let flex = parse_list::<f64>(s, "flex")?;
    if flex.is_empty() {
        return Err(CliError::Config("flex needs at least one value".into()));
    }
    Ok(flex)
}

fn parse_list<T: FromStr>(s: &str, key: &str) -> Result<Vec<T>, CliError> {
    s.split(',')
        .map(str::trim)
        .filter(|v| !v.is_empty())
        .map(|v| v.parse().map_err(|_| CliError::Config(format!("bad value '{v}' for {key}"))))
        .collect()
}

fn parse_value<T: FromStr>(v: &str, key: &str) -> Result<T, CliError> {
    v.parse().map_err(|_| CliError::Config(format!("bad value '{v}' for {key}")))
}

/// Sweep values: a comma list, or an inclusive integer range `lo..hi`.
pub fn parse_values(s: &str) -> Result<Vec<f64>, CliError> {
    if let Some((lo, hi)) = s.split_once("..") {
        let (lo, hi): (usize, usize) = (parse_value(lo.trim(), "values")?, parse_value(hi.trim(), "values")?);
        if lo > hi {
            return Err(CliError::Config(format!("empty range {s}")));
        }
        return Ok((lo..=hi).map(|v| v as f64).collect());
    }
    let values = parse_list(s, "values")?;
    if values.is_empty() {
        return Err(CliError::Config("sweep needs at least one value".into()));
    }
    Ok(values)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub problem: ProblemKind,
    pub mode: ConstraintMode,
    pub degree: usize,
    pub intervals: usize,
    /// One entry for a uniform flexibility, otherwise one per sub-interval.
    pub flex: Vec<f64>,
    /// Only meaningful for the sine fit; DOPs always enforce their boxes.
    pub constrained: bool,
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
    /// Start each degree of a sweep from the previous solution.
    pub warm_start: bool,
    pub out: Option<PathBuf>,
    pub format: Format,
    pub jobs: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            problem: ProblemKind::BrysonDenham,
            mode: ConstraintMode::BernsteinFlexible,
            degree: 3,
            intervals: 3,
            flex: vec![0.5],
            constrained: true,
            tol: 1e-8,
            max_iter: 3000,
            seed: 0,
            warm_start: false,
            out: None,
            format: Format::Csv,
            jobs: 1,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        if self.degree < 1 {
            return bad("degree must be at least 1".into());
        }
        if self.intervals < 1 {
            return bad("intervals must be at least 1".into());
        }
        if self.flex.len() != 1 && self.flex.len() != self.intervals {
            return bad(format!("{} flex values for {} intervals", self.flex.len(), self.intervals));
        }
        if let Some(p) = self.flex.iter().find(|p| !(0.0..1.0).contains(*p)) {
            return bad(format!("flex {p} outside [0, 1)"));
        }
        if !(self.tol > 0.0) {
            return bad(format!("tol {} must be positive", self.tol));
        }
        if self.jobs < 1 {
            return bad("jobs must be at least 1".into());
        }
        Ok(())
    }

    /// Per-interval flexibility.
    pub fn flex_per_interval(&self) -> Vec<f64> {
        if self.flex.len() == 1 {
            vec![self.flex[0]; self.intervals]
        } else {
            self.flex.clone()
        }
    }

    /// Apply one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        match key {
            "problem" => self.problem = value.parse().map_err(|e: flexcolloc_core::problems::UnknownProblem| CliError::Config(e.to_string()))?,
            "mode" => self.mode = parse_mode(value)?,
            "degree" => self.degree = parse_value(value, key)?,
            "intervals" => self.intervals = parse_value(value, key)?,
            "flex" => self.flex = parse_flex(value)?,
            "constrained" => self.constrained = parse_value(value, key)?,
            "tol" => self.tol = parse_value(value, key)?,
            "max_iter" => self.max_iter = parse_value(value, key)?,
            "seed" => self.seed = parse_value(value, key)?,
            "warm_start" => self.warm_start = parse_value(value, key)?,
            "out" => self.out = Some(PathBuf::from(value)),
            "format" => self.format = value.parse()?,
            "jobs" => self.jobs = parse_value(value, key)?,
            _ => return Err(CliError::Config(format!("unknown key '{key}'"))),
        }
        Ok(())
    }
}

/// Settings read from a config file. Sweep keys are kept apart from the
/// experiment so that `run` can reject them.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConfigFile {
    pub settings: Vec<(String, String)>,
    pub axis: Option<SweepAxis>,
    pub values: Option<Vec<f64>>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut out = ConfigFile::default();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |m: String| CliError::Config(format!("line {}: {m}", no + 1));
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                if !SECTIONS.contains(&name.trim()) {
                    return Err(err(format!("unknown section [{name}]")));
                }
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| err(format!("expected key = value, got '{line}'")))?;
            let (key, value) = (key.trim(), value.trim().trim_matches('"'));
            match key {
                "axis" => out.axis = Some(value.parse().map_err(|e: CliError| err(e.to_string()))?),
                "values" => out.values = Some(parse_values(value).map_err(|e| err(e.to_string()))?),
                _ => {
                    // check the key now so the error carries its line number
                    ExperimentConfig::default().set(key, value).map_err(|e| err(e.to_string()))?;
                    out.settings.push((key.to_string(), value.to_string()));
                }
            }
        }
        Ok(out)
    }

    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn apply(&self, config: &mut ExperimentConfig) -> Result<(), CliError> {
        for (k, v) in &self.settings {
            config.set(k, v)?;
        }
        Ok(())
    }
}

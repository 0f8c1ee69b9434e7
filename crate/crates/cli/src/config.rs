//! Run configuration and system sources.

use std::collections::BTreeMap;
use std::path::PathBuf;

use capdyn::consistency::RunParams;
use capdyn::sysdef::{fixture, parse_system, Detector, FixtureDefaults};
use capdyn::{Status, System};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Analyze,
    Decompose,
    Closure,
    Metric,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Analyze => "analyze",
            Command::Decompose => "decompose",
            Command::Closure => "closure",
            Command::Metric => "metric",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Source {
    Fixture(String),
    File(PathBuf),
}

/// How a report names its system; enough to rebuild it on replay.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceRecord {
    Fixture { name: String },
    File { path: String, text: String },
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub source: Source,
    pub epsilon: Option<f64>,
    pub sample: Option<usize>,
    pub seed: u64,
    /// Iterate budget shared by the closure and equicontinuity searches.
    pub budget: Option<u64>,
    pub span: Option<u64>,
    pub window_max: Option<u64>,
    pub out: Option<PathBuf>,
    pub force: bool,
}

impl RunConfig {
    pub fn new(command: Command, source: Source) -> Self {
        RunConfig {
            command,
            source,
            epsilon: None,
            sample: None,
            seed: 0,
            budget: None,
            span: None,
            window_max: None,
            out: None,
            force: false,
        }
    }
}

/// A system with its defaults and expectations.
#[derive(Clone, Debug)]
pub struct Resolved {
    pub system: System,
    pub defaults: FixtureDefaults,
    pub expected: BTreeMap<Detector, Status>,
    pub record: SourceRecord,
}

impl Resolved {
    pub fn from_record(record: &SourceRecord) -> Result<Self, CliError> {
        match record {
            SourceRecord::Fixture { name } => {
                let f = fixture(name).map_err(|e| CliError::Usage(e.to_string()))?;
                Ok(Resolved {
                    system: f.system,
                    defaults: f.defaults,
                    expected: f.expected,
                    record: record.clone(),
                })
            }
            SourceRecord::File { path, text } => {
                let def = parse_system(text).map_err(|e| CliError::Parse {
                    path: path.clone(),
                    error: e,
                })?;
                Ok(Resolved {
                    system: def.system,
                    defaults: FixtureDefaults::default(),
                    expected: BTreeMap::new(),
                    record: record.clone(),
                })
            }
        }
    }

    pub fn load(source: &Source) -> Result<Self, CliError> {
        let record = match source {
            Source::Fixture(name) => SourceRecord::Fixture { name: name.clone() },
            Source::File(path) => SourceRecord::File {
                path: path.display().to_string(),
                text: std::fs::read_to_string(path).map_err(|e| CliError::Io {
                    path: path.display().to_string(),
                    error: e.to_string(),
                })?,
            },
        };
        Self::from_record(&record)
    }

    /// Sample for the window search.
    pub fn sample(&self, params: &RunParams) -> Vec<capdyn::Point> {
        self.system
            .space()
            .sample(params.sample, params.seed, &params.defaults.region)
    }

    /// Sample for every other detector.
    pub fn structural_sample(&self, params: &RunParams) -> Vec<capdyn::Point> {
        let d = &params.defaults;
        let region = d.structural_region.as_ref().unwrap_or(&d.region);
        self.system.space().sample(params.sample, params.seed, region)
    }
}

fn positive<T: PartialOrd + Default + std::fmt::Display>(name: &str, v: Option<T>) -> Result<(), CliError> {
    match v {
        Some(x) if x <= T::default() => Err(CliError::Usage(format!("--{name} must be positive, got {x}"))),
        _ => Ok(()),
    }
}

/// Apply the user's overrides on top of the source defaults.
pub fn resolve_params(config: &RunConfig, defaults: &FixtureDefaults) -> Result<RunParams, CliError> {
    positive("epsilon", config.epsilon)?;
    if config.epsilon.is_some_and(|e| !e.is_finite()) {
        return Err(CliError::Usage("--epsilon must be finite".into()));
    }
    positive("sample", config.sample)?;
    positive("budget", config.budget)?;
    positive("span", config.span)?;
    positive("window-max", config.window_max)?;
    let mut d = defaults.clone();
    if let Some(e) = config.epsilon {
        d.epsilon = e;
    }
    if let Some(s) = config.sample {
        d.sample = s;
    }
    if let Some(b) = config.budget {
        d.closure_budget = b as usize;
        d.eq_budget = b;
        d.closure_n_max = b;
    }
    if let Some(s) = config.span {
        d.span = s;
    }
    if let Some(w) = config.window_max {
        d.window_max = w;
    }
    let mut params = RunParams::from_defaults(&d);
    params.seed = config.seed;
    Ok(params)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn budget_overrides_every_iterate_budget() {
        let mut c = RunConfig::new(Command::Analyze, Source::Fixture("disk_twist".into()));
        c.budget = Some(123);
        c.seed = 9;
        let p = resolve_params(&c, &FixtureDefaults::default()).unwrap();
        assert_eq!(
            (
                p.defaults.closure_budget,
                p.defaults.eq_budget,
                p.defaults.closure_n_max
            ),
            (123, 123, 123)
        );
        assert_eq!(p.seed, 9);
    }

    #[test]
    fn non_positive_values_are_usage_errors() {
        let mut c = RunConfig::new(Command::Analyze, Source::Fixture("disk_twist".into()));
        c.sample = Some(0);
        assert!(matches!(
            resolve_params(&c, &FixtureDefaults::default()),
            Err(CliError::Usage(_))
        ));
    }
}

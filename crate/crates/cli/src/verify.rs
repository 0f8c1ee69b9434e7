//! Replay of every witness stored in a report.

use std::path::Path;

use capdyn::almost_period::REPLAY_TOL;
use capdyn::compactify::extend_map;
use capdyn::Witness;
use serde_json::Value;

use crate::config::{Resolved, SourceRecord};
use crate::CliError;

/// Suffix of detectors that run in the chordal metric.
const CHORDAL: &str = "@chordal";

#[derive(Clone, Debug, PartialEq)]
pub struct Replay {
    /// JSON path of the witness.
    pub location: String,
    /// Largest discrepancy, or the reason replay failed.
    pub outcome: Result<f64, String>,
}

impl Replay {
    pub fn passed(&self) -> bool {
        matches!(self.outcome, Ok(d) if d <= REPLAY_TOL)
    }
}

fn collect(value: &Value, path: &str, out: &mut Vec<(String, Value)>) {
    match value {
        Value::Object(map) => {
            for (k, v) in map {
                let here = format!("{path}/{k}");
                if k == "witness" && !v.is_null() {
                    out.push((here.clone(), v.clone()));
                }
                collect(v, &here, out);
            }
        }
        Value::Array(items) => {
            for (i, v) in items.iter().enumerate() {
                collect(v, &format!("{path}/{i}"), out);
            }
        }
        _ => {}
    }
}

/// Rebuild the report's system and replay each witness on it.
pub fn verify_report_text(text: &str) -> Result<Vec<Replay>, CliError> {
    let report: Value = serde_json::from_str(text).map_err(|e| CliError::Usage(format!("malformed report: {e}")))?;
    let source = report
        .get("source")
        .ok_or_else(|| CliError::Usage("report has no `source`".into()))?;
    let record: SourceRecord =
        serde_json::from_value(source.clone()).map_err(|e| CliError::Usage(format!("malformed source: {e}")))?;
    let resolved = Resolved::from_record(&record)?;
    // Chordal verdicts live on the extension of the map to the sphere.
    let sphere = extend_map(&resolved.system).ok();
    let mut found = Vec::new();
    collect(&report, "", &mut found);
    Ok(found
        .into_iter()
        .map(|(location, raw)| {
            let system = if location.contains(CHORDAL) {
                sphere.as_ref()
            } else {
                Some(&resolved.system)
            };
            let outcome = serde_json::from_value::<Witness>(raw)
                .map_err(|e| format!("malformed witness: {e}"))
                .and_then(|w| {
                    let sys = system.ok_or("chordal witness for a non-planar system")?;
                    w.replay(sys).map_err(|e| e.to_string())
                });
            Replay { location, outcome }
        })
        .collect())
}

pub fn verify_report(path: &Path) -> Result<Vec<Replay>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
        path: path.display().to_string(),
        error: e.to_string(),
    })?;
    verify_report_text(&text)
}

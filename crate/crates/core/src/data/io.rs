//! File persistence: tuple datasets (JSON) and scoring/learning reports
//! (JSON). Loading validates every tuple and rejects the file when any
//! error-severity diagnostic is present.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{validate_tuple, DataTuple, Severity};
use crate::error::Error;

/// Reads a JSON array of tuples, then validates each one. Warnings are
/// tolerated; any error-severity diagnostic fails the load with the full
/// list of findings.
pub fn load_tuples(path: &Path) -> Result<Vec<DataTuple>, Error> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let tuples: Vec<DataTuple> = serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.display().to_string(),
        detail: format!("line {} column {}: {e}", e.line(), e.column()),
    })?;

    let mut errors = Vec::new();
    for (i, t) in tuples.iter().enumerate() {
        for mut d in validate_tuple(t) {
            if d.severity == Severity::Error {
                d.message = format!("tuple {i}: {}", d.message);
                errors.push(d);
            }
        }
    }
    if !errors.is_empty() {
        return Err(Error::Validation {
            path: path.display().to_string(),
            diagnostics: errors,
        });
    }
    Ok(tuples)
}

pub fn save_tuples(path: &Path, tuples: &[DataTuple]) -> Result<(), Error> {
    let mut text = serde_json::to_string_pretty(tuples).expect("tuple serialization is total");
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Hyperparameters echoed into every report so a run can be reproduced
/// from its output alone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub precision_c: f64,
    pub temperature: f64,
    pub learning_rate: f64,
    pub epochs: usize,
    pub score_mode: String,
}

/// Outcome of a scoring or learning run. `beta_star` and `social_score`
/// are null for score-only runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub attribute: String,
    /// Mean fairness score per notion over the input tuples, ordered
    /// (independence, separation, sufficiency).
    pub phi: [f64; 3],
    pub beta_star: Option<[f64; 3]>,
    pub social_score: Option<u8>,
    pub config: RunConfig,
    pub seed: u64,
}

pub fn write_report(path: &Path, report: &Report) -> Result<(), Error> {
    let mut text = serde_json::to_string_pretty(report).expect("report serialization is total");
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_report(path: &Path) -> Result<Report, Error> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.display().to_string(),
        detail: format!("line {} column {}: {e}", e.line(), e.column()),
    })
}

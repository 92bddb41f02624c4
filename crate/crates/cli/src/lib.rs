//! Command-line front end for the fairness-feedback pipeline: score tuple
//! datasets, synthesize data, simulate participant feedback, learn social
//! preference weights, sweep experiment grids, and collect plot data.

pub mod args;
pub mod commands;
pub mod config;
pub mod experiment;
pub mod feedback_csv;

/// A failed command, split by exit code: bad invocations and unusable
/// inputs exit 2, failures while computing or writing results exit 1.
#[derive(Debug, PartialEq, Eq)]
pub enum Failure {
    Usage(String),
    Runtime(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Runtime(_) => 1,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Runtime(m) => m,
        }
    }
}

pub fn usage(detail: impl std::fmt::Display) -> Failure {
    Failure::Usage(detail.to_string())
}

pub fn runtime(detail: impl std::fmt::Display) -> Failure {
    Failure::Runtime(detail.to_string())
}

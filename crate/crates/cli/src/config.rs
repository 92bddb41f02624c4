//! Option resolution: explicit flag, then config file, then default.

use std::fs;

use serde::Deserialize;

use saff_core::data::RunConfig;
use saff_core::feedback::{FeedbackParams, ScoreMode};
use saff_core::saff::LearnerConfig;

use crate::args::Cli;
use crate::{usage, Failure};

/// Optional global options read from --config. Field names match the
/// flags; both hyphenated and underscored spellings are accepted.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub seed: Option<u64>,
    #[serde(alias = "precision-c")]
    pub precision_c: Option<f64>,
    pub temperature: Option<f64>,
    #[serde(alias = "learning-rate")]
    pub learning_rate: Option<f64>,
    pub epochs: Option<usize>,
    #[serde(alias = "score-mode")]
    pub score_mode: Option<ScoreMode>,
}

/// Fully resolved global options.
#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub seed: u64,
    /// Whether the seed came from a flag or config file rather than the
    /// default; commands with their own seed source (synth) only defer
    /// to an explicit one.
    pub seed_explicit: bool,
    pub learning_rate: f64,
    pub epochs: usize,
    pub feedback: FeedbackParams,
}

impl Settings {
    pub fn learner_config(&self) -> LearnerConfig {
        LearnerConfig {
            learning_rate: self.learning_rate,
            epochs: self.epochs,
            feedback: self.feedback,
            seed: self.seed,
        }
    }

    /// The hyperparameter block echoed into reports.
    pub fn run_config(&self) -> RunConfig {
        RunConfig {
            precision_c: self.feedback.precision,
            temperature: self.feedback.temperature,
            learning_rate: self.learning_rate,
            epochs: self.epochs,
            score_mode: self.feedback.score_mode.to_string(),
        }
    }
}

pub fn resolve(cli: &Cli) -> Result<Settings, Failure> {
    let file = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| usage(format!("config {}: {e}", path.display())))?;
            serde_json::from_str::<ConfigFile>(&text).map_err(|e| {
                usage(format!(
                    "config {}: line {} column {}: {e}",
                    path.display(),
                    e.line(),
                    e.column()
                ))
            })?
        }
        None => ConfigFile::default(),
    };

    let defaults = FeedbackParams::default();
    let seed = cli.seed.or(file.seed);
    let settings = Settings {
        seed: seed.unwrap_or(0),
        seed_explicit: seed.is_some(),
        learning_rate: cli.learning_rate.or(file.learning_rate).unwrap_or(0.5),
        epochs: cli.epochs.or(file.epochs).unwrap_or(100),
        feedback: FeedbackParams {
            precision: cli.precision_c.or(file.precision_c).unwrap_or(defaults.precision),
            temperature: cli
                .temperature
                .or(file.temperature)
                .unwrap_or(defaults.temperature),
            psi_clamp: defaults.psi_clamp,
            score_mode: cli
                .score_mode
                .or(file.score_mode)
                .unwrap_or(defaults.score_mode),
        },
    };

    settings.feedback.validate().map_err(usage)?;
    if !settings.learning_rate.is_finite() || settings.learning_rate <= 0.0 {
        return Err(usage(format!(
            "learning rate {} must be finite and positive",
            settings.learning_rate
        )));
    }
    Ok(settings)
}

//! Argument declarations. Global flags may appear before or after the
//! subcommand; values resolve as flag, then config file, then default.

use std::path::PathBuf;

use clap::{ArgGroup, Args, Parser, Subcommand};

use saff_core::data::Attribute;
use saff_core::feedback::{PopulationScenario, ScoreMode};

pub fn parse_attribute(s: &str) -> Result<Attribute, String> {
    s.parse()
}

pub fn parse_scenario(s: &str) -> Result<PopulationScenario, String> {
    s.parse()
}

pub fn parse_score_mode(s: &str) -> Result<ScoreMode, String> {
    match s.to_ascii_lowercase().as_str() {
        "argmax" => Ok(ScoreMode::Argmax),
        "sampled" => Ok(ScoreMode::Sampled),
        other => Err(format!(
            "unknown score mode {other:?}; expected argmax or sampled"
        )),
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "saff",
    version,
    about = "Fairness scoring and social preference learning for organ-offer predictions"
)]
pub struct Cli {
    /// JSON file holding any of the global options by the same names;
    /// explicit flags override file values.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Base seed for every random stream (default 0).
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Perception precision c; larger values concentrate perceived
    /// fairness around the true aggregate (default 2).
    #[arg(long, global = true, value_name = "C")]
    pub precision_c: Option<f64>,

    /// Choice sharpness of the feedback model (default 2).
    #[arg(long, global = true)]
    pub temperature: Option<f64>,

    /// Gradient step size (default 0.5).
    #[arg(long, global = true)]
    pub learning_rate: Option<f64>,

    /// Training epochs (default 100).
    #[arg(long, global = true)]
    pub epochs: Option<usize>,

    /// How simulated participants report: argmax or sampled (default
    /// argmax).
    #[arg(long, global = true, value_name = "MODE", value_parser = parse_score_mode)]
    pub score_mode: Option<ScoreMode>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Score every tuple and report the mean fairness per notion.
    Score(ScoreArgs),
    /// Generate a synthetic tuple dataset.
    Synth(SynthArgs),
    /// Simulate a participant population's Likert feedback.
    Simulate(SimulateArgs),
    /// Learn social preference weights from feedback.
    Learn(LearnArgs),
    /// Sweep a (participants, tuples, attribute) grid and average
    /// convergence traces across iterations.
    Experiment(ExperimentArgs),
    /// Collect experiment traces into one long-format CSV for plotting.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    /// Tuple dataset (JSON array).
    #[arg(long, short = 'i')]
    pub input: PathBuf,

    /// Protected attribute: gender, race, or age.
    #[arg(long, short = 'a', value_parser = parse_attribute)]
    pub attribute: Attribute,

    /// Report destination (JSON).
    #[arg(long, short = 'o')]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Generator spec (JSON); missing fields take the documented
    /// defaults. Omit the flag to use the default spec unchanged.
    #[arg(long, value_name = "PATH")]
    pub spec: Option<PathBuf>,

    /// Tuple dataset destination (JSON).
    #[arg(long, short = 'o')]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Tuple dataset (JSON array).
    #[arg(long, short = 'i')]
    pub input: PathBuf,

    /// Protected attribute: gender, race, or age.
    #[arg(long, short = 'a', value_parser = parse_attribute)]
    pub attribute: Attribute,

    /// Number of simulated participants.
    #[arg(long, short = 'n', default_value_t = 50)]
    pub participants: usize,

    /// Population shape: uniform_random, identical_split, or
    /// fixed_atomic:<notion>.
    #[arg(long, value_parser = parse_scenario, default_value = "uniform_random")]
    pub scenario: PopulationScenario,

    /// Feedback destination (CSV: participant,tuple,score).
    #[arg(long, short = 'o')]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("feedback_source").required(true).args(["feedback", "simulate"])))]
pub struct LearnArgs {
    /// Tuple dataset (JSON array).
    #[arg(long, short = 'i')]
    pub input: PathBuf,

    /// Protected attribute: gender, race, or age.
    #[arg(long, short = 'a', value_parser = parse_attribute)]
    pub attribute: Attribute,

    /// Feedback CSV (participant,tuple,score) covering every tuple of
    /// the input.
    #[arg(long, value_name = "PATH")]
    pub feedback: Option<PathBuf>,

    /// Simulate the population and its feedback instead of reading a
    /// feedback file.
    #[arg(long)]
    pub simulate: bool,

    /// Number of simulated participants.
    #[arg(long, short = 'n', default_value_t = 50, requires = "simulate")]
    pub participants: usize,

    /// Population shape for --simulate: uniform_random,
    /// identical_split, or fixed_atomic:<notion>.
    #[arg(
        long,
        value_parser = parse_scenario,
        default_value = "uniform_random",
        requires = "simulate"
    )]
    pub scenario: PopulationScenario,

    /// Convergence trace destination (CSV); omit to skip the trace.
    #[arg(long, value_name = "PATH")]
    pub trace: Option<PathBuf>,

    /// Report destination (JSON).
    #[arg(long, short = 'o')]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    /// Tuple pool to sample from (JSON array); tuples an attribute
    /// cannot score are left out of that attribute's cells. Omit to
    /// generate a 200-tuple unbiased synthetic pool from the run seed.
    #[arg(long, short = 'i', value_name = "PATH")]
    pub input: Option<PathBuf>,

    /// Participant counts to sweep, comma separated.
    #[arg(long, value_delimiter = ',', default_values_t = [25, 50, 75, 100])]
    pub participants: Vec<usize>,

    /// Tuple counts to sweep, comma separated. Each iteration samples
    /// that many tuples from the pool without replacement, or with
    /// replacement when the pool holds fewer.
    #[arg(long, value_delimiter = ',', default_values_t = [5, 10, 15])]
    pub tuples: Vec<usize>,

    /// Independent draws averaged per grid cell.
    #[arg(long, default_value_t = 100)]
    pub iterations: usize,

    /// Attributes to sweep, comma separated.
    #[arg(
        long,
        value_delimiter = ',',
        value_parser = parse_attribute,
        default_values_t = [Attribute::Gender, Attribute::Race, Attribute::Age]
    )]
    pub attributes: Vec<Attribute>,

    /// Population shape: uniform_random, identical_split, or
    /// fixed_atomic:<notion>.
    #[arg(long, value_parser = parse_scenario, default_value = "uniform_random")]
    pub scenario: PopulationScenario,

    /// Directory receiving one averaged trace per cell plus summary.csv.
    #[arg(long, short = 'o', value_name = "DIR")]
    pub out_dir: PathBuf,

    /// Run iterations sequentially instead of in parallel.
    #[arg(long)]
    pub serial: bool,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Directory holding trace_<attribute>_N<n>_M<m>.csv files.
    #[arg(long, short = 'd', value_name = "DIR")]
    pub trace_dir: PathBuf,

    /// Destination CSV; stdout when omitted.
    #[arg(long, short = 'o', value_name = "PATH")]
    pub output: Option<PathBuf>,
}

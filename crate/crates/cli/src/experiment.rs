//! Grid sweeps: for every (attribute, participants, tuples) cell, run
//! independent iterations (tuple sample, population, feedback, learning)
//! and average the convergence traces pointwise.
//!
//! Every iteration owns a stream keyed by (seed, cell, iteration), so
//! results do not depend on execution order and parallel runs are
//! byte-identical to serial ones.

use rand::Rng;
use rayon::prelude::*;

use saff_core::data::{Attribute, DataTuple};
use saff_core::error::Error;
use saff_core::fairness::{fairness_scores, GroupSpec};
use saff_core::feedback::{generate_population, simulate_feedback, PopulationScenario};
use saff_core::saff::{saff_learn, LearnerConfig, RegretTrace};
use saff_core::stream::{stream_key, substream, tags};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExperimentGrid {
    pub participant_counts: Vec<usize>,
    pub tuple_counts: Vec<usize>,
    pub iterations: usize,
    pub attributes: Vec<Attribute>,
    pub scenario: PopulationScenario,
    pub seed: u64,
}

/// One grid cell. Iteration streams are keyed by the cell's contents, so
/// a cell keeps its results when the surrounding grid changes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Cell {
    pub attribute: Attribute,
    pub participants: usize,
    pub tuples: usize,
}

impl Cell {
    pub fn trace_filename(&self) -> String {
        format!(
            "trace_{}_N{}_M{}.csv",
            self.attribute, self.participants, self.tuples
        )
    }
}

/// Inverse of [`Cell::trace_filename`]; None for filenames it never
/// produces.
pub fn parse_trace_filename(name: &str) -> Option<Cell> {
    let stem = name.strip_prefix("trace_")?.strip_suffix(".csv")?;
    let mut parts = stem.split('_');
    let attribute: Attribute = parts.next()?.parse().ok()?;
    let participants = parts.next()?.strip_prefix('N')?.parse().ok()?;
    let tuples = parts.next()?.strip_prefix('M')?.parse().ok()?;
    if parts.next().is_some() {
        return None;
    }
    Some(Cell {
        attribute,
        participants,
        tuples,
    })
}

impl ExperimentGrid {
    pub fn validate(&self) -> Result<(), String> {
        if self.participant_counts.is_empty() {
            return Err("participant counts must not be empty".into());
        }
        if self.tuple_counts.is_empty() {
            return Err("tuple counts must not be empty".into());
        }
        if self.attributes.is_empty() {
            return Err("attributes must not be empty".into());
        }
        if let Some(n) = self.participant_counts.iter().find(|&&n| n == 0) {
            return Err(format!("participant count {n} must be at least 1"));
        }
        if let Some(m) = self.tuple_counts.iter().find(|&&m| m == 0) {
            return Err(format!("tuple count {m} must be at least 1"));
        }
        if self.iterations == 0 {
            return Err("iterations must be at least 1".into());
        }
        Ok(())
    }

    /// Cells in canonical order: attribute (gender, race, age), then
    /// participants ascending, then tuples ascending; duplicates dropped.
    pub fn cells(&self) -> Vec<Cell> {
        let mut ns = self.participant_counts.clone();
        ns.sort_unstable();
        ns.dedup();
        let mut ms = self.tuple_counts.clone();
        ms.sort_unstable();
        ms.dedup();
        let mut cells = Vec::with_capacity(self.attributes.len() * ns.len() * ms.len());
        for attribute in Attribute::ALL {
            if !self.attributes.contains(&attribute) {
                continue;
            }
            for &participants in &ns {
                for &tuples in &ms {
                    cells.push(Cell {
                        attribute,
                        participants,
                        tuples,
                    });
                }
            }
        }
        cells
    }
}

/// `tuples` samples from the pool: distinct ones when the pool is large
/// enough, otherwise drawn with replacement.
fn sample_tuples(pool: &[DataTuple], tuples: usize, rng: &mut impl Rng) -> Vec<DataTuple> {
    if pool.len() >= tuples {
        let mut idx: Vec<usize> = (0..pool.len()).collect();
        for i in 0..tuples {
            let j = rng.random_range(i..idx.len());
            idx.swap(i, j);
        }
        idx[..tuples].iter().map(|&i| pool[i].clone()).collect()
    } else {
        (0..tuples)
            .map(|_| pool[rng.random_range(0..pool.len())].clone())
            .collect()
    }
}

fn run_iteration(
    pool: &[DataTuple],
    cell: Cell,
    grid: &ExperimentGrid,
    base: &LearnerConfig,
    iteration: u64,
) -> Result<RegretTrace, Error> {
    let attr_index = Attribute::ALL
        .iter()
        .position(|a| *a == cell.attribute)
        .expect("every attribute appears in ALL") as u64;
    let iteration_seed = stream_key(
        grid.seed,
        &[
            tags::CELL,
            attr_index,
            cell.participants as u64,
            cell.tuples as u64,
            iteration,
        ],
    );

    let rng = &mut substream(iteration_seed, &[tags::SAMPLER]);
    let sample = sample_tuples(pool, cell.tuples, rng);
    let spec = GroupSpec::new(cell.attribute);
    let population = generate_population(cell.participants, grid.scenario, iteration_seed);
    let feedback = simulate_feedback(&population, &sample, &spec, &base.feedback, iteration_seed)?;

    let config = LearnerConfig {
        seed: iteration_seed,
        ..*base
    };
    let (_, trace) = saff_learn(&feedback, &sample, &spec, &config)?;
    Ok(trace)
}

/// Pointwise average of the cell's iteration traces. Tuples the cell's
/// attribute cannot score are left out of the sampling pool, since every
/// iteration must score its whole sample. Iterations run in parallel
/// unless `serial`; either way the result is identical.
pub fn run_cell(
    pool: &[DataTuple],
    cell: Cell,
    grid: &ExperimentGrid,
    base: &LearnerConfig,
    serial: bool,
) -> Result<RegretTrace, Error> {
    let spec = GroupSpec::new(cell.attribute);
    let pool: Vec<DataTuple> = pool
        .iter()
        .filter(|t| fairness_scores(t, &spec).is_ok())
        .cloned()
        .collect();
    if pool.is_empty() {
        return Err(Error::Spec(format!(
            "no tuple in the pool is scoreable for {}",
            cell.attribute
        )));
    }
    let pool = &pool[..];
    let iteration = |i: u64| run_iteration(pool, cell, grid, base, i);
    let outcomes: Vec<Result<RegretTrace, Error>> = if serial {
        (0..grid.iterations as u64).map(iteration).collect()
    } else {
        (0..grid.iterations as u64)
            .into_par_iter()
            .map(iteration)
            .collect()
    };
    // The scan keeps the surfaced error independent of thread scheduling.
    let mut traces = Vec::with_capacity(outcomes.len());
    for outcome in outcomes {
        traces.push(outcome?);
    }
    RegretTrace::average(&traces)
}

pub const SUMMARY_HEADER: &str = "attribute,N,M,avg_initial_regret,avg_final_regret,\
                                  beta_independence,beta_separation,beta_sufficiency";

/// One summary line for a completed cell, from its averaged trace.
pub fn summary_row(cell: Cell, averaged: &RegretTrace) -> String {
    let first = averaged.entries.first().expect("traces are never empty");
    let last = averaged.final_entry().expect("traces are never empty");
    let [b1, b2, b3] = last.beta.weights();
    format!(
        "{},{},{},{},{},{b1},{b2},{b3}",
        cell.attribute, cell.participants, cell.tuples, first.hard_regret, last.hard_regret
    )
}

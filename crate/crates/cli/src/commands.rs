//! Subcommand implementations. Input files that fail to load or validate
//! are usage failures; everything after loading is a runtime failure.

use std::fs;
use std::io::Write;
use std::path::PathBuf;

use saff_core::data::{
    load_tuples, save_tuples, synthesize_dataset, write_report, Report, SynthSpec,
};
use saff_core::fairness::{fairness_scores, GroupSpec};
use saff_core::feedback::{
    generate_population, normalize_scores, simulate_feedback, LikertScore, LIKERT_LEVELS,
};
use saff_core::saff::{read_trace, saff_learn, social_scores, write_trace};

use crate::args::{
    Cli, Command, ExperimentArgs, LearnArgs, ReportArgs, ScoreArgs, SimulateArgs, SynthArgs,
};
use crate::config::{self, Settings};
use crate::experiment::{parse_trace_filename, run_cell, summary_row, ExperimentGrid, SUMMARY_HEADER};
use crate::feedback_csv::{read_feedback, write_feedback};
use crate::{runtime, usage, Failure};

pub fn dispatch(cli: &Cli) -> Result<(), Failure> {
    let settings = config::resolve(cli)?;
    match &cli.command {
        Command::Score(args) => cmd_score(args, &settings),
        Command::Synth(args) => cmd_synth(args, &settings),
        Command::Simulate(args) => cmd_simulate(args, &settings),
        Command::Learn(args) => cmd_learn(args, &settings),
        Command::Experiment(args) => cmd_experiment(args, &settings),
        Command::Report(args) => cmd_report(args),
    }
}

fn load_nonempty(path: &PathBuf) -> Result<Vec<saff_core::data::DataTuple>, Failure> {
    let tuples = load_tuples(path).map_err(usage)?;
    if tuples.is_empty() {
        return Err(usage(format!("{}: holds no tuples", path.display())));
    }
    Ok(tuples)
}

fn cmd_score(args: &ScoreArgs, settings: &Settings) -> Result<(), Failure> {
    let tuples = load_nonempty(&args.input)?;
    let spec = GroupSpec::new(args.attribute);

    let mut sums = [0.0; 3];
    let mut scored = 0usize;
    for (i, tuple) in tuples.iter().enumerate() {
        match fairness_scores(tuple, &spec) {
            Ok(scores) => {
                for (acc, v) in sums.iter_mut().zip(scores.as_array()) {
                    *acc += v;
                }
                scored += 1;
            }
            Err(e) => eprintln!("warning: tuple {i} skipped: {e}"),
        }
    }
    if scored == 0 {
        return Err(runtime(format!(
            "none of the {} tuples could be scored for {}",
            tuples.len(),
            args.attribute
        )));
    }

    let report = Report {
        attribute: args.attribute.to_string(),
        phi: sums.map(|v| v / scored as f64),
        beta_star: None,
        social_score: None,
        config: settings.run_config(),
        seed: settings.seed,
    };
    write_report(&args.output, &report).map_err(runtime)?;
    println!(
        "scored {scored} of {} tuples; wrote {}",
        tuples.len(),
        args.output.display()
    );
    Ok(())
}

fn cmd_synth(args: &SynthArgs, settings: &Settings) -> Result<(), Failure> {
    let mut spec = match &args.spec {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| usage(format!("{}: {e}", path.display())))?;
            serde_json::from_str::<SynthSpec>(&text).map_err(|e| {
                usage(format!(
                    "{}: line {} column {}: {e}",
                    path.display(),
                    e.line(),
                    e.column()
                ))
            })?
        }
        None => SynthSpec::default(),
    };
    if settings.seed_explicit {
        spec.seed = settings.seed;
    }

    let problems = spec.validate();
    if !problems.is_empty() {
        return Err(usage(problems.join("; ")));
    }
    let tuples = synthesize_dataset(&spec).map_err(runtime)?;
    save_tuples(&args.output, &tuples).map_err(runtime)?;
    println!("wrote {} tuples to {}", tuples.len(), args.output.display());
    Ok(())
}

fn cmd_simulate(args: &SimulateArgs, settings: &Settings) -> Result<(), Failure> {
    if args.participants == 0 {
        return Err(usage("participants must be at least 1"));
    }
    let tuples = load_nonempty(&args.input)?;
    let spec = GroupSpec::new(args.attribute);
    let population = generate_population(args.participants, args.scenario, settings.seed);
    let scores = simulate_feedback(&population, &tuples, &spec, &settings.feedback, settings.seed)
        .map_err(runtime)?;
    write_feedback(&args.output, &scores).map_err(Failure::Runtime)?;
    println!(
        "wrote {}x{} scores to {}",
        scores.len(),
        tuples.len(),
        args.output.display()
    );
    Ok(())
}

/// The most frequent score, lowest first on ties.
fn modal_score(scores: &[LikertScore]) -> LikertScore {
    let mut counts = [0usize; LIKERT_LEVELS];
    for s in scores {
        counts[usize::from(s.value()) - 1] += 1;
    }
    let best = (0..LIKERT_LEVELS)
        .max_by_key(|&i| (counts[i], std::cmp::Reverse(i)))
        .expect("seven levels are never empty");
    LikertScore::new(best as u8 + 1).expect("index 0..7 maps into 1..=7")
}

fn cmd_learn(args: &LearnArgs, settings: &Settings) -> Result<(), Failure> {
    let tuples = load_nonempty(&args.input)?;
    let spec = GroupSpec::new(args.attribute);

    let scores = match &args.feedback {
        Some(path) => read_feedback(path, tuples.len()).map_err(Failure::Usage)?,
        None => {
            if args.participants == 0 {
                return Err(usage("participants must be at least 1"));
            }
            let population =
                generate_population(args.participants, args.scenario, settings.seed);
            simulate_feedback(&population, &tuples, &spec, &settings.feedback, settings.seed)
                .map_err(runtime)?
        }
    };

    let config = settings.learner_config();
    let (beta_star, trace) = saff_learn(&scores, &tuples, &spec, &config).map_err(runtime)?;
    if let Some(path) = &args.trace {
        write_trace(path, &trace).map_err(runtime)?;
    }

    // saff_learn already scored every tuple, so these calls cannot fail.
    let mut sums = [0.0; 3];
    let mut phibar = Vec::with_capacity(tuples.len());
    for tuple in &tuples {
        let scores = fairness_scores(tuple, &spec).map_err(runtime)?;
        for (acc, v) in sums.iter_mut().zip(scores.as_array()) {
            *acc += v;
        }
        phibar.push(normalize_scores(&scores));
    }
    let social = social_scores(&phibar, &beta_star, &settings.feedback).map_err(runtime)?;
    let social_score = modal_score(&social);

    let report = Report {
        attribute: args.attribute.to_string(),
        phi: sums.map(|v| v / tuples.len() as f64),
        beta_star: Some(beta_star.weights()),
        social_score: Some(social_score.value()),
        config: settings.run_config(),
        seed: settings.seed,
    };
    write_report(&args.output, &report).map_err(runtime)?;

    let last = trace.final_entry().expect("traces are never empty");
    let [b1, b2, b3] = beta_star.weights();
    println!(
        "weights [{b1:.4}, {b2:.4}, {b3:.4}], social score {social_score}, \
         final regret {:.4}; wrote {}",
        last.hard_regret,
        args.output.display()
    );
    Ok(())
}

fn cmd_experiment(args: &ExperimentArgs, settings: &Settings) -> Result<(), Failure> {
    let pool = match &args.input {
        Some(path) => load_nonempty(path)?,
        None => synthesize_dataset(&SynthSpec {
            seed: settings.seed,
            ..SynthSpec::default()
        })
        .map_err(runtime)?,
    };

    let grid = ExperimentGrid {
        participant_counts: args.participants.clone(),
        tuple_counts: args.tuples.clone(),
        iterations: args.iterations,
        attributes: args.attributes.clone(),
        scenario: args.scenario,
        seed: settings.seed,
    };
    grid.validate().map_err(Failure::Usage)?;

    fs::create_dir_all(&args.out_dir)
        .map_err(|e| runtime(format!("{}: {e}", args.out_dir.display())))?;
    let summary_path = args.out_dir.join("summary.csv");
    let mut summary = fs::File::create(&summary_path)
        .map_err(|e| runtime(format!("{}: {e}", summary_path.display())))?;
    writeln!(summary, "{SUMMARY_HEADER}")
        .and_then(|()| summary.flush())
        .map_err(|e| runtime(format!("{}: {e}", summary_path.display())))?;

    let base = settings.learner_config();
    let cells = grid.cells();
    for cell in &cells {
        let describe = format!(
            "{} N={} M={}",
            cell.attribute, cell.participants, cell.tuples
        );
        let averaged = run_cell(&pool, *cell, &grid, &base, args.serial)
            .map_err(|e| runtime(format!("cell {describe}: {e}")))?;
        write_trace(&args.out_dir.join(cell.trace_filename()), &averaged).map_err(runtime)?;
        writeln!(summary, "{}", summary_row(*cell, &averaged))
            .and_then(|()| summary.flush())
            .map_err(|e| runtime(format!("{}: {e}", summary_path.display())))?;
        let last = averaged.final_entry().expect("traces are never empty");
        eprintln!(
            "cell {describe}: regret {:.4} -> {:.4}",
            averaged.entries[0].hard_regret, last.hard_regret
        );
    }
    println!(
        "wrote {} traces and summary.csv to {}",
        cells.len(),
        args.out_dir.display()
    );
    Ok(())
}

fn cmd_report(args: &ReportArgs) -> Result<(), Failure> {
    let entries = fs::read_dir(&args.trace_dir)
        .map_err(|e| usage(format!("{}: {e}", args.trace_dir.display())))?;
    let mut found = Vec::new();
    for entry in entries {
        let entry =
            entry.map_err(|e| runtime(format!("{}: {e}", args.trace_dir.display())))?;
        let name = entry.file_name();
        if let Some(cell) = name.to_str().and_then(parse_trace_filename) {
            found.push((cell, entry.path()));
        }
    }
    found.sort_by_key(|(cell, _)| {
        let attr = saff_core::data::Attribute::ALL
            .iter()
            .position(|a| *a == cell.attribute);
        (attr, cell.participants, cell.tuples)
    });

    let mut out = String::from("attribute,N,M,epoch,avg_regret\n");
    let mut loaded = 0usize;
    let mut failed = 0usize;
    for (cell, path) in found {
        match read_trace(&path) {
            Ok(trace) => {
                loaded += 1;
                for (epoch, entry) in trace.entries.iter().enumerate() {
                    out.push_str(&format!(
                        "{},{},{},{epoch},{}\n",
                        cell.attribute, cell.participants, cell.tuples, entry.hard_regret
                    ));
                }
            }
            Err(e) => {
                eprintln!("skipping {}: {e}", path.display());
                failed += 1;
            }
        }
    }
    if loaded == 0 {
        return Err(runtime(format!(
            "no traces found in {}",
            args.trace_dir.display()
        )));
    }

    match &args.output {
        Some(path) => {
            fs::write(path, &out).map_err(|e| runtime(format!("{}: {e}", path.display())))?;
            println!("wrote {loaded} series to {}", path.display());
        }
        None => {
            std::io::stdout()
                .write_all(out.as_bytes())
                .map_err(|e| runtime(format!("stdout: {e}")))?;
        }
    }
    if failed > 0 {
        return Err(runtime(format!("{failed} trace file(s) could not be read")));
    }
    Ok(())
}

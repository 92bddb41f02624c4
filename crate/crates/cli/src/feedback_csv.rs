//! Feedback matrices as CSV: `participant,tuple,score` with zero-based
//! indices and scores 1..=7. A file is valid only when every
//! (participant, tuple) pair below its maxima appears exactly once.

use std::fs;
use std::path::Path;

use saff_core::feedback::LikertScore;

pub const FEEDBACK_HEADER: &str = "participant,tuple,score";

pub fn write_feedback(path: &Path, scores: &[Vec<LikertScore>]) -> Result<(), String> {
    let mut out = String::from(FEEDBACK_HEADER);
    out.push('\n');
    for (n, row) in scores.iter().enumerate() {
        for (m, score) in row.iter().enumerate() {
            out.push_str(&format!("{n},{m},{score}\n"));
        }
    }
    fs::write(path, out).map_err(|e| format!("{}: {e}", path.display()))
}

/// Reads a feedback matrix covering exactly `tuples` tuples. Row order is
/// free; completeness is not.
pub fn read_feedback(path: &Path, tuples: usize) -> Result<Vec<Vec<LikertScore>>, String> {
    let fail = |line: usize, detail: &str| {
        Err(format!("{}: line {}: {detail}", path.display(), line + 1))
    };
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header == FEEDBACK_HEADER => {}
        Some((i, header)) => {
            return fail(i, &format!("expected header {FEEDBACK_HEADER:?}, got {header:?}"));
        }
        None => return fail(0, "empty feedback file"),
    }

    let mut cells: Vec<Vec<Option<LikertScore>>> = Vec::new();
    for (i, line) in lines {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 {
            return fail(i, &format!("expected 3 fields, got {}", fields.len()));
        }
        let participant: usize = match fields[0].parse() {
            Ok(v) => v,
            Err(e) => return fail(i, &format!("participant {:?}: {e}", fields[0])),
        };
        let tuple: usize = match fields[1].parse() {
            Ok(v) => v,
            Err(e) => return fail(i, &format!("tuple {:?}: {e}", fields[1])),
        };
        let score = match fields[2].parse::<u8>().map_err(|e| e.to_string()) {
            Ok(v) => match LikertScore::new(v) {
                Ok(s) => s,
                Err(e) => return fail(i, &e.to_string()),
            },
            Err(e) => return fail(i, &format!("score {:?}: {e}", fields[2])),
        };
        if tuple >= tuples {
            return fail(
                i,
                &format!("tuple index {tuple} outside the dataset's 0..{tuples}"),
            );
        }
        if participant >= cells.len() {
            cells.resize(participant + 1, vec![None; tuples]);
        }
        if cells[participant][tuple].replace(score).is_some() {
            return fail(i, &format!("duplicate entry for participant {participant}, tuple {tuple}"));
        }
    }

    if cells.is_empty() {
        return Err(format!("{}: no feedback rows", path.display()));
    }
    cells
        .into_iter()
        .enumerate()
        .map(|(n, row)| {
            row.into_iter()
                .enumerate()
                .map(|(m, cell)| {
                    cell.ok_or_else(|| {
                        format!(
                            "{}: missing entry for participant {n}, tuple {m}",
                            path.display()
                        )
                    })
                })
                .collect()
        })
        .collect()
}

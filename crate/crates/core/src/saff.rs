//! Learning social preference weights from Likert feedback.
//!
//! Given a panel's ratings of a tuple set, the learner runs projected
//! gradient descent on the simplex to find weights whose induced social
//! score matches the panel. The loss actually differentiated is the
//! surrogate regret built on the soft (probability-weighted) social score;
//! the hard regret against the argmax score is what gets reported.

use std::fs;
use std::path::Path;

use crate::data::DataTuple;
use crate::error::Error;
use crate::fairness::{fairness_scores, GroupSpec};
use crate::feedback::{
    aggregate, argmax_score, choice_probabilities, likert_regions, normalize_scores, utilities,
    FeedbackParams, LikertScore, PreferenceVector,
};
use crate::numkit::{beta_cdf_grad_psi_many, QuadratureConfig, PSI_EPSILON};
use crate::stream::{substream, tags};
use rand::Rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LearnerConfig {
    /// Step size of the projected gradient update.
    pub learning_rate: f64,
    pub epochs: usize,
    pub feedback: FeedbackParams,
    /// Seeds the random simplex initialization of the weights.
    pub seed: u64,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.5,
            epochs: 100,
            feedback: FeedbackParams::default(),
            seed: 0,
        }
    }
}

impl LearnerConfig {
    pub fn validate(&self) -> Result<(), Error> {
        if !self.learning_rate.is_finite() || self.learning_rate <= 0.0 {
            return Err(Error::Spec(format!(
                "learning rate {} must be finite and positive",
                self.learning_rate
            )));
        }
        self.feedback.validate()?;
        if self.feedback.psi_clamp < PSI_EPSILON {
            return Err(Error::Spec(format!(
                "psi_clamp {} below {PSI_EPSILON}; perception gradients are only \
                 defined from there inward",
                self.feedback.psi_clamp
            )));
        }
        Ok(())
    }
}

/// Regrets and weights at one epoch; entry e of a trace describes the
/// weights before the e-th update, so a trace has epochs + 1 entries.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceEntry {
    pub hard_regret: f64,
    pub soft_regret: f64,
    pub beta: PreferenceVector,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RegretTrace {
    pub entries: Vec<TraceEntry>,
}

impl RegretTrace {
    pub fn final_entry(&self) -> Option<&TraceEntry> {
        self.entries.last()
    }

    /// Pointwise mean of equally long traces; averaged weights stay on the
    /// simplex because the mean of simplex points is one.
    pub fn average(traces: &[RegretTrace]) -> Result<RegretTrace, Error> {
        let first = traces
            .first()
            .ok_or_else(|| Error::DimensionMismatch("no traces to average".into()))?;
        let len = first.entries.len();
        if traces.iter().any(|t| t.entries.len() != len) {
            return Err(Error::DimensionMismatch(
                "traces of unequal length cannot be averaged".into(),
            ));
        }
        let scale = 1.0 / traces.len() as f64;
        let entries = (0..len)
            .map(|e| {
                let mut hard = 0.0;
                let mut soft = 0.0;
                let mut beta = [0.0; 3];
                for t in traces {
                    let entry = &t.entries[e];
                    hard += entry.hard_regret;
                    soft += entry.soft_regret;
                    for (acc, w) in beta.iter_mut().zip(entry.beta.weights()) {
                        *acc += w;
                    }
                }
                Ok(TraceEntry {
                    hard_regret: hard * scale,
                    soft_regret: soft * scale,
                    beta: PreferenceVector::new(beta.map(|w| w * scale))?,
                })
            })
            .collect::<Result<_, Error>>()?;
        Ok(RegretTrace { entries })
    }
}

const TRACE_HEADER: &str =
    "epoch,hard_regret,soft_regret,beta_independence,beta_separation,beta_sufficiency";

/// Writes a trace as CSV, one row per epoch. Floats use the shortest
/// representation that parses back to the identical value, so a written
/// trace is byte-stable and lossless.
pub fn write_trace(path: &Path, trace: &RegretTrace) -> Result<(), Error> {
    let mut out = String::with_capacity(64 * (trace.entries.len() + 1));
    out.push_str(TRACE_HEADER);
    out.push('\n');
    for (epoch, e) in trace.entries.iter().enumerate() {
        let [b1, b2, b3] = e.beta.weights();
        out.push_str(&format!(
            "{epoch},{},{},{b1},{b2},{b3}\n",
            e.hard_regret, e.soft_regret
        ));
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn read_trace(path: &Path) -> Result<RegretTrace, Error> {
    let parse_err = |line: usize, detail: String| Error::Parse {
        path: path.display().to_string(),
        detail: format!("line {}: {detail}", line + 1),
    };
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header == TRACE_HEADER => {}
        Some((i, header)) => {
            return Err(parse_err(i, format!("unexpected header {header:?}")));
        }
        None => return Err(parse_err(0, "empty trace file".into())),
    }

    let mut entries = Vec::new();
    for (i, line) in lines {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 6 {
            return Err(parse_err(i, format!("expected 6 fields, got {}", fields.len())));
        }
        let epoch: usize = fields[0]
            .parse()
            .map_err(|e| parse_err(i, format!("epoch: {e}")))?;
        if epoch != entries.len() {
            return Err(parse_err(
                i,
                format!("epoch {epoch} out of order, expected {}", entries.len()),
            ));
        }
        let mut nums = [0.0f64; 5];
        for (slot, field) in nums.iter_mut().zip(&fields[1..]) {
            *slot = field
                .parse()
                .map_err(|e| parse_err(i, format!("{field:?}: {e}")))?;
        }
        entries.push(TraceEntry {
            hard_regret: nums[0],
            soft_regret: nums[1],
            beta: PreferenceVector::new([nums[2], nums[3], nums[4]])
                .map_err(|e| parse_err(i, e.to_string()))?,
        });
    }
    Ok(RegretTrace { entries })
}

/// Mean squared difference between every participant's scores and the
/// social scores, averaged over participants and tuples.
pub fn feedback_regret(
    scores: &[Vec<LikertScore>],
    social: &[LikertScore],
) -> Result<f64, Error> {
    let targets: Vec<f64> = social.iter().map(|s| f64::from(s.value())).collect();
    check_matrix(scores, targets.len())?;
    Ok(regret_against(scores, &targets))
}

fn check_matrix(scores: &[Vec<LikertScore>], m: usize) -> Result<(), Error> {
    if scores.is_empty() || m == 0 {
        return Err(Error::DimensionMismatch(
            "feedback requires at least one participant and one tuple".into(),
        ));
    }
    for (n, row) in scores.iter().enumerate() {
        if row.len() != m {
            return Err(Error::DimensionMismatch(format!(
                "participant {n} rated {} tuples, expected {m}",
                row.len()
            )));
        }
    }
    Ok(())
}

fn regret_against(scores: &[Vec<LikertScore>], targets: &[f64]) -> f64 {
    let mut total = 0.0;
    for row in scores {
        for (s, t) in row.iter().zip(targets) {
            let d = f64::from(s.value()) - t;
            total += d * d;
        }
    }
    total / (scores.len() as f64 * targets.len() as f64)
}

/// Expected Likert score under a choice distribution. Differentiable in
/// the utilities, unlike the argmax score it surrogates.
pub fn soft_social_score(probabilities: &[f64; 7]) -> f64 {
    probabilities
        .iter()
        .enumerate()
        .map(|(j, p)| (j + 1) as f64 * p)
        .sum()
}

/// Per-tuple state shared by the regret evaluation and the gradient.
struct TuplePass {
    probabilities: [f64; 7],
    soft: f64,
    hard: LikertScore,
    /// Raw aggregate landed outside the clamp, so dψ/dβ is 0 there.
    clamped: bool,
}

fn tuple_pass(
    beta: &PreferenceVector,
    phibar: &[f64; 3],
    params: &FeedbackParams,
) -> Result<TuplePass, Error> {
    let psi_raw = aggregate(beta, phibar);
    let clamped = psi_raw < params.psi_clamp || psi_raw > 1.0 - params.psi_clamp;
    let u = utilities(psi_raw, params)?;
    let probabilities = choice_probabilities(&u, params.temperature);
    // The social score is the argmax choice regardless of the score mode;
    // sampling models participants, not the consensus.
    let hard = argmax_score(&probabilities);
    Ok(TuplePass {
        probabilities,
        soft: soft_social_score(&probabilities),
        hard,
        clamped,
    })
}

/// d(soft score)/dψ for one tuple: utilities respond to the perception
/// through the Beta CDF at the region boundaries, the choice distribution
/// through the logit, and the score linearly in the probabilities.
fn soft_score_slope(
    beta: &PreferenceVector,
    phibar: &[f64; 3],
    pass: &TuplePass,
    params: &FeedbackParams,
    quad: &QuadratureConfig,
) -> Result<f64, Error> {
    let psi = aggregate(beta, phibar).clamp(params.psi_clamp, 1.0 - params.psi_clamp);
    let dcdf = beta_cdf_grad_psi_many(&likert_regions(), psi, params.precision, quad)?;
    let mut slope = 0.0;
    for j in 0..7 {
        let du = dcdf[7 - j] - dcdf[6 - j];
        slope += params.temperature * pass.probabilities[j] * ((j + 1) as f64 - pass.soft) * du;
    }
    Ok(slope)
}

/// Gradient of the surrogate regret with respect to the preference
/// weights. `phibar` holds each tuple's normalized fairness scores; rows
/// of `scores` must match its length.
pub fn srg_gradient(
    scores: &[Vec<LikertScore>],
    phibar: &[[f64; 3]],
    beta: &PreferenceVector,
    params: &FeedbackParams,
) -> Result<[f64; 3], Error> {
    params.validate()?;
    check_matrix(scores, phibar.len())?;
    let quad = QuadratureConfig::default();
    let mut grad = [0.0; 3];
    for (m, phi) in phibar.iter().enumerate() {
        let pass = tuple_pass(beta, phi, params)?;
        if pass.clamped {
            continue;
        }
        let residual_sum: f64 = scores
            .iter()
            .map(|row| f64::from(row[m].value()) - pass.soft)
            .sum();
        let loss_factor = -2.0 * residual_sum / scores.len() as f64;
        let slope = soft_score_slope(beta, phi, &pass, params, &quad)?;
        for (g, w) in grad.iter_mut().zip(phi) {
            *g += loss_factor * slope * w;
        }
    }
    let m = phibar.len() as f64;
    Ok(grad.map(|g| g / m))
}

/// Uniform Dirichlet draw for the initial weights, keyed by the run seed.
fn random_simplex_point(seed: u64) -> PreferenceVector {
    let rng = &mut substream(seed, &[tags::LEARNER_INIT]);
    let e: [f64; 3] = std::array::from_fn(|_| -(1.0 - rng.random::<f64>()).ln());
    let sum: f64 = e.iter().sum();
    PreferenceVector::new(e.map(|x| x / sum)).expect("normalized positives lie on the simplex")
}

/// Runs projected gradient descent and returns the final weights with the
/// full per-epoch trace (epochs + 1 entries; zero epochs evaluates the
/// random initialization and stops).
pub fn saff_learn(
    scores: &[Vec<LikertScore>],
    tuples: &[DataTuple],
    spec: &GroupSpec,
    config: &LearnerConfig,
) -> Result<(PreferenceVector, RegretTrace), Error> {
    config.validate()?;
    check_matrix(scores, tuples.len())?;
    let phibar: Vec<[f64; 3]> = tuples
        .iter()
        .map(|t| Ok(normalize_scores(&fairness_scores(t, spec)?)))
        .collect::<Result<_, Error>>()?;

    let params = &config.feedback;
    let quad = QuadratureConfig::default();
    let mut beta = random_simplex_point(config.seed);
    let mut trace = RegretTrace {
        entries: Vec::with_capacity(config.epochs + 1),
    };

    for epoch in 0..=config.epochs {
        let passes: Vec<TuplePass> = phibar
            .iter()
            .map(|phi| tuple_pass(&beta, phi, params))
            .collect::<Result<_, Error>>()?;

        let hard_targets: Vec<LikertScore> = passes.iter().map(|p| p.hard).collect();
        let soft_targets: Vec<f64> = passes.iter().map(|p| p.soft).collect();
        trace.entries.push(TraceEntry {
            hard_regret: feedback_regret(scores, &hard_targets)?,
            soft_regret: regret_against(scores, &soft_targets),
            beta,
        });

        if epoch == config.epochs {
            break;
        }

        let mut grad = [0.0; 3];
        for (m, (phi, pass)) in phibar.iter().zip(&passes).enumerate() {
            if pass.clamped {
                continue;
            }
            let residual_sum: f64 = scores
                .iter()
                .map(|row| f64::from(row[m].value()) - pass.soft)
                .sum();
            let loss_factor = -2.0 * residual_sum / scores.len() as f64;
            let slope = soft_score_slope(&beta, phi, pass, params, &quad)?;
            for (g, w) in grad.iter_mut().zip(phi) {
                *g += loss_factor * slope * w;
            }
        }
        let m_count = phibar.len() as f64;
        let grad = grad.map(|g| g / m_count);

        if grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFinite {
                quantity: "gradient".into(),
                epoch,
            });
        }

        let weights = beta.weights();
        let stepped: [f64; 3] =
            std::array::from_fn(|l| weights[l] - config.learning_rate * grad[l]);
        beta = PreferenceVector::project(stepped)?;
    }

    Ok((beta, trace))
}

/// Argmax social scores for a tuple set under fixed weights; what a report
/// quotes for the learned consensus.
pub fn social_scores(
    phibar: &[[f64; 3]],
    beta: &PreferenceVector,
    params: &FeedbackParams,
) -> Result<Vec<LikertScore>, Error> {
    phibar
        .iter()
        .map(|phi| Ok(tuple_pass(beta, phi, params)?.hard))
        .collect()
}

//! Likert fairness-feedback model.
//!
//! A participant holds preference weights over the three fairness notions.
//! Their perceived unfairness of a tuple is the weighted combination of the
//! tuple's normalized scores, mapped through a Beta distribution whose mean
//! tracks the perception: the probability mass falling in each of seven
//! equal divisions of [0, 1] is the utility of the corresponding Likert
//! score (7 = fairest region nearest 0), and a mixed-logit choice over
//! those utilities produces the reported score.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::DataTuple;
use crate::error::Error;
use crate::fairness::{fairness_scores, FairnessScores, GroupSpec};
use crate::numkit::{beta_cdf, project_to_simplex, BetaShape, PSI_EPSILON};
use crate::stream::{substream, tags};

pub const LIKERT_LEVELS: usize = 7;

/// The three group-fairness notions, in the canonical component order used
/// by scores, preference weights, and reports alike.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Notion {
    Independence,
    Separation,
    Sufficiency,
}

impl Notion {
    pub const ALL: [Notion; 3] = [Notion::Independence, Notion::Separation, Notion::Sufficiency];

    pub fn index(&self) -> usize {
        *self as usize
    }
}

impl std::fmt::Display for Notion {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Notion::Independence => "independence",
            Notion::Separation => "separation",
            Notion::Sufficiency => "sufficiency",
        })
    }
}

impl std::str::FromStr for Notion {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "independence" => Ok(Notion::Independence),
            "separation" => Ok(Notion::Separation),
            "sufficiency" => Ok(Notion::Sufficiency),
            other => Err(format!(
                "unknown notion {other:?}; expected independence, separation, or sufficiency"
            )),
        }
    }
}

/// A point on the probability simplex over the three notions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 3]", into = "[f64; 3]")]
pub struct PreferenceVector([f64; 3]);

impl PreferenceVector {
    /// Accepts weights already on the simplex (within 1e-9 in the sum).
    pub fn new(weights: [f64; 3]) -> Result<Self, Error> {
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::Spec(format!(
                "preference weights {weights:?} must be finite and nonnegative"
            )));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::Spec(format!(
                "preference weights {weights:?} sum to {sum}, expected 1"
            )));
        }
        Ok(Self(weights))
    }

    /// Euclidean projection of an arbitrary finite point onto the simplex.
    pub fn project(raw: [f64; 3]) -> Result<Self, Error> {
        let p = project_to_simplex(&raw)?;
        Ok(Self([p[0], p[1], p[2]]))
    }

    pub fn atomic(notion: Notion) -> Self {
        let mut w = [0.0; 3];
        w[notion.index()] = 1.0;
        Self(w)
    }

    pub fn uniform() -> Self {
        Self([1.0 / 3.0; 3])
    }

    pub fn weights(&self) -> [f64; 3] {
        self.0
    }

    pub fn weight(&self, notion: Notion) -> f64 {
        self.0[notion.index()]
    }

    /// The notion carrying the largest weight; ties go to the earlier one
    /// in canonical order.
    pub fn argmax_notion(&self) -> Notion {
        let mut best = Notion::Independence;
        for n in Notion::ALL {
            if self.0[n.index()] > self.0[best.index()] {
                best = n;
            }
        }
        best
    }
}

impl TryFrom<[f64; 3]> for PreferenceVector {
    type Error = Error;

    fn try_from(w: [f64; 3]) -> Result<Self, Error> {
        Self::new(w)
    }
}

impl From<PreferenceVector> for [f64; 3] {
    fn from(v: PreferenceVector) -> [f64; 3] {
        v.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScoreMode {
    /// Report the most probable score; ties go to the lower score.
    Argmax,
    /// Sample the score from the choice probabilities.
    Sampled,
}

impl std::fmt::Display for ScoreMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ScoreMode::Argmax => "argmax",
            ScoreMode::Sampled => "sampled",
        })
    }
}

/// Perception and choice hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeedbackParams {
    /// Beta precision c: the perception Beta(ψc, (1-ψ)c) concentrates
    /// around ψ as c grows.
    pub precision: f64,
    /// Logit temperature λ: choice sharpness over the region utilities.
    pub temperature: f64,
    /// Perceptions are clamped into [ε, 1-ε] before forming the Beta.
    /// Gradient-based learning additionally needs ε >= [`PSI_EPSILON`].
    pub psi_clamp: f64,
    pub score_mode: ScoreMode,
}

/// Default operating point: precision 2, temperature 2.
///
/// These values were selected empirically for the fixed-step learner.
/// Sharper settings (c, λ of 10 or more) produce choice-utility gradients
/// steep enough that a 0.5 learning rate overshoots: preference weights
/// enter a limit cycle and averaged regret rises instead of falling.
/// Softer settings (λ near 1) make every identically-split run converge
/// to the same notion, erasing the run-to-run instability the model is
/// meant to exhibit. c = 2, λ = 2 keeps atomic-population recovery at
/// 20/20 seeds, decreasing regret on every grid cell, and at least two
/// distinct preferred notions across identically-split runs.
impl Default for FeedbackParams {
    fn default() -> Self {
        Self {
            precision: 2.0,
            temperature: 2.0,
            psi_clamp: PSI_EPSILON,
            score_mode: ScoreMode::Argmax,
        }
    }
}

impl FeedbackParams {
    pub fn validate(&self) -> Result<(), Error> {
        if !self.precision.is_finite() || self.precision <= 0.0 {
            return Err(Error::Spec(format!(
                "precision {} must be finite and positive",
                self.precision
            )));
        }
        if !self.temperature.is_finite() || self.temperature <= 0.0 {
            return Err(Error::Spec(format!(
                "temperature {} must be finite and positive",
                self.temperature
            )));
        }
        if !self.psi_clamp.is_finite() || self.psi_clamp <= 0.0 || self.psi_clamp >= 0.5 {
            return Err(Error::Spec(format!(
                "psi_clamp {} must lie strictly inside (0, 0.5)",
                self.psi_clamp
            )));
        }
        Ok(())
    }
}

/// A reported Likert fairness rating, 1 (very unfair) to 7 (very fair).
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(try_from = "u8", into = "u8")]
pub struct LikertScore(u8);

impl LikertScore {
    pub fn new(value: u8) -> Result<Self, Error> {
        if (1..=LIKERT_LEVELS as u8).contains(&value) {
            Ok(Self(value))
        } else {
            Err(Error::Spec(format!(
                "Likert score {value} outside 1..={LIKERT_LEVELS}"
            )))
        }
    }

    pub fn value(&self) -> u8 {
        self.0
    }
}

impl TryFrom<u8> for LikertScore {
    type Error = Error;

    fn try_from(v: u8) -> Result<Self, Error> {
        Self::new(v)
    }
}

impl From<LikertScore> for u8 {
    fn from(s: LikertScore) -> u8 {
        s.0
    }
}

impl std::fmt::Display for LikertScore {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Min-max normalizes the three scores of one tuple to [0, 1], keeping the
/// unfairness orientation (largest score maps to 1). All-equal scores
/// normalize to all zeros.
pub fn normalize_scores(scores: &FairnessScores) -> [f64; 3] {
    let raw = scores.as_array();
    let min = raw.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = raw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max - min <= 0.0 {
        return [0.0; 3];
    }
    raw.map(|v| (v - min) / (max - min))
}

/// Perceived unfairness: the preference-weighted combination of normalized
/// scores. Lands in [0, 1] because the weights live on the simplex.
pub fn aggregate(beta: &PreferenceVector, normalized: &[f64; 3]) -> f64 {
    beta.weights()
        .iter()
        .zip(normalized)
        .map(|(w, phi)| w * phi)
        .sum()
}

/// The 8 boundaries cutting [0, 1] into the 7 equal Likert regions.
pub fn likert_regions() -> [f64; 8] {
    std::array::from_fn(|i| i as f64 / LIKERT_LEVELS as f64)
}

/// Probability mass the perception Beta assigns to each score's region.
/// Index j holds score j+1; score 7 owns [0, 1/7], score 1 owns [6/7, 1],
/// so a fair-looking tuple (small ψ) favors high scores. Sums to 1.
pub fn utilities(psi: f64, params: &FeedbackParams) -> Result<[f64; 7], Error> {
    params.validate()?;
    let clamped = psi.clamp(params.psi_clamp, 1.0 - params.psi_clamp);
    let shape = BetaShape::from_psi(clamped, params.precision)?;
    let bounds = likert_regions();
    let cdf: Vec<f64> = bounds
        .iter()
        .map(|&r| beta_cdf(r, &shape))
        .collect::<Result<_, _>>()?;
    let mut u = [0.0; 7];
    for (j, slot) in u.iter_mut().enumerate() {
        // Score j+1 spans [bounds[6-j], bounds[7-j]].
        *slot = (cdf[7 - j] - cdf[6 - j]).max(0.0);
    }
    Ok(u)
}

/// Mixed-logit choice distribution: softmax of λ·utilities.
pub fn choice_probabilities(utilities: &[f64; 7], temperature: f64) -> [f64; 7] {
    let m = utilities.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exp = utilities.map(|u| (temperature * (u - m)).exp());
    let z: f64 = exp.iter().sum();
    exp.map(|e| e / z)
}

/// The most probable score; ties go to the lower score.
pub fn argmax_score(probabilities: &[f64; 7]) -> LikertScore {
    let mut best = 0;
    for (j, p) in probabilities.iter().enumerate() {
        if *p > probabilities[best] {
            best = j;
        }
    }
    LikertScore::new(best as u8 + 1).expect("index 0..7 maps into 1..=7")
}

/// Draws or picks the reported score from the choice distribution.
pub fn feedback_score(
    probabilities: &[f64; 7],
    mode: ScoreMode,
    rng: &mut impl Rng,
) -> LikertScore {
    let index = match mode {
        ScoreMode::Argmax => return argmax_score(probabilities),
        ScoreMode::Sampled => {
            let u: f64 = rng.random();
            let mut acc = 0.0;
            let mut chosen = probabilities.len() - 1;
            for (j, p) in probabilities.iter().enumerate() {
                acc += p;
                if u < acc {
                    chosen = j;
                    break;
                }
            }
            chosen
        }
    };
    LikertScore::new(index as u8 + 1).expect("index 0..7 maps into 1..=7")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PopulationScenario {
    /// Independent draws from the flat Dirichlet over the simplex.
    UniformRandom,
    /// Every participant puts all weight on one notion.
    FixedAtomic(Notion),
    /// Thirds by notion: 33% independence, 33% separation, the remainder
    /// sufficiency (integer division on the first two blocks).
    IdenticalSplit,
}

impl std::fmt::Display for PopulationScenario {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PopulationScenario::UniformRandom => f.write_str("uniform_random"),
            PopulationScenario::FixedAtomic(n) => write!(f, "fixed_atomic:{n}"),
            PopulationScenario::IdenticalSplit => f.write_str("identical_split"),
        }
    }
}

impl std::str::FromStr for PopulationScenario {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.to_ascii_lowercase();
        match lower.as_str() {
            "uniform_random" => Ok(PopulationScenario::UniformRandom),
            "identical_split" => Ok(PopulationScenario::IdenticalSplit),
            other => match other.strip_prefix("fixed_atomic:") {
                Some(notion) => Ok(PopulationScenario::FixedAtomic(notion.parse()?)),
                None => Err(format!(
                    "unknown scenario {s:?}; expected uniform_random, identical_split, \
                     or fixed_atomic:<notion>"
                )),
            },
        }
    }
}

/// Preference weights for `n` participants. Participant i draws from the
/// substream keyed by (seed, i), so populations are stable under any
/// evaluation order.
pub fn generate_population(
    n: usize,
    scenario: PopulationScenario,
    seed: u64,
) -> Vec<PreferenceVector> {
    match scenario {
        PopulationScenario::UniformRandom => (0..n)
            .map(|i| {
                let rng = &mut substream(seed, &[tags::POPULATION, i as u64]);
                // Normalized unit exponentials are a flat Dirichlet draw.
                let e: [f64; 3] = std::array::from_fn(|_| -(1.0 - rng.random::<f64>()).ln());
                let sum: f64 = e.iter().sum();
                PreferenceVector::new(e.map(|x| x / sum))
                    .expect("normalized positives lie on the simplex")
            })
            .collect(),
        PopulationScenario::FixedAtomic(notion) => {
            vec![PreferenceVector::atomic(notion); n]
        }
        PopulationScenario::IdenticalSplit => {
            let third = n * 33 / 100;
            let mut out = Vec::with_capacity(n);
            out.resize(third, PreferenceVector::atomic(Notion::Independence));
            out.resize(2 * third, PreferenceVector::atomic(Notion::Separation));
            out.resize(n, PreferenceVector::atomic(Notion::Sufficiency));
            out
        }
    }
}

/// Simulated Likert ratings: row n holds participant n's scores for every
/// tuple, in tuple order. Participant n consumes only the substream keyed
/// by (seed, n), so rows are identical however participants are scheduled.
pub fn simulate_feedback(
    population: &[PreferenceVector],
    tuples: &[DataTuple],
    spec: &GroupSpec,
    params: &FeedbackParams,
    seed: u64,
) -> Result<Vec<Vec<LikertScore>>, Error> {
    params.validate()?;
    let normalized: Vec<[f64; 3]> = tuples
        .iter()
        .map(|t| Ok(normalize_scores(&fairness_scores(t, spec)?)))
        .collect::<Result<_, Error>>()?;

    population
        .iter()
        .enumerate()
        .map(|(n, beta)| {
            let rng = &mut substream(seed, &[tags::PARTICIPANT, n as u64]);
            normalized
                .iter()
                .map(|phi| {
                    let u = utilities(aggregate(beta, phi), params)?;
                    let p = choice_probabilities(&u, params.temperature);
                    Ok(feedback_score(&p, params.score_mode, rng))
                })
                .collect()
        })
        .collect()
}

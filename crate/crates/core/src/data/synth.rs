//! Synthetic offer-tuple generator with controllable group bias.
//!
//! Demographics follow a configurable mix, predictions are Weibull draws
//! whose scale can be inflated for disadvantaged groups via per-attribute
//! bias knobs, and decisions come from a logistic model repaired to keep
//! one or two acceptances per tuple.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{DataTuple, DonorProfile, Gender, Race, RecipientRecord};
use crate::error::Error;
use crate::numkit::WeibullParams;
use crate::stream::{substream, tags};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RaceMix {
    pub white: f64,
    pub black: f64,
    pub hispanic: f64,
    pub asian: f64,
    pub other: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DemographicMix {
    /// P(male); the rest are female.
    pub male: f64,
    pub race: RaceMix,
    /// P(age > 50); ages are uniform on [51, 80] above the cut and
    /// [18, 50] below it.
    pub over_50: f64,
}

impl Default for DemographicMix {
    fn default() -> Self {
        Self {
            male: 0.62,
            race: RaceMix {
                white: 0.46,
                black: 0.25,
                hispanic: 0.19,
                asian: 0.08,
                other: 0.02,
            },
            over_50: 0.5,
        }
    }
}

/// Multipliers applied to the Weibull scale of both predictions for
/// recipients in the disadvantaged group of each attribute. 1.0 is
/// unbiased; larger values stretch predicted waits and mortality.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BiasKnobs {
    pub gender: f64,
    pub race: f64,
    pub age: f64,
}

impl Default for BiasKnobs {
    fn default() -> Self {
        Self {
            gender: 1.0,
            race: 1.0,
            age: 1.0,
        }
    }
}

/// Logistic acceptance model: logit = intercept + epts·w_epts + kdpi·w_kdpi
/// + ttno·w_ttno + mortality·w_mortality.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecisionModel {
    pub intercept: f64,
    pub epts: f64,
    pub kdpi: f64,
    pub ttno: f64,
    pub mortality: f64,
}

impl Default for DecisionModel {
    fn default() -> Self {
        Self {
            intercept: 0.5,
            epts: -0.02,
            kdpi: -0.02,
            ttno: -0.05,
            mortality: 1.5,
        }
    }
}

impl DecisionModel {
    fn logit(&self, r: &RecipientRecord, donor: &DonorProfile) -> f64 {
        self.intercept
            + self.epts * f64::from(r.epts)
            + self.kdpi * f64::from(donor.kdpi)
            + self.ttno * r.ttno
            + self.mortality * r.mortality
    }
}

/// Missing fields of a deserialized spec take the [`Default`] values, so a
/// spec file only needs the fields it changes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSpec {
    pub num_tuples: usize,
    pub recipients_per_tuple: usize,
    pub mix: DemographicMix,
    /// Base time-to-next-offer distribution, months.
    pub ttno: WeibullParams,
    /// Base mortality-likelihood distribution, resampled into (0, 1).
    pub mortality: WeibullParams,
    pub knobs: BiasKnobs,
    pub decision: DecisionModel,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            num_tuples: 200,
            recipients_per_tuple: 10,
            mix: DemographicMix::default(),
            ttno: WeibullParams::new(1.5, 12.0).expect("base ttno parameters are valid"),
            mortality: WeibullParams::new(2.0, 0.25).expect("base mortality parameters are valid"),
            knobs: BiasKnobs::default(),
            decision: DecisionModel::default(),
            seed: 0,
        }
    }
}

impl SynthSpec {
    /// Collects every problem with the spec; generation refuses to start
    /// unless this returns no findings.
    pub fn validate(&self) -> Vec<String> {
        let mut problems = Vec::new();
        if self.num_tuples == 0 {
            problems.push("num_tuples must be at least 1".into());
        }
        if !(super::MIN_RECIPIENTS..=super::MAX_RECIPIENTS).contains(&self.recipients_per_tuple) {
            problems.push(format!(
                "recipients_per_tuple {} outside [{}, {}]",
                self.recipients_per_tuple,
                super::MIN_RECIPIENTS,
                super::MAX_RECIPIENTS
            ));
        }
        for (name, p) in [("male", self.mix.male), ("over_50", self.mix.over_50)] {
            if !(0.0..=1.0).contains(&p) || !p.is_finite() {
                problems.push(format!("mix.{name} {p} outside [0, 1]"));
            }
        }
        let r = &self.mix.race;
        let shares = [r.white, r.black, r.hispanic, r.asian, r.other];
        if shares.iter().any(|s| !s.is_finite() || *s < 0.0) {
            problems.push("race shares must be finite and nonnegative".into());
        } else if (shares.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            problems.push(format!(
                "race shares sum to {}, expected 1",
                shares.iter().sum::<f64>()
            ));
        }
        for (name, k) in [
            ("gender", self.knobs.gender),
            ("race", self.knobs.race),
            ("age", self.knobs.age),
        ] {
            if !k.is_finite() || k <= 0.0 {
                problems.push(format!("knob {name} {k} must be finite and positive"));
            }
        }
        let d = &self.decision;
        if [d.intercept, d.epts, d.kdpi, d.ttno, d.mortality]
            .iter()
            .any(|c| !c.is_finite())
        {
            problems.push("decision coefficients must be finite".into());
        }
        problems
    }
}

fn sample_race(mix: &RaceMix, rng: &mut impl Rng) -> Race {
    let u: f64 = rng.random();
    let mut acc = mix.white;
    if u < acc {
        return Race::White;
    }
    acc += mix.black;
    if u < acc {
        return Race::Black;
    }
    acc += mix.hispanic;
    if u < acc {
        return Race::Hispanic;
    }
    acc += mix.asian;
    if u < acc {
        return Race::Asian;
    }
    Race::Other
}

/// Inverse-CDF Weibull draw, rejecting the measure-zero u that lands on 0.
fn sample_weibull(shape: f64, scale: f64, rng: &mut impl Rng) -> f64 {
    loop {
        let u: f64 = rng.random();
        let x = scale * (-(1.0 - u).ln()).powf(1.0 / shape);
        if x > 0.0 && x.is_finite() {
            return x;
        }
    }
}

const MORTALITY_RESAMPLE_LIMIT: usize = 100_000;

fn sample_mortality(shape: f64, scale: f64, rng: &mut impl Rng) -> Result<f64, Error> {
    for _ in 0..MORTALITY_RESAMPLE_LIMIT {
        let x = sample_weibull(shape, scale, rng);
        if x < 1.0 {
            return Ok(x);
        }
    }
    Err(Error::Spec(format!(
        "mortality scale {scale} leaves almost no mass inside (0, 1)"
    )))
}

/// Scale multiplier for a recipient: the product of the knobs of every
/// attribute whose disadvantaged group the recipient belongs to.
fn bias_factor(knobs: &BiasKnobs, r: &RecipientRecord) -> f64 {
    let mut f = 1.0;
    if r.gender == Gender::Female {
        f *= knobs.gender;
    }
    if r.race == Race::Black {
        f *= knobs.race;
    }
    if r.age > 50 {
        f *= knobs.age;
    }
    f
}

fn synthesize_tuple(spec: &SynthSpec, index: u64) -> Result<DataTuple, Error> {
    let rng = &mut substream(spec.seed, &[tags::TUPLE, index]);

    let donor = DonorProfile {
        age: rng.random_range(18..=70),
        race: sample_race(&spec.mix.race, rng),
        gender: if rng.random::<f64>() < spec.mix.male {
            Gender::Male
        } else {
            Gender::Female
        },
        kdpi: rng.random_range(0..=100),
    };

    let mut recipients = Vec::with_capacity(spec.recipients_per_tuple);
    for _ in 0..spec.recipients_per_tuple {
        let mut r = RecipientRecord {
            age: if rng.random::<f64>() < spec.mix.over_50 {
                rng.random_range(51..=80)
            } else {
                rng.random_range(18..=50)
            },
            race: sample_race(&spec.mix.race, rng),
            gender: if rng.random::<f64>() < spec.mix.male {
                Gender::Male
            } else {
                Gender::Female
            },
            epts: rng.random_range(0..=100),
            distance: rng.random_range(1.0..500.0),
            ttno: 0.0,
            mortality: 0.5,
            decision: false,
        };
        let f = bias_factor(&spec.knobs, &r);
        r.ttno = sample_weibull(spec.ttno.shape(), spec.ttno.scale() * f, rng);
        r.mortality = sample_mortality(spec.mortality.shape(), spec.mortality.scale() * f, rng)?;
        recipients.push(r);
    }

    let logits: Vec<f64> = recipients
        .iter()
        .map(|r| spec.decision.logit(r, &donor))
        .collect();
    for (r, &l) in recipients.iter_mut().zip(&logits) {
        let p = 1.0 / (1.0 + (-l).exp());
        r.decision = rng.random::<f64>() < p;
    }

    // Repair to 1..=2 acceptances: promote the most acceptable refusal when
    // none were accepted, demote the least acceptable extras when more than
    // two were.
    let accepted = recipients.iter().filter(|r| r.decision).count();
    if accepted == 0 {
        let best = (0..recipients.len())
            .max_by(|&a, &b| logits[a].total_cmp(&logits[b]))
            .expect("tuple has recipients");
        recipients[best].decision = true;
    } else if accepted > 2 {
        let mut idx: Vec<usize> = (0..recipients.len())
            .filter(|&i| recipients[i].decision)
            .collect();
        idx.sort_by(|&a, &b| logits[b].total_cmp(&logits[a]));
        for &i in &idx[2..] {
            recipients[i].decision = false;
        }
    }

    Ok(DataTuple { donor, recipients })
}

/// Generates `spec.num_tuples` tuples. Each tuple owns an independent
/// substream keyed by (seed, index), so output is byte-identical across
/// runs and independent of generation order.
pub fn synthesize_dataset(spec: &SynthSpec) -> Result<Vec<DataTuple>, Error> {
    let problems = spec.validate();
    if !problems.is_empty() {
        return Err(Error::Spec(problems.join("; ")));
    }
    (0..spec.num_tuples as u64)
        .map(|i| synthesize_tuple(spec, i))
        .collect()
}

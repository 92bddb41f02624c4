//! Group-fairness scoring of one decision-support tuple.
//!
//! Each score is a KL divergence between Weibull fits of the predicted
//! quantities (time to next offer, mortality likelihood) for the advantaged
//! versus disadvantaged group of a protected attribute:
//!
//! * independence: fits of the raw predictions per group,
//! * separation: fits conditioned on the surgeon decision, weighted by the
//!   pooled class probability,
//! * sufficiency: divergence between the groups' posterior decision beliefs
//!   given the predictions, averaged over recipients.
//!
//! All three are 0 exactly when the groups are indistinguishable and grow
//! with the violation; they are never negative.

use serde::{Deserialize, Serialize};

use crate::data::{Attribute, DataTuple, RecipientRecord};
use crate::error::Error;
use crate::numkit::{weibull_kl, weibull_mle_fit, weibull_pdf, NumError, WeibullParams};

/// Cells with fewer samples than this fall back to a pooled fit.
pub const DEFAULT_MIN_SAMPLES: usize = 2;

/// Posteriors are clamped into [this, 1 - this] before the log-ratio.
pub const POSTERIOR_CLAMP: f64 = 1e-9;

/// Which recipients count as the advantaged group of an attribute.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupSpec {
    pub attribute: Attribute,
}

impl GroupSpec {
    pub fn new(attribute: Attribute) -> Self {
        Self { attribute }
    }

    pub fn advantaged(&self, r: &RecipientRecord) -> bool {
        self.attribute.advantaged(r)
    }

    pub fn disadvantaged(&self, r: &RecipientRecord) -> bool {
        self.attribute.disadvantaged(r)
    }
}

/// How the parameters of a fit cell were obtained, from most to least
/// informative. `Zero` cells have no usable fit anywhere in the ladder and
/// contribute nothing to any divergence.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FallbackLevel {
    /// Fitted on the cell's own samples.
    Exact,
    /// Inherited from the group's unconditional fit.
    GroupPooled,
    /// Inherited from the fit pooled across both groups.
    AllPooled,
    Zero,
}

/// Weibull fits of both predicted quantities for one cell of the table.
/// `sample_count` is always the cell's own size, even when the parameters
/// were inherited; `Zero` cells carry placeholder unit parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellFit {
    pub ttno: WeibullParams,
    pub mortality: WeibullParams,
    pub sample_count: usize,
    pub fallback: FallbackLevel,
}

impl CellFit {
    fn zero(sample_count: usize) -> Self {
        let unit = WeibullParams::new(1.0, 1.0).expect("unit parameters are valid");
        Self {
            ttno: unit,
            mortality: unit,
            sample_count,
            fallback: FallbackLevel::Zero,
        }
    }

    fn from_params(
        (ttno, mortality): (WeibullParams, WeibullParams),
        sample_count: usize,
        fallback: FallbackLevel,
    ) -> Self {
        Self {
            ttno,
            mortality,
            sample_count,
            fallback,
        }
    }
}

/// Fits for one group: the unconditional cell and, when requested, the
/// decision-conditioned cells indexed by z (0 refuse, 1 transplant).
#[derive(Debug, Clone, PartialEq)]
pub struct GroupFits {
    pub overall: CellFit,
    pub by_decision: Option<[CellFit; 2]>,
    /// Laplace-smoothed acceptance prior (accepted + 1) / (size + 2).
    pub decision_prior: f64,
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitTable {
    pub advantaged: GroupFits,
    pub disadvantaged: GroupFits,
    /// Raw pooled acceptance rate over every recipient in the tuple.
    pub acceptance_rate: f64,
}

fn fit_or_degenerate(
    samples: &[f64],
    min_samples: usize,
) -> Result<Option<WeibullParams>, Error> {
    match weibull_mle_fit(samples, min_samples) {
        Ok(p) => Ok(Some(p)),
        Err(NumError::Degenerate(_)) => Ok(None),
        Err(e) => Err(e.into()),
    }
}

/// Fits both quantities or reports the cell unusable; one degenerate
/// quantity sinks the whole cell so that its two divergence components
/// always travel together.
fn try_fit(
    recipients: &[&RecipientRecord],
    min_samples: usize,
) -> Result<Option<(WeibullParams, WeibullParams)>, Error> {
    let ttno: Vec<f64> = recipients.iter().map(|r| r.ttno).collect();
    let mortality: Vec<f64> = recipients.iter().map(|r| r.mortality).collect();
    Ok(
        match (
            fit_or_degenerate(&ttno, min_samples)?,
            fit_or_degenerate(&mortality, min_samples)?,
        ) {
            (Some(t), Some(m)) => Some((t, m)),
            _ => None,
        },
    )
}

/// Builds the per-group fit table for a tuple. Cells below `min_samples`
/// (or with constant samples) inherit down the ladder: own fit, group
/// unconditional fit, fit pooled across both groups, zero.
pub fn fit_group_distributions(
    tuple: &DataTuple,
    spec: &GroupSpec,
    conditioned: bool,
    min_samples: usize,
) -> Result<FitTable, Error> {
    let (adv, dis): (Vec<&RecipientRecord>, Vec<&RecipientRecord>) =
        tuple.recipients.iter().partition(|r| spec.advantaged(r));
    for (side, name) in [(&adv, "advantaged"), (&dis, "disadvantaged")] {
        if side.len() < 2 {
            return Err(Error::EmptyGroup {
                attribute: spec.attribute.to_string(),
                group: name.to_string(),
                count: side.len(),
            });
        }
    }

    let all: Vec<&RecipientRecord> = tuple.recipients.iter().collect();
    let pooled = try_fit(&all, min_samples)?;
    let acceptance_rate = tuple.acceptance_count() as f64 / tuple.recipients.len() as f64;

    let build_group = |side: &[&RecipientRecord]| -> Result<GroupFits, Error> {
        let overall = match try_fit(side, min_samples)? {
            Some(params) => CellFit::from_params(params, side.len(), FallbackLevel::Exact),
            None => match pooled {
                Some(params) => CellFit::from_params(params, side.len(), FallbackLevel::AllPooled),
                None => CellFit::zero(side.len()),
            },
        };

        let accepted = side.iter().filter(|r| r.decision).count();
        let decision_prior = (accepted as f64 + 1.0) / (side.len() as f64 + 2.0);

        let by_decision = if conditioned {
            let mut cells = [CellFit::zero(0), CellFit::zero(0)];
            for (z, cell) in cells.iter_mut().enumerate() {
                let sub: Vec<&RecipientRecord> = side
                    .iter()
                    .filter(|r| r.decision == (z == 1))
                    .copied()
                    .collect();
                *cell = match try_fit(&sub, min_samples)? {
                    Some(params) => CellFit::from_params(params, sub.len(), FallbackLevel::Exact),
                    None if overall.fallback == FallbackLevel::Exact => CellFit {
                        sample_count: sub.len(),
                        fallback: FallbackLevel::GroupPooled,
                        ..overall
                    },
                    None => match pooled {
                        Some(params) => {
                            CellFit::from_params(params, sub.len(), FallbackLevel::AllPooled)
                        }
                        None => CellFit::zero(sub.len()),
                    },
                };
            }
            Some(cells)
        } else {
            None
        };

        Ok(GroupFits {
            overall,
            by_decision,
            decision_prior,
            size: side.len(),
        })
    };

    Ok(FitTable {
        advantaged: build_group(&adv)?,
        disadvantaged: build_group(&dis)?,
        acceptance_rate,
    })
}

/// Sum of the two per-quantity divergences between matching cells, or
/// `None` when either cell is unusable.
fn cell_kl(p: &CellFit, q: &CellFit) -> Result<Option<f64>, Error> {
    if p.fallback == FallbackLevel::Zero || q.fallback == FallbackLevel::Zero {
        return Ok(None);
    }
    Ok(Some(
        weibull_kl(&p.ttno, &q.ttno)? + weibull_kl(&p.mortality, &q.mortality)?,
    ))
}

/// KL divergence between two Bernoulli distributions given by their success
/// probabilities. Nonnegative; 0 iff p == q.
pub fn binary_kl(p: f64, q: f64) -> f64 {
    let kl = p * (p / q).ln() + (1.0 - p) * ((1.0 - p) / (1.0 - q)).ln();
    // Gibbs guarantees kl >= 0; absorb rounding noise near equality.
    if (-1e-10..0.0).contains(&kl) {
        0.0
    } else {
        kl
    }
}

fn conditioned_cells(group: &GroupFits) -> Result<&[CellFit; 2], Error> {
    group.by_decision.as_ref().ok_or_else(|| {
        Error::DimensionMismatch("fit table lacks decision-conditioned cells".into())
    })
}

pub fn independence_from_fits(table: &FitTable) -> Result<f64, Error> {
    Ok(cell_kl(&table.advantaged.overall, &table.disadvantaged.overall)?.unwrap_or(0.0))
}

pub fn separation_from_fits(table: &FitTable) -> Result<f64, Error> {
    let adv = conditioned_cells(&table.advantaged)?;
    let dis = conditioned_cells(&table.disadvantaged)?;
    let p1 = table.acceptance_rate;
    let mut score = 0.0;
    for (z, p_z) in [(0, 1.0 - p1), (1, p1)] {
        if p_z > 0.0 {
            if let Some(kl) = cell_kl(&adv[z], &dis[z])? {
                score += p_z * kl;
            }
        }
    }
    Ok(score)
}

/// Class-conditional likelihood of a recipient's predictions under one
/// cell; unusable cells are uninformative and contribute a flat factor.
fn cell_likelihood(r: &RecipientRecord, cell: &CellFit) -> Result<f64, Error> {
    if cell.fallback == FallbackLevel::Zero {
        return Ok(1.0);
    }
    Ok(weibull_pdf(r.ttno, &cell.ttno)? * weibull_pdf(r.mortality, &cell.mortality)?)
}

pub fn sufficiency_from_fits(
    tuple: &DataTuple,
    table: &FitTable,
) -> Result<f64, Error> {
    let groups = [
        (&table.advantaged, conditioned_cells(&table.advantaged)?),
        (&table.disadvantaged, conditioned_cells(&table.disadvantaged)?),
    ];

    let mut total = 0.0;
    let mut used = 0usize;
    'recipients: for r in &tuple.recipients {
        let mut posterior = [0.0f64; 2];
        for (side, (group, cells)) in groups.iter().enumerate() {
            let prior1 = group.decision_prior;
            let w1 = prior1 * cell_likelihood(r, &cells[1])?;
            let w0 = (1.0 - prior1) * cell_likelihood(r, &cells[0])?;
            let denom = w0 + w1;
            if !denom.is_finite() || denom <= 0.0 {
                continue 'recipients;
            }
            posterior[side] = (w1 / denom).clamp(POSTERIOR_CLAMP, 1.0 - POSTERIOR_CLAMP);
        }
        total += binary_kl(posterior[0], posterior[1]);
        used += 1;
    }

    if used == 0 {
        return Err(Error::DegeneratePosterior);
    }
    Ok(total / used as f64)
}

/// Independence violation: divergence between the groups' unconditional
/// prediction distributions.
pub fn independence_score(tuple: &DataTuple, spec: &GroupSpec) -> Result<f64, Error> {
    let table = fit_group_distributions(tuple, spec, false, DEFAULT_MIN_SAMPLES)?;
    independence_from_fits(&table)
}

/// Separation violation: decision-conditioned divergence, weighted by the
/// pooled probability of each decision class.
pub fn separation_score(tuple: &DataTuple, spec: &GroupSpec) -> Result<f64, Error> {
    let table = fit_group_distributions(tuple, spec, true, DEFAULT_MIN_SAMPLES)?;
    separation_from_fits(&table)
}

/// Sufficiency violation: mean divergence between the groups' posterior
/// decision beliefs across recipients.
pub fn sufficiency_score(tuple: &DataTuple, spec: &GroupSpec) -> Result<f64, Error> {
    let table = fit_group_distributions(tuple, spec, true, DEFAULT_MIN_SAMPLES)?;
    sufficiency_from_fits(tuple, &table)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FairnessScores {
    pub independence: f64,
    pub separation: f64,
    pub sufficiency: f64,
}

impl FairnessScores {
    /// Scores ordered (independence, separation, sufficiency), matching the
    /// preference-weight layout everywhere downstream.
    pub fn as_array(&self) -> [f64; 3] {
        [self.independence, self.separation, self.sufficiency]
    }
}

/// All three scores from a single decision-conditioned fit table.
pub fn fairness_scores(tuple: &DataTuple, spec: &GroupSpec) -> Result<FairnessScores, Error> {
    let table = fit_group_distributions(tuple, spec, true, DEFAULT_MIN_SAMPLES)?;
    Ok(FairnessScores {
        independence: independence_from_fits(&table)?,
        separation: separation_from_fits(&table)?,
        sufficiency: sufficiency_from_fits(tuple, &table)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{DataTuple, DonorProfile, Gender, Race, RecipientRecord};

    fn recipient(
        gender: Gender,
        ttno: f64,
        mortality: f64,
        decision: bool,
    ) -> RecipientRecord {
        RecipientRecord {
            age: 40,
            race: Race::White,
            gender,
            epts: 50,
            distance: 10.0,
            ttno,
            mortality,
            decision,
        }
    }

    fn tuple_from(recipients: Vec<RecipientRecord>) -> DataTuple {
        DataTuple {
            donor: DonorProfile {
                age: 45,
                race: Race::White,
                gender: Gender::Male,
                kdpi: 50,
            },
            recipients,
        }
    }

    fn cell(shape_t: f64, scale_t: f64, shape_m: f64, scale_m: f64) -> CellFit {
        CellFit {
            ttno: WeibullParams::new(shape_t, scale_t).unwrap(),
            mortality: WeibullParams::new(shape_m, scale_m).unwrap(),
            sample_count: 5,
            fallback: FallbackLevel::Exact,
        }
    }

    fn table(adv: GroupFits, dis: GroupFits, acceptance_rate: f64) -> FitTable {
        FitTable {
            advantaged: adv,
            disadvantaged: dis,
            acceptance_rate,
        }
    }

    fn group(overall: CellFit, by_decision: Option<[CellFit; 2]>) -> GroupFits {
        GroupFits {
            overall,
            by_decision,
            decision_prior: 0.3,
            size: 5,
        }
    }

    #[test]
    fn identical_fits_give_zero_independence() {
        let c = cell(1.5, 12.0, 2.0, 0.25);
        let t = table(group(c, None), group(c, None), 0.2);
        assert_eq!(independence_from_fits(&t).unwrap(), 0.0);
    }

    #[test]
    fn exponential_scale_pair_matches_closed_form() {
        // Exponential ttno with scales 1 and 2, identical mortality fits:
        // the divergence is ln 2 - 1/2.
        let adv = cell(1.0, 1.0, 2.0, 0.25);
        let dis = cell(1.0, 2.0, 2.0, 0.25);
        let t = table(group(adv, None), group(dis, None), 0.2);
        let phi = independence_from_fits(&t).unwrap();
        assert!((phi - (2.0f64.ln() - 0.5)).abs() < 1e-12, "{phi}");
    }

    #[test]
    fn separation_weights_cells_by_class_probability() {
        let same = cell(1.5, 12.0, 2.0, 0.25);
        let adv1 = cell(1.0, 1.0, 2.0, 0.25);
        let dis1 = cell(1.0, 2.0, 2.0, 0.25);
        // Refused cells identical, accepted cells differ, P(accept) = 0.5.
        let t = table(
            group(same, Some([same, adv1])),
            group(same, Some([same, dis1])),
            0.5,
        );
        let phi = separation_from_fits(&t).unwrap();
        assert!((phi - 0.5 * (2.0f64.ln() - 0.5)).abs() < 1e-12, "{phi}");
    }

    #[test]
    fn separation_skips_an_unrepresented_class() {
        let adv1 = cell(1.0, 1.0, 2.0, 0.25);
        let dis1 = cell(1.0, 2.0, 2.0, 0.25);
        let contested = cell(1.0, 5.0, 2.0, 0.4);
        let same = cell(1.5, 12.0, 2.0, 0.25);
        // Everyone accepted: only the z=1 cells matter even though the z=0
        // cells differ.
        let t = table(
            group(same, Some([contested, adv1])),
            group(same, Some([same, dis1])),
            1.0,
        );
        let phi = separation_from_fits(&t).unwrap();
        assert!((phi - (2.0f64.ln() - 0.5)).abs() < 1e-12, "{phi}");
    }

    #[test]
    fn zero_cells_contribute_nothing() {
        let real = cell(1.5, 12.0, 2.0, 0.25);
        let mut dead = real;
        dead.fallback = FallbackLevel::Zero;
        let t = table(group(real, None), group(dead, None), 0.2);
        assert_eq!(independence_from_fits(&t).unwrap(), 0.0);
    }

    #[test]
    fn binary_kl_matches_the_worked_posterior_example() {
        let kl = binary_kl(0.8, 0.6);
        assert!((kl - 0.091_516_5).abs() < 1e-6, "{kl}");
        assert_eq!(binary_kl(0.4, 0.4), 0.0);
        assert!(binary_kl(0.2, 0.7) > 0.0);
    }

    #[test]
    fn single_gender_tuple_is_an_empty_group_error() {
        let t = tuple_from(vec![
            recipient(Gender::Male, 10.0, 0.2, true),
            recipient(Gender::Male, 12.0, 0.3, false),
            recipient(Gender::Male, 8.0, 0.25, false),
        ]);
        match independence_score(&t, &GroupSpec::new(Attribute::Gender)) {
            Err(Error::EmptyGroup { group, count, .. }) => {
                assert_eq!(group, "disadvantaged");
                assert_eq!(count, 0);
            }
            other => panic!("expected empty-group error, got {other:?}"),
        }
    }

    #[test]
    fn small_cells_inherit_down_the_ladder() {
        // Four men (one accepted), four women (one accepted): every z=1
        // cell has a single sample and inherits the group fit.
        let t = tuple_from(vec![
            recipient(Gender::Male, 10.0, 0.20, true),
            recipient(Gender::Male, 14.0, 0.30, false),
            recipient(Gender::Male, 7.0, 0.24, false),
            recipient(Gender::Male, 11.5, 0.18, false),
            recipient(Gender::Female, 20.0, 0.40, true),
            recipient(Gender::Female, 26.0, 0.55, false),
            recipient(Gender::Female, 17.0, 0.35, false),
            recipient(Gender::Female, 23.0, 0.47, false),
        ]);
        let spec = GroupSpec::new(Attribute::Gender);
        let table = fit_group_distributions(&t, &spec, true, 2).unwrap();

        for side in [&table.advantaged, &table.disadvantaged] {
            assert_eq!(side.overall.fallback, FallbackLevel::Exact);
            let cells = side.by_decision.as_ref().unwrap();
            assert_eq!(cells[1].fallback, FallbackLevel::GroupPooled);
            assert_eq!(cells[1].sample_count, 1);
            assert_eq!(cells[1].ttno, side.overall.ttno);
            assert_eq!(cells[0].fallback, FallbackLevel::Exact);
            assert_eq!(cells[0].sample_count, 3);
            assert!((side.decision_prior - 2.0 / 6.0).abs() < 1e-12);
        }

        // With inherited z=1 cells on both sides differing (group fits
        // differ), separation still sees a positive violation.
        assert!(separation_from_fits(&table).unwrap() > 0.0);
    }

    #[test]
    fn raising_min_samples_forces_inheritance() {
        let t = tuple_from(vec![
            recipient(Gender::Male, 10.0, 0.20, true),
            recipient(Gender::Male, 14.0, 0.30, false),
            recipient(Gender::Male, 7.0, 0.24, false),
            recipient(Gender::Female, 20.0, 0.40, true),
            recipient(Gender::Female, 26.0, 0.55, false),
            recipient(Gender::Female, 17.0, 0.35, false),
        ]);
        let spec = GroupSpec::new(Attribute::Gender);
        let table = fit_group_distributions(&t, &spec, true, 4).unwrap();
        // Groups of 3 cannot fit at min_samples = 4; the pool of 6 can.
        assert_eq!(table.advantaged.overall.fallback, FallbackLevel::AllPooled);
        let cells = table.advantaged.by_decision.as_ref().unwrap();
        assert_eq!(cells[0].fallback, FallbackLevel::AllPooled);
        assert_eq!(cells[1].fallback, FallbackLevel::AllPooled);
        // Both sides inherit the same pooled fit, so no violation remains.
        assert_eq!(independence_from_fits(&table).unwrap(), 0.0);
        assert_eq!(separation_from_fits(&table).unwrap(), 0.0);
    }

    #[test]
    fn constant_predictions_make_every_cell_zero() {
        let t = tuple_from(vec![
            recipient(Gender::Male, 10.0, 0.25, true),
            recipient(Gender::Male, 10.0, 0.25, false),
            recipient(Gender::Female, 10.0, 0.25, false),
            recipient(Gender::Female, 10.0, 0.25, false),
        ]);
        let spec = GroupSpec::new(Attribute::Gender);
        let table = fit_group_distributions(&t, &spec, true, 2).unwrap();
        assert_eq!(table.advantaged.overall.fallback, FallbackLevel::Zero);
        assert_eq!(independence_from_fits(&table).unwrap(), 0.0);
        assert_eq!(separation_from_fits(&table).unwrap(), 0.0);
        // Posteriors collapse to the smoothed priors: 2/4 vs 1/4.
        let phi3 = sufficiency_from_fits(&t, &table).unwrap();
        assert!((phi3 - binary_kl(0.5, 0.25)).abs() < 1e-12, "{phi3}");
    }

    #[test]
    fn scores_are_nonnegative_and_consistent_across_entry_points() {
        let t = tuple_from(vec![
            recipient(Gender::Male, 10.0, 0.20, true),
            recipient(Gender::Male, 14.0, 0.30, false),
            recipient(Gender::Male, 7.0, 0.24, false),
            recipient(Gender::Male, 12.0, 0.21, false),
            recipient(Gender::Female, 20.0, 0.40, true),
            recipient(Gender::Female, 26.0, 0.55, false),
            recipient(Gender::Female, 17.0, 0.35, false),
            recipient(Gender::Female, 24.0, 0.44, false),
        ]);
        let spec = GroupSpec::new(Attribute::Gender);
        let all = fairness_scores(&t, &spec).unwrap();
        for phi in all.as_array() {
            assert!(phi.is_finite() && phi >= 0.0, "{phi}");
        }
        assert!(all.independence > 0.0);
        assert_eq!(all.independence, independence_score(&t, &spec).unwrap());
        assert_eq!(all.separation, separation_score(&t, &spec).unwrap());
        assert_eq!(all.sufficiency, sufficiency_score(&t, &spec).unwrap());
    }
}

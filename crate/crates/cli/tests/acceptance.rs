//! End-to-end acceptance checks. Each test verifies one shipping guarantee
//! at an explicit tolerance and prints one line of measured evidence on
//! success, so `--nocapture` shows the full scorecard.

use std::process::Command;
use std::sync::OnceLock;
use std::time::Instant;

use rand::Rng;
use tempfile::tempdir;

use saff_cli::experiment::{run_cell, Cell, ExperimentGrid};
use saff_core::data::{
    synthesize_dataset, Attribute, BiasKnobs, DataTuple, Gender, Race, RecipientRecord, SynthSpec,
};
use saff_core::fairness::{fairness_scores, independence_score, GroupSpec};
use saff_core::feedback::{
    choice_probabilities, utilities, FeedbackParams, LikertScore, Notion, PopulationScenario,
    PreferenceVector,
};
use saff_core::numkit::{
    beta_cdf, beta_cdf_grad_psi, weibull_kl, weibull_mle_fit, weibull_pdf, BetaShape, NumError,
    QuadratureConfig, WeibullParams,
};
use saff_core::saff::{soft_social_score, srg_gradient, LearnerConfig, RegretTrace};
use saff_core::stream::substream;

/// Shape and scale pairs covering decreasing, constant, and increasing
/// hazards at small and large scales. All ordered pairs form the
/// divergence comparison grid.
const WEIBULL_GRID: [(f64, f64); 6] = [
    (0.5, 1.0),
    (1.0, 1.0),
    (1.0, 2.0),
    (1.5, 0.8),
    (2.0, 1.0),
    (3.0, 2.5),
];

fn ln_weibull_density(y: f64, shape: f64, scale: f64) -> f64 {
    shape.ln() - scale.ln() + (shape - 1.0) * (y / scale).ln() - (y / scale).powf(shape)
}

#[allow(clippy::too_many_arguments)]
fn simpson_refine(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    m: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        left + right + delta / 15.0
    } else {
        simpson_refine(f, a, lm, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + simpson_refine(f, m, rm, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
}

fn adaptive_simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_refine(&f, a, m, b, fa, fm, fb, whole, tol, 48)
}

/// Divergence by direct quadrature, sharing nothing with the closed form.
/// Substituting t = (y/scale_p)^shape_p turns the density-weighted integral
/// into a unit-exponential expectation, and t = exp(s) then makes the
/// integrand smooth with doubly exponential tails, so adaptive Simpson on a
/// fixed window reaches full precision.
fn quadrature_weibull_kl(p: (f64, f64), q: (f64, f64)) -> f64 {
    let f = |s: f64| {
        let t = s.exp();
        let y = p.1 * t.powf(1.0 / p.0);
        let ratio = ln_weibull_density(y, p.0, p.1) - ln_weibull_density(y, q.0, q.1);
        ratio * t * (-t).exp()
    };
    adaptive_simpson(f, -45.0, 4.6, 1e-10)
}

#[test]
fn closed_form_divergence_matches_an_independent_quadrature() {
    let start = Instant::now();
    let mut worst = 0.0f64;
    let mut worst_pair = ((0.0, 0.0), (0.0, 0.0));
    for &p in &WEIBULL_GRID {
        for &q in &WEIBULL_GRID {
            let closed = weibull_kl(
                &WeibullParams::new(p.0, p.1).unwrap(),
                &WeibullParams::new(q.0, q.1).unwrap(),
            )
            .unwrap();
            let oracle = quadrature_weibull_kl(p, q);
            let diff = (closed - oracle).abs();
            if diff > worst {
                worst = diff;
                worst_pair = (p, q);
            }
            assert!(
                diff <= 1e-6,
                "closed form {closed:.12} vs quadrature {oracle:.12} for {p:?} -> {q:?}, diff {diff:.3e}"
            );
        }
    }

    for &p in &WEIBULL_GRID {
        let params = WeibullParams::new(p.0, p.1).unwrap();
        let self_kl = weibull_kl(&params, &params).unwrap();
        assert!(
            self_kl.abs() <= 1e-10,
            "self divergence of {p:?} is {self_kl:.3e}"
        );
    }

    // At shape 1 the distribution is exponential with the scale as mean, so
    // the divergence must collapse to ln(s_q/s_p) + s_p/s_q - 1.
    for (sp, sq) in [(1.0, 2.0), (2.0, 1.0), (0.8, 2.5), (3.0, 1.5)] {
        let closed = weibull_kl(
            &WeibullParams::new(1.0, sp).unwrap(),
            &WeibullParams::new(1.0, sq).unwrap(),
        )
        .unwrap();
        let exponential = (sq / sp).ln() + sp / sq - 1.0;
        let diff = (closed - exponential).abs();
        assert!(
            diff <= 1e-10,
            "exponential reduction at scales ({sp}, {sq}): closed {closed:.12}, direct {exponential:.12}"
        );
    }

    let seconds = start.elapsed().as_secs_f64();
    assert!(seconds < 5.0, "divergence check took {seconds:.1}s, budget 5s");
    println!(
        "PASS divergence oracle: 36 pairs within 1e-6 (worst {worst:.3e} at {worst_pair:?}), identities within 1e-10, {seconds:.2}s"
    );
}

/// Surrogate regret at a free weight point, rebuilt from the public
/// perception, choice, and expectation pieces. Evaluating off the simplex is
/// what makes the comparison see the slope before projection.
fn soft_regret_at(
    scores: &[Vec<LikertScore>],
    phibar: &[[f64; 3]],
    weights: [f64; 3],
    params: &FeedbackParams,
) -> f64 {
    let mut total = 0.0;
    for (m, phi) in phibar.iter().enumerate() {
        let raw: f64 = weights.iter().zip(phi).map(|(w, p)| w * p).sum();
        let psi = raw.clamp(params.psi_clamp, 1.0 - params.psi_clamp);
        let u = utilities(psi, params).expect("interior perception mean");
        let probs = choice_probabilities(&u, params.temperature);
        let soft = soft_social_score(&probs);
        for row in scores {
            let d = f64::from(row[m].value()) - soft;
            total += d * d;
        }
    }
    total / (scores.len() * phibar.len()) as f64
}

#[test]
fn analytic_gradients_match_central_differences() {
    let start = Instant::now();
    let quad = QuadratureConfig::default();
    let mut worst_cdf = 0.0f64;
    let mut worst_regret = 0.0f64;

    for k in 0..50u64 {
        let rng = &mut substream(0xACCE55, &[k]);

        // Slope of the perception CDF with respect to its mean. The cutoff
        // is drawn where the CDF keeps interior mass: once it saturates in
        // double precision the difference quotient carries no signal, so
        // those points cannot be compared at any relative tolerance.
        let psi = rng.random_range(0.05..0.95);
        let precision = rng.random_range(1.0..40.0);
        let shape = BetaShape::from_psi(psi, precision).unwrap();
        let mut r = rng.random_range(0.05..0.95);
        for _ in 0..100 {
            if (0.01..=0.99).contains(&beta_cdf(r, &shape).unwrap()) {
                break;
            }
            r = rng.random_range(0.05..0.95);
        }
        if !(0.01..=0.99).contains(&beta_cdf(r, &shape).unwrap()) {
            r = psi;
        }
        let analytic = beta_cdf_grad_psi(r, psi, precision, &quad).unwrap();
        let h = 1e-6;
        let up = beta_cdf(r, &BetaShape::from_psi(psi + h, precision).unwrap()).unwrap();
        let down = beta_cdf(r, &BetaShape::from_psi(psi - h, precision).unwrap()).unwrap();
        let fd = (up - down) / (2.0 * h);
        let rel = (analytic - fd).abs() / analytic.abs().max(fd.abs()).max(1e-8);
        worst_cdf = worst_cdf.max(rel);
        assert!(
            rel <= 1e-4,
            "cdf slope at instance {k} (psi {psi:.3}, c {precision:.1}, r {r:.3}): analytic {analytic:.9e}, central difference {fd:.9e}, rel {rel:.3e}"
        );

        // Surrogate-regret gradient on a random instance within the sizes
        // the learner sees per update.
        let n = rng.random_range(1..=10usize);
        let m = rng.random_range(1..=5usize);
        let params = FeedbackParams {
            precision: rng.random_range(1.0..12.0),
            temperature: rng.random_range(0.5..4.0),
            ..FeedbackParams::default()
        };
        let phibar: Vec<[f64; 3]> = (0..m)
            .map(|_| {
                [
                    rng.random_range(0.05..0.95),
                    rng.random_range(0.05..0.95),
                    rng.random_range(0.05..0.95),
                ]
            })
            .collect();
        let scores: Vec<Vec<LikertScore>> = (0..n)
            .map(|_| {
                (0..m)
                    .map(|_| LikertScore::new(rng.random_range(1..=7)).unwrap())
                    .collect()
            })
            .collect();
        let mut weights = [0.0f64; 3];
        for w in &mut weights {
            *w = -(1.0 - rng.random::<f64>()).ln();
        }
        let sum: f64 = weights.iter().sum();
        for w in &mut weights {
            *w /= sum;
        }
        let beta = PreferenceVector::new(weights).unwrap();
        let analytic = srg_gradient(&scores, &phibar, &beta, &params).unwrap();
        // The difference quotient carries roundoff near h^2 curvature, so
        // components whose true slope sits at that noise scale are compared
        // absolutely against the 1e-4 floor.
        let h = 1e-5;
        for i in 0..3 {
            let mut up_w = weights;
            up_w[i] += h;
            let mut down_w = weights;
            down_w[i] -= h;
            let fd = (soft_regret_at(&scores, &phibar, up_w, &params)
                - soft_regret_at(&scores, &phibar, down_w, &params))
                / (2.0 * h);
            let rel = (analytic[i] - fd).abs() / analytic[i].abs().max(fd.abs()).max(1e-4);
            worst_regret = worst_regret.max(rel);
            assert!(
                rel <= 1e-4,
                "regret gradient component {i} at instance {k} (N {n}, M {m}): analytic {:.9e}, central difference {fd:.9e}, rel {rel:.3e}",
                analytic[i]
            );
        }
    }

    let seconds = start.elapsed().as_secs_f64();
    assert!(seconds < 30.0, "gradient check took {seconds:.1}s, budget 30s");
    println!(
        "PASS gradients: 50 instances, worst rel err {worst_cdf:.3e} (cdf slope) and {worst_regret:.3e} (regret), {seconds:.2}s"
    );
}

/// One learning run mirroring the `experiment` command: the tuple pool and
/// the grid share the seed, and the cell samples its own tuples and
/// population from substreams of it.
fn learned_weights(seed: u64, scenario: PopulationScenario) -> [f64; 3] {
    let pool = synthesize_dataset(&SynthSpec {
        seed,
        ..SynthSpec::default()
    })
    .unwrap();
    let grid = ExperimentGrid {
        participant_counts: vec![75],
        tuple_counts: vec![10],
        iterations: 1,
        attributes: vec![Attribute::Age],
        scenario,
        seed,
    };
    let cell = Cell {
        attribute: Attribute::Age,
        participants: 75,
        tuples: 10,
    };
    let trace = run_cell(&pool, cell, &grid, &LearnerConfig::default(), true).unwrap();
    trace.final_entry().unwrap().beta.weights()
}

#[test]
fn learner_recovers_a_unanimous_population_preference() {
    let start = Instant::now();
    let mut hits = 0usize;
    let mut misses = Vec::new();
    for seed in 0..20u64 {
        let scenario = PopulationScenario::FixedAtomic(Notion::Independence);
        let weight = learned_weights(seed, scenario)[0];
        if weight >= 0.85 {
            hits += 1;
        } else {
            misses.push(format!("seed {seed}: {weight:.3}"));
        }
    }
    let seconds = start.elapsed().as_secs_f64();
    assert!(
        hits >= 18,
        "unanimous preference recovered on only {hits}/20 seeds (need 18); misses: {}",
        misses.join(", ")
    );
    assert!(seconds < 120.0, "recovery check took {seconds:.1}s, budget 120s");
    println!("PASS recovery: learned weight >= 0.85 on the unanimous notion for {hits}/20 seeds, {seconds:.1}s");
}

#[test]
fn evenly_split_populations_disagree_across_seeds() {
    let start = Instant::now();
    let mut winners = [0usize; 3];
    for seed in 0..20u64 {
        let weights = learned_weights(seed, PopulationScenario::IdenticalSplit);
        let top = (0..3)
            .max_by(|&a, &b| weights[a].total_cmp(&weights[b]))
            .unwrap();
        winners[top] += 1;
    }
    let distinct = winners.iter().filter(|&&c| c > 0).count();
    let seconds = start.elapsed().as_secs_f64();
    assert!(
        distinct >= 2,
        "all 20 evenly split runs converged to the same notion (winner counts {winners:?})"
    );
    assert!(seconds < 120.0, "split check took {seconds:.1}s, budget 120s");
    println!(
        "PASS split populations: winner counts independence {} separation {} sufficiency {} across 20 seeds, {seconds:.1}s"
    , winners[0], winners[1], winners[2]);
}

struct ConvergenceGrid {
    traces: Vec<(Cell, RegretTrace)>,
    seconds: f64,
}

static CONVERGENCE_GRID: OnceLock<ConvergenceGrid> = OnceLock::new();

/// The full participant-by-tuple grid, averaged over 20 iterations of 50
/// epochs each. Computed once and shared by both regret checks.
fn convergence_grid() -> &'static ConvergenceGrid {
    CONVERGENCE_GRID.get_or_init(|| {
        let start = Instant::now();
        let pool = synthesize_dataset(&SynthSpec {
            seed: 7,
            ..SynthSpec::default()
        })
        .unwrap();
        let grid = ExperimentGrid {
            participant_counts: vec![25, 50, 75, 100],
            tuple_counts: vec![5, 10, 15],
            iterations: 20,
            attributes: vec![Attribute::Age],
            scenario: PopulationScenario::UniformRandom,
            seed: 7,
        };
        let base = LearnerConfig {
            epochs: 50,
            ..LearnerConfig::default()
        };
        let traces = grid
            .cells()
            .into_iter()
            .map(|cell| {
                let trace = run_cell(&pool, cell, &grid, &base, false).unwrap();
                (cell, trace)
            })
            .collect();
        ConvergenceGrid {
            traces,
            seconds: start.elapsed().as_secs_f64(),
        }
    })
}

#[test]
fn averaged_hard_regret_ends_at_or_below_its_start() {
    let grid = convergence_grid();
    let mut lowest = f64::INFINITY;
    let mut highest = f64::NEG_INFINITY;
    for (cell, trace) in &grid.traces {
        let first = trace.entries.first().unwrap().hard_regret;
        let last = trace.final_entry().unwrap().hard_regret;
        let ratio = last / first;
        lowest = lowest.min(ratio);
        highest = highest.max(ratio);
        assert!(
            last <= first,
            "averaged hard regret rose on {} N={} M={}: epoch 0 {first:.6}, epoch 50 {last:.6}",
            cell.attribute,
            cell.participants,
            cell.tuples
        );
    }
    assert_eq!(grid.traces.len(), 12, "grid should cover all 12 cells");
    assert!(
        grid.seconds < 600.0,
        "grid run took {:.0}s, budget 600s",
        grid.seconds
    );
    println!(
        "PASS hard regret: epoch-50/epoch-0 ratio in [{lowest:.3}, {highest:.3}] on all 12 cells, grid {:.0}s",
        grid.seconds
    );
}

#[test]
fn averaged_soft_regret_moving_average_never_rises() {
    let grid = convergence_grid();
    let window = 20;
    let mut violations = 0usize;
    let mut worst_rise = 0.0f64;
    let mut worst_at = String::new();
    for (cell, trace) in &grid.traces {
        let soft: Vec<f64> = trace.entries.iter().map(|e| e.soft_regret).collect();
        let averages: Vec<f64> = soft
            .windows(window)
            .map(|w| w.iter().sum::<f64>() / window as f64)
            .collect();
        for t in 1..averages.len() {
            let rise = averages[t] - averages[t - 1];
            if rise > 0.0 {
                violations += 1;
                if rise > worst_rise {
                    worst_rise = rise;
                    worst_at = format!(
                        "{} N={} M={} window {t} ({:.6} -> {:.6})",
                        cell.attribute,
                        cell.participants,
                        cell.tuples,
                        averages[t - 1],
                        averages[t]
                    );
                }
            }
        }
    }
    assert!(
        grid.seconds < 600.0,
        "grid run took {:.0}s, budget 600s",
        grid.seconds
    );
    assert_eq!(
        violations, 0,
        "20-epoch moving average of soft regret rose {violations} time(s); largest rise {worst_rise:.3e} at {worst_at}"
    );
    println!("PASS soft regret: 20-epoch moving averages nonincreasing on all 12 cells");
}

#[test]
fn unbiased_data_scores_near_zero_on_average() {
    let start = Instant::now();
    let tuples = synthesize_dataset(&SynthSpec::default()).unwrap();
    let mut table = String::new();
    let mut worst = 0.0f64;
    for attribute in Attribute::ALL {
        let spec = GroupSpec::new(attribute);
        let mut sums = [0.0f64; 3];
        let mut used = 0usize;
        for tuple in &tuples {
            if let Ok(scores) = fairness_scores(tuple, &spec) {
                sums[0] += scores.independence;
                sums[1] += scores.separation;
                sums[2] += scores.sufficiency;
                used += 1;
            }
        }
        assert!(used > 0, "no scoreable tuples under the {attribute} split");
        let means = sums.map(|s| s / used as f64);
        worst = means.iter().fold(worst, |w, m| w.max(*m));
        table.push_str(&format!(
            "{attribute}: independence {:.3e}, separation {:.3e}, sufficiency {:.3e} over {used} tuples; ",
            means[0], means[1], means[2]
        ));
    }
    let seconds = start.elapsed().as_secs_f64();
    assert!(seconds < 60.0, "unbiased scan took {seconds:.1}s, budget 60s");
    assert!(
        worst <= 0.05,
        "mean scores on unbiased data exceed 0.05: {table}"
    );
    println!("PASS unbiased means: {table}{seconds:.1}s");
}

#[test]
fn an_age_bias_knob_elevates_the_age_split_score() {
    let start = Instant::now();
    let spec = SynthSpec {
        knobs: BiasKnobs {
            age: 2.0,
            ..BiasKnobs::default()
        },
        ..SynthSpec::default()
    };
    let tuples = synthesize_dataset(&spec).unwrap();
    let age = GroupSpec::new(Attribute::Age);
    let gender = GroupSpec::new(Attribute::Gender);
    let mut comparable = 0usize;
    let mut elevated = 0usize;
    for tuple in &tuples {
        let (Ok(by_age), Ok(by_gender)) = (
            independence_score(tuple, &age),
            independence_score(tuple, &gender),
        ) else {
            continue;
        };
        comparable += 1;
        if by_age > by_gender {
            elevated += 1;
        }
    }
    let fraction = elevated as f64 / comparable as f64;
    let seconds = start.elapsed().as_secs_f64();
    assert!(
        comparable >= 100,
        "only {comparable}/200 tuples scoreable under both splits"
    );
    assert!(seconds < 60.0, "bias-knob scan took {seconds:.1}s, budget 60s");
    assert!(
        fraction >= 0.95,
        "doubled age scale shows up in only {elevated}/{comparable} tuples ({:.1}%)",
        100.0 * fraction
    );
    println!(
        "PASS bias knob: age split above gender split on {elevated}/{comparable} tuples ({:.1}%), {seconds:.1}s",
        100.0 * fraction
    );
}

/// Straight-from-formula reimplementation of the decision-conditioned and
/// posterior divergences. It shares only the Weibull fit, density, and
/// divergence primitives with the library; the group split, the fallback
/// ladder, the priors, and the posterior assembly are rebuilt here.
mod brute {
    use super::*;

    type FitPair = Option<(WeibullParams, WeibullParams)>;

    pub struct Group {
        prior_accept: f64,
        cells: [FitPair; 2],
    }

    fn advantaged(attribute: Attribute, r: &RecipientRecord) -> bool {
        match attribute {
            Attribute::Gender => r.gender == Gender::Male,
            Attribute::Race => r.race != Race::Black,
            Attribute::Age => r.age <= 50,
        }
    }

    fn fit_pair(members: &[&RecipientRecord]) -> FitPair {
        let ttno: Vec<f64> = members.iter().map(|r| r.ttno).collect();
        let ttno_fit = match weibull_mle_fit(&ttno, 2) {
            Ok(p) => p,
            Err(NumError::Degenerate(_)) => return None,
            Err(e) => panic!("unexpected fit error: {e}"),
        };
        let mortality: Vec<f64> = members.iter().map(|r| r.mortality).collect();
        let mortality_fit = match weibull_mle_fit(&mortality, 2) {
            Ok(p) => p,
            Err(NumError::Degenerate(_)) => return None,
            Err(e) => panic!("unexpected fit error: {e}"),
        };
        Some((ttno_fit, mortality_fit))
    }

    fn group(side: &[&RecipientRecord], pooled: FitPair) -> Group {
        let own = fit_pair(side);
        let own_fit = own.is_some();
        let accepted = side.iter().filter(|r| r.decision).count();
        let prior_accept = (accepted as f64 + 1.0) / (side.len() as f64 + 2.0);
        let mut cells = [None, None];
        for (z, cell) in cells.iter_mut().enumerate() {
            let members: Vec<&RecipientRecord> = side
                .iter()
                .copied()
                .filter(|r| r.decision == (z == 1))
                .collect();
            *cell = match fit_pair(&members) {
                Some(fit) => Some(fit),
                None if own_fit => own,
                None => pooled,
            };
        }
        Group {
            prior_accept,
            cells,
        }
    }

    fn tables(tuple: &DataTuple, attribute: Attribute) -> (Group, Group, f64) {
        let adv_side: Vec<&RecipientRecord> = tuple
            .recipients
            .iter()
            .filter(|r| advantaged(attribute, r))
            .collect();
        let dis_side: Vec<&RecipientRecord> = tuple
            .recipients
            .iter()
            .filter(|r| !advantaged(attribute, r))
            .collect();
        let everyone: Vec<&RecipientRecord> = tuple.recipients.iter().collect();
        let pooled = fit_pair(&everyone);
        let accepted = everyone.iter().filter(|r| r.decision).count();
        let rate = accepted as f64 / everyone.len() as f64;
        (group(&adv_side, pooled), group(&dis_side, pooled), rate)
    }

    /// Acceptance-weighted sum over decision outcomes of the divergence
    /// between the groups' conditional fits, skipping outcomes with zero
    /// weight or without usable fits on both sides.
    pub fn separation(tuple: &DataTuple, attribute: Attribute) -> f64 {
        let (adv, dis, rate) = tables(tuple, attribute);
        let mut total = 0.0;
        for (z, weight) in [(0usize, 1.0 - rate), (1, rate)] {
            if weight == 0.0 {
                continue;
            }
            if let (Some(a), Some(d)) = (&adv.cells[z], &dis.cells[z]) {
                total += weight
                    * (weibull_kl(&a.0, &d.0).unwrap() + weibull_kl(&a.1, &d.1).unwrap());
            }
        }
        total
    }

    /// Mean over recipients of the divergence between the two groups'
    /// acceptance posteriors for that recipient's predictions. Posteriors
    /// come from Laplace-smoothed priors and the conditional densities, with
    /// unusable cells contributing a flat likelihood.
    pub fn sufficiency(tuple: &DataTuple, attribute: Attribute) -> f64 {
        let (adv, dis, _) = tables(tuple, attribute);
        let mut total = 0.0;
        let mut used = 0usize;
        'recipient: for r in &tuple.recipients {
            let mut posterior = [0.0f64; 2];
            for (slot, g) in [&adv, &dis].into_iter().enumerate() {
                let likelihood = |cell: &FitPair| -> f64 {
                    match cell {
                        None => 1.0,
                        Some((t, d)) => {
                            weibull_pdf(r.ttno, t).unwrap() * weibull_pdf(r.mortality, d).unwrap()
                        }
                    }
                };
                let accept = g.prior_accept * likelihood(&g.cells[1]);
                let refuse = (1.0 - g.prior_accept) * likelihood(&g.cells[0]);
                let denominator = accept + refuse;
                if !denominator.is_finite() || denominator <= 0.0 {
                    continue 'recipient;
                }
                posterior[slot] = (accept / denominator).clamp(1e-9, 1.0 - 1e-9);
            }
            let (p, q) = (posterior[0], posterior[1]);
            total += p * (p / q).ln() + (1.0 - p) * ((1.0 - p) / (1.0 - q)).ln();
            used += 1;
        }
        assert!(used > 0, "no usable recipients in a scoreable tuple");
        total / used as f64
    }
}

#[test]
fn conditional_scores_match_a_straight_reimplementation() {
    let start = Instant::now();
    let rich = synthesize_dataset(&SynthSpec {
        num_tuples: 12,
        recipients_per_tuple: 12,
        seed: 41,
        ..SynthSpec::default()
    })
    .unwrap();
    // Four-recipient tuples force the conditional cells through every
    // fallback level of the fit ladder.
    let sparse = synthesize_dataset(&SynthSpec {
        num_tuples: 12,
        recipients_per_tuple: 4,
        seed: 42,
        ..SynthSpec::default()
    })
    .unwrap();

    let mut checked = 0usize;
    let mut worst = 0.0f64;
    for tuple in rich.iter().chain(sparse.iter()) {
        for attribute in Attribute::ALL {
            let spec = GroupSpec::new(attribute);
            let Ok(scores) = fairness_scores(tuple, &spec) else {
                continue;
            };
            let separation = brute::separation(tuple, attribute);
            let sufficiency = brute::sufficiency(tuple, attribute);
            let sep_diff = (scores.separation - separation).abs();
            let suf_diff = (scores.sufficiency - sufficiency).abs();
            worst = worst.max(sep_diff).max(suf_diff);
            assert!(
                sep_diff <= 1e-9,
                "separation under the {attribute} split: library {:.12}, reimplementation {separation:.12}",
                scores.separation
            );
            assert!(
                suf_diff <= 1e-9,
                "sufficiency under the {attribute} split: library {:.12}, reimplementation {sufficiency:.12}",
                scores.sufficiency
            );
            checked += 1;
        }
    }
    let seconds = start.elapsed().as_secs_f64();
    assert!(
        checked >= 20,
        "only {checked} scoreable tuple-attribute pairs, need at least 20"
    );
    println!(
        "PASS reimplementation: {checked} tuple-attribute pairs within 1e-9 (worst {worst:.3e}), {seconds:.1}s"
    );
}

#[test]
fn experiment_summaries_are_bit_identical_serial_and_parallel() {
    let start = Instant::now();
    let dir = tempdir().unwrap();
    let common = [
        "experiment",
        "--participants",
        "10,25",
        "--tuples",
        "5",
        "--iterations",
        "3",
        "--attributes",
        "age",
        "--epochs",
        "10",
        "--seed",
        "9",
    ];
    for (mode, extra) in [("par", None), ("ser", Some("--serial"))] {
        let mut args: Vec<&str> = common.to_vec();
        args.extend_from_slice(&["-o", mode]);
        if let Some(flag) = extra {
            args.push(flag);
        }
        let status = Command::new(env!("CARGO_BIN_EXE_saff"))
            .args(&args)
            .current_dir(dir.path())
            .status()
            .unwrap();
        assert!(status.success(), "experiment run {mode} failed");
    }
    let parallel = std::fs::read(dir.path().join("par").join("summary.csv")).unwrap();
    let serial = std::fs::read(dir.path().join("ser").join("summary.csv")).unwrap();
    assert_eq!(
        parallel, serial,
        "summary bytes differ between serial and parallel runs of the same seed"
    );
    let seconds = start.elapsed().as_secs_f64();
    println!(
        "PASS determinism: serial and parallel summaries are byte-identical ({} bytes, {seconds:.1}s)",
        parallel.len()
    );
}

//! Adaptive Gauss-Kronrod quadrature on finite intervals.
//!
//! A 15-point Kronrod rule with its embedded 7-point Gauss rule estimates
//! each subinterval; the worst subintervals are bisected until the local
//! error estimates fit inside the tolerance budget. Kronrod nodes are
//! strictly interior, so integrable endpoint singularities never get
//! evaluated at the endpoint itself.

use crate::numkit::NumError;

/// Tolerances and the subdivision budget for adaptive quadrature.
#[derive(Debug, Clone, Copy)]
pub struct QuadratureConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            abs_tol: 1e-10,
            rel_tol: 1e-8,
            max_subdivisions: 200,
        }
    }
}

// 15-point Kronrod abscissae on [-1, 1], nonnegative half, ascending.
// Even indices are the embedded 7-point Gauss nodes.
const XGK: [f64; 8] = [
    0.0,
    0.207_784_955_007_898_467_600_689_4,
    0.405_845_151_377_397_166_906_606_4,
    0.586_087_235_467_691_130_294_144_8,
    0.741_531_185_599_394_439_863_864_8,
    0.864_864_423_359_769_072_789_712_8,
    0.949_107_912_342_758_524_526_189_7,
    0.991_455_371_120_812_639_206_854_7,
];

const WGK: [f64; 8] = [
    0.209_482_141_084_727_828_012_999_2,
    0.204_432_940_075_298_892_414_162_0,
    0.190_350_578_064_785_409_913_256_4,
    0.169_004_726_639_267_902_826_583_4,
    0.140_653_259_715_525_918_745_189_6,
    0.104_790_010_322_250_183_839_876_3,
    0.063_092_092_629_978_553_290_700_7,
    0.022_935_322_010_529_224_963_732_0,
];

// Weights of the embedded Gauss rule, indexed by XGK position / 2.
const WG: [f64; 4] = [
    0.417_959_183_673_469_387_755_102_0,
    0.381_830_050_505_118_944_950_369_8,
    0.279_705_391_489_276_667_901_467_8,
    0.129_484_966_168_869_693_270_611_4,
];

struct PanelEstimate {
    kronrod: (f64, f64),
    err: (f64, f64),
    finite: bool,
}

fn gk15_pair<F: Fn(f64) -> (f64, f64)>(f: &F, lo: f64, hi: f64) -> PanelEstimate {
    let center = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);

    let mut kron = (0.0, 0.0);
    let mut gauss = (0.0, 0.0);
    let mut finite = true;

    for (i, (&x, &wk)) in XGK.iter().zip(WGK.iter()).enumerate() {
        let points: &[f64] = if i == 0 { &[0.0][..] } else { &[-x, x][..] };
        for &s in points {
            let (p, q) = f(center + half * s);
            if !(p.is_finite() && q.is_finite()) {
                finite = false;
            }
            kron.0 += wk * p;
            kron.1 += wk * q;
            if i % 2 == 0 {
                let wg = WG[i / 2];
                gauss.0 += wg * p;
                gauss.1 += wg * q;
            }
        }
    }

    kron.0 *= half;
    kron.1 *= half;
    gauss.0 *= half;
    gauss.1 *= half;
    PanelEstimate {
        kronrod: kron,
        err: ((kron.0 - gauss.0).abs(), (kron.1 - gauss.1).abs()),
        finite,
    }
}

/// Integrates a pair of integrands sharing their evaluation points over
/// `[lo, hi]`, adaptively refining until both components meet tolerance.
pub fn integrate_pair<F>(
    f: F,
    lo: f64,
    hi: f64,
    cfg: &QuadratureConfig,
) -> Result<(f64, f64), NumError>
where
    F: Fn(f64) -> (f64, f64),
{
    if !(lo.is_finite() && hi.is_finite()) {
        return Err(NumError::Domain(format!(
            "quadrature interval [{lo}, {hi}] must be finite"
        )));
    }
    if lo > hi {
        return Err(NumError::Domain(format!(
            "quadrature interval [{lo}, {hi}] is reversed"
        )));
    }
    if lo == hi {
        return Ok((0.0, 0.0));
    }

    let whole = gk15_pair(&f, lo, hi);
    if !whole.finite {
        return Err(NumError::NonFinite("quadrature integrand".into()));
    }
    // The first pass fixes the scale the relative tolerance refers to.
    let budget = (
        cfg.abs_tol.max(cfg.rel_tol * whole.kronrod.0.abs()),
        cfg.abs_tol.max(cfg.rel_tol * whole.kronrod.1.abs()),
    );

    // Global refinement: keep bisecting the panel with the worst error
    // until the summed error of every panel fits the budget. Local
    // allocation would never terminate on self-similar endpoint
    // singularities, whose panel error shrinks exactly as fast as a
    // width-proportional allowance.
    let mut active: Vec<(f64, f64, PanelEstimate)> = vec![(lo, hi, whole)];
    let mut frozen: Vec<PanelEstimate> = Vec::new();
    let mut frozen_err = (0.0f64, 0.0f64);
    let mut splits = 0usize;

    loop {
        let mut total = frozen_err;
        for (_, _, p) in &active {
            total.0 += p.err.0;
            total.1 += p.err.1;
        }
        if total.0 <= budget.0 && total.1 <= budget.1 {
            break;
        }

        let severity =
            |p: &PanelEstimate| (p.err.0 / budget.0).max(p.err.1 / budget.1);
        let worst = (0..active.len())
            .max_by(|&a, &b| severity(&active[a].2).total_cmp(&severity(&active[b].2)));
        let Some(i) = worst else {
            return Err(NumError::QuadratureFailure {
                subdivisions: splits,
                error: total.0.max(total.1),
            });
        };
        let (a, b, panel) = active.swap_remove(i);

        // Intervals at floating-point resolution cannot be refined further;
        // park them and spend the budget elsewhere.
        if (b - a) <= f64::EPSILON * (a.abs() + b.abs()) || (b - a) < f64::MIN_POSITIVE * 16.0 {
            frozen_err.0 += panel.err.0;
            frozen_err.1 += panel.err.1;
            frozen.push(panel);
            continue;
        }
        if splits >= cfg.max_subdivisions {
            return Err(NumError::QuadratureFailure {
                subdivisions: splits,
                error: total.0.max(total.1),
            });
        }
        splits += 1;
        let mid = 0.5 * (a + b);
        let left = gk15_pair(&f, a, mid);
        let right = gk15_pair(&f, mid, b);
        if !(left.finite && right.finite) {
            return Err(NumError::NonFinite("quadrature integrand".into()));
        }
        active.push((a, mid, left));
        active.push((mid, b, right));
    }

    let mut sum = (0.0, 0.0);
    for p in active.iter().map(|(_, _, p)| p).chain(frozen.iter()) {
        sum.0 += p.kronrod.0;
        sum.1 += p.kronrod.1;
    }
    if !(sum.0.is_finite() && sum.1.is_finite()) {
        return Err(NumError::NonFinite("quadrature sum".into()));
    }
    Ok(sum)
}

/// Integrates a single integrand over `[lo, hi]`.
pub fn integrate<F>(f: F, lo: f64, hi: f64, cfg: &QuadratureConfig) -> Result<f64, NumError>
where
    F: Fn(f64) -> f64,
{
    integrate_pair(|t| (f(t), 0.0), lo, hi, cfg).map(|(v, _)| v)
}

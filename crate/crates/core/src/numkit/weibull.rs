//! Weibull density, maximum-likelihood fitting, and the closed-form KL
//! divergence between two Weibull distributions.

use crate::numkit::special::{lgamma, EULER_GAMMA};
use crate::numkit::NumError;
use serde::{Deserialize, Serialize};

/// Exponent magnitude beyond which `exp` overflows f64.
const EXP_OVERFLOW: f64 = 709.0;

/// Weibull shape and scale. Shapes are clamped to [1e-2, 1e2]; fits on a
/// handful of samples otherwise run away along the shape axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeibullParams {
    shape: f64,
    scale: f64,
}

pub const SHAPE_MIN: f64 = 1e-2;
pub const SHAPE_MAX: f64 = 1e2;

impl WeibullParams {
    pub fn new(shape: f64, scale: f64) -> Result<Self, NumError> {
        if !(shape.is_finite() && scale.is_finite()) || shape <= 0.0 || scale <= 0.0 {
            return Err(NumError::Domain(format!(
                "Weibull parameters must be finite and positive, got ({shape}, {scale})"
            )));
        }
        Ok(Self {
            shape: shape.clamp(SHAPE_MIN, SHAPE_MAX),
            scale,
        })
    }

    pub fn shape(&self) -> f64 {
        self.shape
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }
}

/// Weibull density at `y ≥ 0`.
pub fn weibull_pdf(y: f64, p: &WeibullParams) -> Result<f64, NumError> {
    if !y.is_finite() {
        return Err(NumError::NonFinite("Weibull density argument".into()));
    }
    if y < 0.0 {
        return Err(NumError::Domain(format!(
            "Weibull density argument must be nonnegative, got {y}"
        )));
    }
    let (k, lam) = (p.shape, p.scale);
    if y == 0.0 {
        // The y^{k-1} factor decides the boundary value.
        return Ok(match k {
            k if k > 1.0 => 0.0,
            k if k == 1.0 => 1.0 / lam,
            _ => f64::INFINITY,
        });
    }
    let z = y / lam;
    let ln_pdf = k.ln() - lam.ln() + (k - 1.0) * z.ln() - z.powf(k);
    Ok(ln_pdf.exp())
}

/// KL divergence KL(p ‖ q) between two Weibull distributions, in closed
/// form:
///
///   ln(k/λᵏ) − ln(k'/λ'ᵏ') + (k − k')(ln λ − γ/k)
///     + (λ/λ')ᵏ' Γ(k'/k + 1) − 1
///
/// where (k, λ) are the shape and scale of `p`, primes mark `q`, and γ is
/// the Euler-Mascheroni constant.
pub fn weibull_kl(p: &WeibullParams, q: &WeibullParams) -> Result<f64, NumError> {
    let (k, lam) = (p.shape, p.scale);
    let (kq, lamq) = (q.shape, q.scale);
    // (λ/λ')^{k'} Γ(k'/k + 1) evaluated in log space so extreme scale
    // ratios surface as an explicit overflow instead of infinity.
    let ln_gamma_term = lgamma(kq / k + 1.0)?;
    let exponent = kq * (lam.ln() - lamq.ln()) + ln_gamma_term;
    if exponent > EXP_OVERFLOW {
        return Err(NumError::Overflow(format!(
            "Weibull KL cross term exp({exponent:.3e})"
        )));
    }
    let v = k.ln() - k * lam.ln() - (kq.ln() - kq * lamq.ln())
        + (k - kq) * (lam.ln() - EULER_GAMMA / k)
        + exponent.exp()
        - 1.0;
    if !v.is_finite() {
        return Err(NumError::NonFinite("Weibull KL".into()));
    }
    // KL is nonnegative; absorb round-off just below zero.
    Ok(if (-1e-10..0.0).contains(&v) { 0.0 } else { v })
}

/// Maximum-likelihood Weibull fit.
///
/// The shape solves the profile-likelihood equation
///
///   1/k + mean(ln y) − Σ yᵢᵏ ln yᵢ / Σ yᵢᵏ = 0
///
/// by Newton iteration inside a bisection safeguard (the left side is
/// strictly decreasing in k), then the scale follows in closed form as
/// λ = (Σ yᵢᵏ / n)^{1/k}.
pub fn weibull_mle_fit(samples: &[f64], min_samples: usize) -> Result<WeibullParams, NumError> {
    for (i, &y) in samples.iter().enumerate() {
        if !y.is_finite() || y <= 0.0 {
            return Err(NumError::NonPositiveSample(i));
        }
    }
    let n = samples.len();
    if n < min_samples.max(1) {
        return Err(NumError::Degenerate(format!(
            "{n} sample(s), need at least {}",
            min_samples.max(1)
        )));
    }
    let y_max = samples.iter().cloned().fold(f64::MIN, f64::max);
    let y_min = samples.iter().cloned().fold(f64::MAX, f64::min);
    if y_max == y_min {
        return Err(NumError::Degenerate(
            "all samples identical; shape is unbounded".into(),
        ));
    }

    let logs: Vec<f64> = samples.iter().map(|y| y.ln()).collect();
    let mean_log = logs.iter().sum::<f64>() / n as f64;
    // Ratios w = y / y_max keep y^k sums bounded for large trial shapes.
    let ratios: Vec<f64> = samples.iter().map(|y| y / y_max).collect();
    let log_ratios: Vec<f64> = ratios.iter().map(|w| w.ln()).collect();

    // g(k) = 1/k + mean(ln y) − Σ wᵏ ln y / Σ wᵏ and its derivative.
    let g_and_dg = |k: f64| -> (f64, f64) {
        let mut s0 = 0.0; // Σ w^k
        let mut s1 = 0.0; // Σ w^k ln y
        let mut d0 = 0.0; // Σ w^k ln w
        let mut d1 = 0.0; // Σ w^k ln w ln y
        for i in 0..n {
            let wk = (k * log_ratios[i]).exp();
            s0 += wk;
            s1 += wk * logs[i];
            d0 += wk * log_ratios[i];
            d1 += wk * log_ratios[i] * logs[i];
        }
        let g = 1.0 / k + mean_log - s1 / s0;
        let dg = -1.0 / (k * k) - (d1 * s0 - s1 * d0) / (s0 * s0);
        (g, dg)
    };

    // g decreases from +∞ to mean(ln y) − ln y_max < 0, so it has exactly
    // one root. Its sign at the clamp bounds tells whether the root even
    // lies inside [SHAPE_MIN, SHAPE_MAX]; only then is refinement needed.
    let shape = if g_and_dg(SHAPE_MAX).0 >= 0.0 {
        SHAPE_MAX
    } else if g_and_dg(SHAPE_MIN).0 <= 0.0 {
        SHAPE_MIN
    } else {
        let mut lo = SHAPE_MIN;
        let mut hi = SHAPE_MAX;
        // Method-of-moments start: shape ≈ (cv)^{-1.086}.
        let mean = samples.iter().sum::<f64>() / n as f64;
        let var = samples.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / n as f64;
        let cv = (var.sqrt() / mean).max(1e-12);
        let mut k = cv.powf(-1.086).clamp(lo, hi);

        const TOL: f64 = 1e-10;
        for _ in 0..100 {
            let (g, dg) = g_and_dg(k);
            if g > 0.0 {
                lo = k;
            } else {
                hi = k;
            }
            let newton = k - g / dg;
            let next = if dg.is_finite() && newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
            let step = (next - k).abs();
            k = next;
            if step <= TOL * k.max(1.0) {
                break;
            }
        }
        k
    };
    // Scale is the exact conditional MLE at the (possibly clamped) shape.
    let s0: f64 = ratios.iter().map(|w| w.powf(shape)).sum();
    let scale = y_max * (s0 / n as f64).powf(1.0 / shape);
    WeibullParams::new(shape, scale)
}

//! Gamma-family special functions and incomplete beta integrals, including
//! the gradient of the Beta CDF with respect to the perception mean.
//!
//! The perception model places a Beta(ψc, (1-ψ)c) distribution over the
//! unit interval. Training differentiates region probabilities with respect
//! to ψ, which needs the shape-parameter derivatives of the lower
//! incomplete beta function
//!
//!   ∂B(r; a, b)/∂a = ∫₀ʳ tᵃ⁻¹(1-t)ᵇ⁻¹ ln t dt
//!   ∂B(r; a, b)/∂b = ∫₀ʳ tᵃ⁻¹(1-t)ᵇ⁻¹ ln(1-t) dt
//!
//! evaluated by adaptive quadrature. The segment touching t = 0 is
//! transformed with u = tᵃ, which absorbs the algebraic endpoint
//! singularity and leaves an integrable logarithmic one; the segment
//! touching t = 1 is mirrored with v = (1-t)ᵇ.

use crate::numkit::quad::{integrate_pair, QuadratureConfig};
use crate::numkit::NumError;
use statrs::function::{beta as sf_beta, gamma as sf_gamma};

pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Perception means are clamped to [ε, 1-ε] before Beta shapes are formed,
/// keeping both shape parameters strictly positive.
pub const PSI_EPSILON: f64 = 1e-3;

/// Natural log of the gamma function, `x > 0`.
pub fn lgamma(x: f64) -> Result<f64, NumError> {
    if !x.is_finite() || x <= 0.0 {
        return Err(NumError::Domain(format!("lgamma requires x > 0, got {x}")));
    }
    Ok(sf_gamma::ln_gamma(x))
}

/// Derivative of `lgamma`, `x > 0`.
pub fn digamma(x: f64) -> Result<f64, NumError> {
    if !x.is_finite() || x <= 0.0 {
        return Err(NumError::Domain(format!("digamma requires x > 0, got {x}")));
    }
    Ok(sf_gamma::digamma(x))
}

/// Shape parameters of a Beta distribution, both strictly positive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaShape {
    alpha: f64,
    beta: f64,
}

impl BetaShape {
    pub fn new(alpha: f64, beta: f64) -> Result<Self, NumError> {
        if !(alpha.is_finite() && beta.is_finite()) || alpha <= 0.0 || beta <= 0.0 {
            return Err(NumError::Domain(format!(
                "Beta shapes must be finite and positive, got ({alpha}, {beta})"
            )));
        }
        Ok(Self { alpha, beta })
    }

    /// Shapes (ψc, (1-ψ)c) of the perception distribution with mean ψ and
    /// precision c. ψ is clamped to [ε, 1-ε] first.
    pub fn from_psi(psi: f64, precision: f64) -> Result<Self, NumError> {
        if !psi.is_finite() {
            return Err(NumError::NonFinite("perception mean".into()));
        }
        if !precision.is_finite() || precision <= 0.0 {
            return Err(NumError::Domain(format!(
                "precision must be positive, got {precision}"
            )));
        }
        let p = psi.clamp(PSI_EPSILON, 1.0 - PSI_EPSILON);
        Self::new(p * precision, (1.0 - p) * precision)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }
}

fn check_beta_args(r: f64, a: f64, b: f64) -> Result<(), NumError> {
    if !(r.is_finite() && a.is_finite() && b.is_finite()) {
        return Err(NumError::NonFinite("incomplete beta argument".into()));
    }
    if !(0.0..=1.0).contains(&r) {
        return Err(NumError::Domain(format!(
            "integration limit r must lie in [0, 1], got {r}"
        )));
    }
    if a <= 0.0 || b <= 0.0 {
        return Err(NumError::Domain(format!(
            "Beta shapes must be positive, got ({a}, {b})"
        )));
    }
    Ok(())
}

/// Lower incomplete beta function `B(r; a, b)`, unregularized.
pub fn incomplete_beta(r: f64, a: f64, b: f64) -> Result<f64, NumError> {
    check_beta_args(r, a, b)?;
    Ok(sf_beta::beta_inc(a, b, r))
}

/// CDF of the Beta distribution at `r`.
pub fn beta_cdf(r: f64, shape: &BetaShape) -> Result<f64, NumError> {
    if !r.is_finite() {
        return Err(NumError::NonFinite("Beta CDF argument".into()));
    }
    if !(0.0..=1.0).contains(&r) {
        return Err(NumError::Domain(format!(
            "Beta CDF argument must lie in [0, 1], got {r}"
        )));
    }
    Ok(sf_beta::beta_reg(shape.alpha, shape.beta, r))
}

// Shape-gradient pair of B(·; a, b)/B(a, b) over one segment
// [lo, hi] ⊆ [0, 1]. Component 0 carries the ln t weight, component 1 the
// ln(1-t) weight. The complete-beta normalization sits inside the integrand
// so tolerance budgets act on the scale the CDF gradient uses; the raw B
// gradients in a tail can run many orders of magnitude below B itself, and
// quadrature error on them blows up once divided by B afterwards.
fn grad_segment(
    lo: f64,
    hi: f64,
    a: f64,
    b: f64,
    ln_b: f64,
    cfg: &QuadratureConfig,
) -> Result<(f64, f64), NumError> {
    if lo == hi {
        return Ok((0.0, 0.0));
    }
    if lo == 0.0 {
        // u = t^a: t^{a-1} dt = du/a, so the algebraic singularity at 0 is
        // absorbed exactly; ln t = ln u / a stays integrable.
        let upper = hi.powf(a);
        let scale = a.ln() + ln_b;
        return integrate_pair(
            |u| {
                let t = u.powf(1.0 / a);
                let l1p = (-t).ln_1p();
                let base = ((b - 1.0) * l1p - scale).exp();
                (base * u.ln() / a, base * l1p)
            },
            0.0,
            upper,
            cfg,
        );
    }
    if hi == 1.0 {
        // v = (1-t)^b mirrors the same transform at the upper endpoint.
        let upper = (1.0 - lo).powf(b);
        let scale = b.ln() + ln_b;
        return integrate_pair(
            |v| {
                let one_minus_t = v.powf(1.0 / b);
                let t = 1.0 - one_minus_t;
                let base = ((a - 1.0) * t.ln() - scale).exp();
                (base * t.ln(), base * v.ln() / b)
            },
            0.0,
            upper,
            cfg,
        );
    }
    integrate_pair(
        |t| {
            let l1p = (-t).ln_1p();
            let w = ((a - 1.0) * t.ln() + (b - 1.0) * l1p - ln_b).exp();
            (w * t.ln(), w * l1p)
        },
        lo,
        hi,
        cfg,
    )
}

// Gradient pair of the B(a, b)-scaled lower incomplete beta at `r`, split
// at 0.5 so each piece gets the endpoint transform suited to it.
fn grad_scaled(
    r: f64,
    a: f64,
    b: f64,
    ln_b: f64,
    cfg: &QuadratureConfig,
) -> Result<(f64, f64), NumError> {
    let mid = r.min(0.5);
    let (mut da, mut db) = grad_segment(0.0, mid, a, b, ln_b, cfg)?;
    if r > mid {
        let (ua, ub) = grad_segment(mid, r, a, b, ln_b, cfg)?;
        da += ua;
        db += ub;
    }
    Ok((da, db))
}

/// Gradient `(∂B/∂a, ∂B/∂b)` of the lower incomplete beta function at `r`.
///
/// Both components are nonpositive on (0, 1].
pub fn incomplete_beta_grad(
    r: f64,
    a: f64,
    b: f64,
    cfg: &QuadratureConfig,
) -> Result<(f64, f64), NumError> {
    check_beta_args(r, a, b)?;
    if r == 0.0 {
        return Ok((0.0, 0.0));
    }
    let ln_b = sf_beta::ln_beta(a, b);
    let (da, db) = grad_scaled(r, a, b, ln_b, cfg)?;
    Ok((da * ln_b.exp(), db * ln_b.exp()))
}

// Scaled-gradient prefix over ascending bounds in (0, 1], sharing the
// segment quadratures between adjacent bounds.
fn grad_prefix_scaled(
    bounds: &[f64],
    a: f64,
    b: f64,
    ln_b: f64,
    cfg: &QuadratureConfig,
) -> Result<Vec<(f64, f64)>, NumError> {
    for pair in bounds.windows(2) {
        if pair[0] >= pair[1] {
            return Err(NumError::Domain(
                "prefix bounds must be strictly ascending".into(),
            ));
        }
    }
    let mut out = Vec::with_capacity(bounds.len());
    let mut acc = (0.0, 0.0);
    let mut lo = 0.0;
    for &hi in bounds {
        check_beta_args(hi, a, b)?;
        if hi <= 0.0 {
            return Err(NumError::Domain(
                "prefix bounds must be strictly positive".into(),
            ));
        }
        let (da, db) = grad_segment(lo, hi, a, b, ln_b, cfg)?;
        acc.0 += da;
        acc.1 += db;
        out.push(acc);
        lo = hi;
    }
    Ok(out)
}

/// Gradients of the lower incomplete beta function at every bound of an
/// ascending sequence in (0, 1], sharing the segment quadratures between
/// adjacent bounds.
pub fn incomplete_beta_grad_prefix(
    bounds: &[f64],
    a: f64,
    b: f64,
    cfg: &QuadratureConfig,
) -> Result<Vec<(f64, f64)>, NumError> {
    let ln_b = sf_beta::ln_beta(a, b);
    let scaled = grad_prefix_scaled(bounds, a, b, ln_b, cfg)?;
    Ok(scaled
        .into_iter()
        .map(|(da, db)| (da * ln_b.exp(), db * ln_b.exp()))
        .collect())
}

/// Derivative of the Beta(ψc, (1-ψ)c) CDF at `r` with respect to ψ.
///
/// Differentiating F(r; a, b) = B(r; a, b) / B(a, b) through both the
/// numerator and the normalizing constant gives
///
///   ∂F/∂ψ = (c / B(a,b)) · [∂ₐB(r; a,b) − ∂ᵦB(r; a,b)]
///           − F(r; a,b) · c · (ψ₀(a) − ψ₀(b))
///
/// with a = ψc, b = (1-ψ)c and ψ₀ the digamma function.
pub fn beta_cdf_grad_psi(
    r: f64,
    psi: f64,
    precision: f64,
    cfg: &QuadratureConfig,
) -> Result<f64, NumError> {
    if !(PSI_EPSILON..=1.0 - PSI_EPSILON).contains(&psi) {
        return Err(NumError::Domain(format!(
            "perception mean must lie in [{PSI_EPSILON}, {}], got {psi}",
            1.0 - PSI_EPSILON
        )));
    }
    let shape = BetaShape::from_psi(psi, precision)?;
    check_beta_args(r, shape.alpha, shape.beta)?;
    if r == 0.0 || r == 1.0 {
        // F(0) = 0 and F(1) = 1 for every ψ.
        return Ok(0.0);
    }
    let ln_b = sf_beta::ln_beta(shape.alpha, shape.beta);
    let scaled = grad_scaled(r, shape.alpha, shape.beta, ln_b, cfg)?;
    grad_psi_from_parts(r, &shape, precision, scaled)
}

/// `beta_cdf_grad_psi` at every bound of an ascending sequence, sharing
/// quadrature work. Bounds equal to 0 or 1 yield exact zeros.
pub fn beta_cdf_grad_psi_many(
    bounds: &[f64],
    psi: f64,
    precision: f64,
    cfg: &QuadratureConfig,
) -> Result<Vec<f64>, NumError> {
    if !(PSI_EPSILON..=1.0 - PSI_EPSILON).contains(&psi) {
        return Err(NumError::Domain(format!(
            "perception mean must lie in [{PSI_EPSILON}, {}], got {psi}",
            1.0 - PSI_EPSILON
        )));
    }
    let shape = BetaShape::from_psi(psi, precision)?;
    let interior: Vec<f64> = bounds
        .iter()
        .copied()
        .filter(|&r| r > 0.0 && r < 1.0)
        .collect();
    let ln_b = sf_beta::ln_beta(shape.alpha, shape.beta);
    let grads = grad_prefix_scaled(&interior, shape.alpha, shape.beta, ln_b, cfg)?;
    let mut by_bound = std::collections::HashMap::new();
    for (&r, &g) in interior.iter().zip(grads.iter()) {
        by_bound.insert(r.to_bits(), g);
    }
    bounds
        .iter()
        .map(|&r| {
            check_beta_args(r, shape.alpha, shape.beta)?;
            if r == 0.0 || r == 1.0 {
                return Ok(0.0);
            }
            grad_psi_from_parts(r, &shape, precision, by_bound[&r.to_bits()])
        })
        .collect()
}

// `(da, db)` are the B(a, b)-scaled incomplete-beta gradients at `r`.
fn grad_psi_from_parts(
    r: f64,
    shape: &BetaShape,
    precision: f64,
    (da, db): (f64, f64),
) -> Result<f64, NumError> {
    let cdf = sf_beta::beta_reg(shape.alpha, shape.beta, r);
    let dig = sf_gamma::digamma(shape.alpha) - sf_gamma::digamma(shape.beta);
    let v = precision * ((da - db) - cdf * dig);
    if !v.is_finite() {
        return Err(NumError::NonFinite("Beta CDF perception gradient".into()));
    }
    Ok(v)
}

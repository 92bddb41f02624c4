//! Numerical substrate: Weibull fitting and divergence, incomplete beta
//! integrals with parameter gradients, adaptive quadrature, and Euclidean
//! simplex projection.

mod quad;
mod simplex;
mod special;
mod weibull;

pub use quad::{integrate, integrate_pair, QuadratureConfig};
pub use simplex::project_to_simplex;
pub use special::{
    beta_cdf, beta_cdf_grad_psi, beta_cdf_grad_psi_many, digamma, incomplete_beta,
    incomplete_beta_grad, incomplete_beta_grad_prefix, lgamma, BetaShape, EULER_GAMMA,
    PSI_EPSILON,
};
pub use weibull::{weibull_kl, weibull_mle_fit, weibull_pdf, WeibullParams};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NumError {
    #[error("domain error: {0}")]
    Domain(String),

    /// Too few samples, or all samples identical: no usable fit.
    #[error("degenerate sample set: {0}")]
    Degenerate(String),

    #[error("non-positive or non-finite sample at index {0}")]
    NonPositiveSample(usize),

    #[error("overflow in {0}")]
    Overflow(String),

    #[error("quadrature error estimate {error:.3e} after {subdivisions} subdivisions")]
    QuadratureFailure { subdivisions: usize, error: f64 },

    #[error("non-finite value in {0}")]
    NonFinite(String),
}

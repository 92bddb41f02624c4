//! Group-fairness scoring for organ-offer prediction models and learning of
//! social preference weights from human fairness feedback.
//!
//! The pipeline has three stages. [`fairness`] quantifies how strongly a
//! decision-support tuple violates three group-fairness notions
//! (independence, separation, sufficiency) via KL divergences between
//! Weibull fits of the predicted quantities per demographic group.
//! [`feedback`] models how a panel of participants with heterogeneous
//! preference weights converts those scores into 1..7 Likert fairness
//! ratings through a Beta-distributed perception and a mixed-logit choice.
//! [`saff`] recovers a single social preference vector from the panel's
//! ratings by projected gradient descent on a soft-score surrogate regret.
//!
//! [`numkit`] holds the numerical substrate (Weibull MLE and closed-form KL,
//! incomplete beta integrals and their parameter gradients, simplex
//! projection) and [`data`] the tuple schema, validation, synthesis, and
//! file formats.

pub mod data;
pub mod error;
pub mod fairness;
pub mod feedback;
pub mod numkit;
pub mod saff;
pub mod stream;

pub use error::Error;

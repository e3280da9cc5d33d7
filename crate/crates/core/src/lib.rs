//! Bayesian validation metric engine.
//!
//! The probability that a model and data agree, P(A | M, D), is the
//! expectation of an agreement kernel Θ(B(ẑ, z)) over the joint uncertainty
//! of the model comparison value ẑ and the data comparison value z. This
//! crate provides the pieces needed to state and evaluate that probability:
//!
//! * [`distributions`]: uncertain comparison values, push-forward of
//!   parameter priors through model functions, confidence regions.
//! * [`comparison`]: comparison functions f(ẑ, z): path errors, the ECDF
//!   area metric, binned probability differences and pdf divergences.
//! * [`agreement`]: Boolean and soft agreement rules and their algebra.
//! * [`engine`]: Monte Carlo and grid estimators, comparison-value
//!   densities, BVM factors and ratios, (γ, ε) sweeps.
//! * [`metrics`]: classical validation metrics expressed as agreement
//!   probabilities (reliability, frequentist, area, hypothesis tests,
//!   Bayesian evidence).
//! * [`reproduce`]: the three built-in worked examples with their targets.

pub mod agreement;
pub mod comparison;
pub mod distributions;
pub mod engine;
pub mod error;
pub mod metrics;
pub mod quadrature;
pub mod reproduce;
pub mod rng;
pub mod value;

pub use error::{BvmError, Result};
pub use value::{BinnedPdf, Ecdf, Value};

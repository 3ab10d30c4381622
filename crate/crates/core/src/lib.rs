//! Bayesian smoothing for univariate dynamic probit state-space models.
//!
//! The model is
//!
//! ```text
//! P(y_t = 1 | theta_t) = Phi(x_t' theta_t)
//! theta_t = G_t theta_{t-1} + eps_t,   eps_t ~ N(0, W_t),   theta_0 ~ N(0, P0)
//! ```
//!
//! and the crate offers three ways to summarize the joint smoothing law of
//! `theta_{1:n} | y_{1:n}`:
//!
//! * [`sun`]: the exact unified skew-normal (SUN) representation, sampled
//!   through its additive form (Gaussian draw plus an orthant-truncated
//!   Gaussian draw).
//! * [`pfm`]: the partially factorized mean-field variational approximation,
//!   fitted by coordinate ascent, with closed-form moments.
//! * [`mf`]: the classical mean-field baseline.
//!
//! [`oracle`] is a brute-force importance sampler used for validation at
//! small `n`, and [`cli`] wires everything into the `dynprobit` binary.

pub mod cli;
pub mod error;
mod linalg;
pub mod mf;
pub mod model;
pub mod oracle;
pub mod pfm;
pub mod rng;
pub mod summary;
pub mod sun;
pub mod truncnorm;

pub use error::{Error, Result};
pub use model::{BinarySeries, DesignMatrices, ModelSpec, PriorCovariance};
pub use summary::{Method, MomentSummary};

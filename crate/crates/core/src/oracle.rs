//! Brute-force reference: self-normalized importance sampling with the
//! Gaussian state prior as proposal and the probit likelihood
//! `prod_t Phi((D theta)_t)` as weight. Only meant for small `n`.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::psd_sqrt;
use crate::model::PriorCovariance;
use crate::rng::{stream, Domain};
use crate::summary::{Method, MomentSummary};
use crate::truncnorm::log_cdf;

/// Refuse to report when the effective sample size falls below this.
pub const MIN_EFFECTIVE_SAMPLE_SIZE: f64 = 50.0;

#[derive(Debug, Clone)]
pub struct OracleResult {
    pub mean: DVector<f64>,
    pub sd: DVector<f64>,
    pub mc_se_mean: DVector<f64>,
    /// Delta-method standard error of `sd`.
    pub mc_se_sd: DVector<f64>,
    pub log_marginal_likelihood: f64,
    /// Delta-method standard error of `log_marginal_likelihood`.
    pub log_marginal_likelihood_se: f64,
    pub effective_sample_size: f64,
    pub draws: usize,
}

impl OracleResult {
    pub fn summary(&self) -> MomentSummary {
        MomentSummary {
            mean: self.mean.clone(),
            sd: self.sd.clone(),
            mc_se_mean: Some(self.mc_se_mean.clone()),
            method: Method::Oracle,
            draws: Some(self.draws),
            wall_time_seconds: 0.0,
        }
    }
}

pub fn is_moments(prior: &PriorCovariance, d: &DMatrix<f64>, draws: usize, seed: u64) -> Result<OracleResult> {
    let omega = prior.matrix();
    let dim = omega.nrows();
    if d.ncols() != dim {
        return Err(Error::InvalidInput(format!(
            "sign-adjusted design has {} columns, prior dimension is {dim}",
            d.ncols()
        )));
    }
    if draws < 2 {
        return Err(Error::InvalidInput("importance sampling needs at least two draws".into()));
    }
    let root = psd_sqrt(omega);

    let samples: Vec<(DVector<f64>, f64)> = (0..draws)
        .into_par_iter()
        .map(|s| {
            let mut rng = stream(seed, Domain::Oracle, s as u64);
            let eps = DVector::from_fn(dim, |_, _| rng.sample(StandardNormal));
            let theta = &root * eps;
            let log_w = (d * &theta).iter().map(|&v| log_cdf(v)).sum::<f64>();
            (theta, log_w)
        })
        .collect();

    let max_log = samples.iter().map(|(_, l)| *l).fold(f64::NEG_INFINITY, f64::max);
    if !max_log.is_finite() {
        return Err(Error::DegenerateWeights(
            "every draw has zero likelihood; increase the number of draws".into(),
        ));
    }
    let weights: Vec<f64> = samples.iter().map(|(_, l)| (l - max_log).exp()).collect();
    let total: f64 = weights.iter().sum();
    let total_sq: f64 = weights.iter().map(|w| w * w).sum();
    let ess = total * total / total_sq;
    if ess < MIN_EFFECTIVE_SAMPLE_SIZE {
        return Err(Error::DegenerateWeights(format!(
            "effective sample size {ess:.1} below {MIN_EFFECTIVE_SAMPLE_SIZE}; the prior is a poor proposal here"
        )));
    }

    let mut mean = DVector::zeros(dim);
    for ((theta, _), w) in samples.iter().zip(&weights) {
        mean.axpy(*w / total, theta, 1.0);
    }
    let mut var = DVector::zeros(dim);
    let mut se_acc = DVector::zeros(dim);
    for ((theta, _), w) in samples.iter().zip(&weights) {
        let dev = theta - &mean;
        let sq = dev.component_mul(&dev);
        var.axpy(*w / total, &sq, 1.0);
        se_acc.axpy(w * w, &sq, 1.0);
    }
    let mut var_se_acc = DVector::zeros(dim);
    for ((theta, _), w) in samples.iter().zip(&weights) {
        let dev = theta - &mean;
        let gap = dev.component_mul(&dev) - &var;
        var_se_acc.axpy(w * w, &gap.component_mul(&gap), 1.0);
    }
    let sd = var.map(f64::sqrt);
    let mc_se_sd = DVector::from_fn(dim, |j, _| {
        if sd[j] > 0.0 {
            var_se_acc[j].sqrt() / total / (2.0 * sd[j])
        } else {
            0.0
        }
    });

    let n = draws as f64;
    let mean_w = total / n;
    let var_w = weights.iter().map(|w| (w - mean_w).powi(2)).sum::<f64>() / (n - 1.0);
    Ok(OracleResult {
        mean,
        sd,
        mc_se_mean: se_acc.map(|v| v.sqrt() / total),
        mc_se_sd,
        log_marginal_likelihood: max_log + mean_w.ln(),
        log_marginal_likelihood_se: var_w.sqrt() / (n.sqrt() * mean_w),
        effective_sample_size: ess,
        draws,
    })
}

//! Exact smoothing distribution in unified skew-normal (SUN) form, and
//! i.i.d. sampling through its additive representation
//!
//! ```text
//! theta = omega (U0 + Delta Gamma^{-1} U1),
//! U0 ~ N(0, OmegaBar - Delta Gamma^{-1} Delta'),
//! U1 ~ N(0, Gamma) truncated to the positive orthant.
//! ```

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{cholesky_jittered, symmetrize};
use crate::model::{DesignMatrices, PriorCovariance};
use crate::rng::{stream, Domain};
use crate::truncnorm::{sample_orthant_tmvn, OrthantDiagnostics, OrthantSamplerConfig};

/// Parameters of `SUN_{pn, n}(xi, Omega, Delta, gamma, Gamma)`.
#[derive(Debug, Clone)]
pub struct SunParams {
    pub omega: DMatrix<f64>,
    /// Correlation matrix with `Omega = diag(scale) OmegaBar diag(scale)`.
    pub omega_bar: DMatrix<f64>,
    /// Diagonal of `omega = (Omega o I)^{1/2}`.
    pub scale: DVector<f64>,
    pub delta: DMatrix<f64>,
    pub gamma: DMatrix<f64>,
    /// Diagonal of `s = [(D Omega D' + I) o I]^{1/2}`.
    pub s: DVector<f64>,
    /// Location, always zero.
    pub xi: DVector<f64>,
    /// Truncation location, always zero.
    pub gamma_location: DVector<f64>,
}

pub fn compute_sun_params(prior: &PriorCovariance, design: &DesignMatrices) -> Result<SunParams> {
    let omega = prior.matrix();
    let d = design.d();
    let dim = omega.nrows();
    if d.ncols() != dim {
        return Err(Error::InvalidInput(format!(
            "design has {} columns, prior covariance is {dim}x{dim}",
            d.ncols()
        )));
    }
    let n = d.nrows();

    let scale = DVector::from_fn(dim, |i, _| omega[(i, i)].sqrt());
    if let Some(i) = scale.iter().position(|&w| w.is_nan() || w <= 0.0) {
        return Err(Error::Degenerate(format!(
            "state coordinate {i} has zero prior variance"
        )));
    }
    let mut omega_bar = DMatrix::from_fn(dim, dim, |i, j| omega[(i, j)] / (scale[i] * scale[j]));
    omega_bar.fill_diagonal(1.0);

    let mut latent_cov = d * omega * d.transpose();
    for i in 0..n {
        latent_cov[(i, i)] += 1.0;
    }
    symmetrize(&mut latent_cov);
    let s = DVector::from_fn(n, |i, _| latent_cov[(i, i)].sqrt());
    let mut gamma = DMatrix::from_fn(n, n, |i, j| latent_cov[(i, j)] / (s[i] * s[j]));
    gamma.fill_diagonal(1.0);

    // Delta = OmegaBar omega D' s^{-1}
    let mut scaled_dt = d.transpose();
    for (i, mut row) in scaled_dt.row_iter_mut().enumerate() {
        row *= scale[i];
    }
    for (j, mut col) in scaled_dt.column_iter_mut().enumerate() {
        col /= s[j];
    }
    let delta = &omega_bar * scaled_dt;

    Ok(SunParams {
        omega: omega.clone(),
        omega_bar,
        scale,
        delta,
        gamma,
        s,
        xi: DVector::zeros(dim),
        gamma_location: DVector::zeros(n),
    })
}

#[derive(Debug, Clone)]
pub struct SmoothingDraws {
    pub draws: Vec<DVector<f64>>,
    pub orthant: OrthantDiagnostics,
    /// Jitter added to `Gamma` for the `Delta Gamma^{-1}` solve.
    pub gamma_jitter: f64,
    /// Jitter added to the covariance of `U0` before factorizing.
    pub u0_jitter: f64,
}

/// Per-model precomputation for repeated sampling: `Delta Gamma^{-1}` and
/// the Cholesky factor of `OmegaBar - Delta Gamma^{-1} Delta'`.
#[derive(Debug, Clone)]
pub struct SmoothingSampler {
    gamma: DMatrix<f64>,
    scale: DVector<f64>,
    delta_gamma_inv: DMatrix<f64>,
    u0_factor: DMatrix<f64>,
    gamma_jitter: f64,
    u0_jitter: f64,
}

impl SmoothingSampler {
    pub fn new(params: &SunParams) -> Result<Self> {
        let (gamma_chol, gamma_jitter) = cholesky_jittered(&params.gamma, "Gamma")?;
        let delta_gamma_inv = gamma_chol.solve(&params.delta.transpose()).transpose();
        let mut u0_cov = &params.omega_bar - &delta_gamma_inv * params.delta.transpose();
        symmetrize(&mut u0_cov);
        let (u0_chol, u0_jitter) = cholesky_jittered(&u0_cov, "U0 covariance")?;
        Ok(Self {
            gamma: params.gamma.clone(),
            scale: params.scale.clone(),
            delta_gamma_inv,
            u0_factor: u0_chol.l(),
            gamma_jitter,
            u0_jitter,
        })
    }

    /// `count` draws of the stacked states. Exactly i.i.d. when the orthant
    /// sampler runs by rejection.
    pub fn sample(&self, count: usize, config: &OrthantSamplerConfig) -> Result<SmoothingDraws> {
        if count == 0 {
            return Err(Error::InvalidInput("number of draws must be positive".into()));
        }
        let latent = sample_orthant_tmvn(&self.gamma, count, config)?;
        let dim = self.scale.len();
        let draws: Vec<DVector<f64>> = latent
            .draws
            .par_iter()
            .enumerate()
            .map(|(r, u1)| {
                let mut rng = stream(config.seed, Domain::SunGaussian, r as u64);
                let eps = DVector::from_fn(dim, |_, _| rng.sample(StandardNormal));
                let mut theta = &self.u0_factor * eps;
                theta.gemv(1.0, &self.delta_gamma_inv, u1, 1.0);
                theta.component_mul_assign(&self.scale);
                theta
            })
            .collect();
        Ok(SmoothingDraws {
            draws,
            orthant: latent.diagnostics,
            gamma_jitter: self.gamma_jitter,
            u0_jitter: self.u0_jitter,
        })
    }
}

pub fn sample_smoothing_iid(
    params: &SunParams,
    count: usize,
    config: &OrthantSamplerConfig,
) -> Result<SmoothingDraws> {
    SmoothingSampler::new(params)?.sample(count, config)
}

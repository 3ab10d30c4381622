use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::sample_unchecked;
use crate::error::{Error, Result};
use crate::linalg::{cholesky_jittered, is_psd, is_symmetric, PSD_REL_TOL};
use crate::rng::{stream, Domain};

const UNIT_DIAG_TOL: f64 = 1e-8;
/// `Auto` picks rejection when the pilot acceptance rate reaches this value.
pub const AUTO_REJECTION_THRESHOLD: f64 = 1e-3;
const PILOT_PROPOSALS: u64 = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum OrthantStrategy {
    /// Exact i.i.d. draws by accept/reject from `N(0, Gamma)`.
    Rejection,
    /// Systematic-scan Gibbs over the univariate truncated conditionals.
    Gibbs,
    /// Rejection if a pilot run estimates the orthant probability to be at
    /// least [`AUTO_REJECTION_THRESHOLD`], Gibbs otherwise.
    #[default]
    Auto,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OrthantSamplerConfig {
    pub strategy: OrthantStrategy,
    /// Gibbs sweeps discarded before the first retained draw; `None` means
    /// `50 * k`.
    pub burn_in: Option<usize>,
    /// Gibbs sweeps between retained draws.
    pub thinning: usize,
    /// Proposal budget for a single rejection draw.
    pub max_rejection_attempts: u64,
    pub seed: u64,
}

impl Default for OrthantSamplerConfig {
    fn default() -> Self {
        Self {
            strategy: OrthantStrategy::Auto,
            burn_in: None,
            thinning: 5,
            max_rejection_attempts: 1_000_000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StrategyUsed {
    Rejection,
    Gibbs,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrthantDiagnostics {
    pub strategy: StrategyUsed,
    /// True when draws are exact i.i.d. (rejection).
    pub exact: bool,
    /// Pilot estimate, present when `Auto` made the choice.
    pub estimated_orthant_probability: Option<f64>,
    pub proposals: Option<u64>,
    pub acceptance_rate: Option<f64>,
    pub burn_in: Option<usize>,
    pub thinning: Option<usize>,
    /// Diagonal jitter added to `Gamma` before factorizing.
    pub jitter: f64,
    pub max_lag1_autocorrelation: Option<f64>,
    /// AR(1) approximation `R (1 - rho) / (1 + rho)`, minimized over
    /// coordinates.
    pub min_effective_sample_size: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct OrthantDraws {
    pub draws: Vec<DVector<f64>>,
    pub diagnostics: OrthantDiagnostics,
}

fn validate(gamma: &DMatrix<f64>) -> Result<()> {
    if !gamma.is_square() || gamma.nrows() == 0 {
        return Err(Error::Domain("orthant covariance must be a non-empty square matrix".into()));
    }
    if gamma.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("orthant covariance has non-finite entries".into()));
    }
    if !is_symmetric(gamma, UNIT_DIAG_TOL) {
        return Err(Error::Domain("orthant covariance is not symmetric".into()));
    }
    if let Some(i) = (0..gamma.nrows()).find(|&i| (gamma[(i, i)] - 1.0).abs() > UNIT_DIAG_TOL) {
        return Err(Error::Domain(format!(
            "orthant covariance must have unit diagonal; entry {i} is {}",
            gamma[(i, i)]
        )));
    }
    if !is_psd(gamma, PSD_REL_TOL) {
        return Err(Error::Domain("orthant covariance is not positive semidefinite".into()));
    }
    Ok(())
}

/// Draws `count` vectors from `N_k(0, gamma)` conditioned on every
/// coordinate being positive. `gamma` must be a correlation matrix.
pub fn sample_orthant_tmvn(
    gamma: &DMatrix<f64>,
    count: usize,
    config: &OrthantSamplerConfig,
) -> Result<OrthantDraws> {
    validate(gamma)?;
    if config.thinning == 0 {
        return Err(Error::InvalidInput("thinning must be at least 1".into()));
    }
    let (chol, jitter) = cholesky_jittered(gamma, "orthant covariance")?;
    let lower = chol.l();

    let (strategy, estimate) = match config.strategy {
        OrthantStrategy::Rejection => (StrategyUsed::Rejection, None),
        OrthantStrategy::Gibbs => (StrategyUsed::Gibbs, None),
        OrthantStrategy::Auto => {
            let p = pilot_orthant_probability(&lower, config.seed);
            let chosen = if p >= AUTO_REJECTION_THRESHOLD {
                StrategyUsed::Rejection
            } else {
                StrategyUsed::Gibbs
            };
            (chosen, Some(p))
        }
    };

    let mut out = match strategy {
        StrategyUsed::Rejection => rejection(&lower, count, config)?,
        StrategyUsed::Gibbs => {
            let precision = chol.inverse();
            gibbs(&precision, count, config)
        }
    };
    out.diagnostics.jitter = jitter;
    out.diagnostics.estimated_orthant_probability = estimate;
    Ok(out)
}

fn propose<R: Rng>(lower: &DMatrix<f64>, rng: &mut R) -> DVector<f64> {
    let eps = DVector::from_fn(lower.nrows(), |_, _| rng.sample(StandardNormal));
    lower * eps
}

fn pilot_orthant_probability(lower: &DMatrix<f64>, seed: u64) -> f64 {
    let mut rng = stream(seed, Domain::OrthantPilot, 0);
    let accepted = (0..PILOT_PROPOSALS)
        .filter(|_| propose(lower, &mut rng).iter().all(|&v| v > 0.0))
        .count();
    accepted as f64 / PILOT_PROPOSALS as f64
}

fn rejection(lower: &DMatrix<f64>, count: usize, config: &OrthantSamplerConfig) -> Result<OrthantDraws> {
    let budget = config.max_rejection_attempts.max(1);
    let results: Vec<Result<(DVector<f64>, u64)>> = (0..count)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream(config.seed, Domain::OrthantRejection, r as u64);
            for attempt in 1..=budget {
                let candidate = propose(lower, &mut rng);
                if candidate.iter().all(|&v| v > 0.0) {
                    return Ok((candidate, attempt));
                }
            }
            Err(Error::RejectionExhausted { attempts: budget })
        })
        .collect();

    let mut draws = Vec::with_capacity(count);
    let mut proposals = 0_u64;
    for result in results {
        let (draw, attempts) = result?;
        proposals += attempts;
        draws.push(draw);
    }
    let acceptance_rate = (proposals > 0).then(|| count as f64 / proposals as f64);
    Ok(OrthantDraws {
        draws,
        diagnostics: OrthantDiagnostics {
            strategy: StrategyUsed::Rejection,
            exact: true,
            estimated_orthant_probability: None,
            proposals: Some(proposals),
            acceptance_rate,
            burn_in: None,
            thinning: None,
            jitter: 0.0,
            max_lag1_autocorrelation: None,
            min_effective_sample_size: None,
        },
    })
}

fn gibbs(precision: &DMatrix<f64>, count: usize, config: &OrthantSamplerConfig) -> OrthantDraws {
    let k = precision.nrows();
    let burn_in = config.burn_in.unwrap_or(50 * k);
    let thinning = config.thinning;
    let mut rng = stream(config.seed, Domain::OrthantGibbs, 0);

    // u_j | u_-j ~ N(-(Q_j. u - Q_jj u_j) / Q_jj, 1 / Q_jj) on (0, inf)
    let cond_sd: Vec<f64> = (0..k).map(|j| precision[(j, j)].sqrt().recip()).collect();
    let mut state = DVector::from_element(k, 1.0);
    let sweep = |state: &mut DVector<f64>, rng: &mut _| {
        for j in 0..k {
            let q = precision.column(j);
            let qjj = q[j];
            let cross = q.dot(state) - qjj * state[j];
            state[j] = sample_unchecked(-cross / qjj, cond_sd[j], 1.0, rng);
        }
    };

    for _ in 0..burn_in {
        sweep(&mut state, &mut rng);
    }
    let mut draws = Vec::with_capacity(count);
    for _ in 0..count {
        for _ in 0..thinning {
            sweep(&mut state, &mut rng);
        }
        draws.push(state.clone());
    }

    let (max_rho, min_ess) = chain_diagnostics(&draws);
    OrthantDraws {
        draws,
        diagnostics: OrthantDiagnostics {
            strategy: StrategyUsed::Gibbs,
            exact: false,
            estimated_orthant_probability: None,
            proposals: None,
            acceptance_rate: None,
            burn_in: Some(burn_in),
            thinning: Some(thinning),
            jitter: 0.0,
            max_lag1_autocorrelation: max_rho,
            min_effective_sample_size: min_ess,
        },
    }
}

fn chain_diagnostics(draws: &[DVector<f64>]) -> (Option<f64>, Option<f64>) {
    let r = draws.len();
    if r < 3 {
        return (None, None);
    }
    let k = draws[0].len();
    let mut max_rho = f64::NEG_INFINITY;
    let mut min_ess = f64::INFINITY;
    for j in 0..k {
        let mean = draws.iter().map(|d| d[j]).sum::<f64>() / r as f64;
        let var = draws.iter().map(|d| (d[j] - mean).powi(2)).sum::<f64>();
        if var <= 0.0 {
            continue;
        }
        let lag1 = draws
            .windows(2)
            .map(|w| (w[0][j] - mean) * (w[1][j] - mean))
            .sum::<f64>();
        let rho = (lag1 / var).clamp(-0.999_999, 0.999_999);
        max_rho = max_rho.max(rho);
        let ess = (r as f64 * (1.0 - rho) / (1.0 + rho)).min(r as f64);
        min_ess = min_ess.min(ess);
    }
    (max_rho.is_finite().then_some(max_rho), min_ess.is_finite().then_some(min_ess))
}

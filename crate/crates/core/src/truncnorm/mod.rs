//! Standard normal CDF/Mills-ratio utilities, univariate truncated normals,
//! and positive-orthant truncated multivariate normal sampling.

mod orthant;

pub use orthant::{
    sample_orthant_tmvn, OrthantDiagnostics, OrthantDraws, OrthantSamplerConfig, OrthantStrategy,
    StrategyUsed,
};

use rand::Rng;
use rand_distr::{Exp1, Open01};
use libm::erfc;
use statrs::function::erf::erfc_inv;

use crate::error::{Error, Result};

const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;
const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Below this point the Mills ratio comes from the continued fraction.
const TAIL_SWITCH: f64 = -8.0;
/// Below this point `log Phi` comes from the continued fraction.
const LOG_TAIL_SWITCH: f64 = -10.0;
/// Standardized truncation point beyond which exponential rejection is used.
const FAR_TAIL: f64 = 5.0;
const CF_TERMS: usize = 120;

fn check_finite(x: f64, what: &str) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("{what} requires a finite argument, got {x}")))
    }
}

fn check_sigma_sign(sigma: f64, sign: f64) -> Result<()> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::Domain(format!("scale must be positive and finite, got {sigma}")));
    }
    if sign != 1.0 && sign != -1.0 {
        return Err(Error::Domain(format!("truncation sign must be +1 or -1, got {sign}")));
    }
    Ok(())
}

pub fn normal_pdf(x: f64) -> f64 {
    FRAC_1_SQRT_2PI * (-0.5 * x * x).exp()
}

pub(crate) fn cdf(x: f64) -> f64 {
    0.5 * erfc(-x * std::f64::consts::FRAC_1_SQRT_2)
}

/// `Phi^{-1}(p)` for `p` in (0, 1).
pub(crate) fn quantile(p: f64) -> f64 {
    -std::f64::consts::SQRT_2 * erfc_inv(2.0 * p)
}

/// `Phi(-t) / phi(t)` for large positive `t`, by backward evaluation of
/// `1 / (t + 1 / (t + 2 / (t + 3 / (t + ...))))`.
fn upper_mills_ratio(t: f64) -> f64 {
    let mut tail = t;
    for k in (1..=CF_TERMS).rev() {
        tail = t + k as f64 / tail;
    }
    1.0 / tail
}

pub(crate) fn log_cdf(x: f64) -> f64 {
    if x < LOG_TAIL_SWITCH {
        -0.5 * x * x - LN_SQRT_2PI + upper_mills_ratio(-x).ln()
    } else if x <= 0.0 {
        cdf(x).ln()
    } else {
        (-cdf(-x)).ln_1p()
    }
}

pub(crate) fn zeta(x: f64) -> f64 {
    if x < TAIL_SWITCH {
        1.0 / upper_mills_ratio(-x)
    } else {
        normal_pdf(x) / cdf(x)
    }
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> Result<f64> {
    check_finite(x, "normal_cdf")?;
    Ok(cdf(x))
}

/// `log Phi(x)`, finite for any finite `x`.
pub fn log_normal_cdf(x: f64) -> Result<f64> {
    check_finite(x, "log_normal_cdf")?;
    Ok(log_cdf(x))
}

/// Inverse Mills ratio `zeta(x) = phi(x) / Phi(x)`.
///
/// Stable in the left tail, where `zeta(x) ~ -x + 1/(-x) - 2/(-x)^3 + ...`.
/// Underflows to zero for `x` above roughly 38.
pub fn mills_inverse(x: f64) -> Result<f64> {
    check_finite(x, "mills_inverse")?;
    Ok(zeta(x))
}

/// Mean of `N(mu, sigma^2)` restricted to `sign * value > 0`.
pub fn trunc_norm_mean(mu: f64, sigma: f64, sign: f64) -> Result<f64> {
    check_finite(mu, "trunc_norm_mean")?;
    check_sigma_sign(sigma, sign)?;
    Ok(trunc_mean_unchecked(mu, sigma, sign))
}

pub(crate) fn trunc_mean_unchecked(mu: f64, sigma: f64, sign: f64) -> f64 {
    mu + sign * sigma * zeta(sign * mu / sigma)
}

/// Variance of `N(mu, sigma^2)` restricted to `sign * value > 0`.
pub fn trunc_norm_variance(mu: f64, sigma: f64, sign: f64) -> Result<f64> {
    check_finite(mu, "trunc_norm_variance")?;
    check_sigma_sign(sigma, sign)?;
    let alpha = sign * mu / sigma;
    let z = zeta(alpha);
    Ok(sigma * sigma * (1.0 - z * (z + alpha)))
}

/// One draw from `N(mu, sigma^2)` restricted to `sign * value > 0`.
///
/// Inverse-CDF sampling when the standardized truncation point is within
/// five standard deviations, exponential-proposal rejection beyond.
pub fn sample_trunc_norm<R: Rng + ?Sized>(mu: f64, sigma: f64, sign: f64, rng: &mut R) -> Result<f64> {
    check_finite(mu, "sample_trunc_norm")?;
    check_sigma_sign(sigma, sign)?;
    Ok(sample_unchecked(mu, sigma, sign, rng))
}

pub(crate) fn sample_unchecked<R: Rng + ?Sized>(mu: f64, sigma: f64, sign: f64, rng: &mut R) -> f64 {
    // value = mu + sign * sigma * w with w ~ N(0, 1) restricted to w > a
    let a = -sign * mu / sigma;
    loop {
        let w = sample_std_lower_truncated(a, rng);
        let value = mu + sign * sigma * w;
        if sign * value > 0.0 {
            return value;
        }
    }
}

/// Standard normal restricted to `(a, inf)`.
fn sample_std_lower_truncated<R: Rng + ?Sized>(a: f64, rng: &mut R) -> f64 {
    if a > FAR_TAIL {
        let rate = 0.5 * (a + (a * a + 4.0).sqrt());
        loop {
            let e: f64 = rng.sample(Exp1);
            let w = a + e / rate;
            let u: f64 = rng.sample(Open01);
            if u.ln() <= -0.5 * (w - rate) * (w - rate) {
                return w;
            }
        }
    }
    let upper_mass = cdf(-a);
    loop {
        let u: f64 = rng.sample(Open01);
        let w = -quantile(u * upper_mass);
        if w > a && w.is_finite() {
            return w;
        }
    }
}

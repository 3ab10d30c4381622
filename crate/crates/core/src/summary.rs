use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Iid,
    Pfm,
    Mf,
    Oracle,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Iid => "iid",
            Method::Pfm => "pfm",
            Method::Mf => "mf",
            Method::Oracle => "oracle",
        }
    }

    pub fn is_sampling(self) -> bool {
        matches!(self, Method::Iid | Method::Oracle)
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Posterior mean and marginal standard deviations of the stacked states.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentSummary {
    pub mean: DVector<f64>,
    pub sd: DVector<f64>,
    /// Monte Carlo standard error of `mean`; only for sampling methods.
    pub mc_se_mean: Option<DVector<f64>>,
    pub method: Method,
    pub draws: Option<usize>,
    pub wall_time_seconds: f64,
}

/// Sample mean, unbiased standard deviation and `sd / sqrt(R)`.
pub fn estimate_moments(draws: &[DVector<f64>], method: Method) -> Result<MomentSummary> {
    let r = draws.len();
    if r == 0 {
        return Err(Error::InvalidInput("no draws to summarize".into()));
    }
    if r < 2 {
        return Err(Error::InvalidInput("at least two draws are needed for a standard deviation".into()));
    }
    let dim = draws[0].len();
    if draws.iter().any(|d| d.len() != dim) {
        return Err(Error::InvalidInput("draws differ in dimension".into()));
    }
    let mut mean = DVector::zeros(dim);
    for d in draws {
        mean += d;
    }
    mean /= r as f64;
    let mut sumsq = DVector::zeros(dim);
    for d in draws {
        let centered = d - &mean;
        sumsq += centered.component_mul(&centered);
    }
    let sd = (sumsq / (r as f64 - 1.0)).map(f64::sqrt);
    let mc_se_mean = &sd / (r as f64).sqrt();
    Ok(MomentSummary {
        mean,
        sd,
        mc_se_mean: Some(mc_se_mean),
        method,
        draws: Some(r),
        wall_time_seconds: 0.0,
    })
}

/// Per-coordinate accuracy of one method against a reference, averaged
/// over time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodComparison {
    pub method: Method,
    pub reference: Method,
    /// `mean_t |mean_tk - ref_mean_tk|` for each state coordinate `k`.
    pub mean_abs_diff_mean: Vec<f64>,
    /// `mean_t |log sd_tk - log ref_sd_tk|`.
    pub mean_abs_diff_log_sd: Vec<f64>,
    /// `mean_t (log sd_tk - log ref_sd_tk)`; negative means too narrow.
    pub mean_log_sd_diff: Vec<f64>,
}

pub fn compare_moments(reference: &MomentSummary, candidate: &MomentSummary, p: usize) -> Result<MethodComparison> {
    let dim = reference.mean.len();
    if p == 0 || !dim.is_multiple_of(p) || candidate.mean.len() != dim {
        return Err(Error::InvalidInput(format!(
            "cannot compare summaries of dimension {dim} and {} with state dimension {p}",
            candidate.mean.len()
        )));
    }
    let n = dim / p;
    let log_gap = |i: usize| {
        if candidate.sd[i] == reference.sd[i] {
            0.0
        } else {
            candidate.sd[i].ln() - reference.sd[i].ln()
        }
    };
    let mut abs_mean = vec![0.0; p];
    let mut abs_log_sd = vec![0.0; p];
    let mut log_sd = vec![0.0; p];
    for t in 0..n {
        for k in 0..p {
            let i = t * p + k;
            abs_mean[k] += (candidate.mean[i] - reference.mean[i]).abs() / n as f64;
            let gap = log_gap(i);
            abs_log_sd[k] += gap.abs() / n as f64;
            log_sd[k] += gap / n as f64;
        }
    }
    Ok(MethodComparison {
        method: candidate.method,
        reference: reference.method,
        mean_abs_diff_mean: abs_mean,
        mean_abs_diff_log_sd: abs_log_sd,
        mean_log_sd_diff: log_sd,
    })
}

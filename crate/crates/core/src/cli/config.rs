//! JSON run configuration, schema version 1.
//!
//! ```json
//! {
//!   "version": 1,
//!   "n": 241,
//!   "p": 2,
//!   "p0": [[3, 0], [0, 3]],
//!   "g": [[1, 0], [0, 1]],
//!   "w": [[0.01, 0], [0, 0.01]],
//!   "covariates": "intercept_binary",
//!   "method": "all",
//!   "draws": 10000,
//!   "sampler": { "strategy": "auto", "burn_in": null, "thinning": 5, "max_rejection_attempts": 1000000 },
//!   "cavi": { "tolerance": 1e-6, "max_sweeps": 10000 },
//!   "seed": 1
//! }
//! ```
//!
//! Every key is optional. `g` and `w` accept a single `p x p` matrix shared
//! by all time steps or a list of `n` matrices. `n`, `p` and `covariates`
//! only matter to `simulate`; when fitting, dimensions come from the data.
//! `a0`, if given, must be all zeros.

use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::CliError;
use crate::model::{check_initial_mean, ModelSpec};
use crate::pfm::CaviConfig;
use crate::truncnorm::{OrthantSamplerConfig, OrthantStrategy};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MatrixSpec {
    Shared(Vec<Vec<f64>>),
    PerTime(Vec<Vec<Vec<f64>>>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum MethodChoice {
    Iid,
    Pfm,
    Mf,
    #[default]
    All,
}

/// How `simulate` generates covariates. Both put an intercept first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CovariateDesign {
    /// `x_t = (1, b_2, ..., b_p)` with `b_k ~ Bernoulli(1/2)`.
    #[default]
    InterceptBinary,
    /// `x_t = (1, e_2, ..., e_p)` with `e_k ~ N(0, 1)`.
    InterceptGaussian,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SamplerSection {
    pub strategy: OrthantStrategy,
    pub burn_in: Option<usize>,
    pub thinning: usize,
    pub max_rejection_attempts: u64,
}

impl Default for SamplerSection {
    fn default() -> Self {
        let d = OrthantSamplerConfig::default();
        Self {
            strategy: d.strategy,
            burn_in: d.burn_in,
            thinning: d.thinning,
            max_rejection_attempts: d.max_rejection_attempts,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub version: u32,
    pub n: usize,
    pub p: Option<usize>,
    pub p0: Option<Vec<Vec<f64>>>,
    pub g: Option<MatrixSpec>,
    pub w: Option<MatrixSpec>,
    pub a0: Option<Vec<f64>>,
    pub covariates: CovariateDesign,
    pub method: MethodChoice,
    pub draws: usize,
    pub sampler: SamplerSection,
    pub cavi: CaviConfig,
    pub seed: u64,
    pub data: Option<PathBuf>,
    pub out: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            version: SCHEMA_VERSION,
            n: 241,
            p: None,
            p0: None,
            g: None,
            w: None,
            a0: None,
            covariates: CovariateDesign::default(),
            method: MethodChoice::All,
            draws: 10_000,
            sampler: SamplerSection::default(),
            cavi: CaviConfig::default(),
            seed: 1,
            data: None,
            out: None,
        }
    }
}

fn matrix(rows: &[Vec<f64>], p: usize, name: &str) -> Result<DMatrix<f64>, CliError> {
    if rows.len() != p || rows.iter().any(|r| r.len() != p) {
        return Err(CliError::Config(format!("{name} must be a {p}x{p} matrix")));
    }
    Ok(DMatrix::from_fn(p, p, |i, j| rows[i][j]))
}

fn matrices(spec: &Option<MatrixSpec>, default: DMatrix<f64>, n: usize, p: usize, name: &str) -> Result<Vec<DMatrix<f64>>, CliError> {
    match spec {
        None => Ok(vec![default; n]),
        Some(MatrixSpec::Shared(rows)) => Ok(vec![matrix(rows, p, name)?; n]),
        Some(MatrixSpec::PerTime(list)) => {
            if list.len() != n {
                return Err(CliError::Config(format!(
                    "{name} lists {} matrices but the series has n={n}",
                    list.len()
                )));
            }
            list.iter()
                .enumerate()
                .map(|(t, rows)| matrix(rows, p, &format!("{name}[{t}]")))
                .collect()
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.version != SCHEMA_VERSION {
            return Err(CliError::Config(format!(
                "unsupported config version {} (expected {SCHEMA_VERSION})",
                self.version
            )));
        }
        if self.n == 0 {
            return Err(CliError::Config("n must be positive".into()));
        }
        if self.p == Some(0) {
            return Err(CliError::Config("p must be positive".into()));
        }
        if self.draws < 2 {
            return Err(CliError::Config("draws must be at least 2".into()));
        }
        if self.sampler.thinning == 0 {
            return Err(CliError::Config("sampler.thinning must be at least 1".into()));
        }
        if self.sampler.max_rejection_attempts == 0 {
            return Err(CliError::Config("sampler.max_rejection_attempts must be positive".into()));
        }
        if self.cavi.tolerance.is_nan() || self.cavi.tolerance <= 0.0 || self.cavi.max_sweeps == 0 {
            return Err(CliError::Config("cavi.tolerance and cavi.max_sweeps must be positive".into()));
        }
        if let Some(a0) = &self.a0 {
            check_initial_mean(a0).map_err(|e| CliError::Config(e.to_string()))?;
        }
        Ok(())
    }

    /// State dimension for simulation (default 2: intercept plus one covariate).
    pub fn simulation_dim(&self) -> usize {
        self.p.unwrap_or(2)
    }

    pub fn orthant_config(&self) -> OrthantSamplerConfig {
        OrthantSamplerConfig {
            strategy: self.sampler.strategy,
            burn_in: self.sampler.burn_in,
            thinning: self.sampler.thinning,
            max_rejection_attempts: self.sampler.max_rejection_attempts,
            seed: self.seed,
        }
    }

    /// Builds the model around the given covariates. Defaults:
    /// `G_t = I`, `W_t = 0.01 I`, `P0 = 3 I`.
    pub fn model_spec(&self, x: Vec<DVector<f64>>) -> Result<ModelSpec, CliError> {
        let n = x.len();
        let p = x.first().map_or(0, |v| v.len());
        if let Some(cfg_p) = self.p {
            if cfg_p != p {
                return Err(CliError::Data(format!(
                    "data has {p} covariates but the config sets p={cfg_p}"
                )));
            }
        }
        if let Some(a0) = &self.a0 {
            if a0.len() != p {
                return Err(CliError::Config(format!("a0 must have length {p}")));
            }
        }
        let p0 = match &self.p0 {
            Some(rows) => matrix(rows, p, "p0")?,
            None => DMatrix::identity(p, p) * 3.0,
        };
        let g = matrices(&self.g, DMatrix::identity(p, p), n, p, "g")?;
        let w = matrices(&self.w, DMatrix::identity(p, p) * 0.01, n, p, "w")?;
        ModelSpec::new(x, g, w, p0).map_err(|e| CliError::Config(e.to_string()))
    }

    /// Copy without file paths, for metadata that must not depend on where
    /// a run writes.
    pub fn without_paths(&self) -> Self {
        Self {
            data: None,
            out: None,
            ..self.clone()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_follow_reference_hyperparameters() {
        let cfg = RunConfig::default();
        let x = vec![DVector::from_row_slice(&[1.0, 0.0]); 3];
        let spec = cfg.model_spec(x).unwrap();
        assert_eq!(spec.initial_covariance(), &(DMatrix::identity(2, 2) * 3.0));
        assert_eq!(spec.noise_covariances()[2], DMatrix::identity(2, 2) * 0.01);
        assert_eq!(spec.transitions()[0], DMatrix::identity(2, 2));
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(serde_json::from_str::<RunConfig>(r#"{"bogus": 1}"#).is_err());
        assert!(serde_json::from_str::<RunConfig>(r#"{"sampler": {"seed": 1}}"#).is_err());
        let cfg: RunConfig = serde_json::from_str(r#"{"w": [[0.5]], "p": 1}"#).unwrap();
        assert_eq!(cfg.w, Some(MatrixSpec::Shared(vec![vec![0.5]])));
    }

    #[test]
    fn per_time_matrices() {
        let cfg: RunConfig =
            serde_json::from_str(r#"{"g": [[[1.0]], [[0.5]]], "w": [[[0.1]], [[0.2]]]}"#).unwrap();
        let spec = cfg.model_spec(vec![DVector::from_element(1, 1.0); 2]).unwrap();
        assert_eq!(spec.transitions()[1][(0, 0)], 0.5);
        assert_eq!(spec.noise_covariances()[1][(0, 0)], 0.2);
        let short = cfg.model_spec(vec![DVector::from_element(1, 1.0); 3]);
        assert!(matches!(short, Err(CliError::Config(_))));
    }

    #[test]
    fn validation_failures() {
        let cfg = RunConfig {
            a0: Some(vec![0.0, 1.0]),
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
        let cfg = RunConfig {
            version: 2,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
        let cfg = RunConfig {
            w: Some(MatrixSpec::Shared(vec![vec![-1.0]])),
            ..Default::default()
        };
        assert!(matches!(
            cfg.model_spec(vec![DVector::from_element(1, 1.0)]),
            Err(CliError::Config(_))
        ));
    }
}

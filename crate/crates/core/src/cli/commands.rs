use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use nalgebra::DVector;
use rand::Rng;
use rand_distr::{Bernoulli, StandardNormal};
use serde::Serialize;
use serde_json::{json, Value};

use super::config::{CovariateDesign, MethodChoice, RunConfig};
use super::io;
use super::CliError;
use crate::mf::{mf_fit, mf_moments};
use crate::model::{simulate as simulate_model, BinarySeries, DesignMatrices, PriorCovariance};
use crate::pfm::{cavi_fit, pfm_moments};
use crate::rng::{stream, Domain};
use crate::summary::{compare_moments, estimate_moments, Method, MethodComparison, MomentSummary};
use crate::sun::{compute_sun_params, SmoothingSampler};

pub const DATA_FILE: &str = "data.csv";
pub const TRUTH_FILE: &str = "truth.csv";
pub const RESULTS_FILE: &str = "results.csv";
pub const BANDS_FILE: &str = "bands.csv";
pub const METADATA_FILE: &str = "metadata.json";
pub const COMPARISON_FILE: &str = "comparison.json";
/// Wall-clock measurements live apart from the reproducible outputs.
pub const TIMINGS_FILE: &str = "timings.json";

fn out_dir(cfg: &RunConfig) -> Result<PathBuf, CliError> {
    let dir = cfg.out.clone().unwrap_or_else(|| PathBuf::from("out"));
    std::fs::create_dir_all(&dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    Ok(dir)
}

fn data_path(cfg: &RunConfig) -> Result<&Path, CliError> {
    cfg.data
        .as_deref()
        .ok_or_else(|| CliError::Config("no data file given (use --data or \"data\" in the config)".into()))
}

/// Covariates for simulation, drawn from their own stream.
pub fn simulate_covariates(design: CovariateDesign, n: usize, p: usize, seed: u64) -> Vec<DVector<f64>> {
    let mut rng = stream(seed, Domain::Covariates, 0);
    let coin = Bernoulli::new(0.5).expect("valid probability");
    (0..n)
        .map(|_| {
            DVector::from_fn(p, |k, _| {
                if k == 0 {
                    return 1.0;
                }
                match design {
                    CovariateDesign::InterceptBinary => f64::from(u8::from(rng.sample(coin))),
                    CovariateDesign::InterceptGaussian => rng.sample(StandardNormal),
                }
            })
        })
        .collect()
}

pub fn simulate(cfg: &RunConfig) -> Result<(), CliError> {
    let dir = out_dir(cfg)?;
    let p = cfg.simulation_dim();
    let x = simulate_covariates(cfg.covariates, cfg.n, p, cfg.seed);
    let spec = cfg.model_spec(x)?;
    let sim = simulate_model(&spec, cfg.seed);

    io::write_data(&dir.join(DATA_FILE), spec.covariates(), &sim.y)?;
    io::write_truth(&dir.join(TRUTH_FILE), &sim.theta, &sim.z)?;
    let meta = json!({
        "command": "simulate",
        "seed": cfg.seed,
        "n": spec.n(),
        "p": p,
        "config": cfg.without_paths(),
    });
    io::write_json(&dir.join(METADATA_FILE), &meta)
}

/// One fitted method: its summary, reproducible diagnostics and wall time.
pub struct MethodRun {
    pub summary: MomentSummary,
    pub diagnostics: Value,
}

pub struct Problem {
    pub prior: PriorCovariance,
    pub design: DesignMatrices,
    pub y: BinarySeries,
}

impl Problem {
    pub fn from_data(cfg: &RunConfig, path: &Path) -> Result<Self, CliError> {
        let (x, y) = io::read_data(path)?;
        let spec = cfg.model_spec(x)?;
        let design = DesignMatrices::build(&spec, &y).map_err(|e| CliError::Data(e.to_string()))?;
        Ok(Self {
            prior: PriorCovariance::build(&spec),
            design,
            y,
        })
    }

    pub fn p(&self) -> usize {
        self.design.p()
    }
}

pub fn run_method(cfg: &RunConfig, problem: &Problem, method: Method) -> Result<MethodRun, CliError> {
    let start = Instant::now();
    let (mut summary, diagnostics) = match method {
        Method::Pfm => {
            let sol = cavi_fit(&problem.prior, &problem.design, &problem.y, &cfg.cavi)?;
            let diag = json!({
                "iterations": sol.iterations,
                "converged": sol.converged,
                "residual": sol.residual,
                "tolerance": sol.tolerance,
                "final_max_change": sol.delta_history.last(),
            });
            (pfm_moments(&sol, &problem.design), diag)
        }
        Method::Mf => {
            let sol = mf_fit(
                &problem.prior,
                &problem.design,
                &problem.y,
                cfg.cavi.tolerance,
                cfg.cavi.max_sweeps,
            )?;
            let diag = json!({
                "iterations": sol.iterations,
                "converged": sol.converged,
                "residual": sol.residual,
                "tolerance": sol.tolerance,
                "final_max_change": sol.delta_history.last(),
            });
            (mf_moments(&sol), diag)
        }
        Method::Iid => {
            let params = compute_sun_params(&problem.prior, &problem.design)?;
            let sampler = SmoothingSampler::new(&params)?;
            let out = sampler.sample(cfg.draws, &cfg.orthant_config())?;
            let summary = estimate_moments(&out.draws, Method::Iid)?;
            let max_se = summary.mc_se_mean.as_ref().map(|se| se.max());
            let diag = json!({
                "draws": cfg.draws,
                "seed": cfg.seed,
                "orthant": out.orthant,
                "gamma_jitter": out.gamma_jitter,
                "u0_jitter": out.u0_jitter,
                "max_mc_se_mean": max_se,
            });
            (summary, diag)
        }
        Method::Oracle => {
            return Err(CliError::Config("the oracle is not available from the CLI".into()));
        }
    };
    summary.wall_time_seconds = start.elapsed().as_secs_f64();
    Ok(MethodRun { summary, diagnostics })
}

fn methods_for(choice: MethodChoice) -> Vec<Method> {
    match choice {
        MethodChoice::Iid => vec![Method::Iid],
        MethodChoice::Pfm => vec![Method::Pfm],
        MethodChoice::Mf => vec![Method::Mf],
        MethodChoice::All => vec![Method::Iid, Method::Pfm, Method::Mf],
    }
}

fn write_run_files(
    dir: &Path,
    command: &str,
    cfg: &RunConfig,
    problem: &Problem,
    runs: &[MethodRun],
) -> Result<(), CliError> {
    let summaries: Vec<MomentSummary> = runs.iter().map(|r| r.summary.clone()).collect();
    io::write_results(&dir.join(RESULTS_FILE), &summaries, problem.p())?;

    let diagnostics: BTreeMap<&str, &Value> = runs
        .iter()
        .map(|r| (r.summary.method.as_str(), &r.diagnostics))
        .collect();
    let meta = json!({
        "command": command,
        "seed": cfg.seed,
        "n": problem.design.n(),
        "p": problem.p(),
        "methods": diagnostics,
        "timings_file": TIMINGS_FILE,
        "config": cfg.without_paths(),
    });
    io::write_json(&dir.join(METADATA_FILE), &meta)?;

    let timings: BTreeMap<&str, f64> = runs
        .iter()
        .map(|r| (r.summary.method.as_str(), r.summary.wall_time_seconds))
        .collect();
    io::write_json(&dir.join(TIMINGS_FILE), &json!({ "wall_time_seconds": timings }))
}

pub fn fit(cfg: &RunConfig) -> Result<(), CliError> {
    let problem = Problem::from_data(cfg, data_path(cfg)?)?;
    let dir = out_dir(cfg)?;
    let runs = methods_for(cfg.method)
        .into_iter()
        .map(|m| run_method(cfg, &problem, m))
        .collect::<Result<Vec<_>, _>>()?;
    write_run_files(&dir, "fit", cfg, &problem, &runs)
}

/// Accuracy of the variational methods against the i.i.d. reference.
#[derive(Debug, Clone, Serialize)]
pub struct ComparisonReport {
    pub reference: Method,
    pub draws: usize,
    pub comparisons: Vec<MethodComparison>,
    pub convergence: BTreeMap<String, Value>,
    /// Wall times are non-reproducible and written to [`TIMINGS_FILE`].
    pub timings_file: String,
}

pub fn build_report(cfg: &RunConfig, p: usize, runs: &[MethodRun]) -> Result<ComparisonReport, CliError> {
    let reference = runs
        .iter()
        .find(|r| r.summary.method == Method::Iid)
        .ok_or_else(|| CliError::Config("comparison needs the iid reference".into()))?;
    let comparisons = runs
        .iter()
        .filter(|r| r.summary.method != Method::Iid)
        .map(|r| compare_moments(&reference.summary, &r.summary, p))
        .collect::<Result<Vec<_>, _>>()?;
    let convergence = runs
        .iter()
        .map(|r| (r.summary.method.to_string(), r.diagnostics.clone()))
        .collect();
    Ok(ComparisonReport {
        reference: Method::Iid,
        draws: cfg.draws,
        comparisons,
        convergence,
        timings_file: TIMINGS_FILE.to_string(),
    })
}

pub fn compare(cfg: &RunConfig) -> Result<(), CliError> {
    let problem = Problem::from_data(cfg, data_path(cfg)?)?;
    let dir = out_dir(cfg)?;
    let runs = methods_for(MethodChoice::All)
        .into_iter()
        .map(|m| run_method(cfg, &problem, m))
        .collect::<Result<Vec<_>, _>>()?;
    write_run_files(&dir, "compare", cfg, &problem, &runs)?;

    let summaries: Vec<MomentSummary> = runs.iter().map(|r| r.summary.clone()).collect();
    io::write_bands(&dir.join(BANDS_FILE), &summaries, problem.p())?;
    let report = build_report(cfg, problem.p(), &runs)?;
    io::write_json(&dir.join(COMPARISON_FILE), &report)
}

//! Mean-field baseline: `q(theta, z) = q(theta) prod_i q(z_i)`.
//!
//! The coordinate updates under the augmented model are
//! `q(theta) = N(V X' zbar, V)` and
//! `q(z_i) = N(X_i E[theta], 1)` truncated to `(2 y_i - 1) z_i > 0`,
//! so the fit reduces to the fixed point
//! `zbar_i = trunc_norm_mean(X_i V X' zbar, 1, 2 y_i - 1)`.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::model::{BinarySeries, DesignMatrices, PriorCovariance};
use crate::pfm::{add_to_block, compute_v, Coupling};
use crate::summary::{Method, MomentSummary};
use crate::truncnorm::trunc_mean_unchecked;

#[derive(Debug, Clone)]
pub struct MfSolution {
    pub z_bar: DVector<f64>,
    /// `E_q[theta] = V X' zbar`.
    pub mean: DVector<f64>,
    /// Covariance of `q(theta)`.
    pub v: DMatrix<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// `max_i |zbar_i - trunc_norm_mean(X_i V X' zbar, 1, 2 y_i - 1)|`.
    pub residual: f64,
    pub delta_history: Vec<f64>,
    pub tolerance: f64,
    pub elapsed_seconds: f64,
}

fn fresh_residual(coupling: &Coupling, design: &DesignMatrices, signs: &[f64], z_bar: &DVector<f64>) -> f64 {
    let w = design.x().transpose() * z_bar;
    (0..z_bar.len())
        .map(|i| (z_bar[i] - trunc_mean_unchecked(coupling.row_dot(i, &w), 1.0, signs[i])).abs())
        .fold(0.0, f64::max)
}

/// Gauss-Seidel sweeps over `zbar`, started (like the partially factorized
/// fit) from `trunc_norm_mean(0, 1, 2 y_i - 1)`, with the same stopping rule.
pub fn mf_fit(
    prior: &PriorCovariance,
    design: &DesignMatrices,
    y: &BinarySeries,
    tolerance: f64,
    max_sweeps: usize,
) -> Result<MfSolution> {
    let start = Instant::now();
    let n = design.n();
    if y.len() != n {
        return Err(Error::InvalidInput(format!(
            "response series has length {}, design has {n} rows",
            y.len()
        )));
    }
    if tolerance.is_nan() || tolerance <= 0.0 || max_sweeps == 0 {
        return Err(Error::InvalidInput(
            "tolerance and max_sweeps must be positive".into(),
        ));
    }
    let v = compute_v(prior, design)?;
    let coupling = Coupling::new(&v, design);
    let signs: Vec<f64> = y.signs().collect();

    let mut z_bar = DVector::from_fn(n, |i, _| trunc_mean_unchecked(0.0, 1.0, signs[i]));
    let mut w = design.x().transpose() * &z_bar;
    let mut delta_history = Vec::new();
    let mut converged = false;
    let mut residual = f64::INFINITY;
    while delta_history.len() < max_sweeps {
        let mut max_step = 0.0_f64;
        for i in 0..n {
            let location = coupling.row_dot(i, &w);
            let updated = trunc_mean_unchecked(location, 1.0, signs[i]);
            let step = updated - z_bar[i];
            if step != 0.0 {
                add_to_block(&mut w, design, i, step);
                z_bar[i] = updated;
            }
            max_step = max_step.max(step.abs());
        }
        delta_history.push(max_step);
        if max_step < tolerance {
            residual = fresh_residual(&coupling, design, &signs, &z_bar);
            if residual <= 10.0 * tolerance {
                converged = true;
                break;
            }
        }
    }
    if !converged {
        residual = fresh_residual(&coupling, design, &signs, &z_bar);
    }
    let mean = &v * (design.x().transpose() * &z_bar);

    Ok(MfSolution {
        z_bar,
        mean,
        v,
        iterations: delta_history.len(),
        converged,
        residual,
        delta_history,
        tolerance,
        elapsed_seconds: start.elapsed().as_secs_f64(),
    })
}

pub fn mf_moments(sol: &MfSolution) -> MomentSummary {
    MomentSummary {
        mean: sol.mean.clone(),
        sd: DVector::from_fn(sol.v.nrows(), |i, _| sol.v[(i, i)].max(0.0).sqrt()),
        mc_se_mean: None,
        method: Method::Mf,
        draws: None,
        wall_time_seconds: sol.elapsed_seconds,
    }
}

//! The dynamic probit model, its joint Gaussian state prior and the
//! block-diagonal design matrices.

use nalgebra::{DMatrix, DMatrixView, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{is_psd, is_symmetric, psd_sqrt, PSD_REL_TOL};
use crate::rng::{self, Domain};

const SYMMETRY_TOL: f64 = 1e-10;

/// A univariate dynamic probit model with zero initial state mean.
///
/// `P(y_t = 1) = Phi(x_t' theta_t)`, `theta_t = G_t theta_{t-1} + N(0, W_t)`,
/// `theta_0 ~ N(0, P0)`.
#[derive(Debug, Clone)]
pub struct ModelSpec {
    x: Vec<DVector<f64>>,
    g: Vec<DMatrix<f64>>,
    w: Vec<DMatrix<f64>>,
    p0: DMatrix<f64>,
}

impl ModelSpec {
    pub fn new(
        x: Vec<DVector<f64>>,
        g: Vec<DMatrix<f64>>,
        w: Vec<DMatrix<f64>>,
        p0: DMatrix<f64>,
    ) -> Result<Self> {
        let n = x.len();
        let p = p0.nrows();
        if n == 0 {
            return Err(Error::InvalidSpec("model needs at least one time step".into()));
        }
        if p == 0 || !p0.is_square() {
            return Err(Error::InvalidSpec(format!(
                "P0 must be a non-empty square matrix, got {}x{}",
                p0.nrows(),
                p0.ncols()
            )));
        }
        if g.len() != n || w.len() != n {
            return Err(Error::InvalidSpec(format!(
                "expected {n} transition and noise matrices, got {} and {}",
                g.len(),
                w.len()
            )));
        }
        for (t, xt) in x.iter().enumerate() {
            if xt.len() != p {
                return Err(Error::InvalidSpec(format!(
                    "covariate vector at t={} has length {}, expected {p}",
                    t + 1,
                    xt.len()
                )));
            }
            if xt.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidSpec(format!("non-finite covariate at t={}", t + 1)));
            }
        }
        for (t, (gt, wt)) in g.iter().zip(&w).enumerate() {
            if gt.shape() != (p, p) || wt.shape() != (p, p) {
                return Err(Error::InvalidSpec(format!(
                    "G and W at t={} must be {p}x{p}",
                    t + 1
                )));
            }
            if gt.iter().chain(wt.iter()).any(|v| !v.is_finite()) {
                return Err(Error::InvalidSpec(format!("non-finite G or W at t={}", t + 1)));
            }
            if !is_symmetric(wt, SYMMETRY_TOL) {
                return Err(Error::InvalidSpec(format!("W at t={} is not symmetric", t + 1)));
            }
            if !is_psd(wt, PSD_REL_TOL) {
                return Err(Error::InvalidSpec(format!(
                    "W at t={} is not positive semidefinite",
                    t + 1
                )));
            }
        }
        if p0.iter().any(|v| !v.is_finite()) || !is_symmetric(&p0, SYMMETRY_TOL) {
            return Err(Error::InvalidSpec("P0 must be finite and symmetric".into()));
        }
        if p0.clone().cholesky().is_none() {
            return Err(Error::InvalidSpec("P0 is not positive definite".into()));
        }
        Ok(Self { x, g, w, p0 })
    }

    /// Same `G`, `W` at every time step.
    pub fn time_invariant(
        x: Vec<DVector<f64>>,
        g: DMatrix<f64>,
        w: DMatrix<f64>,
        p0: DMatrix<f64>,
    ) -> Result<Self> {
        let n = x.len();
        Self::new(x, vec![g; n], vec![w; n], p0)
    }

    pub fn n(&self) -> usize {
        self.x.len()
    }

    pub fn p(&self) -> usize {
        self.p0.nrows()
    }

    pub fn covariates(&self) -> &[DVector<f64>] {
        &self.x
    }

    pub fn transitions(&self) -> &[DMatrix<f64>] {
        &self.g
    }

    pub fn noise_covariances(&self) -> &[DMatrix<f64>] {
        &self.w
    }

    pub fn initial_covariance(&self) -> &DMatrix<f64> {
        &self.p0
    }

    /// Always zero; a nonzero initial mean is rejected by [`check_initial_mean`].
    pub fn initial_mean(&self) -> DVector<f64> {
        DVector::zeros(self.p())
    }
}

/// Only `a0 = 0` is supported.
pub fn check_initial_mean(a0: &[f64]) -> Result<()> {
    if a0.iter().any(|&v| v != 0.0) {
        return Err(Error::InvalidSpec(
            "nonzero initial state mean a0 is not supported; center the states".into(),
        ));
    }
    Ok(())
}

/// Binary responses `y_t` in {0, 1}.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinarySeries(Vec<u8>);

impl BinarySeries {
    pub fn new(y: Vec<u8>) -> Result<Self> {
        if let Some(t) = y.iter().position(|&v| v > 1) {
            return Err(Error::InvalidInput(format!(
                "response at t={} is {}, expected 0 or 1",
                t + 1,
                y[t]
            )));
        }
        Ok(Self(y))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn values(&self) -> &[u8] {
        &self.0
    }

    /// `2 y_t - 1` for a zero-based index.
    pub fn sign(&self, t: usize) -> f64 {
        if self.0[t] == 1 {
            1.0
        } else {
            -1.0
        }
    }

    pub fn signs(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(|t| self.sign(t))
    }
}

/// Dense `(pn x pn)` covariance of the stacked states `theta_{1:n}`.
#[derive(Debug, Clone)]
pub struct PriorCovariance {
    omega: DMatrix<f64>,
    n: usize,
    p: usize,
}

impl PriorCovariance {
    /// Builds the prior covariance by propagating each block column forward:
    /// block `(l, l)` is `var(theta_l)`, and block `(t, l)` for `t > l` is
    /// `G_t` times block `(t-1, l)`.
    pub fn build(spec: &ModelSpec) -> Self {
        let n = spec.n();
        let p = spec.p();
        let mut omega = DMatrix::zeros(n * p, n * p);

        let mut var = spec.initial_covariance().clone();
        for l in 0..n {
            let g = &spec.g[l];
            var = g * &var * g.transpose() + &spec.w[l];
            // exact symmetry on the diagonal block
            var = 0.5 * (&var + var.transpose());
            omega.view_mut((l * p, l * p), (p, p)).copy_from(&var);

            let mut cross = var.clone();
            for t in (l + 1)..n {
                cross = &spec.g[t] * &cross;
                omega.view_mut((t * p, l * p), (p, p)).copy_from(&cross);
                omega.view_mut((l * p, t * p), (p, p)).copy_from(&cross.transpose());
            }
        }
        Self { omega, n, p }
    }

    /// Wraps an explicit covariance matrix. It must be symmetric PSD with
    /// dimension `n * p`.
    pub fn from_matrix(omega: DMatrix<f64>, n: usize, p: usize) -> Result<Self> {
        if omega.shape() != (n * p, n * p) {
            return Err(Error::InvalidSpec(format!(
                "prior covariance must be {0}x{0}",
                n * p
            )));
        }
        if !is_symmetric(&omega, SYMMETRY_TOL) || !is_psd(&omega, PSD_REL_TOL) {
            return Err(Error::Domain("prior covariance must be symmetric PSD".into()));
        }
        Ok(Self { omega, n, p })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.omega
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    /// `cov(theta_t, theta_l)` for zero-based `t`, `l`.
    pub fn block(&self, t: usize, l: usize) -> DMatrixView<'_, f64> {
        self.omega.view((t * self.p, l * self.p), (self.p, self.p))
    }
}

/// `X` has row `t` equal to `x_t'` placed in columns `t*p .. (t+1)*p`;
/// `D = diag(2y - 1) X`.
#[derive(Debug, Clone)]
pub struct DesignMatrices {
    x: DMatrix<f64>,
    d: DMatrix<f64>,
    p: usize,
}

impl DesignMatrices {
    pub fn build(spec: &ModelSpec, y: &BinarySeries) -> Result<Self> {
        Self::from_covariates(spec.covariates(), y)
    }

    pub fn from_covariates(x_rows: &[DVector<f64>], y: &BinarySeries) -> Result<Self> {
        let n = x_rows.len();
        if y.len() != n {
            return Err(Error::InvalidInput(format!(
                "response series has length {}, model has n={n}",
                y.len()
            )));
        }
        let p = x_rows.first().map_or(0, |v| v.len());
        if x_rows.iter().any(|v| v.len() != p) {
            return Err(Error::InvalidInput("covariate vectors differ in length".into()));
        }
        let mut x = DMatrix::zeros(n, n * p);
        let mut d = DMatrix::zeros(n, n * p);
        for (t, xt) in x_rows.iter().enumerate() {
            let sign = y.sign(t);
            for k in 0..p {
                x[(t, t * p + k)] = xt[k];
                d[(t, t * p + k)] = sign * xt[k];
            }
        }
        Ok(Self { x, d, p })
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn d(&self) -> &DMatrix<f64> {
        &self.d
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.p
    }

    /// The nonzero part `x_t` of row `t` of `X`.
    pub fn row_covariates(&self, t: usize) -> impl Iterator<Item = f64> + '_ {
        (0..self.p).map(move |k| self.x[(t, t * self.p + k)])
    }
}

/// One draw of the augmented model.
#[derive(Debug, Clone, PartialEq)]
pub struct Simulation {
    pub theta: Vec<DVector<f64>>,
    pub z: DVector<f64>,
    pub y: BinarySeries,
}

/// Draws `theta_{0:n}`, the latent utilities `z_t = x_t' theta_t + N(0, 1)`
/// and `y_t = 1(z_t > 0)`.
pub fn simulate(spec: &ModelSpec, seed: u64) -> Simulation {
    let mut rng = rng::stream(seed, Domain::Simulation, 0);
    let p = spec.p();
    let normal = |rng: &mut rng::StreamRng| -> DVector<f64> {
        DVector::from_fn(p, |_, _| rng.sample(StandardNormal))
    };

    let mut state = psd_sqrt(spec.initial_covariance()) * normal(&mut rng);
    let mut theta = Vec::with_capacity(spec.n());
    let mut z = DVector::zeros(spec.n());
    let mut y = Vec::with_capacity(spec.n());
    for t in 0..spec.n() {
        let noise = psd_sqrt(&spec.w[t]) * normal(&mut rng);
        state = &spec.g[t] * state + noise;
        let eta: f64 = rng.sample(StandardNormal);
        z[t] = spec.x[t].dot(&state) + eta;
        y.push(u8::from(z[t] > 0.0));
        theta.push(state.clone());
    }
    Simulation {
        theta,
        z,
        y: BinarySeries(y),
    }
}

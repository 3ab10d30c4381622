//! Independent reference computations shared by the integration tests.
//! Nothing here calls into the code paths it is used to check.
#![allow(dead_code)]

use dynprobit::model::{simulate, BinarySeries, DesignMatrices, ModelSpec, PriorCovariance};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn uniform_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize, lo: f64, hi: f64) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.random_range(lo..hi))
}

/// Random valid model with `1 <= n <= n_max`, `1 <= p <= p_max`.
pub fn random_spec(seed: u64, n_max: usize, p_max: usize) -> ModelSpec {
    let mut r = rng(seed);
    let n = r.random_range(1..=n_max);
    let p = r.random_range(1..=p_max);
    random_spec_dims(&mut r, n, p)
}

pub fn random_spec_dims(r: &mut ChaCha8Rng, n: usize, p: usize) -> ModelSpec {
    let x = (0..n)
        .map(|_| DVector::from_fn(p, |_, _| r.random_range(-1.2..1.2)))
        .collect();
    let g = (0..n).map(|_| uniform_matrix(r, p, p, -0.9, 0.9)).collect();
    let w = (0..n)
        .map(|_| {
            let a = uniform_matrix(r, p, p, -0.7, 0.7);
            &a * a.transpose()
        })
        .collect();
    let b = uniform_matrix(r, p, p, -1.0, 1.0);
    let p0 = &b * b.transpose() + DMatrix::identity(p, p) * 0.5;
    ModelSpec::new(x, g, w, p0).unwrap()
}

pub struct Problem {
    pub spec: ModelSpec,
    pub y: BinarySeries,
    pub prior: PriorCovariance,
    pub design: DesignMatrices,
}

/// Random model with responses simulated from it.
pub fn random_problem(seed: u64, n_max: usize, p_max: usize) -> Problem {
    let spec = random_spec(seed, n_max, p_max);
    problem_for(spec, seed)
}

pub fn problem_for(spec: ModelSpec, seed: u64) -> Problem {
    let y = simulate(&spec, seed ^ 0xABCD).y;
    let prior = PriorCovariance::build(&spec);
    let design = DesignMatrices::build(&spec, &y).unwrap();
    Problem { spec, y, prior, design }
}

/// `G_l^t = G_t ... G_l` with one-based indices; the identity when `l > t`.
fn transition_product(spec: &ModelSpec, l: usize, t: usize) -> DMatrix<f64> {
    let p = spec.p();
    let mut prod = DMatrix::identity(p, p);
    for s in l..=t {
        prod = &spec.transitions()[s - 1] * prod;
    }
    prod
}

/// Closed-form block formula, every product recomputed from scratch:
/// `Omega_tt = G_1^t P0 G_1^t' + sum_{l=2}^t G_l^t W_{l-1} G_l^t' + W_t`,
/// `Omega_tl = G_{l+1}^t Omega_ll` for `t > l`.
pub fn omega_block_formula(spec: &ModelSpec) -> DMatrix<f64> {
    let n = spec.n();
    let p = spec.p();
    let w = spec.noise_covariances();
    let mut diag = Vec::with_capacity(n);
    for t in 1..=n {
        let g1 = transition_product(spec, 1, t);
        let mut block = &g1 * spec.initial_covariance() * g1.transpose() + &w[t - 1];
        for l in 2..=t {
            let gl = transition_product(spec, l, t);
            block += &gl * &w[l - 2] * gl.transpose();
        }
        diag.push(block);
    }
    let mut omega = DMatrix::zeros(n * p, n * p);
    for t in 1..=n {
        for l in 1..=t {
            let block = transition_product(spec, l + 1, t) * &diag[l - 1];
            omega.view_mut(((t - 1) * p, (l - 1) * p), (p, p)).copy_from(&block);
            omega.view_mut(((l - 1) * p, (t - 1) * p), (p, p)).copy_from(&block.transpose());
        }
    }
    omega
}

/// Step-by-step propagation of the linear map from `(theta_0, eps_1..eps_n)`
/// to `theta_{1:n}`: `theta_t = G_t theta_{t-1} + eps_t`, so the coefficient
/// rows of `theta_t` are `G_t` times those of `theta_{t-1}` plus a unit
/// block for `eps_t`. Then `Omega = A diag(P0, W_1, ..., W_n) A'`.
pub fn omega_linear_map(spec: &ModelSpec) -> DMatrix<f64> {
    let n = spec.n();
    let p = spec.p();
    let m = (n + 1) * p;
    let mut sources = DMatrix::zeros(m, m);
    sources.view_mut((0, 0), (p, p)).copy_from(spec.initial_covariance());
    for t in 0..n {
        sources
            .view_mut(((t + 1) * p, (t + 1) * p), (p, p))
            .copy_from(&spec.noise_covariances()[t]);
    }
    let mut coeff = DMatrix::zeros(n * p, m);
    let mut prev = DMatrix::zeros(p, m);
    prev.view_mut((0, 0), (p, p)).fill_with_identity();
    for t in 0..n {
        let mut row = &spec.transitions()[t] * &prev;
        for k in 0..p {
            row[(k, (t + 1) * p + k)] += 1.0;
        }
        coeff.view_mut((t * p, 0), (p, m)).copy_from(&row);
        prev = row;
    }
    &coeff * sources * coeff.transpose()
}

/// `(Omega^{-1} + X'X)^{-1}` by explicit inversion. Uses pivoted LU
/// throughout; nalgebra's `try_inverse` switches to cofactor formulas for
/// dimension <= 4, which lose accuracy on moderately conditioned input.
pub fn v_direct(omega: &DMatrix<f64>, x: &DMatrix<f64>) -> DMatrix<f64> {
    let precision = omega.clone().lu().try_inverse().expect("invertible prior") + x.transpose() * x;
    precision.lu().try_inverse().expect("invertible posterior precision")
}

/// Gauss-Legendre nodes and weights on [-1, 1] (Newton on `P_m`).
pub fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; m];
    let mut weights = vec![0.0; m];
    for i in 0..m.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, 0.0);
            for j in 0..m {
                let p2 = p1;
                p1 = p0;
                p0 = ((2 * j + 1) as f64 * z * p1 - j as f64 * p2) / (j + 1) as f64;
            }
            dp = m as f64 * (z * p0 - p1) / (z * z - 1.0);
            let dz = p0 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -z;
        nodes[m - 1 - i] = z;
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        weights[i] = w;
        weights[m - 1 - i] = w;
    }
    (nodes, weights)
}

/// Composite 20-point Gauss-Legendre over `[a, b]` split in `panels`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize) -> f64 {
    let (nodes, weights) = gauss_legendre(20);
    let h = (b - a) / panels as f64;
    let mut total = 0.0;
    for k in 0..panels {
        let lo = a + k as f64 * h;
        let mid = lo + 0.5 * h;
        for (z, w) in nodes.iter().zip(&weights) {
            total += w * f(mid + 0.5 * h * z);
        }
    }
    total * 0.5 * h
}

/// `Phi(x) / phi(x) = int_0^inf exp(x u - u^2 / 2) du` by quadrature, so
/// `zeta(x)` is its reciprocal.
pub fn mills_ratio_quadrature(x: f64) -> f64 {
    let width = 1.0 / (1.0 + x.abs());
    let (upper, shift) = if x <= 0.0 {
        // integrand below e^-80 beyond this point
        let a = x.abs();
        ((-a + (a * a + 160.0).sqrt()), 0.0)
    } else {
        (x + 13.0, 0.5 * x * x)
    };
    let panels = (upper / width).ceil() as usize;
    integrate(|u| (x * u - 0.5 * u * u - shift).exp(), 0.0, upper, panels) * shift.exp()
}

pub fn zeta_quadrature(x: f64) -> f64 {
    1.0 / mills_ratio_quadrature(x)
}

/// Componentwise mean of `N_2(0, [[1, rho], [rho, 1]])` restricted to the
/// positive quadrant, by 2-d quadrature over `[0, 10]^2`.
pub fn bivariate_orthant_mean(rho: f64) -> f64 {
    let (nodes, weights) = gauss_legendre(20);
    let panels = 40;
    let h = 10.0 / panels as f64;
    let points: Vec<(f64, f64)> = (0..panels)
        .flat_map(|k| {
            let mid = (k as f64 + 0.5) * h;
            nodes
                .iter()
                .zip(&weights)
                .map(move |(z, w)| (mid + 0.5 * h * z, 0.5 * h * w))
                .collect::<Vec<_>>()
        })
        .collect();
    let det = 1.0 - rho * rho;
    let (mut mass, mut first) = (0.0, 0.0);
    for &(a, wa) in &points {
        for &(b, wb) in &points {
            let dens = (-(a * a - 2.0 * rho * a * b + b * b) / (2.0 * det)).exp();
            mass += wa * wb * dens;
            first += wa * wb * a * dens;
        }
    }
    first / mass
}

pub fn column_mean_sd(draws: &[DVector<f64>], j: usize) -> (f64, f64) {
    let r = draws.len() as f64;
    let mean = draws.iter().map(|d| d[j]).sum::<f64>() / r;
    let var = draws.iter().map(|d| (d[j] - mean).powi(2)).sum::<f64>() / (r - 1.0);
    (mean, var.sqrt())
}

/// Standard error of the sample standard deviation from the fourth central
/// moment: `se(var) = sqrt((m4 - var^2) / R)`, `se(sd) = se(var) / (2 sd)`.
pub fn sd_standard_error(draws: &[DVector<f64>], j: usize) -> f64 {
    let r = draws.len() as f64;
    let (mean, sd) = column_mean_sd(draws, j);
    let m4 = draws.iter().map(|d| (d[j] - mean).powi(4)).sum::<f64>() / r;
    let var = sd * sd;
    ((m4 - var * var).max(0.0) / r).sqrt() / (2.0 * sd)
}

/// Batch-means standard error of the mean of a correlated chain.
pub fn batch_means_se(draws: &[DVector<f64>], j: usize, batches: usize) -> f64 {
    let size = draws.len() / batches;
    let means: Vec<f64> = (0..batches)
        .map(|b| draws[b * size..(b + 1) * size].iter().map(|d| d[j]).sum::<f64>() / size as f64)
        .collect();
    let grand = means.iter().sum::<f64>() / batches as f64;
    let var = means.iter().map(|m| (m - grand).powi(2)).sum::<f64>() / (batches as f64 - 1.0);
    (var / batches as f64).sqrt()
}

/// One-sample Kolmogorov-Smirnov p-value (asymptotic distribution with
/// the Stephens small-sample correction).
pub fn ks_p_value<F: Fn(f64) -> f64>(mut sample: Vec<f64>, cdf: F) -> f64 {
    sample.sort_by(f64::total_cmp);
    let n = sample.len() as f64;
    let mut d = 0.0_f64;
    for (i, &v) in sample.iter().enumerate() {
        let f = cdf(v);
        d = d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n);
    }
    let lambda = (n.sqrt() + 0.12 + 0.11 / n.sqrt()) * d;
    let mut p = 0.0;
    for k in 1..=100 {
        let term = 2.0 * (-1f64).powi(k - 1) * (-2.0 * (k as f64 * lambda).powi(2)).exp();
        p += term;
    }
    p.clamp(0.0, 1.0)
}

/// Half-normal CDF `2 Phi(x) - 1 = erf(x / sqrt 2)` for `x >= 0`, via the
/// quadrature of the density.
pub fn half_normal_cdf(x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let panels = (x * 4.0).ceil() as usize + 1;
    integrate(|u| (2.0 / std::f64::consts::PI).sqrt() * (-0.5 * u * u).exp(), 0.0, x, panels)
}

pub fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).amax()
}

pub fn min_max_eigen(m: &DMatrix<f64>) -> (f64, f64) {
    let eig = m.clone().symmetric_eigen();
    (eig.eigenvalues.min(), eig.eigenvalues.max())
}

/// Literal fixed-point residual
/// `max_i |mu_i - sigma_i^2 X_[i,] V X_[-i,]' zbar_{-i}|`, forming
/// `X_[-i,]` explicitly.
pub fn literal_residual(
    v: &DMatrix<f64>,
    x: &DMatrix<f64>,
    sigma_sq: &DVector<f64>,
    mu: &DVector<f64>,
    z_bar: &DVector<f64>,
) -> f64 {
    let n = x.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        let keep: Vec<usize> = (0..n).filter(|&j| j != i).collect();
        let x_rest = x.select_rows(&keep);
        let z_rest = z_bar.select_rows(&keep);
        let row = x.row(i);
        let value = (row * v * x_rest.transpose() * z_rest)[(0, 0)];
        worst = worst.max((mu[i] - sigma_sq[i] * value).abs());
    }
    worst
}

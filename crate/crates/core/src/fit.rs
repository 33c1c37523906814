//! Filter learning and expressiveness checks.
//!
//! Least-squares fitting of a PC filter bank to a target spectral response on
//! a uniform grid over [0, 2], and exact interpolation of polynomial targets
//! through the (K+1) x (K+1) coefficient system. The interpolation system is
//! provably nonsingular whenever `t` avoids `{1, ..., K}`, so a singular
//! solve here signals a theory violation rather than bad data.

use crate::error::{Error, Result};
use crate::filter::{fold_basis, validate_t};
use crate::linalg::{dense_solve, DenseMatrix};
use crate::pcpoly::{build_table, series_eval_g};

/// A named target spectral response on [0, 2].
pub struct TargetFilter {
    name: String,
    eval: Box<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl TargetFilter {
    pub fn new(name: impl Into<String>, eval: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            name: name.into(),
            eval: Box::new(eval),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn eval(&self, lambda: f64) -> f64 {
        (self.eval)(lambda)
    }
}

/// Names accepted by [`target_zoo`].
pub const TARGET_NAMES: [&str; 5] = ["low_band_pass", "comb", "low_pass", "high_pass", "identity"];

/// Bank of reference targets.
///
/// `low_band_pass` is the indicator-plus-Gaussian-bumps curve
/// `I_[0,0.5] + exp(-100(l-0.5)^2) I_(0.5,1) + exp(-50(l-1.5)^2) I_[1,2]`;
/// `comb` is `|sin(pi l)|`.
pub fn target_zoo(name: &str) -> Result<TargetFilter> {
    let f: Box<dyn Fn(f64) -> f64 + Send + Sync> = match name {
        "low_band_pass" => Box::new(|l: f64| {
            if l <= 0.5 {
                1.0
            } else if l < 1.0 {
                (-100.0 * (l - 0.5) * (l - 0.5)).exp()
            } else {
                (-50.0 * (l - 1.5) * (l - 1.5)).exp()
            }
        }),
        "comb" => Box::new(|l: f64| (std::f64::consts::PI * l).sin().abs()),
        "low_pass" => Box::new(|l: f64| 1.0 - l / 2.0),
        "high_pass" => Box::new(|l: f64| l / 2.0),
        "identity" => Box::new(|_| 1.0),
        other => {
            return Err(Error::invalid(format!(
                "unknown target '{other}'; expected one of {TARGET_NAMES:?}"
            )))
        }
    };
    Ok(TargetFilter {
        name: name.to_string(),
        eval: f,
    })
}

/// Outcome of a least-squares filter fit.
#[derive(Debug, Clone)]
pub struct FitResult {
    pub theta: Vec<f64>,
    pub rmse: f64,
    pub grid: Vec<f64>,
    pub responses: Vec<f64>,
}

/// Uniform grid of `size` points on [0, 2] inclusive.
pub fn lambda_grid(size: usize) -> Vec<f64> {
    assert!(size >= 2, "grid needs at least two points");
    (0..size)
        .map(|i| 2.0 * i as f64 / (size - 1) as f64)
        .collect()
}

/// Ridge damping added to the normal-equation diagonal.
const RIDGE: f64 = 1e-10;

/// Fits `theta` minimizing the squared residual of
/// `theta_0 + sum_k theta_k P_{k,t}(lambda_i)` against the target over the
/// grid, via damped normal equations.
pub fn fit_least_squares(
    target: &TargetFilter,
    grid_size: usize,
    k_order: usize,
    n_order: usize,
    t: f64,
) -> Result<FitResult> {
    if k_order == 0 {
        return Err(Error::invalid("fit requires k_order >= 1"));
    }
    if n_order < k_order {
        return Err(Error::invalid(format!(
            "fit requires N >= K, got N = {n_order}, K = {k_order}"
        )));
    }
    if grid_size < k_order + 2 {
        return Err(Error::invalid(format!(
            "grid_size = {grid_size} too small for K = {k_order}"
        )));
    }
    validate_t(t, k_order)?;

    let grid = lambda_grid(grid_size);
    let mut design = DenseMatrix::zeros(grid_size, k_order + 1);
    for (i, &lam) in grid.iter().enumerate() {
        design.set(i, 0, 1.0);
        for k in 1..=k_order {
            design.set(i, k, series_eval_g(k as f64, t, lam, n_order));
        }
    }
    let targets: Vec<f64> = grid.iter().map(|&l| target.eval(l)).collect();

    let dt = design.transpose();
    let mut normal = dt.matmul(&design)?;
    for i in 0..=k_order {
        normal.set(i, i, normal.get(i, i) + RIDGE);
    }
    let rhs_vec = dt.matmul(&DenseMatrix::from_vec(grid_size, 1, targets.clone())?)?;
    let theta_mat = dense_solve(&normal, &rhs_vec)?;
    let theta: Vec<f64> = (0..=k_order).map(|i| theta_mat.get(i, 0)).collect();

    let mut responses = Vec::with_capacity(grid_size);
    let mut sq_sum = 0.0;
    for (i, &target_value) in targets.iter().enumerate() {
        let mut r = 0.0;
        for (k, &th) in theta.iter().enumerate() {
            r += th * design.get(i, k);
        }
        let resid = r - target_value;
        sq_sum += resid * resid;
        responses.push(r);
    }
    Ok(FitResult {
        theta,
        rmse: (sq_sum / grid_size as f64).sqrt(),
        grid,
        responses,
    })
}

/// Solves for `theta` so the order-K truncation of the filter bank
/// reproduces the polynomial `sum_n b_n lambda^n` exactly.
///
/// The system matrix has the unit vector `e_0` as the identity-channel column
/// and `(-1)^n C_n(k, t) / n!` in column `k`. Under the expressiveness
/// conditions (`N >= K`, `t` clear of `{1..K}`) the system is provably
/// nonsingular, so a singularity error indicates a theory violation.
pub fn interpolate_polynomial(
    poly_coeffs: &[f64],
    k_order: usize,
    n_order: usize,
    t: f64,
) -> Result<Vec<f64>> {
    if poly_coeffs.len() != k_order + 1 {
        return Err(Error::invalid(format!(
            "expected {} polynomial coefficients for K = {k_order}, got {}",
            k_order + 1,
            poly_coeffs.len()
        )));
    }
    if n_order < k_order {
        return Err(Error::invalid(format!(
            "interpolation requires N >= K, got N = {n_order}, K = {k_order}"
        )));
    }
    validate_t(t, k_order)?;

    let system = interpolation_matrix(k_order, t)?;
    let rhs = DenseMatrix::from_vec(k_order + 1, 1, poly_coeffs.to_vec())?;
    let solution = dense_solve(&system, &rhs)?;
    Ok((0..=k_order).map(|i| solution.get(i, 0)).collect())
}

/// The `(K+1) x (K+1)` interpolation system matrix.
pub fn interpolation_matrix(k_order: usize, t: f64) -> Result<DenseMatrix> {
    let table = build_table(t, k_order, k_order)?;
    let basis = fold_basis(&table);
    let mut m = DenseMatrix::zeros(k_order + 1, k_order + 1);
    m.set(0, 0, 1.0);
    for (n, row) in basis.iter().enumerate() {
        for (km1, &phi) in row.iter().enumerate() {
            m.set(n, km1 + 1, phi);
        }
    }
    Ok(m)
}

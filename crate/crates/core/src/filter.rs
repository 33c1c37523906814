//! PC-filter and PC-Conv evaluation.
//!
//! The production path folds the filter bank
//! `g_t(lambda) = theta_0 + sum_k theta_k P_{k,t}(lambda)` into power-basis
//! coefficients and applies them with one forward propagation pass of sparse
//! products. Dense spectral oracles (eigendecomposition filtering, the exact
//! two-fold closed form, heat kernels) live alongside for cross-checking;
//! they are never part of the training path.

use crate::error::{Error, Result};
use crate::graph::psd_feasible_p;
use crate::linalg::{dense_solve, sym_eig, DenseMatrix, SparseMatrix};
use crate::pcpoly::{build_table, series_eval_g, PcCoeffTable};

/// A complete description of one PC-Conv filter bank.
#[derive(Debug, Clone)]
pub struct FilterParams {
    theta: Vec<f64>,
    t: f64,
    p: f64,
    eta: f64,
    n_order: usize,
}

impl FilterParams {
    /// Validates and stores filter parameters.
    ///
    /// `theta` holds `theta_0 ..= theta_K` (so `K = theta.len() - 1 >= 1`);
    /// `t` must be positive and stay clear of `{1, ..., K}` by more than 1e-9.
    pub fn new(theta: Vec<f64>, t: f64, p: f64, eta: f64, n_order: usize) -> Result<Self> {
        if theta.len() < 2 {
            return Err(Error::invalid(
                "filter requires theta_0 plus at least one bank coefficient",
            ));
        }
        let k_order = theta.len() - 1;
        validate_t(t, k_order)?;
        if p < 2.0 {
            return Err(Error::invalid(format!("p = {p} below 2")));
        }
        if !(0.0..=1.0).contains(&eta) {
            return Err(Error::invalid(format!("eta = {eta} outside [0, 1]")));
        }
        Ok(Self {
            theta,
            t,
            p,
            eta,
            n_order,
        })
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn set_theta(&mut self, theta: Vec<f64>) -> Result<()> {
        if theta.len() != self.theta.len() {
            return Err(Error::dims("theta length changed"));
        }
        self.theta = theta;
        Ok(())
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn n_order(&self) -> usize {
        self.n_order
    }

    pub fn k_order(&self) -> usize {
        self.theta.len() - 1
    }
}

/// Rejects `t <= 0` and `t` within 1e-9 of an integer in `{1, ..., k_order}`.
pub fn validate_t(t: f64, k_order: usize) -> Result<()> {
    if t <= 0.0 {
        return Err(Error::invalid(format!("t = {t} must be positive")));
    }
    let nearest = t.round();
    if (t - nearest).abs() <= 1e-9 && nearest >= 1.0 && nearest <= k_order as f64 {
        return Err(Error::invalid(format!(
            "t = {t} collides with an integer in 1..={k_order}"
        )));
    }
    Ok(())
}

/// Power-basis coefficients of the folded filter bank:
/// `a_n = sum_k theta_k C_n(k, t) (-1)^n / n!`, with `theta_0` added to `a_0`.
#[derive(Debug, Clone, PartialEq)]
pub struct FoldedCoeffs {
    a: Vec<f64>,
}

impl FoldedCoeffs {
    pub fn coeffs(&self) -> &[f64] {
        &self.a
    }

    /// Evaluates `sum_n a_n lambda^n` by Horner's rule.
    pub fn eval_poly(&self, lambda: f64) -> f64 {
        self.a.iter().rev().fold(0.0, |acc, &c| acc * lambda + c)
    }
}

/// `basis[n][k-1] = C_n(k, t) (-1)^n / n!` for the table's full order range.
/// Folding and the theta gradient both contract against this matrix.
pub fn fold_basis(table: &PcCoeffTable) -> Vec<Vec<f64>> {
    let mut basis = Vec::with_capacity(table.n_max() + 1);
    let mut factor = 1.0;
    for n in 0..=table.n_max() {
        if n > 0 {
            factor /= -(n as f64);
        }
        basis.push(
            (1..=table.k_max())
                .map(|k| table.coeff(n, k) * factor)
                .collect(),
        );
    }
    basis
}

/// Scalar spectral response `theta_0 + sum_k theta_k P_{k,t}(lambda)`.
pub fn scalar_response(params: &FilterParams, lambda: f64) -> f64 {
    let mut acc = params.theta[0];
    for (k, &th) in params.theta.iter().enumerate().skip(1) {
        acc += th * series_eval_g(k as f64, params.t, lambda, params.n_order);
    }
    acc
}

/// Folds the double sum of the filter bank into single power-basis
/// coefficients, turning K propagation passes into one.
pub fn fold_coefficients(params: &FilterParams, table: &PcCoeffTable) -> Result<FoldedCoeffs> {
    if table.t() != params.t || table.n_max() != params.n_order || table.k_max() != params.k_order()
    {
        return Err(Error::invalid(format!(
            "coefficient table (t={}, N={}, K={}) does not match params (t={}, N={}, K={})",
            table.t(),
            table.n_max(),
            table.k_max(),
            params.t,
            params.n_order,
            params.k_order()
        )));
    }
    let basis = fold_basis(table);
    let mut a = vec![0.0; params.n_order + 1];
    for (n, row) in basis.iter().enumerate() {
        let mut acc = 0.0;
        for (km1, &phi) in row.iter().enumerate() {
            acc += params.theta[km1 + 1] * phi;
        }
        a[n] = acc;
    }
    a[0] += params.theta[0];
    Ok(FoldedCoeffs { a })
}

/// Applies the folded filter with one forward pass:
/// `Z = sum_n a_n L^n X`, where `V_0 = X` and `V_n = L V_{n-1}`.
pub fn apply_conv(l: &SparseMatrix, x: &DenseMatrix, params: &FilterParams) -> Result<DenseMatrix> {
    if l.n_rows() != l.n_cols() {
        return Err(Error::dims(format!(
            "apply_conv: operator is {}x{}",
            l.n_rows(),
            l.n_cols()
        )));
    }
    if l.n_rows() != x.n_rows() {
        return Err(Error::dims(format!(
            "apply_conv: operator has {} rows, signal has {}",
            l.n_rows(),
            x.n_rows()
        )));
    }
    let table = build_table(params.t, params.n_order, params.k_order())?;
    let folded = fold_coefficients(params, &table)?;
    let a = folded.coeffs();

    let mut acc = x.clone();
    acc.scale(a[0]);
    let mut power = x.clone();
    for &coeff in &a[1..] {
        power = l.spmm(&power)?;
        acc.axpy(coeff, &power)?;
    }
    Ok(acc)
}

/// `U diag(f(lambda_i)) U^T X` for a symmetric dense operator.
fn apply_spectral(
    l_dense: &DenseMatrix,
    x: &DenseMatrix,
    f: impl Fn(f64) -> f64,
) -> Result<DenseMatrix> {
    if l_dense.n_rows() != x.n_rows() {
        return Err(Error::dims(format!(
            "spectral filter: operator has {} rows, signal has {}",
            l_dense.n_rows(),
            x.n_rows()
        )));
    }
    let eig = sym_eig(l_dense)?;
    let u = &eig.eigenvectors;
    let mut w = u.transpose().matmul(x)?;
    for (i, &lam) in eig.eigenvalues.iter().enumerate() {
        let g = f(lam);
        for v in w.row_mut(i) {
            *v *= g;
        }
    }
    u.matmul(&w)
}

/// `U diag(f(lambda_i)) U^T` as a dense matrix.
fn matrix_function(l_dense: &DenseMatrix, f: impl Fn(f64) -> f64) -> Result<DenseMatrix> {
    apply_spectral(l_dense, &DenseMatrix::identity(l_dense.n_rows()), f)
}

/// Dense eigendecomposition oracle for the full filter bank response.
pub fn spectral_oracle(
    l_dense: &DenseMatrix,
    x: &DenseMatrix,
    params: &FilterParams,
) -> Result<DenseMatrix> {
    apply_spectral(l_dense, x, |lam| scalar_response(params, lam))
}

/// Exact single-filter oracle `U diag((1-lambda)^k e^{t lambda}) U^T X`.
pub fn exact_filter_oracle(
    l_dense: &DenseMatrix,
    x: &DenseMatrix,
    k: usize,
    t: f64,
) -> Result<DenseMatrix> {
    apply_spectral(l_dense, x, |lam| {
        (1.0 - lam).powi(k as i32) * (t * lam).exp()
    })
}

/// Which aggregation factor is applied first in the two-fold closed form.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FactorOrder {
    HeteroFirst,
    HomoFirst,
}

/// Largest dimension accepted by [`twofold_closed_form`].
pub const TWOFOLD_MAX_DIM: usize = 500;

/// Exact two-fold filtering solution
/// `Z = [(alpha1 I + h1(L)) (alpha2 I + h2(L))]^{-1} X` with energies
/// `h1(lambda) = e^{-t(p-2+lambda)} - alpha1` and `h2(lambda) = p-2+lambda`
/// evaluated on the spectrum of the standard Laplacian `L`.
///
/// Dense oracle only: it performs the matrix inverse the production path is
/// designed to avoid. `p` must lie inside [`psd_feasible_p`]`(t, alpha1)`.
pub fn twofold_closed_form(
    l_dense: &DenseMatrix,
    x: &DenseMatrix,
    alpha1: f64,
    alpha2: f64,
    t: f64,
    p: f64,
    order: FactorOrder,
) -> Result<DenseMatrix> {
    if l_dense.n_rows() > TWOFOLD_MAX_DIM {
        return Err(Error::invalid(format!(
            "twofold_closed_form: dimension {} exceeds cap {TWOFOLD_MAX_DIM}",
            l_dense.n_rows()
        )));
    }
    if alpha2 <= 0.0 {
        return Err(Error::invalid(format!(
            "alpha2 = {alpha2} must be positive"
        )));
    }
    let feasible = psd_feasible_p(t, alpha1)?;
    if !feasible.contains(p) {
        return Err(Error::invalid(format!(
            "p = {p} outside feasible interval [2, {})",
            feasible.upper
        )));
    }

    let n = l_dense.n_rows();
    // alpha1 I + h1(L), built literally from the energy function.
    let mut hetero = matrix_function(l_dense, |lam| (-t * (p - 2.0 + lam)).exp() - alpha1)?;
    for i in 0..n {
        hetero.set(i, i, hetero.get(i, i) + alpha1);
    }
    // alpha2 I + h2(L) = (alpha2 + p - 2) I + L.
    let mut homo = l_dense.clone();
    for i in 0..n {
        homo.set(i, i, homo.get(i, i) + alpha2 + p - 2.0);
    }

    let m = match order {
        FactorOrder::HeteroFirst => hetero.matmul(&homo)?,
        FactorOrder::HomoFirst => homo.matmul(&hetero)?,
    };
    dense_solve(&m, x)
}

/// Diffusion direction of the heat kernel oracle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HeatKernelSign {
    /// `e^{-tL}`: smoothing flow of the ordinary heat equation.
    Homophilic,
    /// `e^{+tL}`: the reversed flow that amplifies high frequencies.
    Heterophilic,
}

/// `U diag(e^{+-t lambda}) U^T X`.
pub fn heat_kernel_oracle(
    l_dense: &DenseMatrix,
    x: &DenseMatrix,
    t: f64,
    sign: HeatKernelSign,
) -> Result<DenseMatrix> {
    let s = match sign {
        HeatKernelSign::Homophilic => -1.0,
        HeatKernelSign::Heterophilic => 1.0,
    };
    apply_spectral(l_dense, x, |lam| (s * t * lam).exp())
}

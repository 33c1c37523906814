//! Poisson-Charlier polynomial coefficients and the truncated power series
//! for `G(gamma, t, lambda) = (1 - lambda)^gamma * exp(t * lambda)`.
//!
//! The coefficients satisfy a three-term recurrence (the cheap production
//! path) and an explicit binomial sum (the oracle). The series
//! `sum_n (-lambda)^n / n! * C_n(gamma, t)` converges to the closed form as
//! the truncation order grows; truncated at order N it is the PC-filter.

use crate::error::{Error, Result};

/// Coefficients `C_0 .. C_n` by the recurrence
/// `C_0 = 1`, `C_1 = gamma - t`,
/// `C_n = (gamma - n - t + 1) C_{n-1} - (n-1) t C_{n-2}`.
pub fn pc_coeff_recurrence(gamma: f64, t: f64, n_max: usize) -> Vec<f64> {
    let mut c = Vec::with_capacity(n_max + 1);
    c.push(1.0);
    if n_max >= 1 {
        c.push(gamma - t);
    }
    for n in 2..=n_max {
        let nf = n as f64;
        let next = (gamma - nf - t + 1.0) * c[n - 1] - (nf - 1.0) * t * c[n - 2];
        c.push(next);
    }
    c
}

/// Explicit form `C_n = sum_k binom(n, k) (-t)^k gamma (gamma-1) ... (gamma-n+k+1)`,
/// the independent oracle for the recurrence. The falling-factorial product
/// has `n - k` factors; it is empty (1) when `k = n`.
pub fn pc_coeff_explicit(gamma: f64, t: f64, n: usize) -> f64 {
    let mut total = 0.0;
    for k in 0..=n {
        let mut term = binomial(n, k) * (-t).powi(k as i32);
        for step in 0..(n - k) {
            term *= gamma - step as f64;
        }
        total += term;
    }
    total
}

fn binomial(n: usize, k: usize) -> f64 {
    let k = k.min(n - k.min(n));
    let mut acc = 1.0;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc
}

/// Partial sum `sum_{n=0}^{N} (-lambda)^n / n! * C_n(gamma, t)`.
///
/// The term factor updates incrementally (`f_n = f_{n-1} * (-lambda) / n`),
/// so no factorial is ever formed explicitly.
pub fn series_eval_g(gamma: f64, t: f64, lambda: f64, n_max: usize) -> f64 {
    let coeffs = pc_coeff_recurrence(gamma, t, n_max);
    let mut acc = coeffs[0];
    let mut factor = 1.0;
    for (n, &c) in coeffs.iter().enumerate().skip(1) {
        factor *= -lambda / n as f64;
        acc += factor * c;
    }
    acc
}

/// Closed form `(1 - lambda)^gamma * exp(t * lambda)`.
///
/// Integer `gamma` (within 1e-9) accepts any `lambda`; non-integer exponents
/// require `lambda < 1` to stay real-valued.
pub fn closed_form_g(gamma: f64, t: f64, lambda: f64) -> Result<f64> {
    let base = 1.0 - lambda;
    let rounded = gamma.round();
    let integral = (gamma - rounded).abs() <= 1e-9;
    if !integral && lambda >= 1.0 {
        return Err(Error::invalid(format!(
            "closed_form_g: non-integer gamma {gamma} with lambda {lambda} >= 1"
        )));
    }
    let powed = if integral {
        base.powi(rounded as i32)
    } else {
        base.powf(gamma)
    };
    Ok(powed * (t * lambda).exp())
}

/// Table of `C_n(k, t)` for `n in 0..=n_max`, `k in 1..=k_max`.
#[derive(Debug, Clone)]
pub struct PcCoeffTable {
    t: f64,
    n_max: usize,
    k_max: usize,
    /// `columns[k-1][n] = C_n(k, t)`.
    columns: Vec<Vec<f64>>,
}

/// Fills the coefficient table column by column via the recurrence,
/// `O(n_max)` work per column.
pub fn build_table(t: f64, n_max: usize, k_max: usize) -> Result<PcCoeffTable> {
    if k_max == 0 {
        return Err(Error::invalid("build_table: k_max must be at least 1"));
    }
    let columns = (1..=k_max)
        .map(|k| pc_coeff_recurrence(k as f64, t, n_max))
        .collect();
    Ok(PcCoeffTable {
        t,
        n_max,
        k_max,
        columns,
    })
}

impl PcCoeffTable {
    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    /// `C_n(k, t)`; `k` is 1-based as in the filter bank.
    pub fn coeff(&self, n: usize, k: usize) -> f64 {
        assert!(
            k >= 1 && k <= self.k_max,
            "filter order k = {k} out of range"
        );
        assert!(n <= self.n_max, "coefficient order n = {n} out of range");
        self.columns[k - 1][n]
    }
}

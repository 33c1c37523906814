//! Minimal dense/sparse linear algebra.
//!
//! Provides exactly what the filtering and training paths need: CSR
//! matrix-vector and matrix-matrix products, a cyclic Jacobi symmetric
//! eigensolver, and an LU solver with partial pivoting. The dense routines
//! exist for oracles and tests; the training path only touches [`SparseMatrix`]
//! products and dense GEMM. All arithmetic is `f64`.

use crate::error::{Error, Result};

/// Sparse matrix in compressed sparse row form.
///
/// Row pointers are non-decreasing, column indices are strictly increasing
/// within each row, and duplicate entries are merged by summation during
/// construction.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    n_rows: usize,
    n_cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    /// Builds a CSR matrix from (row, col, value) triplets.
    ///
    /// Triplets may arrive in any order; duplicates are summed. Explicit
    /// zeros are kept so that structural symmetry is preserved.
    pub fn from_triplets(
        n_rows: usize,
        n_cols: usize,
        triplets: &[(usize, usize, f64)],
    ) -> Result<Self> {
        for &(r, c, _) in triplets {
            if r >= n_rows || c >= n_cols {
                return Err(Error::invalid(format!(
                    "triplet ({r}, {c}) outside {n_rows}x{n_cols} matrix"
                )));
            }
        }
        let mut sorted: Vec<(usize, usize, f64)> = triplets.to_vec();
        sorted.sort_by_key(|&(r, c, _)| (r, c));

        let mut merged: Vec<(usize, usize, f64)> = Vec::with_capacity(sorted.len());
        for (r, c, v) in sorted {
            match merged.last_mut() {
                Some(last) if last.0 == r && last.1 == c => last.2 += v,
                _ => merged.push((r, c, v)),
            }
        }
        let mut row_ptr = vec![0usize; n_rows + 1];
        for &(r, _, _) in &merged {
            row_ptr[r + 1] += 1;
        }
        for i in 0..n_rows {
            row_ptr[i + 1] += row_ptr[i];
        }
        Ok(Self {
            n_rows,
            n_cols,
            row_ptr,
            col_idx: merged.iter().map(|t| t.1).collect(),
            values: merged.iter().map(|t| t.2).collect(),
        })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            n_rows: n,
            n_cols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        Self {
            n_rows,
            n_cols,
            row_ptr: vec![0; n_rows + 1],
            col_idx: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Column indices and values of row `i`.
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let (lo, hi) = (self.row_ptr[i], self.row_ptr[i + 1]);
        (&self.col_idx[lo..hi], &self.values[lo..hi])
    }

    /// Stored value at (i, j), or 0.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        match cols.binary_search(&j) {
            Ok(k) => vals[k],
            Err(_) => 0.0,
        }
    }

    /// Checks that (i, j) is present iff (j, i) is present with a value
    /// within `tol`.
    pub fn is_symmetric(&self, tol: f64) -> bool {
        if self.n_rows != self.n_cols {
            return false;
        }
        for i in 0..self.n_rows {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                if (self.get(j, i) - v).abs() > tol {
                    return false;
                }
            }
        }
        true
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(self.n_rows, self.n_cols);
        for i in 0..self.n_rows {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                out.set(i, j, v);
            }
        }
        out
    }

    /// Sparse matrix-vector product. Summation runs row-major over stored
    /// entries, so the result is deterministic.
    pub fn spmv(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.n_cols {
            return Err(Error::dims(format!(
                "spmv: matrix has {} columns, vector has length {}",
                self.n_cols,
                x.len()
            )));
        }
        let mut y = vec![0.0; self.n_rows];
        for (i, out) in y.iter_mut().enumerate() {
            let (cols, vals) = self.row(i);
            let mut acc = 0.0;
            for (&j, &v) in cols.iter().zip(vals) {
                acc += v * x[j];
            }
            *out = acc;
        }
        Ok(y)
    }

    /// Sparse-dense product: column c of the result equals `spmv` applied to
    /// column c of `x`.
    pub fn spmm(&self, x: &DenseMatrix) -> Result<DenseMatrix> {
        if x.n_rows() != self.n_cols {
            return Err(Error::dims(format!(
                "spmm: matrix has {} columns, operand has {} rows",
                self.n_cols,
                x.n_rows()
            )));
        }
        let c = x.n_cols();
        let mut out = DenseMatrix::zeros(self.n_rows, c);
        for i in 0..self.n_rows {
            let (cols, vals) = self.row(i);
            let out_row = out.row_mut(i);
            for (&j, &v) in cols.iter().zip(vals) {
                let x_row = x.row(j);
                for k in 0..c {
                    out_row[k] += v * x_row[k];
                }
            }
        }
        Ok(out)
    }
}

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    n_rows: usize,
    n_cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        Self {
            n_rows,
            n_cols,
            data: vec![0.0; n_rows * n_cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn from_vec(n_rows: usize, n_cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n_rows * n_cols {
            return Err(Error::dims(format!(
                "from_vec: {} entries for a {n_rows}x{n_cols} matrix",
                data.len()
            )));
        }
        Ok(Self {
            n_rows,
            n_cols,
            data,
        })
    }

    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != n_cols) {
            return Err(Error::dims("from_rows: ragged rows"));
        }
        let data = rows.concat();
        Ok(Self {
            n_rows,
            n_cols,
            data,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n_cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n_cols + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n_cols..(i + 1) * self.n_cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.n_cols..(i + 1) * self.n_cols]
    }

    pub fn col(&self, j: usize) -> Vec<f64> {
        (0..self.n_rows).map(|i| self.get(i, j)).collect()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn transpose(&self) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(self.n_cols, self.n_rows);
        for i in 0..self.n_rows {
            for j in 0..self.n_cols {
                out.set(j, i, self.get(i, j));
            }
        }
        out
    }

    pub fn matmul(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if self.n_cols != other.n_rows {
            return Err(Error::dims(format!(
                "matmul: {}x{} times {}x{}",
                self.n_rows, self.n_cols, other.n_rows, other.n_cols
            )));
        }
        let mut out = DenseMatrix::zeros(self.n_rows, other.n_cols);
        for i in 0..self.n_rows {
            for k in 0..self.n_cols {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                let rhs = other.row(k);
                let out_row = out.row_mut(i);
                for j in 0..other.n_cols {
                    out_row[j] += a * rhs[j];
                }
            }
        }
        Ok(out)
    }

    /// self += scale * other (shapes must match).
    pub fn axpy(&mut self, scale: f64, other: &DenseMatrix) -> Result<()> {
        if self.n_rows != other.n_rows || self.n_cols != other.n_cols {
            return Err(Error::dims("axpy: shape mismatch"));
        }
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += scale * b;
        }
        Ok(())
    }

    pub fn scale(&mut self, s: f64) {
        for v in &mut self.data {
            *v *= s;
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    fn is_symmetric_within(&self, tol: f64) -> bool {
        if self.n_rows != self.n_cols {
            return false;
        }
        for i in 0..self.n_rows {
            for j in (i + 1)..self.n_cols {
                if (self.get(i, j) - self.get(j, i)).abs() > tol {
                    return false;
                }
            }
        }
        true
    }
}

/// Eigendecomposition of a symmetric matrix.
pub struct SymEig {
    /// Eigenvalues in ascending order.
    pub eigenvalues: Vec<f64>,
    /// Orthonormal eigenvectors as columns, ordered to match `eigenvalues`.
    pub eigenvectors: DenseMatrix,
}

/// Maximum dimension accepted by [`sym_eig`]; the Jacobi solver is meant for
/// oracles, never the training path.
pub const SYM_EIG_MAX_DIM: usize = 1000;

/// Symmetric eigendecomposition by cyclic Jacobi rotations.
///
/// Sweeps run until the off-diagonal Frobenius norm drops below
/// `1e-12 * ||A||_F`. Input must be square and symmetric within 1e-12
/// (relative to its largest entry).
pub fn sym_eig(a: &DenseMatrix) -> Result<SymEig> {
    let n = a.n_rows();
    if n != a.n_cols() {
        return Err(Error::invalid(format!(
            "sym_eig: matrix is {}x{}, not square",
            a.n_rows(),
            a.n_cols()
        )));
    }
    if n > SYM_EIG_MAX_DIM {
        return Err(Error::invalid(format!(
            "sym_eig: dimension {n} exceeds cap {SYM_EIG_MAX_DIM}"
        )));
    }
    let sym_tol = 1e-12 * a.max_abs().max(1.0);
    if !a.is_symmetric_within(sym_tol) {
        return Err(Error::invalid("sym_eig: matrix is not symmetric"));
    }

    let mut m = a.clone();
    let mut v = DenseMatrix::identity(n);
    let target = 1e-12 * a.frobenius_norm();

    let off_norm = |m: &DenseMatrix| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                s += 2.0 * m.get(i, j) * m.get(i, j);
            }
        }
        s.sqrt()
    };

    const MAX_SWEEPS: usize = 64;
    for _ in 0..MAX_SWEEPS {
        if off_norm(&m) <= target {
            break;
        }
        for p in 0..n.saturating_sub(1) {
            for q in (p + 1)..n {
                let apq = m.get(p, q);
                if apq == 0.0 {
                    continue;
                }
                let theta = (m.get(q, q) - m.get(p, p)) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;

                for k in 0..n {
                    let mkp = m.get(k, p);
                    let mkq = m.get(k, q);
                    m.set(k, p, c * mkp - s * mkq);
                    m.set(k, q, s * mkp + c * mkq);
                }
                for k in 0..n {
                    let mpk = m.get(p, k);
                    let mqk = m.get(q, k);
                    m.set(p, k, c * mpk - s * mqk);
                    m.set(q, k, s * mpk + c * mqk);
                }
                for k in 0..n {
                    let vkp = v.get(k, p);
                    let vkq = v.get(k, q);
                    v.set(k, p, c * vkp - s * vkq);
                    v.set(k, q, s * vkp + c * vkq);
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m.get(i, i).partial_cmp(&m.get(j, j)).unwrap());
    let eigenvalues: Vec<f64> = order.iter().map(|&i| m.get(i, i)).collect();
    let mut eigenvectors = DenseMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        for k in 0..n {
            eigenvectors.set(k, dst, v.get(k, src));
        }
    }
    Ok(SymEig {
        eigenvalues,
        eigenvectors,
    })
}

const PIVOT_TOL: f64 = 1e-12;

struct LuFactors {
    lu: DenseMatrix,
    perm: Vec<usize>,
}

fn lu_decompose(a: &DenseMatrix) -> Result<LuFactors> {
    let n = a.n_rows();
    if n != a.n_cols() {
        return Err(Error::invalid(format!(
            "solve: matrix is {}x{}, not square",
            a.n_rows(),
            a.n_cols()
        )));
    }
    let mut lu = a.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    for col in 0..n {
        let mut best = col;
        let mut best_mag = lu.get(col, col).abs();
        for r in (col + 1)..n {
            let mag = lu.get(r, col).abs();
            if mag > best_mag {
                best = r;
                best_mag = mag;
            }
        }
        if best_mag <= PIVOT_TOL {
            return Err(Error::Singular {
                pivot: col,
                magnitude: best_mag,
            });
        }
        if best != col {
            perm.swap(col, best);
            for j in 0..n {
                let tmp = lu.get(col, j);
                lu.set(col, j, lu.get(best, j));
                lu.set(best, j, tmp);
            }
        }
        let pivot = lu.get(col, col);
        for r in (col + 1)..n {
            let factor = lu.get(r, col) / pivot;
            lu.set(r, col, factor);
            if factor != 0.0 {
                for j in (col + 1)..n {
                    let val = lu.get(r, j) - factor * lu.get(col, j);
                    lu.set(r, j, val);
                }
            }
        }
    }
    Ok(LuFactors { lu, perm })
}

/// Solves A X = B by LU with partial pivoting.
///
/// Fails with [`Error::Singular`] naming the offending pivot column when a
/// pivot magnitude drops to 1e-12 or below.
pub fn dense_solve(a: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix> {
    if a.n_rows() != b.n_rows() {
        return Err(Error::dims(format!(
            "solve: A has {} rows, B has {}",
            a.n_rows(),
            b.n_rows()
        )));
    }
    let LuFactors { lu, perm } = lu_decompose(a)?;
    let n = a.n_rows();
    let nrhs = b.n_cols();
    let mut x = DenseMatrix::zeros(n, nrhs);
    // Apply the row permutation to B.
    for (i, &src) in perm.iter().enumerate() {
        for j in 0..nrhs {
            x.set(i, j, b.get(src, j));
        }
    }
    // Forward substitution (unit lower triangle).
    for i in 0..n {
        for k in 0..i {
            let l = lu.get(i, k);
            if l != 0.0 {
                for j in 0..nrhs {
                    let val = x.get(i, j) - l * x.get(k, j);
                    x.set(i, j, val);
                }
            }
        }
    }
    // Back substitution.
    for i in (0..n).rev() {
        for k in (i + 1)..n {
            let u = lu.get(i, k);
            if u != 0.0 {
                for j in 0..nrhs {
                    let val = x.get(i, j) - u * x.get(k, j);
                    x.set(i, j, val);
                }
            }
        }
        let d = lu.get(i, i);
        for j in 0..nrhs {
            x.set(i, j, x.get(i, j) / d);
        }
    }
    Ok(x)
}

/// Smallest pivot magnitude met while factoring the row-equilibrated matrix
/// (each row divided by its max-abs entry). Used by nonsingularity checks.
pub fn min_scaled_pivot(a: &DenseMatrix) -> Result<f64> {
    let n = a.n_rows();
    if n != a.n_cols() {
        return Err(Error::invalid("min_scaled_pivot: matrix not square"));
    }
    let mut scaled = a.clone();
    for i in 0..n {
        let row_max = scaled.row(i).iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if row_max == 0.0 {
            return Ok(0.0);
        }
        for v in scaled.row_mut(i) {
            *v /= row_max;
        }
    }
    let mut min_pivot = f64::INFINITY;
    let n_cols = n;
    let mut lu = scaled;
    for col in 0..n_cols {
        let mut best = col;
        let mut best_mag = lu.get(col, col).abs();
        for r in (col + 1)..n {
            let mag = lu.get(r, col).abs();
            if mag > best_mag {
                best = r;
                best_mag = mag;
            }
        }
        min_pivot = min_pivot.min(best_mag);
        if best_mag == 0.0 {
            return Ok(0.0);
        }
        if best != col {
            for j in 0..n {
                let tmp = lu.get(col, j);
                lu.set(col, j, lu.get(best, j));
                lu.set(best, j, tmp);
            }
        }
        let pivot = lu.get(col, col);
        for r in (col + 1)..n {
            let factor = lu.get(r, col) / pivot;
            for j in (col + 1)..n {
                let val = lu.get(r, j) - factor * lu.get(col, j);
                lu.set(r, j, val);
            }
        }
    }
    Ok(min_pivot)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;

    fn random_symmetric(n: usize, rng: &mut SplitMix64) -> DenseMatrix {
        let mut m = DenseMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v = rng.next_f64() * 2.0 - 1.0;
                m.set(i, j, v);
                m.set(j, i, v);
            }
        }
        m
    }

    #[test]
    fn spmv_identity() {
        let a = SparseMatrix::identity(3);
        let y = a.spmv(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(y, vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn spmv_zero_matrix() {
        let a = SparseMatrix::zeros(2, 2);
        let y = a.spmv(&[5.0, -7.0]).unwrap();
        assert_eq!(y, vec![0.0, 0.0]);
    }

    #[test]
    fn spmv_permutation() {
        let a = SparseMatrix::from_triplets(2, 2, &[(0, 1, 1.0), (1, 0, 1.0)]).unwrap();
        let y = a.spmv(&[3.0, 5.0]).unwrap();
        assert_eq!(y, vec![5.0, 3.0]);
    }

    #[test]
    fn spmv_dimension_mismatch() {
        let a = SparseMatrix::identity(3);
        assert!(matches!(
            a.spmv(&[1.0, 2.0]),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn csr_merges_duplicates_and_sorts() {
        let a = SparseMatrix::from_triplets(
            2,
            2,
            &[(1, 1, 2.0), (0, 1, 1.0), (0, 0, 3.0), (0, 1, 0.5)],
        )
        .unwrap();
        assert_eq!(a.nnz(), 3);
        assert_eq!(a.get(0, 1), 1.5);
        assert_eq!(a.get(0, 0), 3.0);
        let (cols, _) = a.row(0);
        assert_eq!(cols, &[0, 1]);
    }

    #[test]
    fn spmm_identity_and_swap() {
        let x = DenseMatrix::from_rows(&[&[1.0, 2.0], &[3.0, 4.0]]).unwrap();
        let eye = SparseMatrix::identity(2);
        assert_eq!(eye.spmm(&x).unwrap(), x);

        let swap = SparseMatrix::from_triplets(2, 2, &[(0, 1, 1.0), (1, 0, 1.0)]).unwrap();
        let y = swap.spmm(&x).unwrap();
        assert_eq!(
            y,
            DenseMatrix::from_rows(&[&[3.0, 4.0], &[1.0, 2.0]]).unwrap()
        );
    }

    #[test]
    fn spmm_matches_per_column_spmv() {
        let mut rng = SplitMix64::new(9);
        let mut trips = Vec::new();
        for i in 0..5 {
            for j in 0..5 {
                if rng.next_f64() < 0.4 {
                    trips.push((i, j, rng.next_f64() * 2.0 - 1.0));
                }
            }
        }
        let a = SparseMatrix::from_triplets(5, 5, &trips).unwrap();
        let mut x = DenseMatrix::zeros(5, 3);
        for v in x.data_mut() {
            *v = rng.next_f64();
        }
        let y = a.spmm(&x).unwrap();
        for c in 0..3 {
            let yc = a.spmv(&x.col(c)).unwrap();
            for (i, expect) in yc.iter().enumerate() {
                assert!((y.get(i, c) - expect).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn sym_eig_diagonal() {
        let a = DenseMatrix::from_rows(&[&[2.0, 0.0, 0.0], &[0.0, 1.0, 0.0], &[0.0, 0.0, 0.0]])
            .unwrap();
        let eig = sym_eig(&a).unwrap();
        assert_eq!(eig.eigenvalues, vec![0.0, 1.0, 2.0]);
    }

    #[test]
    fn sym_eig_two_by_two() {
        // Characteristic polynomial of [[0.5,-0.5],[-0.5,0.5]] gives {0, 1}.
        let a = DenseMatrix::from_rows(&[&[0.5, -0.5], &[-0.5, 0.5]]).unwrap();
        let eig = sym_eig(&a).unwrap();
        assert!((eig.eigenvalues[0] - 0.0).abs() < 1e-12);
        assert!((eig.eigenvalues[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sym_eig_reconstructs_random_matrix() {
        let mut rng = SplitMix64::new(21);
        let a = random_symmetric(20, &mut rng);
        let eig = sym_eig(&a).unwrap();
        let u = &eig.eigenvectors;
        // A U == U diag(lambda)
        let au = a.matmul(u).unwrap();
        for i in 0..20 {
            for j in 0..20 {
                let expect = u.get(i, j) * eig.eigenvalues[j];
                assert!(
                    (au.get(i, j) - expect).abs() <= 1e-9 * a.max_abs().max(1.0),
                    "residual at ({i},{j})"
                );
            }
        }
        // U^T U == I
        let utu = u.transpose().matmul(u).unwrap();
        for i in 0..20 {
            for j in 0..20 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((utu.get(i, j) - expect).abs() <= 1e-9);
            }
        }
        // Reconstruction U diag(lambda) U^T == A
        let mut ud = u.clone();
        for i in 0..20 {
            for j in 0..20 {
                ud.set(i, j, ud.get(i, j) * eig.eigenvalues[j]);
            }
        }
        let rec = ud.matmul(&u.transpose()).unwrap();
        for i in 0..20 {
            for j in 0..20 {
                assert!((rec.get(i, j) - a.get(i, j)).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn sym_eig_rejects_asymmetric() {
        let a = DenseMatrix::from_rows(&[&[1.0, 2.0], &[0.0, 1.0]]).unwrap();
        assert!(matches!(sym_eig(&a), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn sym_eig_rejects_oversized_input() {
        let a = DenseMatrix::zeros(SYM_EIG_MAX_DIM + 1, SYM_EIG_MAX_DIM + 1);
        assert!(matches!(sym_eig(&a), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn sym_eig_eigenvalues_invariant_under_permutation_conjugation() {
        let mut rng = SplitMix64::new(33);
        let a = random_symmetric(8, &mut rng);
        // Conjugate by the permutation reversing indices.
        let mut p = DenseMatrix::zeros(8, 8);
        for i in 0..8 {
            p.set(i, 7 - i, 1.0);
        }
        let b = p.matmul(&a).unwrap().matmul(&p.transpose()).unwrap();
        let ea = sym_eig(&a).unwrap().eigenvalues;
        let eb = sym_eig(&b).unwrap().eigenvalues;
        for (x, y) in ea.iter().zip(&eb) {
            assert!((x - y).abs() <= 1e-9);
        }
    }

    #[test]
    fn dense_solve_identity_and_diagonal() {
        let b = DenseMatrix::from_rows(&[&[1.0, 4.0], &[2.0, 5.0]]).unwrap();
        let x = dense_solve(&DenseMatrix::identity(2), &b).unwrap();
        assert_eq!(x, b);

        let a = DenseMatrix::from_rows(&[&[2.0, 0.0], &[0.0, 4.0]]).unwrap();
        let rhs = DenseMatrix::from_rows(&[&[2.0], &[8.0]]).unwrap();
        let x = dense_solve(&a, &rhs).unwrap();
        assert!((x.get(0, 0) - 1.0).abs() < 1e-14);
        assert!((x.get(1, 0) - 2.0).abs() < 1e-14);
    }

    #[test]
    fn dense_solve_residual_on_random_system() {
        let mut rng = SplitMix64::new(5);
        let mut a = random_symmetric(10, &mut rng);
        for i in 0..10 {
            a.set(i, i, a.get(i, i) + 5.0); // keep it well conditioned
        }
        let mut b = DenseMatrix::zeros(10, 2);
        for v in b.data_mut() {
            *v = rng.next_f64() * 4.0 - 2.0;
        }
        let x = dense_solve(&a, &b).unwrap();
        let ax = a.matmul(&x).unwrap();
        let mut resid: f64 = 0.0;
        for (u, v) in ax.data().iter().zip(b.data()) {
            resid = resid.max((u - v).abs());
        }
        assert!(resid <= 1e-8 * b.max_abs());
    }

    #[test]
    fn dense_solve_reports_singular_pivot() {
        let a = DenseMatrix::from_rows(&[&[1.0, 2.0], &[2.0, 4.0]]).unwrap();
        let b = DenseMatrix::zeros(2, 1);
        match dense_solve(&a, &b) {
            Err(Error::Singular { pivot, .. }) => assert_eq!(pivot, 1),
            other => panic!("expected singularity error, got {other:?}"),
        }
    }

    #[test]
    fn solve_recovers_known_solution() {
        let mut rng = SplitMix64::new(17);
        let mut a = random_symmetric(10, &mut rng);
        for i in 0..10 {
            a.set(i, i, a.get(i, i) + 4.0);
        }
        let mut x_true = DenseMatrix::zeros(10, 1);
        for v in x_true.data_mut() {
            *v = rng.next_f64() * 2.0 - 1.0;
        }
        let b = a.matmul(&x_true).unwrap();
        let x = dense_solve(&a, &b).unwrap();
        for (u, v) in x.data().iter().zip(x_true.data()) {
            assert!((u - v).abs() <= 1e-8);
        }
    }

    #[test]
    fn min_scaled_pivot_flags_singularity() {
        let a = DenseMatrix::from_rows(&[&[1.0, 2.0], &[2.0, 4.0]]).unwrap();
        assert!(min_scaled_pivot(&a).unwrap() < 1e-12);
        let b = DenseMatrix::identity(4);
        assert!((min_scaled_pivot(&b).unwrap() - 1.0).abs() < 1e-15);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(50))]

            #[test]
            fn spmv_is_linear(seed in 0u64..1000, a in -3.0f64..3.0, b in -3.0f64..3.0) {
                let mut rng = SplitMix64::new(seed);
                let n = 6;
                let mut trips = Vec::new();
                for i in 0..n {
                    for j in 0..n {
                        if rng.next_f64() < 0.5 {
                            trips.push((i, j, rng.next_f64() * 2.0 - 1.0));
                        }
                    }
                }
                let m = SparseMatrix::from_triplets(n, n, &trips).unwrap();
                let x: Vec<f64> = (0..n).map(|_| rng.next_f64()).collect();
                let y: Vec<f64> = (0..n).map(|_| rng.next_f64()).collect();
                let combo: Vec<f64> = x.iter().zip(&y).map(|(u, v)| a * u + b * v).collect();
                let lhs = m.spmv(&combo).unwrap();
                let mx = m.spmv(&x).unwrap();
                let my = m.spmv(&y).unwrap();
                for i in 0..n {
                    let rhs = a * mx[i] + b * my[i];
                    let scale = lhs[i].abs().max(rhs.abs()).max(1.0);
                    prop_assert!((lhs[i] - rhs).abs() <= 1e-12 * scale);
                }
            }
        }
    }
}

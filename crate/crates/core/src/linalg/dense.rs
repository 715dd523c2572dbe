//! Dense row-major matrix storage and the handful of BLAS-level kernels the
//! solvers need. Everything is plain `Vec<f64>`; matrices at the scales this
//! crate targets are stored explicitly.

use crate::error::{Result, SolverError};

/// Dense real matrix, row major.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    /// Builds a matrix from row-major entries, validating the invariants
    /// (positive dimensions, `rows * cols` finite entries).
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(SolverError::arg("matrix dimensions must be at least 1x1"));
        }
        if data.len() != rows * cols {
            return Err(SolverError::dim(format!(
                "expected {} entries for a {rows}x{cols} matrix, got {}",
                rows * cols,
                data.len()
            )));
        }
        if let Some(bad) = data.iter().position(|v| !v.is_finite()) {
            return Err(SolverError::arg(format!(
                "matrix entry {bad} is not finite"
            )));
        }
        Ok(DenseMatrix { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = DenseMatrix::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        DenseMatrix { rows, cols, data }
    }

    /// Stacks rows of `self` on top of rows of `other` (same column count).
    pub fn vstack(&self, other: &DenseMatrix) -> Result<Self> {
        if self.cols != other.cols {
            return Err(SolverError::dim("vstack requires equal column counts"));
        }
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        Ok(DenseMatrix {
            rows: self.rows + other.rows,
            cols: self.cols,
            data,
        })
    }

    /// Copy of `self` with one row deleted.
    pub fn without_row(&self, row: usize) -> Result<Self> {
        if self.rows < 2 || row >= self.rows {
            return Err(SolverError::arg("row removal out of range"));
        }
        let mut data = Vec::with_capacity((self.rows - 1) * self.cols);
        for i in 0..self.rows {
            if i != row {
                data.extend_from_slice(self.row(i));
            }
        }
        Ok(DenseMatrix {
            rows: self.rows - 1,
            cols: self.cols,
            data,
        })
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn col(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn transpose(&self) -> DenseMatrix {
        DenseMatrix::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    /// `A v`.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        debug_assert_eq!(v.len(), self.cols);
        let mut out = vec![0.0; self.rows];
        for i in 0..self.rows {
            out[i] = dot(self.row(i), v);
        }
        out
    }

    /// `A' v`.
    pub fn apply_t(&self, v: &[f64]) -> Vec<f64> {
        debug_assert_eq!(v.len(), self.rows);
        let mut out = vec![0.0; self.cols];
        for (i, &vi) in v.iter().enumerate() {
            if vi != 0.0 {
                for (o, &a) in out.iter_mut().zip(self.row(i)) {
                    *o += vi * a;
                }
            }
        }
        out
    }

    /// Linear combination of a column subset: `sum_k coef[k] * A[:, cols[k]]`.
    pub fn combine_cols(&self, cols: &[usize], coef: &[f64]) -> Vec<f64> {
        debug_assert_eq!(cols.len(), coef.len());
        let mut out = vec![0.0; self.rows];
        for i in 0..self.rows {
            let row = self.row(i);
            let mut acc = 0.0;
            for (&j, &c) in cols.iter().zip(coef) {
                acc += c * row[j];
            }
            out[i] = acc;
        }
        out
    }

    /// `A[:, j] . v` for a full-length vector `v`.
    pub fn col_dot(&self, j: usize, v: &[f64]) -> f64 {
        debug_assert_eq!(v.len(), self.rows);
        let mut acc = 0.0;
        for i in 0..self.rows {
            acc += self.get(i, j) * v[i];
        }
        acc
    }

    /// Gram matrix `A' A`.
    pub fn gram(&self) -> DenseMatrix {
        let n = self.cols;
        let mut g = DenseMatrix::zeros(n, n);
        for i in 0..self.rows {
            let row = self.row(i);
            for a in 0..n {
                let ra = row[a];
                if ra != 0.0 {
                    for b in a..n {
                        g.data[a * n + b] += ra * row[b];
                    }
                }
            }
        }
        for a in 0..n {
            for b in 0..a {
                g.data[a * n + b] = g.data[b * n + a];
            }
        }
        g
    }

    /// `A B`.
    pub fn matmul(&self, other: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.cols, other.rows);
        let mut out = DenseMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let aik = self.get(i, k);
                if aik != 0.0 {
                    let orow = other.row(k);
                    let trow = out.row_mut(i);
                    for (t, &o) in trow.iter_mut().zip(orow) {
                        *t += aik * o;
                    }
                }
            }
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// In-place modified Gram-Schmidt with one re-orthogonalization pass.
    /// Fails with `RankDeficient` if a column collapses.
    pub fn orthonormalize_columns(&mut self) -> Result<()> {
        let (m, n) = (self.rows, self.cols);
        if n > m {
            return Err(SolverError::RankDeficient);
        }
        let mut cols: Vec<Vec<f64>> = (0..n).map(|j| self.col(j)).collect();
        for j in 0..n {
            for _pass in 0..2 {
                for k in 0..j {
                    let proj = dot(&cols[j], &cols[k]);
                    let (head, tail) = cols.split_at_mut(j);
                    let ck = &head[k];
                    for (x, &y) in tail[0].iter_mut().zip(ck) {
                        *x -= proj * y;
                    }
                }
            }
            let norm = norm2(&cols[j]);
            if norm <= 1e-12 {
                return Err(SolverError::RankDeficient);
            }
            for x in cols[j].iter_mut() {
                *x /= norm;
            }
        }
        for i in 0..m {
            for (j, c) in cols.iter().enumerate() {
                self.set(i, j, c[i]);
            }
        }
        Ok(())
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm2(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

#[inline]
pub fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// `a - b` elementwise.
pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// `a += s * b`.
pub fn axpy(a: &mut [f64], s: f64, b: &[f64]) {
    debug_assert_eq!(a.len(), b.len());
    for (x, &y) in a.iter_mut().zip(b) {
        *x += s * y;
    }
}

/// Solves a general square system `M x = rhs` by Gaussian elimination with
/// partial pivoting. Independent of the factorization machinery; used by the
/// enumeration oracles and as a refresh fallback.
pub fn solve_dense(m: &DenseMatrix, rhs: &[f64]) -> Result<Vec<f64>> {
    let n = m.rows();
    if m.cols() != n || rhs.len() != n {
        return Err(SolverError::dim("solve_dense requires a square system"));
    }
    let mut a = m.data.clone();
    let mut b = rhs.to_vec();
    for k in 0..n {
        let mut piv = k;
        let mut best = a[k * n + k].abs();
        for i in k + 1..n {
            let v = a[i * n + k].abs();
            if v > best {
                best = v;
                piv = i;
            }
        }
        if best < 1e-300 {
            return Err(SolverError::SingularSubmatrix);
        }
        if piv != k {
            for j in 0..n {
                a.swap(k * n + j, piv * n + j);
            }
            b.swap(k, piv);
        }
        let akk = a[k * n + k];
        for i in k + 1..n {
            let f = a[i * n + k] / akk;
            if f != 0.0 {
                for j in k..n {
                    a[i * n + j] -= f * a[k * n + j];
                }
                b[i] -= f * b[k];
            }
        }
    }
    for i in (0..n).rev() {
        let mut acc = b[i];
        for j in i + 1..n {
            acc -= a[i * n + j] * b[j];
        }
        b[i] = acc / a[i * n + i];
    }
    Ok(b)
}

/// Inverts a general square matrix via Gauss-Jordan with partial pivoting.
pub fn invert_dense(m: &DenseMatrix) -> Result<DenseMatrix> {
    let n = m.rows();
    if m.cols() != n {
        return Err(SolverError::dim("inversion requires a square matrix"));
    }
    let mut a = m.data.clone();
    let mut inv = DenseMatrix::identity(n).data;
    for k in 0..n {
        let mut piv = k;
        let mut best = a[k * n + k].abs();
        for i in k + 1..n {
            let v = a[i * n + k].abs();
            if v > best {
                best = v;
                piv = i;
            }
        }
        if best < 1e-300 {
            return Err(SolverError::SingularSubmatrix);
        }
        if piv != k {
            for j in 0..n {
                a.swap(k * n + j, piv * n + j);
                inv.swap(k * n + j, piv * n + j);
            }
        }
        let d = a[k * n + k];
        for j in 0..n {
            a[k * n + j] /= d;
            inv[k * n + j] /= d;
        }
        for i in 0..n {
            if i != k {
                let f = a[i * n + k];
                if f != 0.0 {
                    for j in 0..n {
                        a[i * n + j] -= f * a[k * n + j];
                        inv[i * n + j] -= f * inv[k * n + j];
                    }
                }
            }
        }
    }
    DenseMatrix::new(n, n, inv)
}

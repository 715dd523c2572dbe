//! Cholesky factorization of symmetric positive-definite Gram submatrices,
//! with O(dim^2) single-index add/remove and rank-1 update/downdate. These
//! updates are the engine behind every homotopy step: the active set changes
//! by one element per critical point, so the factor is never rebuilt from
//! scratch on the hot path.

use crate::error::{Result, SolverError};

use super::dense::DenseMatrix;

/// Lower-triangular Cholesky factor `L` of a Gram submatrix, `L L' = G`.
///
/// `source_cols` records which columns of the originating matrix define the
/// Gram submatrix; it always has length `dim`.
#[derive(Debug, Clone)]
pub struct SpdFactor {
    dim: usize,
    /// Row-major dense storage of the lower triangle (upper half is zero).
    l: Vec<f64>,
    source_cols: Vec<usize>,
}

impl SpdFactor {
    pub fn empty() -> Self {
        SpdFactor {
            dim: 0,
            l: Vec::new(),
            source_cols: Vec::new(),
        }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn source_cols(&self) -> &[usize] {
        &self.source_cols
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.l[i * self.dim + j]
    }

    /// Entry of the lower-triangular factor.
    pub fn l_entry(&self, i: usize, j: usize) -> f64 {
        if j <= i {
            self.at(i, j)
        } else {
            0.0
        }
    }

    /// Reconstructs `L L'`, mainly for verification.
    pub fn reconstruct(&self) -> DenseMatrix {
        let n = self.dim;
        DenseMatrix::from_fn(n, n, |i, j| {
            let k = i.min(j) + 1;
            (0..k).map(|t| self.at(i, t) * self.at(j, t)).sum()
        })
    }

    /// Forward substitution `L x = b`.
    pub fn solve_lower(&self, b: &[f64]) -> Vec<f64> {
        let n = self.dim;
        debug_assert_eq!(b.len(), n);
        let mut x = b.to_vec();
        for i in 0..n {
            for j in 0..i {
                x[i] -= self.at(i, j) * x[j];
            }
            x[i] /= self.at(i, i);
        }
        x
    }

    /// Back substitution `L' x = b`.
    pub fn solve_lower_t(&self, b: &[f64]) -> Vec<f64> {
        let n = self.dim;
        debug_assert_eq!(b.len(), n);
        let mut x = b.to_vec();
        for i in (0..n).rev() {
            for j in i + 1..n {
                x[i] -= self.at(j, i) * x[j];
            }
            x[i] /= self.at(i, i);
        }
        x
    }

    /// Solves `G x = b` through the factor.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        self.solve_lower_t(&self.solve_lower(b))
    }
}

fn pivot_floor(dim: usize, max_diag: f64) -> f64 {
    // Scaling-aware rank test: dim * machine epsilon * max diagonal.
    (dim.max(1) as f64) * f64::EPSILON * max_diag.max(f64::MIN_POSITIVE)
}

/// Cholesky factorization of a symmetric positive-definite matrix.
///
/// Fails with `NotPositiveDefinite` when a pivot falls below
/// `dim * eps * max_diagonal`, which in homotopy context signals a
/// rank-deficient active set.
pub fn spd_factor(g: &DenseMatrix) -> Result<SpdFactor> {
    let n = g.rows();
    if g.cols() != n {
        return Err(SolverError::dim("spd_factor requires a square matrix"));
    }
    let sym_tol = 1e-12 * g.max_abs().max(1e-300);
    let mut max_diag: f64 = 0.0;
    for i in 0..n {
        max_diag = max_diag.max(g.get(i, i).abs());
        for j in 0..i {
            if (g.get(i, j) - g.get(j, i)).abs() > sym_tol {
                return Err(SolverError::arg(format!(
                    "matrix is not symmetric at ({i},{j})"
                )));
            }
        }
    }
    let floor = pivot_floor(n, max_diag);
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut acc = g.get(i, j);
            for k in 0..j {
                acc -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if acc <= floor {
                    return Err(SolverError::NotPositiveDefinite { pivot: i });
                }
                l[i * n + i] = acc.sqrt();
            } else {
                l[i * n + j] = acc / l[j * n + j];
            }
        }
    }
    Ok(SpdFactor {
        dim: n,
        l,
        source_cols: (0..n).collect(),
    })
}

/// Builds the factor of the Gram submatrix `A_cols' A_cols`.
pub fn factor_of_gram_columns(a: &DenseMatrix, cols: &[usize]) -> Result<SpdFactor> {
    let k = cols.len();
    let g = DenseMatrix::from_fn(k, k, |i, j| {
        let (ci, cj) = (cols[i], cols[j]);
        (0..a.rows()).map(|r| a.get(r, ci) * a.get(r, cj)).sum()
    });
    let mut f = spd_factor(&g)?;
    f.source_cols = cols.to_vec();
    Ok(f)
}

/// Extends the factor by one trailing index. `gram_col` holds the new Gram
/// column against the existing `dim` indices; `diag` is the new diagonal
/// entry; `source` is the originating column id. Cost O(dim^2).
pub fn factor_add_index(
    f: &SpdFactor,
    gram_col: &[f64],
    diag: f64,
    source: usize,
) -> Result<SpdFactor> {
    let n = f.dim;
    if gram_col.len() != n {
        return Err(SolverError::dim("gram column length must equal factor dim"));
    }
    let w = f.solve_lower(gram_col);
    let mut max_diag = diag.abs();
    for i in 0..n {
        max_diag = max_diag.max(f.at(i, i) * f.at(i, i));
    }
    let rem = diag - w.iter().map(|v| v * v).sum::<f64>();
    if rem <= pivot_floor(n + 1, max_diag) {
        return Err(SolverError::NotPositiveDefinite { pivot: n });
    }
    let m = n + 1;
    let mut l = vec![0.0; m * m];
    for i in 0..n {
        for j in 0..=i {
            l[i * m + j] = f.at(i, j);
        }
    }
    for (j, &wj) in w.iter().enumerate() {
        l[n * m + j] = wj;
    }
    l[n * m + n] = rem.sqrt();
    let mut source_cols = f.source_cols.clone();
    source_cols.push(source);
    Ok(SpdFactor {
        dim: m,
        l,
        source_cols,
    })
}

/// Removes the index at `position`, restoring a valid factor of the reduced
/// Gram submatrix via one rank-1 update of the trailing block. Cost O(dim^2).
pub fn factor_remove_index(f: &SpdFactor, position: usize) -> Result<SpdFactor> {
    let n = f.dim;
    if position >= n {
        return Err(SolverError::arg("factor position out of range"));
    }
    let m = n - 1;
    if m == 0 {
        return Ok(SpdFactor::empty());
    }
    let mut l = vec![0.0; m * m];
    // Leading block and the rows below the deleted one, minus its column.
    for i in 0..n {
        if i == position {
            continue;
        }
        let ti = if i < position { i } else { i - 1 };
        for j in 0..=i {
            if j == position {
                continue;
            }
            let tj = if j < position { j } else { j - 1 };
            l[ti * m + tj] = f.at(i, j);
        }
    }
    // The trailing block lost the deleted column's contribution c c'; fold it
    // back with a rank-1 update of rows position..m.
    if m > position {
        let mut v: Vec<f64> = (position + 1..n).map(|i| f.at(i, position)).collect();
        chol_rank1_update_block(&mut l, m, position, &mut v, 1.0)?;
    }
    let mut source_cols = f.source_cols.clone();
    source_cols.remove(position);
    Ok(SpdFactor {
        dim: m,
        l,
        source_cols,
    })
}

/// Rank-1 update/downdate of the full factor: `L L' + sign * v v'`.
pub fn factor_rank1(f: &SpdFactor, v: &[f64], sign: f64) -> Result<SpdFactor> {
    if v.len() != f.dim {
        return Err(SolverError::dim("rank-1 vector length must equal dim"));
    }
    let mut out = f.clone();
    let mut work = v.to_vec();
    chol_rank1_update_block(&mut out.l, out.dim, 0, &mut work, sign)?;
    Ok(out)
}

/// LINPACK-style rank-1 update of the trailing block starting at `start`:
/// rows/cols `start..n` of the packed lower triangle get `+ sign * v v'`.
/// `v` has length `n - start` and is consumed as workspace.
fn chol_rank1_update_block(
    l: &mut [f64],
    n: usize,
    start: usize,
    v: &mut [f64],
    sign: f64,
) -> Result<()> {
    debug_assert_eq!(v.len(), n - start);
    for j in start..n {
        let vj = v[j - start];
        let ljj = l[j * n + j];
        let arg = ljj * ljj + sign * vj * vj;
        if arg <= 0.0 || ljj == 0.0 {
            return Err(SolverError::NotPositiveDefinite { pivot: j });
        }
        let r = arg.sqrt();
        let c = r / ljj;
        let s = vj / ljj;
        l[j * n + j] = r;
        for i in j + 1..n {
            let lij = (l[i * n + j] + sign * s * v[i - start]) / c;
            v[i - start] = c * v[i - start] - s * lij;
            l[i * n + j] = lij;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b}");
    }

    fn max_diff(a: &DenseMatrix, b: &DenseMatrix) -> f64 {
        let mut m: f64 = 0.0;
        for i in 0..a.rows() {
            for j in 0..a.cols() {
                m = m.max((a.get(i, j) - b.get(i, j)).abs());
            }
        }
        m
    }

    #[test]
    fn identity_factors_to_identity() {
        let f = spd_factor(&DenseMatrix::identity(3)).unwrap();
        assert_eq!(max_diff(&f.reconstruct(), &DenseMatrix::identity(3)), 0.0);
    }

    #[test]
    fn two_by_two_has_known_factor() {
        let g = DenseMatrix::new(2, 2, vec![4.0, 2.0, 2.0, 3.0]).unwrap();
        let f = spd_factor(&g).unwrap();
        assert_close(f.at(0, 0), 2.0, 1e-15);
        assert_close(f.at(1, 0), 1.0, 1e-15);
        assert_close(f.at(1, 1), 2f64.sqrt(), 1e-15);
        assert!(max_diff(&f.reconstruct(), &g) < 1e-14);
    }

    #[test]
    fn indefinite_matrix_is_rejected() {
        // Eigenvalues 3 and -1.
        let g = DenseMatrix::new(2, 2, vec![1.0, 2.0, 2.0, 1.0]).unwrap();
        assert!(matches!(
            spd_factor(&g),
            Err(SolverError::NotPositiveDefinite { .. })
        ));
    }

    #[test]
    fn add_index_matches_full_factorization() {
        let f1 = spd_factor(&DenseMatrix::new(1, 1, vec![4.0]).unwrap()).unwrap();
        let f2 = factor_add_index(&f1, &[2.0], 3.0, 1).unwrap();
        let g = DenseMatrix::new(2, 2, vec![4.0, 2.0, 2.0, 3.0]).unwrap();
        assert!(max_diff(&f2.reconstruct(), &g) < 1e-14);

        let fi = spd_factor(&DenseMatrix::identity(2)).unwrap();
        let fe = factor_add_index(&fi, &[0.0, 0.0], 1.0, 2).unwrap();
        assert!(max_diff(&fe.reconstruct(), &DenseMatrix::identity(3)) < 1e-15);
    }

    #[test]
    fn duplicate_column_is_rank_deficient() {
        let g = DenseMatrix::new(2, 2, vec![2.0, 1.0, 1.0, 2.0]).unwrap();
        let f = spd_factor(&g).unwrap();
        // New column identical to the first in the underlying matrix: the
        // extended Gram is exactly singular.
        assert!(factor_add_index(&f, &[2.0, 1.0], 2.0, 9).is_err());
    }

    #[test]
    fn remove_index_matches_direct_factorization() {
        let g = DenseMatrix::new(2, 2, vec![4.0, 2.0, 2.0, 3.0]).unwrap();
        let f = spd_factor(&g).unwrap();
        let r = factor_remove_index(&f, 0).unwrap();
        assert_close(r.at(0, 0), 3f64.sqrt(), 1e-14);

        let fi = spd_factor(&DenseMatrix::identity(3)).unwrap();
        let ri = factor_remove_index(&fi, 1).unwrap();
        assert!(max_diff(&ri.reconstruct(), &DenseMatrix::identity(2)) < 1e-15);
    }

    #[test]
    fn add_then_remove_roundtrips() {
        let g = DenseMatrix::new(2, 2, vec![5.0, 1.0, 1.0, 3.0]).unwrap();
        let f = spd_factor(&g).unwrap();
        let f2 = factor_add_index(&f, &[0.5, -0.25], 2.0, 7).unwrap();
        let back = factor_remove_index(&f2, 2).unwrap();
        assert!(max_diff(&back.reconstruct(), &g) < 1e-10);
    }

    #[test]
    fn rank1_update_then_downdate_roundtrips() {
        let g = DenseMatrix::new(3, 3, vec![4.0, 1.0, 0.5, 1.0, 3.0, 0.2, 0.5, 0.2, 2.0]).unwrap();
        let f = spd_factor(&g).unwrap();
        let v = vec![0.3, -0.7, 0.4];
        let up = factor_rank1(&f, &v, 1.0).unwrap();
        let down = factor_rank1(&up, &v, -1.0).unwrap();
        assert!(max_diff(&down.reconstruct(), &g) < 1e-12);
    }

    // Random add/remove sequences agree with from-scratch factorization.
    #[test]
    fn random_update_sequence_tracks_direct_factor() {
        let mut state = 0x9e3779b97f4a7c15u64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        let m = 40;
        let ncols = 20;
        let a = DenseMatrix::from_fn(m, ncols, |_, _| next() - 0.5);
        let mut cols: Vec<usize> = vec![];
        let mut f = SpdFactor::empty();
        for step in 0..100 {
            let grow = cols.is_empty() || (next() < 0.6 && cols.len() < ncols);
            if grow {
                let avail: Vec<usize> = (0..ncols).filter(|c| !cols.contains(c)).collect();
                let c = avail[(next() * avail.len() as f64) as usize % avail.len()];
                let gram_col: Vec<f64> = cols
                    .iter()
                    .map(|&ci| (0..m).map(|r| a.get(r, ci) * a.get(r, c)).sum())
                    .collect();
                let diag = (0..m).map(|r| a.get(r, c) * a.get(r, c)).sum();
                f = factor_add_index(&f, &gram_col, diag, c).unwrap();
                cols.push(c);
            } else {
                let pos = (next() * cols.len() as f64) as usize % cols.len();
                f = factor_remove_index(&f, pos).unwrap();
                cols.remove(pos);
            }
            if step % 10 == 0 && !cols.is_empty() {
                let direct = factor_of_gram_columns(&a, &cols).unwrap();
                let diff = max_diff(&f.reconstruct(), &direct.reconstruct());
                assert!(diff < 1e-9, "step {step}: drift {diff}");
            }
        }
    }

    #[test]
    fn factor_solve_matches_direct_solve() {
        let mut state = 42u64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for n in [1usize, 5, 20, 50] {
            let b = DenseMatrix::from_fn(n + 3, n, |_, _| next() - 0.5);
            let g = b.gram();
            let f = spd_factor(&g).unwrap();
            let rhs: Vec<f64> = (0..n).map(|_| next() - 0.5).collect();
            let x1 = f.solve(&rhs);
            let x2 = super::super::dense::solve_dense(&g, &rhs).unwrap();
            let scale = x2.iter().fold(1.0f64, |m, v| m.max(v.abs()));
            for (a, b) in x1.iter().zip(&x2) {
                assert!((a - b).abs() < 1e-9 * scale);
            }
        }
    }
}

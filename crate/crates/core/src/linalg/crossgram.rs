//! Explicit inverse of a square, generally non-symmetric matrix, maintained
//! under rank-1 edits: row/column replacement, bordered growth, deletion, and
//! general rank-1 corrections. The Dantzig-selector homotopy needs solves
//! with the cross Gram matrix of its primal and dual supports, which has no
//! symmetric factor to update; the decoder needs the same machinery for its
//! square row-submatrix. Every `REFRESH_INTERVAL` edits, or whenever a pivot
//! scalar degenerates, the inverse is rebuilt from the stored matrix.

use crate::error::{Result, SolverError};

use super::dense::{invert_dense, DenseMatrix};

const REFRESH_INTERVAL: u32 = 100;
const PIVOT_TOL: f64 = 1e-12;

/// A square matrix together with its explicitly maintained inverse.
#[derive(Debug, Clone)]
pub struct SquareInverse {
    m: DenseMatrix,
    inv: DenseMatrix,
    edits: u32,
}

impl SquareInverse {
    pub fn new(m: DenseMatrix) -> Result<Self> {
        if m.rows() != m.cols() {
            return Err(SolverError::dim("SquareInverse requires a square matrix"));
        }
        let inv = invert_dense(&m).map_err(|_| SolverError::SingularCrossGram)?;
        Ok(SquareInverse { m, inv, edits: 0 })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.m.rows()
    }

    pub fn matrix(&self) -> &DenseMatrix {
        &self.m
    }

    pub fn inverse(&self) -> &DenseMatrix {
        &self.inv
    }

    /// `M^-1 b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        self.inv.apply(b)
    }

    /// `M^-T b`.
    pub fn solve_t(&self, b: &[f64]) -> Vec<f64> {
        self.inv.apply_t(b)
    }

    /// Row `i` of the inverse (the null direction of `M` with row `i`
    /// deleted, up to scale).
    pub fn inverse_row(&self, i: usize) -> Vec<f64> {
        self.inv.row(i).to_vec()
    }

    /// Column `j` of the inverse.
    pub fn inverse_col(&self, j: usize) -> Vec<f64> {
        self.inv.col(j)
    }

    fn refresh(&mut self) -> Result<()> {
        self.inv = invert_dense(&self.m).map_err(|_| SolverError::SingularCrossGram)?;
        self.edits = 0;
        Ok(())
    }

    fn note_edit(&mut self) -> Result<()> {
        self.edits += 1;
        if self.edits >= REFRESH_INTERVAL {
            self.refresh()?;
        }
        Ok(())
    }

    fn scale(&self) -> f64 {
        self.m.max_abs().max(1.0)
    }

    /// General rank-1 correction `M += u v'` (Sherman-Morrison on the
    /// inverse). Falls back to a full refresh when the pivot degenerates.
    pub fn rank1(&mut self, u: &[f64], v: &[f64]) -> Result<()> {
        let n = self.dim();
        debug_assert_eq!(u.len(), n);
        debug_assert_eq!(v.len(), n);
        for i in 0..n {
            for j in 0..n {
                let val = self.m.get(i, j) + u[i] * v[j];
                self.m.set(i, j, val);
            }
        }
        let nu = self.inv.apply(u);
        let vn = self.inv.apply_t(v);
        let denom = 1.0 + super::dense::dot(v, &nu);
        if denom.abs() < PIVOT_TOL {
            return self.refresh();
        }
        for i in 0..n {
            for j in 0..n {
                let val = self.inv.get(i, j) - nu[i] * vn[j] / denom;
                self.inv.set(i, j, val);
            }
        }
        self.note_edit()
    }

    /// Replaces row `i` with `row`.
    pub fn replace_row(&mut self, i: usize, row: &[f64]) -> Result<()> {
        let n = self.dim();
        let delta: Vec<f64> = (0..n).map(|j| row[j] - self.m.get(i, j)).collect();
        let mut u = vec![0.0; n];
        u[i] = 1.0;
        self.rank1(&u, &delta)
    }

    /// Replaces column `j` with `col`.
    pub fn replace_col(&mut self, j: usize, col: &[f64]) -> Result<()> {
        let n = self.dim();
        let delta: Vec<f64> = (0..n).map(|i| col[i] - self.m.get(i, j)).collect();
        let mut v = vec![0.0; n];
        v[j] = 1.0;
        self.rank1(&delta, &v)
    }

    /// Grows the system by a trailing row and column:
    /// `M' = [[M, c], [r', corner]]`, via the bordered-inverse formula.
    pub fn grow(&mut self, new_col: &[f64], new_row: &[f64], corner: f64) -> Result<()> {
        let n = self.dim();
        debug_assert_eq!(new_col.len(), n);
        debug_assert_eq!(new_row.len(), n);
        let mut m2 = DenseMatrix::zeros(n + 1, n + 1);
        for i in 0..n {
            for j in 0..n {
                m2.set(i, j, self.m.get(i, j));
            }
            m2.set(i, n, new_col[i]);
            m2.set(n, i, new_row[i]);
        }
        m2.set(n, n, corner);

        let nc = self.inv.apply(new_col);
        let rn = self.inv.apply_t(new_row);
        let schur = corner - super::dense::dot(new_row, &nc);
        if schur.abs() < PIVOT_TOL * self.scale() {
            self.m = m2;
            return self.refresh();
        }
        let mut inv2 = DenseMatrix::zeros(n + 1, n + 1);
        for i in 0..n {
            for j in 0..n {
                inv2.set(i, j, self.inv.get(i, j) + nc[i] * rn[j] / schur);
            }
            inv2.set(i, n, -nc[i] / schur);
            inv2.set(n, i, -rn[i] / schur);
        }
        inv2.set(n, n, 1.0 / schur);
        self.m = m2;
        self.inv = inv2;
        self.note_edit()
    }

    /// Shrinks the system by deleting row `i` and column `j`. Uses the
    /// inverse-deletion identity; falls back to a refresh if the pivot
    /// `N[j, i]` degenerates.
    pub fn shrink(&mut self, i: usize, j: usize) -> Result<()> {
        let n = self.dim();
        if n == 1 {
            return Err(SolverError::arg("cannot shrink a 1x1 system"));
        }
        let mut m2 = DenseMatrix::zeros(n - 1, n - 1);
        for a in 0..n {
            if a == i {
                continue;
            }
            let ta = if a < i { a } else { a - 1 };
            for b in 0..n {
                if b == j {
                    continue;
                }
                let tb = if b < j { b } else { b - 1 };
                m2.set(ta, tb, self.m.get(a, b));
            }
        }
        let pivot = self.inv.get(j, i);
        if pivot.abs() < PIVOT_TOL / self.scale() {
            self.m = m2;
            return self.refresh();
        }
        // (M without row i, col j)^-1 = N' - (N'[:, i])(N'[j, :]) / N[j, i],
        // where N' drops row j and column i of N.
        let mut inv2 = DenseMatrix::zeros(n - 1, n - 1);
        for a in 0..n {
            if a == j {
                continue;
            }
            let ta = if a < j { a } else { a - 1 };
            for b in 0..n {
                if b == i {
                    continue;
                }
                let tb = if b < i { b } else { b - 1 };
                inv2.set(
                    ta,
                    tb,
                    self.inv.get(a, b) - self.inv.get(a, i) * self.inv.get(j, b) / pivot,
                );
            }
        }
        self.m = m2;
        self.inv = inv2;
        self.note_edit()
    }

    /// Largest residual entry of `M N - I`; a cheap conditioning alarm.
    pub fn residual(&self) -> f64 {
        let n = self.dim();
        let prod = self.m.matmul(&self.inv);
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let expect = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((prod.get(i, j) - expect).abs());
            }
        }
        worst
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rand_matrix(n: usize, seed: u64) -> DenseMatrix {
        let mut state = seed | 1;
        DenseMatrix::from_fn(n, n, |i, j| {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            let u = (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5;
            u + if i == j { 2.0 } else { 0.0 }
        })
    }

    #[test]
    fn edits_track_direct_inverse() {
        let mut s = SquareInverse::new(rand_matrix(6, 3)).unwrap();
        s.replace_row(2, &[0.1, -0.4, 2.2, 0.3, 0.0, 1.0]).unwrap();
        s.replace_col(4, &[0.5, 0.5, -0.5, 0.1, 2.5, 0.2]).unwrap();
        s.grow(
            &[0.1, 0.2, 0.3, 0.4, 0.5, 0.6],
            &[-0.1, 0.3, 0.0, 0.2, -0.2, 0.1],
            3.0,
        )
        .unwrap();
        s.shrink(1, 3).unwrap();
        assert!(s.residual() < 1e-10, "residual {}", s.residual());
    }

    #[test]
    fn solve_and_solve_t_are_consistent() {
        let s = SquareInverse::new(rand_matrix(5, 9)).unwrap();
        let b = vec![1.0, -1.0, 0.5, 2.0, 0.0];
        let x = s.solve(&b);
        let back = s.matrix().apply(&x);
        for (a, c) in b.iter().zip(&back) {
            assert!((a - c).abs() < 1e-10);
        }
        let xt = s.solve_t(&b);
        let backt = s.matrix().apply_t(&xt);
        for (a, c) in b.iter().zip(&backt) {
            assert!((a - c).abs() < 1e-10);
        }
    }

    #[test]
    fn inverse_row_is_null_direction_of_reduced_matrix() {
        let s = SquareInverse::new(rand_matrix(5, 17)).unwrap();
        let v = s.inverse_row(2);
        // M' v = e_2: v spans the null space of M' with row 2 deleted.
        let prod = s.matrix().apply_t(&v);
        for (i, p) in prod.iter().enumerate() {
            let expect = if i == 2 { 1.0 } else { 0.0 };
            assert!((p - expect).abs() < 1e-12, "row {i}: {p}");
        }
    }

    #[test]
    fn singular_matrix_is_rejected() {
        let m = DenseMatrix::new(2, 2, vec![1.0, 2.0, 0.5, 1.0]).unwrap();
        assert!(matches!(
            SquareInverse::new(m),
            Err(SolverError::SingularCrossGram)
        ));
    }
}

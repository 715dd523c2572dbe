//! Recursive least squares: appending one measurement row to an already
//! solved overdetermined system through a matrix-inversion-lemma update of
//! the inverse Gram matrix, at O(mn) instead of a fresh O(mn^2) solve.

use crate::error::{Result, SolverError};

use super::chol::spd_factor;
use super::dense::{dot, DenseMatrix};

/// State of a sequential least-squares estimate: the current solution, the
/// inverse Gram matrix of all rows seen so far, and the row count.
#[derive(Debug, Clone)]
pub struct LsState {
    estimate: Vec<f64>,
    inv_gram: DenseMatrix,
    measurements: usize,
}

impl LsState {
    pub fn estimate(&self) -> &[f64] {
        &self.estimate
    }

    pub fn inv_gram(&self) -> &DenseMatrix {
        &self.inv_gram
    }

    pub fn measurements(&self) -> usize {
        self.measurements
    }
}

/// Solves the full-column-rank least-squares problem `min ||A x - y||_2`
/// and keeps `(A'A)^-1` around for later row appends.
pub fn ls_init(a: &DenseMatrix, y: &[f64]) -> Result<LsState> {
    if y.len() != a.rows() {
        return Err(SolverError::dim("rhs length must equal row count"));
    }
    if a.rows() < a.cols() {
        return Err(SolverError::RankDeficient);
    }
    let gram = a.gram();
    let f = spd_factor(&gram).map_err(|_| SolverError::RankDeficient)?;
    let n = a.cols();
    let inv_gram = DenseMatrix::from_fn(n, n, |_, _| 0.0);
    let mut inv = inv_gram;
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        let col = f.solve(&e);
        for i in 0..n {
            inv.set(i, j, col[i]);
        }
    }
    let estimate = f.solve(&a.apply_t(y));
    Ok(LsState {
        estimate,
        inv_gram: inv,
        measurements: a.rows(),
    })
}

/// Sherman-Morrison update of an inverse Gram matrix after appending row `b`:
/// `(G + b'b)^-1` from `G^-1`. Returns the updated inverse and the gain
/// vector `K = G^-1 b' / (1 + b G^-1 b')`.
pub fn inv_gram_append_row(inv: &DenseMatrix, b: &[f64]) -> (DenseMatrix, Vec<f64>) {
    let n = inv.rows();
    debug_assert_eq!(b.len(), n);
    let pb = inv.apply(b);
    let denom = 1.0 + dot(b, &pb);
    let gain: Vec<f64> = pb.iter().map(|v| v / denom).collect();
    // P1 = P0 - K (b P0); b P0 = (P0' b)' = pb (P0 symmetric).
    let mut out = inv.clone();
    for i in 0..n {
        for j in 0..n {
            out.set(i, j, inv.get(i, j) - gain[i] * pb[j]);
        }
    }
    (out, gain)
}

/// Folds one new measurement `w = b x + noise` into the estimate without
/// refactoring. The gain never blows up: `1 + b P b' >= 1` for positive
/// definite `P`.
pub fn rls_append(s: &LsState, b: &[f64], w: f64) -> Result<LsState> {
    if b.len() != s.estimate.len() {
        return Err(SolverError::dim("row length must equal state dimension"));
    }
    let (inv_gram, gain) = inv_gram_append_row(&s.inv_gram, b);
    let innovation = w - dot(b, &s.estimate);
    let mut estimate = s.estimate.clone();
    for (e, g) in estimate.iter_mut().zip(&gain) {
        *e += g * innovation;
    }
    Ok(LsState {
        estimate,
        inv_gram,
        measurements: s.measurements + 1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_append_matches_direct_least_squares() {
        // Rows [1; 1], y = [1, 3]: estimate 2. Appending (b=[1], w=5) stacks a
        // third row; the direct solution of the 3-row system is 3.
        let a = DenseMatrix::new(2, 1, vec![1.0, 1.0]).unwrap();
        let s = ls_init(&a, &[1.0, 3.0]).unwrap();
        assert!((s.estimate()[0] - 2.0).abs() < 1e-12);
        let s2 = rls_append(&s, &[1.0], 5.0).unwrap();
        assert!((s2.estimate()[0] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn zero_row_and_consistent_measurement_leave_estimate_unchanged() {
        let a = DenseMatrix::new(3, 2, vec![1.0, 0.0, 0.0, 1.0, 1.0, 1.0]).unwrap();
        let s = ls_init(&a, &[1.0, 2.0, 3.5]).unwrap();
        let zero = rls_append(&s, &[0.0, 0.0], 17.0).unwrap();
        for (x, y) in s.estimate().iter().zip(zero.estimate()) {
            assert!((x - y).abs() < 1e-14);
        }
        let w = dot(&[2.0, -1.0], s.estimate());
        let cons = rls_append(&s, &[2.0, -1.0], w).unwrap();
        for (x, y) in s.estimate().iter().zip(cons.estimate()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn repeated_appends_match_one_shot_solution() {
        let mut state = 7u64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let n = 6;
        let m = 24;
        let full = DenseMatrix::from_fn(m, n, |_, _| next());
        let y: Vec<f64> = (0..m).map(|_| next()).collect();

        // Base system: first n rows; append the rest one at a time.
        let base = DenseMatrix::from_fn(n, n, |i, j| full.get(i, j));
        let mut s = ls_init(&base, &y[..n]).unwrap();
        for r in n..m {
            s = rls_append(&s, full.row(r), y[r]).unwrap();
        }
        let direct = ls_init(&full, &y).unwrap();
        let scale = direct
            .estimate()
            .iter()
            .fold(1.0f64, |acc, v| acc.max(v.abs()));
        for (a, b) in s.estimate().iter().zip(direct.estimate()) {
            assert!((a - b).abs() < 1e-8 * scale);
        }
        // The inverse Gram is tracked exactly as well.
        let gram = full.gram();
        let prod = gram.matmul(s.inv_gram());
        for i in 0..n {
            for j in 0..n {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((prod.get(i, j) - expect).abs() < 1e-9);
            }
        }
    }
}

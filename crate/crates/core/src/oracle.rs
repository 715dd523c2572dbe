//! Brute-force reference solvers for tiny instances. These enumerate support
//! sets (and sign patterns) directly from the optimality conditions, solve
//! the resulting square systems with plain Gaussian elimination, and certify
//! each candidate before returning it. They share no code path with the
//! homotopy solvers they are used to validate.

use crate::bpdn::bpdn_kkt;
use crate::dantzig::ds_kkt;
use crate::error::{Result, SolverError};
use crate::linalg::{solve_dense, DenseMatrix};

const BPDN_MAX_N: usize = 12;
const DS_MAX_N: usize = 6;
const L1REG_MAX_N: usize = 6;
const L1REG_MAX_M: usize = 14;

/// Enumerates all supports and sign patterns for the BPDN optimality system
/// and returns the certified solution.
pub fn bpdn_brute(a: &DenseMatrix, y: &[f64], tau: f64) -> Result<Vec<f64>> {
    let n = a.cols();
    if n > BPDN_MAX_N {
        return Err(SolverError::arg(format!(
            "bpdn_brute is capped at n <= {BPDN_MAX_N}"
        )));
    }
    let zero = vec![0.0; n];
    if bpdn_kkt(a, y, tau, &zero).pass {
        return Ok(zero);
    }
    let aty = a.apply_t(y);
    for support_mask in 1u32..(1 << n) {
        let support: Vec<usize> = (0..n).filter(|j| support_mask >> j & 1 == 1).collect();
        let k = support.len();
        let gram = DenseMatrix::from_fn(k, k, |i, j| {
            (0..a.rows())
                .map(|r| a.get(r, support[i]) * a.get(r, support[j]))
                .sum()
        });
        for sign_mask in 0u32..(1 << k) {
            let z: Vec<f64> = (0..k)
                .map(|i| if sign_mask >> i & 1 == 1 { -1.0 } else { 1.0 })
                .collect();
            let rhs: Vec<f64> = (0..k)
                .map(|i| aty[support[i]] - tau * z[i])
                .collect();
            let Ok(xs) = solve_dense(&gram, &rhs) else {
                continue;
            };
            if xs.iter().zip(&z).any(|(&x, &s)| x == 0.0 || x.signum() != s) {
                continue;
            }
            let mut x = vec![0.0; n];
            for (i, &j) in support.iter().enumerate() {
                x[j] = xs[i];
            }
            if bpdn_kkt(a, y, tau, &x).pass {
                return Ok(x);
            }
        }
    }
    Err(SolverError::NoCertifiedSolution)
}

/// Enumerates `n`-row subsets of an overdetermined system, solves each square
/// system, and returns the interpolating point minimizing `||Ax - y||_1`.
/// Ties go to the first subset in lexicographic order.
pub fn l1_regression_brute(a: &DenseMatrix, y: &[f64]) -> Result<Vec<f64>> {
    let (m, n) = (a.rows(), a.cols());
    if n > L1REG_MAX_N || m > L1REG_MAX_M {
        return Err(SolverError::arg(format!(
            "l1_regression_brute is capped at n <= {L1REG_MAX_N}, m <= {L1REG_MAX_M}"
        )));
    }
    if m < n {
        return Err(SolverError::dim("system must be overdetermined"));
    }
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut subset: Vec<usize> = (0..n).collect();
    loop {
        let sub = DenseMatrix::from_fn(n, n, |i, j| a.get(subset[i], j));
        let rhs: Vec<f64> = subset.iter().map(|&r| y[r]).collect();
        if let Ok(x) = solve_dense(&sub, &rhs) {
            let r = a.apply(&x);
            let obj: f64 = r.iter().zip(y).map(|(ri, yi)| (ri - yi).abs()).sum();
            // Strict improvement keeps the lexicographically first minimizer.
            if best.as_ref().map_or(true, |(b, _)| obj < b - 1e-12) {
                best = Some((obj, x));
            }
        }
        // Advance the combination in lexicographic order.
        let mut i = n;
        loop {
            if i == 0 {
                break;
            }
            i -= 1;
            if subset[i] != i + m - n {
                subset[i] += 1;
                for j in i + 1..n {
                    subset[j] = subset[j - 1] + 1;
                }
                break;
            }
        }
        if subset[0] == m - n && i == 0 {
            break;
        }
    }
    best.map(|(_, x)| x).ok_or(SolverError::NoCertifiedSolution)
}

/// Enumerates primal/dual support pairs and sign patterns for the Dantzig
/// selector optimality system and returns the certified pair.
pub fn ds_brute(a: &DenseMatrix, y: &[f64], tau: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = a.cols();
    if n > DS_MAX_N {
        return Err(SolverError::arg(format!(
            "ds_brute is capped at n <= {DS_MAX_N}"
        )));
    }
    let zero = vec![0.0; n];
    if ds_kkt(a, y, tau, &zero, &zero).pass {
        return Ok((zero.clone(), zero));
    }
    let aty = a.apply_t(y);
    let gram = a.gram();
    let subsets: Vec<Vec<usize>> = (1u32..(1 << n))
        .map(|mask| (0..n).filter(|j| mask >> j & 1 == 1).collect())
        .collect();
    for gx in &subsets {
        let k = gx.len();
        for gl in subsets.iter().filter(|s| s.len() == k) {
            // Cross Gram over (dual support rows, primal support columns).
            let cross = DenseMatrix::from_fn(k, k, |i, j| gram.get(gl[i], gx[j]));
            for sign_mask in 0u32..(1 << k) {
                let zl: Vec<f64> = (0..k)
                    .map(|i| if sign_mask >> i & 1 == 1 { -1.0 } else { 1.0 })
                    .collect();
                // Primal equality: A_gl'(A x - y) = tau z_l on the support.
                let rhs: Vec<f64> = (0..k).map(|i| aty[gl[i]] + tau * zl[i]).collect();
                let Ok(xs) = solve_dense(&cross, &rhs) else {
                    continue;
                };
                if xs.iter().any(|&v| v == 0.0) {
                    continue;
                }
                let zx: Vec<f64> = xs.iter().map(|v| v.signum()).collect();
                // Dual equality: A_gx' A lambda = -z_x.
                let cross_t = DenseMatrix::from_fn(k, k, |i, j| gram.get(gx[i], gl[j]));
                let neg_zx: Vec<f64> = zx.iter().map(|v| -v).collect();
                let Ok(ls) = solve_dense(&cross_t, &neg_zx) else {
                    continue;
                };
                if ls.iter().zip(&zl).any(|(&l, &s)| l == 0.0 || l.signum() != s) {
                    continue;
                }
                let mut x = vec![0.0; n];
                for (i, &j) in gx.iter().enumerate() {
                    x[j] = xs[i];
                }
                let mut lambda = vec![0.0; n];
                for (i, &j) in gl.iter().enumerate() {
                    lambda[j] = ls[i];
                }
                if ds_kkt(a, y, tau, &x, &lambda).pass {
                    return Ok((x, lambda));
                }
            }
        }
    }
    Err(SolverError::NoCertifiedSolution)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::norm_inf;
    use crate::problems::{gaussian_matrix, Rng};

    #[test]
    fn bpdn_brute_handles_trivial_cases() {
        let a = DenseMatrix::new(1, 1, vec![1.0]).unwrap();
        // Soft threshold in the scalar case.
        let x = bpdn_brute(&a, &[2.0], 0.5).unwrap();
        assert!((x[0] - 1.5).abs() < 1e-10);
        // Large tau: zero solution.
        let a2 = gaussian_matrix(5, 4, 3);
        let y = vec![1.0, 2.0, -1.0, 0.5, 0.0];
        let tau0 = norm_inf(&a2.apply_t(&y));
        let x = bpdn_brute(&a2, &y, tau0 * 1.1).unwrap();
        assert!(x.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn median_is_the_scalar_l1_regression() {
        let a = DenseMatrix::new(3, 1, vec![1.0, 1.0, 1.0]).unwrap();
        let x = l1_regression_brute(&a, &[5.0, 9.0, 5.0]).unwrap();
        assert!((x[0] - 5.0).abs() < 1e-12);
    }

    #[test]
    fn exact_data_is_interpolated() {
        let a = gaussian_matrix(8, 3, 17);
        let x_true = vec![1.0, -2.0, 0.5];
        let y = a.apply(&x_true);
        let x = l1_regression_brute(&a, &y).unwrap();
        for (p, q) in x.iter().zip(&x_true) {
            assert!((p - q).abs() < 1e-9);
        }
    }

    #[test]
    fn ds_brute_identity_matrix_soft_thresholds() {
        let a = DenseMatrix::identity(4);
        let mut rng = Rng::seed_from(1);
        let y: Vec<f64> = (0..4).map(|_| rng.normal(0.0, 2.0)).collect();
        let tau = 0.6;
        let (x, lambda) = ds_brute(&a, &y, tau).unwrap();
        for j in 0..4 {
            let expect = if y[j] > tau {
                y[j] - tau
            } else if y[j] < -tau {
                y[j] + tau
            } else {
                0.0
            };
            assert!((x[j] - expect).abs() < 1e-9, "x[{j}]");
            if expect != 0.0 {
                assert!((lambda[j] + expect.signum()).abs() < 1e-9, "lambda[{j}]");
            }
        }
    }
}

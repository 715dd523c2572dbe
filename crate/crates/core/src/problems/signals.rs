//! Experiment instance generators: measurement matrices, sparse spike
//! signals and their perturbations, piecewise-smooth test signals, and
//! codeword corruption models. All generators are deterministic functions of
//! their seed (see [`super::rng`]).

use crate::linalg::DenseMatrix;

use super::rng::Rng;

/// `m x n` matrix with iid Normal(0, 1/m) entries, filled row by row.
pub fn gaussian_matrix(m: usize, n: usize, seed: u64) -> DenseMatrix {
    let mut rng = Rng::seed_from(seed);
    let sd = 1.0 / (m as f64).sqrt();
    DenseMatrix::from_fn(m, n, |_, _| rng.normal(0.0, sd))
}

/// Sparse signal with +-1 spikes at `k` randomly chosen locations.
pub fn spike_signal(n: usize, k: usize, seed: u64) -> Vec<f64> {
    assert!(k <= n, "support size exceeds dimension");
    let mut rng = Rng::seed_from(seed);
    let mut x = vec![0.0; n];
    for loc in rng.distinct_indices(n, k) {
        x[loc] = if rng.next_u64() & 1 == 0 { 1.0 } else { -1.0 };
    }
    x
}

/// Perturbs a sparse signal the way the time-varying experiments do: each
/// nonzero entry gets Normal(0, 0.1^2) added, then `k_new` fresh entries with
/// Normal(0, 1) values appear at randomly chosen zero locations.
pub fn perturb_spikes(x: &[f64], k_new: usize, seed: u64) -> Vec<f64> {
    let mut rng = Rng::seed_from(seed);
    let mut out = x.to_vec();
    for v in out.iter_mut() {
        if *v != 0.0 {
            *v += rng.normal(0.0, 0.1);
        }
    }
    let zeros: Vec<usize> = (0..out.len()).filter(|&j| out[j] == 0.0).collect();
    assert!(k_new <= zeros.len(), "no room for new spikes");
    let picks = rng.distinct_indices(zeros.len(), k_new);
    for p in picks {
        out[zeros[p]] = rng.normal(0.0, 1.0);
    }
    out
}

/// Canonical breakpoint layout of the piecewise-constant test signal, as
/// fractions of the length, with the jump inserted at each breakpoint.
const BLOCK_POSITIONS: [f64; 11] = [
    0.10, 0.13, 0.15, 0.23, 0.25, 0.40, 0.44, 0.65, 0.76, 0.78, 0.81,
];
const BLOCK_JUMPS: [f64; 11] = [
    4.0, -5.0, 3.0, -4.0, 5.0, -4.2, 2.1, 4.3, -3.1, 2.1, -4.2,
];

/// Piecewise-constant signal: fixed breakpoints, with each constant level
/// scaled by an independent Uniform(0.8, 1.2) factor drawn from the seed.
pub fn blocks_signal(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = Rng::seed_from(seed);
    // Levels are the running sums of the canonical jumps.
    let mut levels = vec![0.0; BLOCK_POSITIONS.len() + 1];
    for i in 0..BLOCK_JUMPS.len() {
        levels[i + 1] = levels[i] + BLOCK_JUMPS[i];
    }
    let scales: Vec<f64> = levels
        .iter()
        .map(|_| rng.uniform_range(0.8, 1.2))
        .collect();
    let mut out = vec![0.0; n];
    for (i, v) in out.iter_mut().enumerate() {
        let t = i as f64 / n as f64;
        let seg = BLOCK_POSITIONS.iter().take_while(|&&p| p <= t).count();
        *v = levels[seg] * scales[seg];
    }
    out
}

/// Canonical breakpoints of the piecewise-cubic signal.
const POLY_POSITIONS: [f64; 3] = [0.2, 0.45, 0.7];
/// Canonical cubic coefficients per segment, in (c0, c1, c2, c3) order for
/// `c0 + c1 u + c2 u^2 + c3 u^3` with `u` the position within [0, 1].
const POLY_COEFFS: [[f64; 4]; 4] = [
    [1.0, 4.0, -6.0, 2.0],
    [-2.0, 1.5, 8.0, -7.0],
    [3.0, -9.0, 2.5, 4.0],
    [0.5, 6.0, -10.0, 5.0],
];

/// Piecewise-cubic signal: fixed breakpoints and canonical polynomial
/// coefficients, each perturbed by Normal(0, 0.05^2) per seed.
pub fn pcwpoly_signal(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = Rng::seed_from(seed);
    let coeffs: Vec<[f64; 4]> = POLY_COEFFS
        .iter()
        .map(|c| {
            let mut out = *c;
            for v in out.iter_mut() {
                *v += rng.normal(0.0, 0.05);
            }
            out
        })
        .collect();
    let mut out = vec![0.0; n];
    for (i, v) in out.iter_mut().enumerate() {
        let t = i as f64 / n as f64;
        let seg = POLY_POSITIONS.iter().take_while(|&&p| p <= t).count();
        let c = &coeffs[seg];
        *v = c[0] + t * (c[1] + t * (c[2] + t * c[3]));
    }
    out
}

/// How to corrupt a codeword.
#[derive(Debug, Clone, Copy)]
pub enum CorruptionMode {
    /// Exactly `k` randomly chosen entries are set to zero.
    ZeroK(usize),
    /// Each entry is independently zeroed with the given probability.
    Bernoulli(f64),
}

/// Applies a corruption model and returns the corrupted codeword together
/// with the (sorted) list of corrupted locations.
pub fn corrupt_codeword(
    codeword: &[f64],
    mode: CorruptionMode,
    seed: u64,
) -> (Vec<f64>, Vec<usize>) {
    let mut rng = Rng::seed_from(seed);
    let mut out = codeword.to_vec();
    let mut support = Vec::new();
    match mode {
        CorruptionMode::ZeroK(k) => {
            assert!(k <= out.len());
            support = rng.distinct_indices(out.len(), k);
            support.sort_unstable();
            for &i in &support {
                out[i] = 0.0;
            }
        }
        CorruptionMode::Bernoulli(rate) => {
            for (i, v) in out.iter_mut().enumerate() {
                if rng.uniform() < rate {
                    *v = 0.0;
                    support.push(i);
                }
            }
        }
    }
    (out, support)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::norm_inf;

    #[test]
    fn gaussian_matrix_moments_and_determinism() {
        let m = 256;
        let n = 256;
        let a = gaussian_matrix(m, n, 42);
        let b = gaussian_matrix(m, n, 42);
        assert_eq!(a.data(), b.data());

        let count = (m * n) as f64;
        let mean: f64 = a.data().iter().sum::<f64>() / count;
        let var: f64 = a.data().iter().map(|v| v * v).sum::<f64>() / count - mean * mean;
        // CLT bound on the sample mean: 4 standard errors.
        assert!(mean.abs() < 4.0 / (count * m as f64).sqrt(), "mean {mean}");
        let expect = 1.0 / m as f64;
        assert!((var - expect).abs() < 0.1 * expect, "variance {var}");
    }

    #[test]
    fn spike_signal_support_is_exact() {
        assert!(spike_signal(64, 0, 1).iter().all(|&v| v == 0.0));
        let x = spike_signal(64, 12, 9);
        assert_eq!(x.iter().filter(|&&v| v != 0.0).count(), 12);
        assert!(x.iter().all(|&v| v == 0.0 || v.abs() == 1.0));
    }

    #[test]
    fn perturbation_keeps_old_support_and_adds_new() {
        let x = spike_signal(128, 20, 5);
        let same = perturb_spikes(&x, 0, 6);
        for (a, b) in x.iter().zip(&same) {
            if *a == 0.0 {
                assert_eq!(*b, 0.0);
            } else {
                // 4-sigma bound on the Normal(0, 0.1^2) perturbation.
                assert!((a - b).abs() < 0.4 + 1e-9);
            }
        }
        let grown = perturb_spikes(&x, 3, 7);
        let old_nnz = x.iter().filter(|&&v| v != 0.0).count();
        let new_nnz = grown.iter().filter(|&&v| v != 0.0).count();
        assert!(new_nnz >= old_nnz && new_nnz <= old_nnz + 3);
    }

    #[test]
    fn blocks_has_few_distinct_levels() {
        let x = blocks_signal(2048, 13);
        let mut levels: Vec<f64> = x.to_vec();
        levels.sort_by(|a, b| a.partial_cmp(b).unwrap());
        levels.dedup();
        assert!(levels.len() <= 12, "{} levels", levels.len());
    }

    #[test]
    fn blocks_is_haar_sparse() {
        let n = 1024;
        let x = blocks_signal(n, 29);
        let coefs = super::super::wavelet::wavelet_analysis(&x, super::super::WaveletFamily::Haar)
            .unwrap();
        let nnz = coefs.iter().filter(|c| c.abs() > 1e-12).count();
        let bound = BLOCK_POSITIONS.len() * (n as f64).log2() as usize + 1;
        assert!(nnz <= bound, "{nnz} > {bound}");
    }

    #[test]
    fn pcwpoly_is_compressible_in_daub8() {
        let n = 512;
        let x = pcwpoly_signal(n, 31);
        let mut coefs =
            super::super::wavelet::wavelet_analysis(&x, super::super::WaveletFamily::Daub8)
                .unwrap();
        let total: f64 = coefs.iter().map(|c| c * c).sum();
        coefs.sort_by(|a, b| b.abs().partial_cmp(&a.abs()).unwrap());
        let top: f64 = coefs.iter().take(n / 10).map(|c| c * c).sum();
        assert!(top >= 0.999 * total, "top energy fraction {}", top / total);
    }

    #[test]
    fn corruption_bookkeeping_is_exact() {
        let mut rng = Rng::seed_from(77);
        let cw: Vec<f64> = (0..10_000).map(|_| rng.normal(0.0, 1.0) + 3.0).collect();

        let (same, support) = corrupt_codeword(&cw, CorruptionMode::ZeroK(0), 1);
        assert!(support.is_empty());
        assert_eq!(norm_inf(&crate::linalg::sub(&same, &cw)), 0.0);

        let (zeroed, support) = corrupt_codeword(&cw, CorruptionMode::ZeroK(100), 2);
        assert_eq!(support.len(), 100);
        assert!(support.iter().all(|&i| zeroed[i] == 0.0));

        let (_, support) = corrupt_codeword(&cw, CorruptionMode::Bernoulli(0.1), 3);
        let frac = support.len() as f64 / cw.len() as f64;
        assert!((frac - 0.1).abs() < 0.02, "corrupted fraction {frac}");
    }
}

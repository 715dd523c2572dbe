//! Reproducible experiment instances: seeded random matrices and signals,
//! perturbation and corruption models, orthonormal wavelet transforms, and a
//! PGM reader for image-slice experiments.
//!
//! Seeds are accepted as `u64`; every generator is a pure function of its
//! arguments. Signals that are sparse in a wavelet basis are measured through
//! the composed matrix `A W'`, materialized explicitly at these scales.

mod pgm;
mod rng;
mod signals;
mod wavelet;

pub use pgm::{read_pgm, write_pgm};
pub use rng::Rng;
pub use signals::{
    blocks_signal, corrupt_codeword, gaussian_matrix, pcwpoly_signal, perturb_spikes,
    spike_signal, CorruptionMode,
};
pub use wavelet::{wavelet_analysis, wavelet_synthesis, WaveletFamily};

use crate::linalg::DenseMatrix;

/// A measurement instance `y = A x + e`, reproducible from its seed.
#[derive(Debug, Clone)]
pub struct ProblemInstance {
    pub a: DenseMatrix,
    pub x_true: Vec<f64>,
    pub y: Vec<f64>,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl ProblemInstance {
    /// Spike-signal instance: Gaussian matrix, +-1 spikes, Gaussian noise.
    pub fn spikes(m: usize, n: usize, k: usize, sigma: f64, seed: u64) -> Self {
        let a = gaussian_matrix(m, n, seed);
        let x_true = spike_signal(n, k, seed ^ 0x5151_5151);
        let mut rng = Rng::derive(seed, 0x6e6f_6973);
        let mut y = a.apply(&x_true);
        for v in y.iter_mut() {
            *v += rng.normal(0.0, sigma);
        }
        ProblemInstance {
            a,
            x_true,
            y,
            noise_sigma: sigma,
            seed,
        }
    }
}

/// Materializes the effective measurement matrix `A W'` for signals sparse
/// in the given wavelet basis.
pub fn compose_with_wavelet_basis(
    a: &DenseMatrix,
    family: WaveletFamily,
) -> crate::error::Result<DenseMatrix> {
    let n = a.cols();
    let mut out = DenseMatrix::zeros(a.rows(), n);
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        // Column j of W' is the synthesis of the j-th coefficient impulse.
        let col = wavelet_synthesis(&e, family)?;
        let acol = a.apply(&col);
        for i in 0..a.rows() {
            out.set(i, j, acol[i]);
        }
    }
    Ok(out)
}

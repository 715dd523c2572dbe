//! Orthonormal periodic wavelet transforms (Haar and the 8-tap Daubechies
//! filter), full-depth pyramid, power-of-two lengths. `analysis` followed by
//! `synthesis` is the identity to machine precision, and the transform
//! preserves the l2 norm.

use crate::error::{Result, SolverError};

/// Filter family of the transform.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WaveletFamily {
    Haar,
    /// Daubechies extremal-phase filter with 8 taps.
    Daub8,
}

const HAAR: [f64; 2] = [std::f64::consts::FRAC_1_SQRT_2, std::f64::consts::FRAC_1_SQRT_2];

const DAUB8: [f64; 8] = [
    0.230_377_813_308_896_5,
    0.714_846_570_552_915_6,
    0.630_880_767_929_858_9,
    -0.027_983_769_416_859_854,
    -0.187_034_811_719_093_08,
    0.030_841_381_835_560_764,
    0.032_883_011_666_885_2,
    -0.010_597_401_785_069_032,
];

fn scaling_filter(family: WaveletFamily) -> &'static [f64] {
    match family {
        WaveletFamily::Haar => &HAAR,
        WaveletFamily::Daub8 => &DAUB8,
    }
}

fn check_length(len: usize) -> Result<()> {
    if len == 0 || !len.is_power_of_two() {
        return Err(SolverError::BadLength { len });
    }
    Ok(())
}

/// Orthonormal analysis down to the deepest level the filter admits: the
/// cascade stops once the working length would drop below the filter length,
/// since a periodized filter wrapping more than once is no longer
/// orthogonal. For Haar this is a full pyramid ending in one scaling
/// coefficient. The output is packed as
/// `[approx block, detail(coarsest), ..., detail(n/2)]`.
pub fn wavelet_analysis(signal: &[f64], family: WaveletFamily) -> Result<Vec<f64>> {
    check_length(signal.len())?;
    let h = scaling_filter(family);
    let mut out = vec![0.0; signal.len()];
    let mut current = signal.to_vec();
    while current.len() > 1 && current.len() >= h.len() {
        let len = current.len();
        let half = len / 2;
        let mut approx = vec![0.0; half];
        let mut detail = vec![0.0; half];
        for k in 0..half {
            let mut a = 0.0;
            let mut d = 0.0;
            for (t, &ht) in h.iter().enumerate() {
                let idx = (2 * k + t) % len;
                a += ht * current[idx];
                // Quadrature mirror: g[t] = (-1)^t h[taps-1-t].
                let g = if t % 2 == 0 { 1.0 } else { -1.0 } * h[h.len() - 1 - t];
                d += g * current[idx];
            }
            approx[k] = a;
            detail[k] = d;
        }
        out[half..len].copy_from_slice(&detail);
        current = approx;
    }
    out[..current.len()].copy_from_slice(&current);
    Ok(out)
}

/// Inverse of [`wavelet_analysis`].
pub fn wavelet_synthesis(coefficients: &[f64], family: WaveletFamily) -> Result<Vec<f64>> {
    check_length(coefficients.len())?;
    let h = scaling_filter(family);
    let n = coefficients.len();
    // Coarsest block size must match the analysis stopping rule.
    let mut coarsest = n;
    while coarsest > 1 && coarsest >= h.len() {
        coarsest /= 2;
    }
    let mut current = coefficients[..coarsest].to_vec();
    let mut half = coarsest;
    while half < n {
        let len = 2 * half;
        let detail = &coefficients[half..len];
        let mut next = vec![0.0; len];
        for k in 0..half {
            for (t, &ht) in h.iter().enumerate() {
                let idx = (2 * k + t) % len;
                let g = if t % 2 == 0 { 1.0 } else { -1.0 } * h[h.len() - 1 - t];
                next[idx] += ht * current[k] + g * detail[k];
            }
        }
        current = next;
        half = len;
    }
    Ok(current)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{norm2, DenseMatrix};
    use crate::problems::Rng;

    #[test]
    fn constant_signal_concentrates_on_the_scaling_coefficient() {
        let x = vec![3.0; 16];
        let c = wavelet_analysis(&x, WaveletFamily::Haar).unwrap();
        assert!((c[0] - 3.0 * 4.0).abs() < 1e-12);
        assert!(c[1..].iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn transforms_preserve_energy_and_roundtrip() {
        let mut rng = Rng::seed_from(101);
        for family in [WaveletFamily::Haar, WaveletFamily::Daub8] {
            let x: Vec<f64> = (0..256).map(|_| rng.normal(0.0, 1.0)).collect();
            let c = wavelet_analysis(&x, family).unwrap();
            assert!((norm2(&c) - norm2(&x)).abs() < 1e-12);
            let back = wavelet_synthesis(&c, family).unwrap();
            let err = x
                .iter()
                .zip(&back)
                .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            assert!(err <= 1e-12, "roundtrip error {err}");
        }
    }

    #[test]
    fn analysis_matrix_is_orthonormal() {
        let n = 128;
        for family in [WaveletFamily::Haar, WaveletFamily::Daub8] {
            let mut w = DenseMatrix::zeros(n, n);
            for j in 0..n {
                let mut e = vec![0.0; n];
                e[j] = 1.0;
                let col = wavelet_analysis(&e, family).unwrap();
                for i in 0..n {
                    w.set(i, j, col[i]);
                }
            }
            let g = w.gram();
            let mut worst: f64 = 0.0;
            for i in 0..n {
                for j in 0..n {
                    let expect = if i == j { 1.0 } else { 0.0 };
                    worst = worst.max((g.get(i, j) - expect).abs());
                }
            }
            assert!(worst <= 1e-12, "{family:?}: orthonormality defect {worst}");
        }
    }

    #[test]
    fn non_power_of_two_is_rejected() {
        assert!(matches!(
            wavelet_analysis(&[1.0, 2.0, 3.0], WaveletFamily::Haar),
            Err(SolverError::BadLength { len: 3 })
        ));
        assert!(wavelet_synthesis(&[1.0; 12], WaveletFamily::Daub8).is_err());
    }
}

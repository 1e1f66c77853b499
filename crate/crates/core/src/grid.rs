//! Flat tensor-grid helpers and separable multi-dimensional FFTs.
//!
//! A grid of `n^d` points is stored row-major with the last axis fastest.
//! Signed indices `k` in `-n/2..n/2` are stored at `k mod n` on every axis.

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;

/// `k mod n` for signed `k`.
#[inline]
pub fn wrap(k: i64, n: usize) -> usize {
    k.rem_euclid(n as i64) as usize
}

/// Signed representative of a stored index: `0..n/2` maps to itself, `n/2..n` to negatives.
#[inline]
pub fn signed(i: usize, n: usize) -> i64 {
    if i < n / 2 {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

/// Flat offset of a (wrapped) multi-index.
pub fn flat_index(idx: &[i64], n: usize) -> usize {
    idx.iter().fold(0usize, |acc, &k| acc * n + wrap(k, n))
}

/// Per-axis stored indices of a flat offset.
pub fn unflatten(mut flat: usize, n: usize, d: usize, out: &mut [usize]) {
    for axis in (0..d).rev() {
        out[axis] = flat % n;
        flat /= n;
    }
}

/// In-place forward (`exp(-2 pi i k j / n)`) or unnormalized inverse FFT
/// along every axis of an `n^d` tensor.
pub fn fft_nd(data: &mut [Complex64], n: usize, d: usize, inverse: bool) {
    debug_assert_eq!(data.len(), n.pow(d as u32));
    let mut planner = FftPlanner::new();
    let fft = if inverse {
        planner.plan_fft_inverse(n)
    } else {
        planner.plan_fft_forward(n)
    };
    // Last axis is contiguous.
    data.par_chunks_mut(n).for_each(|lane| fft.process(lane));
    for axis in 0..d.saturating_sub(1) {
        let stride = n.pow((d - 1 - axis) as u32);
        let block = stride * n;
        data.par_chunks_mut(block).for_each(|chunk| {
            let mut lane = vec![Complex64::new(0.0, 0.0); n];
            for offset in 0..stride {
                for (j, v) in lane.iter_mut().enumerate() {
                    *v = chunk[offset + j * stride];
                }
                fft.process(&mut lane);
                for (j, v) in lane.iter().enumerate() {
                    chunk[offset + j * stride] = *v;
                }
            }
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_roundtrip() {
        let n = 8;
        for k in -4..4 {
            assert_eq!(signed(wrap(k, n), n), k);
        }
        let mut out = [0usize; 3];
        let f = flat_index(&[-1, 2, 0], n);
        unflatten(f, n, 3, &mut out);
        assert_eq!(out, [7, 2, 0]);
    }

    #[test]
    fn fft_2d_matches_direct_sum() {
        let n = 8;
        let data: Vec<Complex64> = (0..n * n)
            .map(|i| Complex64::new((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos()))
            .collect();
        let mut out = data.clone();
        fft_nd(&mut out, n, 2, false);
        for k0 in 0..n {
            for k1 in 0..n {
                let mut s = Complex64::new(0.0, 0.0);
                for j0 in 0..n {
                    for j1 in 0..n {
                        let ph = -2.0 * std::f64::consts::PI * ((k0 * j0 + k1 * j1) as f64) / n as f64;
                        s += data[j0 * n + j1] * Complex64::from_polar(1.0, ph);
                    }
                }
                assert!((s - out[k0 * n + k1]).norm() < 1e-12);
            }
        }
    }
}

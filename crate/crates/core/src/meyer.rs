//! Fourier profiles of the Meyer scaling function and wavelet.
//!
//! `phi^` is supported in `[-4pi/3, 4pi/3]`, `psi^` in `±[2pi/3, 8pi/3]`,
//! with the C^inf transition `smoothing_nu(x) = theta(x) / (theta(x) + theta(1 - x))`.
//! (This `nu` has nothing to do with the Matérn smoothness.)

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;

use crate::cutoff::bump_theta;
use crate::error::{domain, Result};

const TWO_PI_3: f64 = 2.0 * PI / 3.0;
const FOUR_PI_3: f64 = 4.0 * PI / 3.0;
const EIGHT_PI_3: f64 = 8.0 * PI / 3.0;

/// 0 for `x <= 0`, 1 for `x >= 1`, `nu(x) + nu(1 - x) = 1`.
pub fn smoothing_nu(x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let a = bump_theta(x);
    a / (a + bump_theta(1.0 - x))
}

pub fn meyer_scaling_hat(omega: f64) -> f64 {
    let a = omega.abs();
    if a <= TWO_PI_3 {
        1.0
    } else if a < FOUR_PI_3 {
        (FRAC_PI_2 * smoothing_nu(3.0 * a / (2.0 * PI) - 1.0)).cos()
    } else {
        0.0
    }
}

/// Modulus of `psi^`; real and even.
pub fn meyer_wavelet_modulus(omega: f64) -> f64 {
    let a = omega.abs();
    if a <= TWO_PI_3 || a > EIGHT_PI_3 {
        0.0
    } else if a <= FOUR_PI_3 {
        (FRAC_PI_2 * smoothing_nu(3.0 * a / (2.0 * PI) - 1.0)).sin()
    } else {
        (FRAC_PI_2 * smoothing_nu(3.0 * a / (4.0 * PI) - 1.0)).cos()
    }
}

/// `psi^(omega) = |psi^(omega)| exp(i omega / 2)`.
pub fn meyer_wavelet_hat(omega: f64) -> Complex64 {
    let m = meyer_wavelet_modulus(omega);
    if m == 0.0 {
        Complex64::new(0.0, 0.0)
    } else {
        Complex64::from_polar(m, 0.5 * omega)
    }
}

/// A wavelet type `eps in {0,1}^d \ {0}`: per axis, 0 selects the scaling
/// profile and 1 the wavelet profile.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct WaveletType(Vec<u8>);

impl WaveletType {
    pub fn new(bits: Vec<u8>) -> Result<Self> {
        if bits.is_empty() || bits.iter().any(|&b| b > 1) {
            return domain(format!("wavelet type must be a nonempty 0/1 vector, got {bits:?}"));
        }
        if bits.iter().all(|&b| b == 0) {
            return domain("wavelet type (0,...,0) is the scaling function, not a wavelet");
        }
        Ok(Self(bits))
    }

    /// All `2^d - 1` types in lexicographic order.
    pub fn all(d: usize) -> Vec<Self> {
        (1..(1usize << d))
            .map(|mask| Self((0..d).map(|axis| (mask >> (d - 1 - axis) & 1) as u8).collect()))
            .collect()
    }

    pub fn bits(&self) -> &[u8] {
        &self.0
    }

    pub fn d(&self) -> usize {
        self.0.len()
    }

    pub fn label(&self) -> String {
        self.0.iter().map(|b| b.to_string()).collect()
    }
}

/// The Meyer pair used to generate the wavelet system.
#[derive(Debug, Clone, Copy, Default)]
pub struct MeyerPair;

impl MeyerPair {
    pub const SCALING_SUPPORT: f64 = FOUR_PI_3;
    pub const WAVELET_SUPPORT: (f64, f64) = (TWO_PI_3, EIGHT_PI_3);

    pub fn scaling_hat(&self, omega: f64) -> f64 {
        meyer_scaling_hat(omega)
    }

    pub fn wavelet_hat(&self, omega: f64) -> Complex64 {
        meyer_wavelet_hat(omega)
    }

    /// Product over axes of `phi^` (`eps_i = 0`) or `psi^` (`eps_i = 1`).
    pub fn tensor_wavelet_hat(&self, eps: &WaveletType, omega: &[f64]) -> Result<Complex64> {
        if omega.len() != eps.d() {
            return domain(format!(
                "frequency has {} components, wavelet type has {}",
                omega.len(),
                eps.d()
            ));
        }
        Ok(tensor_hat(eps.bits(), omega))
    }
}

pub(crate) fn tensor_hat(bits: &[u8], omega: &[f64]) -> Complex64 {
    bits.iter()
        .zip(omega)
        .map(|(&b, &w)| {
            if b == 0 {
                Complex64::new(meyer_scaling_hat(w), 0.0)
            } else {
                meyer_wavelet_hat(w)
            }
        })
        .product()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smoothing_values() {
        assert_eq!(smoothing_nu(0.5), 0.5);
        assert_eq!(smoothing_nu(-1.0), 0.0);
        assert_eq!(smoothing_nu(2.0), 1.0);
        let expected = (-4f64).exp() / ((-4f64).exp() + (-4.0f64 / 3.0).exp());
        assert!((smoothing_nu(0.25) - expected).abs() < 1e-16);
        for i in 0..=100 {
            let x = i as f64 / 100.0;
            assert!((smoothing_nu(x) + smoothing_nu(1.0 - x) - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn scaling_values() {
        assert_eq!(meyer_scaling_hat(0.0), 1.0);
        assert!(meyer_scaling_hat(FOUR_PI_3).abs() < 1e-16);
        assert!((meyer_scaling_hat(PI) - 0.5f64.sqrt()).abs() < 1e-15);
        assert_eq!(meyer_scaling_hat(4.5), 0.0);
    }

    #[test]
    fn wavelet_values() {
        assert!((meyer_wavelet_hat(PI).norm() - 0.5f64.sqrt()).abs() < 1e-15);
        assert_eq!(meyer_wavelet_hat(PI / 2.0).norm(), 0.0);
        // second branch: 3|omega|/(4 pi) - 1 = 1/4
        let expected = (FRAC_PI_2 * smoothing_nu(0.25)).cos();
        assert!((meyer_wavelet_hat(5.0 * PI / 3.0).norm() - expected).abs() < 1e-15);
        assert_eq!(meyer_wavelet_hat(3.0 * PI).norm(), 0.0);
        let w = meyer_wavelet_hat(2.5);
        assert!((w.arg() - 1.25).abs() < 1e-14);
        assert_eq!(meyer_wavelet_hat(9.0).norm(), 0.0);
        // Hermitian: real mother wavelet
        assert!((meyer_wavelet_hat(-2.5) - w.conj()).norm() < 1e-15);
    }

    #[test]
    fn tensor_products() {
        let mp = MeyerPair;
        let e1 = WaveletType::new(vec![1]).unwrap();
        assert_eq!(mp.tensor_wavelet_hat(&e1, &[PI]).unwrap(), meyer_wavelet_hat(PI));
        let e10 = WaveletType::new(vec![1, 0]).unwrap();
        assert_eq!(
            mp.tensor_wavelet_hat(&e10, &[PI, 0.0]).unwrap(),
            meyer_wavelet_hat(PI)
        );
        assert!(WaveletType::new(vec![0, 0]).is_err());
        assert!(WaveletType::new(vec![2]).is_err());
        assert!(mp.tensor_wavelet_hat(&e10, &[PI]).is_err());
        let all: Vec<String> = WaveletType::all(2).iter().map(|e| e.label()).collect();
        assert_eq!(all, vec!["01", "10", "11"]);
    }

    #[test]
    fn partition_of_unity() {
        for i in 0..10_000 {
            let w = -FOUR_PI_3 + 2.0 * FOUR_PI_3 * i as f64 / 9999.0;
            let s = meyer_scaling_hat(w).powi(2) + meyer_wavelet_hat(w).norm_sqr();
            assert!((s - 1.0).abs() < 1e-12, "omega={w}");
        }
    }

    #[test]
    fn telescoping_sum() {
        let levels = 6;
        let top = (1u32 << levels) as f64 * FOUR_PI_3;
        for i in 0..5000 {
            let w = TWO_PI_3 + (top - TWO_PI_3) * i as f64 / 4999.0;
            for sign in [-1.0, 1.0] {
                let w = sign * w;
                let mut s = meyer_scaling_hat(w).powi(2);
                for l in 0..=levels {
                    s += meyer_wavelet_hat(w / (1u32 << l) as f64).norm_sqr();
                }
                assert!((s - 1.0).abs() < 1e-12, "omega={w}");
            }
        }
    }

    #[test]
    fn scaling_profile_smooth_across_joints() {
        // Difference quotients up to order 6 must not blow up when the step
        // shrinks across the joints at 2pi/3 and 4pi/3.
        fn diff(order: usize, x: f64, h: f64) -> f64 {
            let mut binom = 1.0;
            let mut acc = 0.0;
            for j in 0..=order {
                let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                acc += sign * binom * meyer_scaling_hat(x + (order as f64 / 2.0 - j as f64) * h);
                binom = binom * (order - j) as f64 / (j + 1) as f64;
            }
            acc / h.powi(order as i32)
        }
        for &joint in &[TWO_PI_3, FOUR_PI_3] {
            for order in 1..=6 {
                let probe = |h: f64| {
                    (0..41)
                        .map(|i| diff(order, joint + (i as f64 - 20.0) * h, h).abs())
                        .fold(0f64, f64::max)
                };
                let coarse = probe(0.02);
                let fine = probe(0.01);
                assert!(fine < 4.0 * coarse + 1.0, "order {order} at {joint}: {coarse} -> {fine}");
            }
        }
    }
}

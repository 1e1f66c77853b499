//! Smooth cutoff and the truncated covariance `k_t = k * phi`.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::kernel::StationaryKernel;

/// Geometry of the periodic continuation.
///
/// The computational domain sits in `[-delta/2, delta/2]^d`, the periodic
/// covariance agrees with `k` on `[-delta, delta]^d`, and the torus is
/// `[-gamma, gamma]^d`. The cutoff vanishes outside `[-kappa, kappa]^d`
/// with `kappa = 2 gamma - delta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DomainSpec {
    delta: f64,
    gamma: f64,
    d: usize,
}

impl DomainSpec {
    pub fn new(delta: f64, gamma: f64, d: usize) -> Result<Self> {
        if !(delta > 0.0 && delta.is_finite()) {
            return domain(format!("delta must be positive, got {delta}"));
        }
        if !(gamma > delta && gamma.is_finite()) {
            return domain(format!("gamma must exceed delta = {delta}, got {gamma}"));
        }
        if d == 0 {
            return domain("dimension must be positive");
        }
        Ok(Self { delta, gamma, d })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn kappa(&self) -> f64 {
        2.0 * self.gamma - self.delta
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// Whether `x` lies in the closed box `[-delta/2, delta/2]^d`.
    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.d && x.iter().all(|v| v.abs() <= 0.5 * self.delta)
    }
}

/// `exp(-1/x)` for `x > 0`, zero otherwise.
pub fn bump_theta(x: f64) -> f64 {
    if x > 0.0 {
        (-1.0 / x).exp()
    } else {
        0.0
    }
}

/// Univariate cutoff: 1 on `[-delta, delta]`, 0 outside `(-kappa, kappa)`.
pub fn cutoff_phi_1d(spec: &DomainSpec, x: f64) -> f64 {
    let (delta, kappa) = (spec.delta(), spec.kappa());
    let ax = x.abs();
    if ax <= delta {
        return 1.0;
    }
    if ax >= kappa {
        return 0.0;
    }
    let width = kappa - delta;
    let a = bump_theta((kappa - ax) / width);
    let b = bump_theta((ax - delta) / width);
    a / (a + b)
}

/// Tensor-product cutoff over the coordinates of `x`.
pub fn cutoff_phi(spec: &DomainSpec, x: &[f64]) -> f64 {
    x.iter().map(|&xi| cutoff_phi_1d(spec, xi)).product()
}

/// `k(x) phi(x)`.
pub fn truncated_cov<K: StationaryKernel + ?Sized>(k: &K, spec: &DomainSpec, x: &[f64]) -> f64 {
    let phi = cutoff_phi(spec, x);
    if phi == 0.0 {
        0.0
    } else {
        k.cov(x) * phi
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{Matern, MaternParams};

    fn spec() -> DomainSpec {
        // delta = 1, kappa = 2
        DomainSpec::new(1.0, 1.5, 1).unwrap()
    }

    #[test]
    fn theta_values() {
        assert!((bump_theta(1.0) - (-1f64).exp()).abs() < 1e-16);
        assert_eq!(bump_theta(0.0), 0.0);
        assert_eq!(bump_theta(-5.0), 0.0);
    }

    #[test]
    fn phi_values() {
        let s = spec();
        assert_eq!(s.kappa(), 2.0);
        assert_eq!(cutoff_phi_1d(&s, 0.5), 1.0);
        assert_eq!(cutoff_phi_1d(&s, 2.5), 0.0);
        assert!((cutoff_phi_1d(&s, 1.5) - 0.5).abs() < 1e-15);
        assert!((cutoff_phi(&s, &[-1.5]) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn spec_validation() {
        assert!(DomainSpec::new(1.0, 1.0, 1).is_err());
        assert!(DomainSpec::new(0.0, 1.0, 1).is_err());
        assert!(DomainSpec::new(1.0, 2.0, 0).is_err());
    }

    #[test]
    fn phi_even_bounded_monotone() {
        let s = DomainSpec::new(1.0, 1.3, 1).unwrap();
        let mut prev = 1.0;
        for i in 0..=4000 {
            let x = i as f64 * 1e-3;
            let v = cutoff_phi_1d(&s, x);
            assert_eq!(v, cutoff_phi_1d(&s, -x));
            assert!((0.0..=1.0).contains(&v));
            assert!(v <= prev);
            prev = v;
        }
    }

    #[test]
    fn phi_finite_differences_stay_bounded() {
        // 4th-order central differences near both transition points, for
        // shrinking steps: a jump in any derivative up to order 4 would make
        // some difference quotient blow up like h^{-1}.
        let s = spec();
        let d4 = |x: f64, h: f64| {
            let f = |t: f64| cutoff_phi_1d(&s, t);
            (f(x + 2.0 * h) - 4.0 * f(x + h) + 6.0 * f(x) - 4.0 * f(x - h) + f(x - 2.0 * h))
                / h.powi(4)
        };
        for &x0 in &[1.0, 2.0] {
            let sup = |h: f64| {
                (0..=400)
                    .map(|i| d4(x0 + (i as f64 - 200.0) * 5e-4, h).abs())
                    .fold(0f64, f64::max)
            };
            let sups: Vec<f64> = [1e-2, 5e-3, 2.5e-3].iter().map(|&h| sup(h)).collect();
            for w in sups.windows(2) {
                assert!(w[1] < 1.5 * w[0] + 1.0, "x0={x0} sups={sups:?}");
            }
        }
    }

    #[test]
    fn truncated_kernel() {
        let k = Matern::new(MaternParams::new(0.5, 1.0, 1).unwrap());
        let s = spec();
        assert_eq!(truncated_cov(&k, &s, &[0.0]), 1.0);
        assert_eq!(truncated_cov(&k, &s, &[3.0]), 0.0);
        assert!((truncated_cov(&k, &s, &[0.8]) - (-0.8f64).exp()).abs() < 1e-14);
        for i in 0..300 {
            let x = i as f64 * 0.01;
            let kt = truncated_cov(&k, &s, &[x]);
            assert_eq!(kt, truncated_cov(&k, &s, &[-x]));
            assert!(kt <= k.cov(&[x]));
        }
    }
}

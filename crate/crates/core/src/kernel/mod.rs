//! Stationary covariance kernels and their spectral densities.
//!
//! The Fourier convention throughout the crate is
//! `f^(omega) = int f(x) exp(-i x . omega) dx`.

mod bessel;

pub use bessel::{bessel_k, bessel_k_scaled, gamma, ln_gamma};

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// An even covariance `k(x)` on `R^d` with a non-negative spectral density.
pub trait StationaryKernel: Send + Sync {
    fn dim(&self) -> usize;
    fn cov(&self, x: &[f64]) -> f64;
    fn spectral(&self, omega: &[f64]) -> f64;
    /// Exponent `r` in `k^(omega) <= C (1 + |omega|^2)^(-r)`.
    fn decay_exponent(&self) -> f64;
}

/// Matérn parameters: smoothness `nu`, correlation length `lambda`, dimension `d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaternParams {
    nu: f64,
    lambda: f64,
    d: usize,
}

impl MaternParams {
    pub fn new(nu: f64, lambda: f64, d: usize) -> Result<Self> {
        if !(nu > 0.0 && nu.is_finite()) {
            return domain(format!("matern: nu must be positive, got {nu}"));
        }
        if !(lambda > 0.0 && lambda.is_finite()) {
            return domain(format!("matern: lambda must be positive, got {lambda}"));
        }
        if !(1..=3).contains(&d) {
            return domain(format!("matern: dimension must be 1, 2 or 3, got {d}"));
        }
        Ok(Self { nu, lambda, d })
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// `r = nu + d/2`.
    pub fn r(&self) -> f64 {
        self.nu + self.d as f64 / 2.0
    }
}

/// The Matérn covariance
/// `k(x) = 2^(1-nu)/Gamma(nu) (sqrt(2 nu)|x|/lambda)^nu K_nu(sqrt(2 nu)|x|/lambda)`.
#[derive(Debug, Clone, Copy)]
pub struct Matern {
    params: MaternParams,
    /// `ln(2^(1-nu) / Gamma(nu))`
    ln_norm: f64,
    /// `c_{nu,lambda}` of the spectral density.
    spectral_const: f64,
}

impl Matern {
    pub fn new(params: MaternParams) -> Self {
        let MaternParams { nu, lambda, d } = params;
        let df = d as f64;
        let ln_norm = (1.0 - nu) * std::f64::consts::LN_2 - ln_gamma(nu);
        let ln_c = df * std::f64::consts::LN_2
            + 0.5 * df * std::f64::consts::PI.ln()
            + ln_gamma(nu + df / 2.0)
            + nu * (2.0 * nu).ln()
            - ln_gamma(nu)
            - 2.0 * nu * lambda.ln();
        Self {
            params,
            ln_norm,
            spectral_const: ln_c.exp(),
        }
    }

    pub fn params(&self) -> &MaternParams {
        &self.params
    }

    /// Covariance as a function of the distance `|x|`.
    pub fn cov_radial(&self, dist: f64) -> f64 {
        let dist = dist.abs();
        if dist == 0.0 {
            return 1.0;
        }
        let nu = self.params.nu;
        let z = (2.0 * nu).sqrt() * dist / self.params.lambda;
        // z^nu K_nu(z) = exp(nu ln z - z) * (e^z K_nu(z))
        let scaled = bessel_k_scaled(nu, z).expect("positive order and argument");
        let v = (self.ln_norm + nu * z.ln() - z).exp() * scaled;
        // K_nu overflows only where k is 1 to machine precision.
        if v.is_finite() {
            v
        } else {
            1.0
        }
    }

    /// Spectral density as a function of `|omega|^2`.
    pub fn spectral_sq(&self, omega_sq: f64) -> f64 {
        let p = &self.params;
        self.spectral_const * (2.0 * p.nu / (p.lambda * p.lambda) + omega_sq).powf(-p.r())
    }
}

impl StationaryKernel for Matern {
    fn dim(&self) -> usize {
        self.params.d
    }

    fn cov(&self, x: &[f64]) -> f64 {
        self.cov_radial(norm(x))
    }

    fn spectral(&self, omega: &[f64]) -> f64 {
        self.spectral_sq(omega.iter().map(|w| w * w).sum())
    }

    fn decay_exponent(&self) -> f64 {
        self.params.r()
    }
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

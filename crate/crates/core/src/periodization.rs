//! Trapezoidal/FFT approximation of the spectrum of the truncated kernel,
//! positivity checking, and the minimal admissible torus half-width.
//!
//! For half-period `L` and `N = 2^J` points, `h = 2L/N`, `x_n = n h` and
//!
//! ```text
//! D_{L,N}(omega_k) = h * sum_{n=-N/2}^{N/2-1} k_t(x_n) exp(-i omega_k x_n),   omega_k = pi k / L,
//! ```
//!
//! taken per axis in `d > 1`. With the fixed choice `L = 2 gamma`, the periodic
//! Fourier coefficients are `c_n(k_p) = k_t^(pi n / gamma) ~ D_{L,N}(omega_{2n})`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::cutoff::{truncated_cov, DomainSpec};
use crate::error::{domain, Error, Result};
use crate::grid::{fft_nd, flat_index, signed, unflatten, wrap};
use crate::kernel::StationaryKernel;

/// Relative threshold separating round-off negatives from genuine ones.
pub const DEFAULT_POSITIVITY_TOL: f64 = 1e-12;
/// Default grid size per axis in one dimension.
pub const DEFAULT_N_1D: usize = 1 << 14;
/// Default grid size per axis in two (or more) dimensions.
pub const DEFAULT_N_2D: usize = 1 << 10;
/// Smallest accepted grid size.
pub const MIN_N: usize = 1 << 6;

/// Grid values of `D_{L,N}` with their positivity status.
#[derive(Debug, Clone)]
pub struct SpectralTable {
    half_period: f64,
    n: usize,
    d: usize,
    spec: DomainSpec,
    /// Symmetrized values before clamping, stored at `k mod N` per axis.
    raw: Vec<f64>,
    /// Values after clamping round-off negatives to zero.
    values: Vec<f64>,
    min_value: f64,
    max_value: f64,
    clamped_count: usize,
    max_imag_residue: f64,
}

/// Outcome of a positivity check on a table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PositivityReport {
    pub min: f64,
    pub max: f64,
    pub tol: f64,
    pub pass: bool,
}

fn check_grid_size(n: usize) -> Result<()> {
    if !n.is_power_of_two() || n < MIN_N {
        return Err(Error::Config(format!(
            "grid size must be a power of two >= {MIN_N}, got {n}"
        )));
    }
    Ok(())
}

/// `D_{L,N}` with the standard half-period `L = 2 gamma`.
pub fn spectral_grid<K: StationaryKernel + ?Sized>(
    k: &K,
    spec: &DomainSpec,
    n: usize,
) -> Result<SpectralTable> {
    spectral_grid_with_half_period(k, spec, n, 2.0 * spec.gamma())
}

/// `D_{L,N}` for an explicit half-period `L > kappa`.
pub fn spectral_grid_with_half_period<K: StationaryKernel + ?Sized>(
    k: &K,
    spec: &DomainSpec,
    n: usize,
    half_period: f64,
) -> Result<SpectralTable> {
    check_grid_size(n)?;
    if k.dim() != spec.d() {
        return Err(Error::Config(format!(
            "kernel dimension {} differs from domain dimension {}",
            k.dim(),
            spec.d()
        )));
    }
    if !(half_period > spec.kappa()) {
        return domain(format!(
            "half-period L = {half_period} must exceed kappa = {} so that supp k_t lies in [-L, L]",
            spec.kappa()
        ));
    }
    let d = spec.d();
    let h = 2.0 * half_period / n as f64;
    let total = n.pow(d as u32);

    let mut samples: Vec<Complex64> = (0..total)
        .into_par_iter()
        .map(|flat| {
            let mut idx = vec![0usize; d];
            unflatten(flat, n, d, &mut idx);
            let x: Vec<f64> = idx.iter().map(|&i| signed(i, n) as f64 * h).collect();
            Complex64::new(truncated_cov(k, spec, &x), 0.0)
        })
        .collect();
    fft_nd(&mut samples, n, d, false);

    let scale = h.powi(d as i32);
    let max_abs = samples.iter().map(|c| c.norm()).fold(0.0, f64::max) * scale;
    let max_imag = samples.iter().map(|c| c.im.abs()).fold(0.0, f64::max) * scale;
    let unsym: Vec<f64> = samples.iter().map(|c| c.re * scale).collect();
    let raw = symmetrize(&unsym, n, d);
    Ok(SpectralTable::from_raw(
        spec,
        half_period,
        n,
        raw,
        if max_abs > 0.0 { max_imag / max_abs } else { 0.0 },
    ))
}

/// Average over all axis reflections `k_i -> -k_i`.
fn symmetrize(values: &[f64], n: usize, d: usize) -> Vec<f64> {
    let reflections = 1usize << d;
    (0..values.len())
        .into_par_iter()
        .map(|flat| {
            let mut idx = vec![0usize; d];
            unflatten(flat, n, d, &mut idx);
            // Sum in the same order for every member of a reflection orbit
            // so that the result is exactly even.
            let canonical: Vec<i64> = idx.iter().map(|&i| signed(i, n).abs()).collect();
            let mut acc = 0.0;
            let mut signed_idx = vec![0i64; d];
            for mask in 0..reflections {
                for axis in 0..d {
                    let k = canonical[axis];
                    signed_idx[axis] = if mask >> axis & 1 == 1 { -k } else { k };
                }
                acc += values[flat_index(&signed_idx, n)];
            }
            acc / reflections as f64
        })
        .collect()
}

impl SpectralTable {
    fn from_raw(spec: &DomainSpec, half_period: f64, n: usize, raw: Vec<f64>, imag: f64) -> Self {
        let max_value = raw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min_value = raw.iter().copied().fold(f64::INFINITY, f64::min);
        let threshold = -DEFAULT_POSITIVITY_TOL * max_value.abs();
        let mut clamped_count = 0;
        let values = raw
            .iter()
            .map(|&v| {
                if v < 0.0 && v >= threshold {
                    clamped_count += 1;
                    0.0
                } else {
                    v
                }
            })
            .collect();
        Self {
            half_period,
            n,
            d: spec.d(),
            spec: *spec,
            raw,
            values,
            min_value,
            max_value,
            clamped_count,
            max_imag_residue: imag,
        }
    }

    /// A table with prescribed values already in storage order, e.g. a constant
    /// table of ones, which turns the filtered wavelets back into the plain
    /// periodic Meyer basis.
    pub fn from_values(spec: &DomainSpec, n: usize, values: Vec<f64>) -> Result<Self> {
        check_grid_size(n)?;
        if values.len() != n.pow(spec.d() as u32) {
            return Err(Error::Config(format!(
                "expected {} values, got {}",
                n.pow(spec.d() as u32),
                values.len()
            )));
        }
        let raw = symmetrize(&values, n, spec.d());
        Ok(Self::from_raw(spec, 2.0 * spec.gamma(), n, raw, 0.0))
    }

    /// Constant table, see [`SpectralTable::from_values`].
    pub fn constant(spec: &DomainSpec, n: usize, value: f64) -> Result<Self> {
        Self::from_values(spec, n, vec![value; n.pow(spec.d() as u32)])
    }

    pub fn half_period(&self) -> f64 {
        self.half_period
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn gamma(&self) -> f64 {
        self.spec.gamma()
    }

    pub fn spec(&self) -> &DomainSpec {
        &self.spec
    }

    pub fn min_value(&self) -> f64 {
        self.min_value
    }

    pub fn max_value(&self) -> f64 {
        self.max_value
    }

    pub fn clamped_count(&self) -> usize {
        self.clamped_count
    }

    /// Largest discarded imaginary part relative to the largest modulus.
    pub fn max_imag_residue(&self) -> f64 {
        self.max_imag_residue
    }

    /// Frequency `pi k / L` of a signed grid index.
    pub fn omega(&self, k: i64) -> f64 {
        std::f64::consts::PI * k as f64 / self.half_period
    }

    /// Clamped value at a signed multi-index (wrapped mod `N`).
    pub fn value(&self, k: &[i64]) -> f64 {
        self.values[flat_index(k, self.n)]
    }

    /// Unclamped value at a signed multi-index.
    pub fn raw_value(&self, k: &[i64]) -> f64 {
        self.raw[flat_index(k, self.n)]
    }

    /// Clamped values in storage order.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// 1D convenience: `(k, omega_k, value)` for `k = -N/2..N/2-1`.
    pub fn rows_1d(&self) -> Vec<(i64, f64, f64)> {
        let half = (self.n / 2) as i64;
        (-half..half)
            .map(|k| (k, self.omega(k), self.values[wrap(k, self.n)]))
            .collect()
    }

    pub fn positivity(&self) -> PositivityReport {
        check_positivity(self, DEFAULT_POSITIVITY_TOL)
    }

    pub fn is_positive(&self) -> bool {
        self.positivity().pass
    }

    pub(crate) fn require_positive(&self) -> Result<()> {
        let r = self.positivity();
        if r.pass {
            Ok(())
        } else {
            Err(Error::NotPositive {
                min: r.min,
                max: r.max,
                tol: r.tol,
            })
        }
    }
}

/// Pass iff the smallest raw value is at least `-tol * max`.
pub fn check_positivity(t: &SpectralTable, tol: f64) -> PositivityReport {
    let min = t.min_value;
    let max = t.max_value;
    PositivityReport {
        min,
        max,
        tol,
        pass: min >= -tol * max.abs(),
    }
}

/// Approximation of `c_n(k_p)`: the clamped value at index `2n`.
pub fn kp_fourier_coeff(t: &SpectralTable, n: &[i64]) -> Result<f64> {
    if n.len() != t.d {
        return domain(format!("index has {} components, table has {}", n.len(), t.d));
    }
    let limit = (t.n / 4) as i64;
    if n.iter().any(|m| m.abs() > limit) {
        return domain(format!("index {n:?} outside |n| <= N/4 = {limit}"));
    }
    let doubled: Vec<i64> = n.iter().map(|m| 2 * m).collect();
    Ok(t.value(&doubled))
}

/// Result of the bisection search for `gamma_min`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct GammaMin {
    /// Upper end of the final bracket: a grid-positive half-width.
    pub gamma: f64,
    /// Lower end of the final bracket (grid-negative, unless equal to the start).
    pub lower: f64,
    pub evaluations: usize,
}

/// Upper bracket limit in units of `delta`.
pub const GAMMA_SEARCH_LIMIT: f64 = 1024.0;

/// Smallest torus half-width (to within `gtol`) whose sampled spectrum
/// passes the positivity check on the grid.
pub fn find_gamma_min<K: StationaryKernel + ?Sized>(
    k: &K,
    delta: f64,
    n: usize,
    gtol: f64,
) -> Result<GammaMin> {
    if !(gtol > 0.0) {
        return domain(format!("gtol must be positive, got {gtol}"));
    }
    check_grid_size(n)?;
    let d = k.dim();
    let mut evaluations = 0;
    let mut positive = |gamma: f64| -> Result<bool> {
        evaluations += 1;
        let spec = DomainSpec::new(delta, gamma, d)?;
        Ok(spectral_grid(k, &spec, n)?.is_positive())
    };

    let start = delta * (1.0 + 1e-3);
    if positive(start)? {
        return Ok(GammaMin {
            gamma: start,
            lower: start,
            evaluations,
        });
    }
    let mut lo = start;
    let mut hi = 2.0 * delta;
    while !positive(hi)? {
        lo = hi;
        hi *= 2.0;
        if hi > GAMMA_SEARCH_LIMIT * delta {
            return Err(Error::GammaSearch { upper: lo });
        }
    }
    while hi - lo > gtol {
        let mid = 0.5 * (lo + hi);
        if positive(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(GammaMin {
        gamma: hi,
        lower: lo,
        evaluations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{Matern, MaternParams};

    fn matern(nu: f64, lambda: f64, d: usize) -> Matern {
        Matern::new(MaternParams::new(nu, lambda, d).unwrap())
    }

    #[test]
    fn grid_size_validation() {
        let k = matern(0.5, 1.0, 1);
        let spec = DomainSpec::new(1.0, 1.5, 1).unwrap();
        assert!(matches!(spectral_grid(&k, &spec, 1000), Err(Error::Config(_))));
        assert!(matches!(spectral_grid(&k, &spec, 32), Err(Error::Config(_))));
        assert!(matches!(
            spectral_grid_with_half_period(&k, &spec, 1024, 1.9),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn values_even_and_real() {
        let k = matern(0.5, 1.0, 1);
        let spec = DomainSpec::new(1.0, 1.5, 1).unwrap();
        let t = spectral_grid(&k, &spec, 1 << 12).unwrap();
        assert_eq!(t.half_period(), 3.0);
        assert!(t.max_imag_residue() < 1e-12);
        for kk in 1..(1 << 11) {
            assert_eq!(t.value(&[kk]), t.value(&[-kk]));
        }
    }

    #[test]
    fn fourier_coeff_indexing() {
        let k = matern(0.5, 1.0, 1);
        let spec = DomainSpec::new(1.0, 1.5, 1).unwrap();
        let t = spectral_grid(&k, &spec, 1 << 10).unwrap();
        assert_eq!(kp_fourier_coeff(&t, &[0]).unwrap(), t.value(&[0]));
        assert_eq!(kp_fourier_coeff(&t, &[5]).unwrap(), t.value(&[10]));
        assert_eq!(
            kp_fourier_coeff(&t, &[7]).unwrap(),
            kp_fourier_coeff(&t, &[-7]).unwrap()
        );
        assert!(kp_fourier_coeff(&t, &[256]).is_ok());
        assert!(kp_fourier_coeff(&t, &[257]).is_err());
        assert!(kp_fourier_coeff(&t, &[0, 0]).is_err());
    }

    #[test]
    fn sharp_cutoff_fails_positivity() {
        let k = matern(4.0, 1.0, 1);
        let spec = DomainSpec::new(1.0, 1.05, 1).unwrap();
        let t = spectral_grid(&k, &spec, 1 << 14).unwrap();
        assert!(!t.is_positive());
        assert!(t.require_positive().is_err());
    }

    #[test]
    fn constant_table() {
        let spec = DomainSpec::new(1.0, 1.5, 2).unwrap();
        let t = SpectralTable::constant(&spec, 64, 1.0).unwrap();
        assert!(t.is_positive());
        assert_eq!(t.value(&[3, -5]), 1.0);
        assert_eq!(t.clamped_count(), 0);
    }

    #[test]
    fn two_dimensional_table() {
        let k = matern(1.0, 0.5, 2);
        let spec = DomainSpec::new(1.0, 1.5, 2).unwrap();
        let t = spectral_grid(&k, &spec, 128).unwrap();
        assert!(t.max_imag_residue() < 1e-12);
        assert_eq!(t.value(&[3, 5]), t.value(&[-3, 5]));
        assert_eq!(t.value(&[3, 5]), t.value(&[3, -5]));
        // isotropic kernel, separable cutoff: symmetric under axis swap
        assert!((t.value(&[3, 5]) - t.value(&[5, 3])).abs() < 1e-12);
    }

    #[test]
    fn gamma_search_rejects_bad_tolerance() {
        let k = matern(0.5, 1.0, 1);
        assert!(find_gamma_min(&k, 1.0, 1 << 10, 0.0).is_err());
    }
}

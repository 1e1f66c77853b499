//! Filtered periodic Meyer wavelets.
//!
//! The level-`l` mother of type `eps` on the torus `[-gamma, gamma]^d` is
//!
//! ```text
//! Psi_{eps,l,0}(x) = (2^(l+1) gamma)^(-d/2) sum_n sqrt(D(omega_{2n})) prod_i hat_{eps_i}(2^(1-l) pi n_i) exp(i pi n.x / gamma)
//! ```
//!
//! with `n_i` in `-N/4..N/4`, evaluated by an inverse FFT of size `M = N/2`
//! per axis on the grid `x_k = 4 gamma k / N`. Translates by
//! `2 gamma 2^(-l) n` are shifts by `n 2^(J-1-l)` grid points.

use rayon::prelude::*;
use serde::Serialize;

use num_complex::Complex64;

use crate::cutoff::DomainSpec;
use crate::error::{domain, Error, Result};
use crate::fit::fit_log_log;
use crate::grid::{fft_nd, flat_index, signed, unflatten, wrap};
use crate::meyer::{tensor_hat, WaveletType};
use crate::periodization::SpectralTable;

/// Default interpolation order (cubic, 4 nodes per axis).
pub const DEFAULT_INTERP_ORDER: usize = 3;

/// Values on a uniform periodic tensor grid `x_k = k * spacing`,
/// `k = -m/2..m/2`, stored at `k mod m` per axis.
#[derive(Debug, Clone)]
pub struct GridFunction {
    m: usize,
    d: usize,
    spacing: f64,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(m: usize, d: usize, spacing: f64, values: Vec<f64>) -> Result<Self> {
        if !m.is_power_of_two() || m < 2 {
            return Err(Error::Config(format!("grid length must be a power of two, got {m}")));
        }
        if values.len() != m.pow(d as u32) {
            return Err(Error::Config(format!(
                "expected {} grid values, got {}",
                m.pow(d as u32),
                values.len()
            )));
        }
        if !(spacing > 0.0) {
            return domain(format!("grid spacing must be positive, got {spacing}"));
        }
        Ok(Self { m, d, spacing, values })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn period(&self) -> f64 {
        self.spacing * self.m as f64
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn coord(&self, k: i64) -> f64 {
        k as f64 * self.spacing
    }

    /// Value at a signed (wrapped) grid multi-index.
    pub fn at(&self, k: &[i64]) -> f64 {
        self.values[flat_index(k, self.m)]
    }

    /// 1D convenience: `(x_k, value)` for `k = -m/2..m/2`.
    pub fn rows_1d(&self) -> Vec<(f64, f64)> {
        let half = (self.m / 2) as i64;
        (-half..half).map(|k| (self.coord(k), self.at(&[k]))).collect()
    }

    /// Tensor Lagrange interpolation of odd `order` at a periodic point,
    /// offset by `shift` grid points per axis. Points within `1e-9` grid
    /// spacings of a node return the node value.
    pub fn interpolate_shifted(&self, x: &[f64], shift: &[i64], order: usize) -> f64 {
        let stencils: Vec<Vec<(i64, f64)>> = x
            .iter()
            .zip(shift)
            .map(|(&xi, &s)| stencil(xi / self.spacing, order, s))
            .collect();
        let widths: Vec<usize> = stencils.iter().map(Vec::len).collect();
        let count: usize = widths.iter().product();
        let mut idx = vec![0i64; self.d];
        let mut acc = 0.0;
        for c in 0..count {
            let mut rem = c;
            let mut w = 1.0;
            for axis in (0..self.d).rev() {
                let (k, wk) = stencils[axis][rem % widths[axis]];
                rem /= widths[axis];
                idx[axis] = k;
                w *= wk;
            }
            acc += w * self.at(&idx);
        }
        acc
    }

    pub fn interpolate(&self, x: &[f64], order: usize) -> f64 {
        self.interpolate_shifted(x, &vec![0; self.d], order)
    }
}

/// Nodes and Lagrange weights around fractional grid position `t`, shifted
/// back by `shift` nodes.
fn stencil(t: f64, order: usize, shift: i64) -> Vec<(i64, f64)> {
    let base = t.floor();
    let frac = t - base;
    let base = base as i64 - shift;
    if frac < 1e-9 {
        return vec![(base, 1.0)];
    }
    if frac > 1.0 - 1e-9 {
        return vec![(base + 1, 1.0)];
    }
    let lo = -((order as i64 - 1) / 2);
    let nodes: Vec<i64> = (lo..=lo + order as i64).collect();
    nodes
        .iter()
        .map(|&a| {
            let w = nodes
                .iter()
                .filter(|&&b| b != a)
                .map(|&b| (frac - b as f64) / (a - b) as f64)
                .product();
            (base + a, w)
        })
        .collect()
}

/// `(2 gamma)^(-d/2) sqrt(c_0(k_p))`, the coefficient-free scaling term.
pub fn scaling_constant(t: &SpectralTable) -> f64 {
    let zero = vec![0i64; t.d()];
    (2.0 * t.gamma()).powf(-(t.d() as f64) / 2.0) * t.value(&zero).max(0.0).sqrt()
}

/// Highest level whose wavelet band `|n| <= (4/3) 2^l` fits in `|n| <= N/4`.
pub fn max_level_for_grid(n: usize) -> usize {
    let mut l = 0;
    while 4.0 * 2f64.powi(l as i32 + 1) / 3.0 <= (n / 4) as f64 {
        l += 1;
    }
    l
}

/// A synthesized mother function and its discarded imaginary part relative
/// to the largest modulus.
#[derive(Debug, Clone)]
pub struct Synthesis {
    pub grid: GridFunction,
    pub imag_residue: f64,
}

pub fn synthesize_wavelet(t: &SpectralTable, eps: &WaveletType, level: usize) -> Result<Synthesis> {
    t.require_positive()?;
    if eps.d() != t.d() {
        return domain(format!(
            "wavelet type has dimension {}, table has {}",
            eps.d(),
            t.d()
        ));
    }
    let n = t.n();
    if level >= 60 || 4.0 * 2f64.powi(level as i32) / 3.0 > (n / 4) as f64 {
        return domain(format!(
            "level {level} exceeds the highest level {} resolvable with N = {n}",
            max_level_for_grid(n)
        ));
    }
    let d = t.d();
    let m = n / 2;
    let gamma = t.gamma();
    let freq_scale = 2f64.powi(1 - level as i32) * std::f64::consts::PI;

    let mut coeffs: Vec<Complex64> = (0..m.pow(d as u32))
        .into_par_iter()
        .map(|flat| {
            let mut idx = vec![0usize; d];
            unflatten(flat, m, d, &mut idx);
            let nn: Vec<i64> = idx.iter().map(|&i| signed(i, m)).collect();
            let omega: Vec<f64> = nn.iter().map(|&k| freq_scale * k as f64).collect();
            let hat = tensor_hat(eps.bits(), &omega);
            if hat.norm_sqr() == 0.0 {
                return Complex64::new(0.0, 0.0);
            }
            let doubled: Vec<i64> = nn.iter().map(|&k| 2 * k).collect();
            hat * t.value(&doubled).max(0.0).sqrt()
        })
        .collect();
    fft_nd(&mut coeffs, m, d, true);

    let norm = (2f64.powi(level as i32 + 1) * gamma).powf(-(d as f64) / 2.0);
    let max_abs = coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max) * norm;
    let max_imag = coeffs.iter().map(|c| c.im.abs()).fold(0.0, f64::max) * norm;
    let values = coeffs.iter().map(|c| c.re * norm).collect();
    Ok(Synthesis {
        grid: GridFunction::new(m, d, 2.0 * gamma / m as f64, values)?,
        imag_residue: if max_abs > 0.0 { max_imag / max_abs } else { 0.0 },
    })
}

/// Points at which [`WaveletFamily::level_sum`] maximizes.
#[derive(Debug, Clone)]
pub enum ProbeGrid {
    /// Every node of the synthesis grid.
    Synthesis,
    /// Arbitrary points, evaluated by interpolation.
    Points(Vec<Vec<f64>>),
}

/// Envelope fit `|F(x)| ~ C (1 + |x - c|)^(-M)` of a rescaled mother.
#[derive(Debug, Clone, Serialize)]
pub struct DecayFit {
    pub level: usize,
    pub eps: String,
    pub m_fit: f64,
    pub intercept: f64,
    pub residual: f64,
    pub sup_abs: f64,
    pub points: usize,
}

/// Mother functions for every type and every level `0..=max_level`.
#[derive(Debug, Clone)]
pub struct WaveletFamily {
    spec: DomainSpec,
    gamma: f64,
    d: usize,
    n: usize,
    max_level: usize,
    interp_order: usize,
    scaling_constant: f64,
    types: Vec<WaveletType>,
    /// `mothers[level][type index]`
    mothers: Vec<Vec<GridFunction>>,
    imag_residue: f64,
}

impl WaveletFamily {
    pub fn new(t: &SpectralTable, max_level: usize, interp_order: usize) -> Result<Self> {
        check_interp_order(interp_order)?;
        t.require_positive()?;
        let types = WaveletType::all(t.d());
        let jobs: Vec<(usize, usize)> = (0..=max_level)
            .flat_map(|l| (0..types.len()).map(move |e| (l, e)))
            .collect();
        let synths: Vec<Synthesis> = jobs
            .par_iter()
            .map(|&(l, e)| synthesize_wavelet(t, &types[e], l))
            .collect::<Result<_>>()?;
        let imag_residue = synths.iter().map(|s| s.imag_residue).fold(0.0, f64::max);
        let mut it = synths.into_iter();
        let mothers = (0..=max_level)
            .map(|_| (0..types.len()).map(|_| it.next().unwrap().grid).collect())
            .collect();
        Ok(Self {
            spec: *t.spec(),
            gamma: t.gamma(),
            d: t.d(),
            n: t.n(),
            max_level,
            interp_order,
            scaling_constant: scaling_constant(t),
            types,
            mothers,
            imag_residue,
        })
    }

    /// A family assembled from given mother grids (`mothers[level][type]`),
    /// with types ordered as [`WaveletType::all`].
    pub fn from_grids(
        spec: DomainSpec,
        scaling_constant: f64,
        mothers: Vec<Vec<GridFunction>>,
        interp_order: usize,
    ) -> Result<Self> {
        check_interp_order(interp_order)?;
        let first = mothers
            .first()
            .and_then(|row| row.first())
            .ok_or_else(|| Error::Config("no mother grids given".into()))?;
        let (m, d) = (first.m(), first.d());
        let types = WaveletType::all(d);
        for row in &mothers {
            if row.len() != types.len() || row.iter().any(|g| g.m() != m || g.d() != d) {
                return Err(Error::Config("mother grids have inconsistent shapes".into()));
            }
        }
        let max_level = mothers.len() - 1;
        if (1usize << (max_level + 1)) > m {
            return domain(format!("grid of {m} points cannot hold level {max_level} translates"));
        }
        if d != spec.d() {
            return Err(Error::Config("mother grids and domain differ in dimension".into()));
        }
        Ok(Self {
            spec,
            gamma: spec.gamma(),
            d,
            n: 2 * m,
            max_level,
            interp_order,
            scaling_constant,
            types,
            mothers,
            imag_residue: 0.0,
        })
    }

    pub fn spec(&self) -> &DomainSpec {
        &self.spec
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn max_level(&self) -> usize {
        self.max_level
    }

    pub fn interp_order(&self) -> usize {
        self.interp_order
    }

    pub fn scaling_constant(&self) -> f64 {
        self.scaling_constant
    }

    pub fn types(&self) -> &[WaveletType] {
        &self.types
    }

    /// Largest relative imaginary residue over all syntheses.
    pub fn imag_residue(&self) -> f64 {
        self.imag_residue
    }

    /// Grid points per axis of the stored mothers.
    pub fn grid_len(&self) -> usize {
        self.n / 2
    }

    /// Number of basis functions up to and including `level`, counting the
    /// scaling constant.
    pub fn basis_count(&self, level: usize) -> usize {
        1 + (0..=level)
            .map(|l| self.types.len() << (self.d * l))
            .sum::<usize>()
    }

    fn type_index(&self, eps: &WaveletType) -> Result<usize> {
        self.types
            .iter()
            .position(|e| e == eps)
            .ok_or_else(|| Error::Domain(format!("wavelet type {} has wrong dimension", eps.label())))
    }

    pub fn mother(&self, eps: &WaveletType, level: usize) -> Result<&GridFunction> {
        if level > self.max_level {
            return domain(format!(
                "level {level} not synthesized (max {})",
                self.max_level
            ));
        }
        Ok(&self.mothers[level][self.type_index(eps)?])
    }

    /// Grid points per translation step at `level`.
    fn stride(&self, level: usize) -> usize {
        self.grid_len() >> level
    }

    fn check_shift(&self, level: usize, shift: &[i64]) -> Result<()> {
        let count = 1i64 << level;
        if shift.len() != self.d || shift.iter().any(|&s| s < 0 || s >= count) {
            return domain(format!(
                "shift {shift:?} outside {{0..{}}}^{}",
                count - 1,
                self.d
            ));
        }
        Ok(())
    }

    /// `Psi_{eps,l,n}(x) = Psi_{eps,l,0}(x - 2 gamma 2^(-l) n)`, periodic in `x`.
    pub fn eval_wavelet(&self, eps: &WaveletType, level: usize, shift: &[i64], x: &[f64]) -> Result<f64> {
        let g = self.mother(eps, level)?;
        self.check_shift(level, shift)?;
        if x.len() != self.d {
            return domain(format!("point has {} coordinates, expected {}", x.len(), self.d));
        }
        let s = self.stride(level) as i64;
        let offset: Vec<i64> = shift.iter().map(|&n| n * s).collect();
        Ok(g.interpolate_shifted(x, &offset, self.interp_order))
    }

    /// Translate evaluated at a grid multi-index, without interpolation.
    pub fn eval_on_grid(&self, eps: &WaveletType, level: usize, shift: &[i64], k: &[i64]) -> Result<f64> {
        let g = self.mother(eps, level)?;
        self.check_shift(level, shift)?;
        let s = self.stride(level) as i64;
        let idx: Vec<i64> = k.iter().zip(shift).map(|(&ki, &n)| ki - n * s).collect();
        Ok(g.at(&idx))
    }

    /// All translates of every type at `level`, in (type, shift) order.
    pub fn translates(&self, level: usize) -> Vec<(WaveletType, Vec<i64>)> {
        let side = 1usize << level;
        let mut idx = vec![0usize; self.d];
        let mut out = Vec::new();
        for eps in &self.types {
            for flat in 0..side.pow(self.d as u32) {
                unflatten(flat, side, self.d, &mut idx);
                out.push((eps.clone(), idx.iter().map(|&i| i as i64).collect()));
            }
        }
        out
    }

    /// `max_x sum_eps sum_n |Psi_{eps,l,n}(x)|`.
    pub fn level_sum(&self, level: usize, probe: &ProbeGrid) -> Result<f64> {
        if level > self.max_level {
            return domain(format!("level {level} not synthesized (max {})", self.max_level));
        }
        match probe {
            ProbeGrid::Synthesis => Ok(self.level_sum_on_grid(level)),
            ProbeGrid::Points(points) => {
                let translates = self.translates(level);
                let sums: Vec<f64> = points
                    .par_iter()
                    .map(|x| {
                        translates
                            .iter()
                            .map(|(eps, n)| self.eval_wavelet(eps, level, n, x).map(f64::abs))
                            .sum::<Result<f64>>()
                    })
                    .collect::<Result<_>>()?;
                Ok(sums.into_iter().fold(0.0, f64::max))
            }
        }
    }

    /// Folding `|mother|` with the translation stride gives the translate sum
    /// at all residues at once.
    fn level_sum_on_grid(&self, level: usize) -> f64 {
        let m = self.grid_len();
        let s = self.stride(level);
        let d = self.d;
        let mut folded = vec![0.0; s.pow(d as u32)];
        let mut idx = vec![0usize; d];
        for g in &self.mothers[level] {
            for (flat, v) in g.values().iter().enumerate() {
                unflatten(flat, m, d, &mut idx);
                let r = idx.iter().fold(0usize, |acc, &i| acc * s + i % s);
                folded[r] += v.abs();
            }
        }
        folded.into_iter().fold(0.0, f64::max)
    }

    /// Envelope of `F(y) = 2^(l alpha) Psi_{eps,l,0}(2^(-l) y)` around its
    /// centre `y = -gamma`, with `alpha = r - d/2` (`= nu` for Matérn).
    /// One dimension fits the local maxima of `|F|`; higher dimensions fit
    /// the maxima over radial bins.
    pub fn localization_profile(&self, eps: &WaveletType, level: usize, alpha: f64) -> Result<DecayFit> {
        let g = self.mother(eps, level)?;
        let scale = 2f64.powf(level as f64 * alpha);
        let m = g.m();
        let d = self.d;
        let unit = 2f64.powi(level as i32);
        let period = 2.0 * self.gamma * unit;
        let centre = -self.gamma;
        let dist_of = |idx: &[usize]| -> f64 {
            idx.iter()
                .map(|&i| {
                    let y = unit * g.coord(signed(i, m));
                    let mut r = (y - centre).rem_euclid(period);
                    if r >= 0.5 * period {
                        r -= period;
                    }
                    r * r
                })
                .sum::<f64>()
                .sqrt()
        };
        let abs: Vec<f64> = g.values().iter().map(|v| scale * v.abs()).collect();
        let sup_abs = abs.iter().copied().fold(0.0, f64::max);
        let floor = 1e-10 * sup_abs;

        let mut samples: Vec<(f64, f64)> = Vec::new();
        let mut idx = vec![0usize; d];
        if d == 1 {
            for i in 0..m {
                let (prev, next) = (abs[wrap(i as i64 - 1, m)], abs[(i + 1) % m]);
                if abs[i] >= prev && abs[i] > next && abs[i] > floor {
                    idx[0] = i;
                    samples.push((dist_of(&idx), abs[i]));
                }
            }
        } else {
            let width = 2.0 * unit * g.spacing();
            let bins = (period * (d as f64).sqrt() / 2.0 / width) as usize + 2;
            let mut best = vec![0.0f64; bins];
            for (flat, &v) in abs.iter().enumerate() {
                unflatten(flat, m, d, &mut idx);
                let b = ((dist_of(&idx) / width) as usize).min(bins - 1);
                best[b] = best[b].max(v);
            }
            for (b, &v) in best.iter().enumerate() {
                if v > floor {
                    samples.push(((b as f64 + 0.5) * width, v));
                }
            }
        }
        let xs: Vec<f64> = samples.iter().map(|s| 1.0 + s.0).collect();
        let ys: Vec<f64> = samples.iter().map(|s| s.1).collect();
        let fit = fit_log_log(&xs, &ys)?;
        Ok(DecayFit {
            level,
            eps: eps.label(),
            m_fit: -fit.slope,
            intercept: fit.intercept,
            residual: fit.residual,
            sup_abs,
            points: fit.points,
        })
    }
}

fn check_interp_order(order: usize) -> Result<()> {
    if order.is_multiple_of(2) || order > 15 {
        return Err(Error::Config(format!(
            "interpolation order must be odd and at most 15, got {order}"
        )));
    }
    Ok(())
}

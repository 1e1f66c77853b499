//! Realizations `b(x) = sum_j y_j psi_j(x)` with i.i.d. standard normal `y_j`.
//!
//! Realization `r` of a run with seed `s` draws its coefficients from
//! `ChaCha8Rng::seed_from_u64(s)` on stream `r`, so every realization is
//! reproducible on its own and independent of the thread count.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::cutoff::DomainSpec;
use crate::error::{domain, Result};
use crate::kl::KlExpansion;
use crate::wavelet::WaveletFamily;

/// A truncated expansion system.
#[derive(Debug, Clone, Copy)]
pub enum Representation<'a> {
    /// The first `terms` periodic KL terms.
    Kl { expansion: &'a KlExpansion, terms: usize },
    /// Scaling constant plus all wavelets of levels `0..=max_level`.
    Wavelet { family: &'a WaveletFamily, max_level: usize },
}

impl<'a> Representation<'a> {
    pub fn kl(expansion: &'a KlExpansion, terms: usize) -> Result<Self> {
        if terms == 0 || terms > expansion.count() {
            return domain(format!(
                "KL truncation {terms} outside 1..={}",
                expansion.count()
            ));
        }
        Ok(Self::Kl { expansion, terms })
    }

    pub fn wavelet(family: &'a WaveletFamily, max_level: usize) -> Result<Self> {
        if max_level > family.max_level() {
            return domain(format!(
                "wavelet truncation level {max_level} exceeds synthesized {}",
                family.max_level()
            ));
        }
        Ok(Self::Wavelet { family, max_level })
    }

    /// The same system with every available term.
    pub fn full(&self) -> Self {
        match *self {
            Self::Kl { expansion, .. } => Self::Kl {
                expansion,
                terms: expansion.count(),
            },
            Self::Wavelet { family, .. } => Self::Wavelet {
                family,
                max_level: family.max_level(),
            },
        }
    }

    /// The same system truncated at `trunc` (terms for KL, level for wavelets).
    pub fn truncated(&self, trunc: usize) -> Result<Self> {
        match *self {
            Self::Kl { expansion, .. } => Self::kl(expansion, trunc),
            Self::Wavelet { family, .. } => Self::wavelet(family, trunc),
        }
    }

    pub fn spec(&self) -> &DomainSpec {
        match self {
            Self::Kl { expansion, .. } => expansion.spec(),
            Self::Wavelet { family, .. } => family.spec(),
        }
    }

    pub fn d(&self) -> usize {
        self.spec().d()
    }

    pub fn term_count(&self) -> usize {
        match *self {
            Self::Kl { terms, .. } => terms,
            Self::Wavelet { family, max_level } => family.basis_count(max_level),
        }
    }

    /// Short description like `kl:4096` or `wavelet:6`.
    pub fn descriptor(&self) -> String {
        match *self {
            Self::Kl { terms, .. } => format!("kl:{terms}"),
            Self::Wavelet { max_level, .. } => format!("wavelet:{max_level}"),
        }
    }

    /// All `psi_j(x)` in basis order.
    pub fn eval_terms(&self, x: &[f64]) -> Result<Vec<f64>> {
        match *self {
            Self::Kl { expansion, terms } => (1..=terms).map(|j| expansion.eval(j, x)).collect(),
            Self::Wavelet { family, max_level } => {
                let mut out = Vec::with_capacity(family.basis_count(max_level));
                out.push(family.scaling_constant());
                for level in 0..=max_level {
                    for (eps, n) in family.translates(level) {
                        out.push(family.eval_wavelet(&eps, level, &n, x)?);
                    }
                }
                Ok(out)
            }
        }
    }

    /// Basis values, terms by points.
    pub fn basis_matrix(&self, points: &[Vec<f64>]) -> Result<BasisMatrix> {
        let columns: Vec<Vec<f64>> = points
            .par_iter()
            .map(|x| self.eval_terms(x))
            .collect::<Result<_>>()?;
        let terms = self.term_count();
        let mut values = vec![0.0; terms * points.len()];
        for (p, col) in columns.iter().enumerate() {
            for (j, &v) in col.iter().enumerate() {
                values[j * points.len() + p] = v;
            }
        }
        Ok(BasisMatrix {
            terms,
            points: points.len(),
            values,
        })
    }

    /// `sum_j psi_j(x)^2` at every point: the variance carried by the system.
    pub fn variance(&self, points: &[Vec<f64>]) -> Result<Vec<f64>> {
        points
            .par_iter()
            .map(|x| Ok(self.eval_terms(x)?.iter().map(|v| v * v).sum()))
            .collect()
    }
}

/// Row-major `terms x points` matrix of `psi_j(x_p)`.
#[derive(Debug, Clone)]
pub struct BasisMatrix {
    pub terms: usize,
    pub points: usize,
    pub values: Vec<f64>,
}

impl BasisMatrix {
    pub fn row(&self, j: usize) -> &[f64] {
        &self.values[j * self.points..(j + 1) * self.points]
    }

    /// `sum_j y_j psi_j` at every point.
    pub fn combine(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.points];
        for (j, &yj) in y.iter().enumerate() {
            for (o, &b) in out.iter_mut().zip(self.row(j)) {
                *o += yj * b;
            }
        }
        out
    }
}

/// One sampled field on a point set.
#[derive(Debug, Clone, Serialize)]
pub struct FieldRealization {
    pub id: usize,
    pub seed: u64,
    pub truncation: String,
    #[serde(skip)]
    pub points: Arc<Vec<Vec<f64>>>,
    pub values: Vec<f64>,
}

/// Coefficients `y_0, y_1, ...` of realization `id`.
pub fn coefficients(seed: u64, id: usize, count: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id as u64);
    (0..count).map(|_| rng.sample(StandardNormal)).collect()
}

fn check_grid(spec: &DomainSpec, grid: &[Vec<f64>]) -> Result<()> {
    if grid.is_empty() {
        return domain("sampling grid is empty");
    }
    if let Some(x) = grid.iter().find(|x| !spec.contains(x)) {
        return domain(format!(
            "point {x:?} outside the domain [-{0}, {0}]^{1}",
            spec.delta() / 2.0,
            spec.d()
        ));
    }
    Ok(())
}

pub fn sample_field(
    rep: &Representation,
    seed: u64,
    count: usize,
    grid: &[Vec<f64>],
) -> Result<Vec<FieldRealization>> {
    check_grid(rep.spec(), grid)?;
    let basis = rep.basis_matrix(grid)?;
    let points = Arc::new(grid.to_vec());
    let truncation = rep.descriptor();
    Ok((0..count)
        .into_par_iter()
        .map(|id| FieldRealization {
            id,
            seed,
            truncation: truncation.clone(),
            points: Arc::clone(&points),
            values: basis.combine(&coefficients(seed, id, basis.terms)),
        })
        .collect())
}

/// Covariance estimate between two points of the realization grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CovEstimate {
    pub estimate: f64,
    pub stderr: f64,
}

/// Unbiased sample covariance for each pair of point indices, with the
/// standard error of the mean of centred products.
pub fn empirical_covariance(
    reals: &[FieldRealization],
    pairs: &[(usize, usize)],
) -> Result<Vec<CovEstimate>> {
    let m = reals.len();
    if m < 2 {
        return domain(format!("need at least two realizations, got {m}"));
    }
    let width = reals[0].values.len();
    if reals.iter().any(|r| r.values.len() != width) {
        return domain("realizations differ in length");
    }
    if let Some(p) = pairs.iter().find(|(a, b)| *a >= width || *b >= width) {
        return domain(format!("pair {p:?} outside {width} grid points"));
    }
    let mf = m as f64;
    let mean = |i: usize| reals.iter().map(|r| r.values[i]).sum::<f64>() / mf;
    Ok(pairs
        .iter()
        .map(|&(a, b)| {
            let (ma, mb) = (mean(a), mean(b));
            let prods: Vec<f64> = reals
                .iter()
                .map(|r| (r.values[a] - ma) * (r.values[b] - mb))
                .collect();
            let sum: f64 = prods.iter().sum();
            let pm = sum / mf;
            let var = prods.iter().map(|p| (p - pm).powi(2)).sum::<f64>() / (mf - 1.0);
            CovEstimate {
                estimate: sum / (mf - 1.0),
                stderr: (var / mf).sqrt(),
            }
        })
        .collect())
}

/// Sample mean and its standard error at every point.
pub fn empirical_mean(reals: &[FieldRealization]) -> Result<Vec<CovEstimate>> {
    let m = reals.len();
    if m < 2 {
        return domain(format!("need at least two realizations, got {m}"));
    }
    let mf = m as f64;
    Ok((0..reals[0].values.len())
        .map(|i| {
            let mean = reals.iter().map(|r| r.values[i]).sum::<f64>() / mf;
            let var = reals.iter().map(|r| (r.values[i] - mean).powi(2)).sum::<f64>() / (mf - 1.0);
            CovEstimate {
                estimate: mean,
                stderr: (var / mf).sqrt(),
            }
        })
        .collect())
}

/// `max_x sum_{j > trunc} psi_j(x)^2` over `probe`, the sum running over
/// all terms the underlying system provides.
pub fn truncation_error(rep: &Representation, trunc: usize, probe: &[Vec<f64>]) -> Result<f64> {
    let full = rep.full();
    let kept = rep.truncated(trunc)?.term_count();
    if probe.is_empty() {
        return domain("probe grid is empty");
    }
    let deficits: Vec<f64> = probe
        .par_iter()
        .map(|x| Ok(full.eval_terms(x)?[kept..].iter().map(|v| v * v).sum()))
        .collect::<Result<_>>()?;
    Ok(deficits.into_iter().fold(0.0, f64::max))
}

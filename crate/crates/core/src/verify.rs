//! Numerical diagnostics and the invariant suite behind `grf verify`.

use std::f64::consts::PI;

use serde::Serialize;

use crate::cutoff::DomainSpec;
use crate::diffusion::{apriori_bound_check, assemble_solve, dual_norm, Mesh1D};
use crate::error::{domain, Result};
use crate::fit::{fit_line, SlopeFit};
use crate::kernel::{Matern, MaternParams, StationaryKernel};
use crate::kl::{kl_decay_report, kl_expansion, KlExpansion};
use crate::meyer::{meyer_scaling_hat, meyer_wavelet_hat, WaveletType};
use crate::periodization::{find_gamma_min, spectral_grid, SpectralTable};
use crate::sampler::{sample_field, Representation};
use crate::wavelet::{synthesize_wavelet, ProbeGrid, WaveletFamily};

/// `max_{|k| < N/2} |D_N(omega_k) - D_2N(omega_k)|` for consecutive sizes.
pub fn spectral_refinement_gaps<K: StationaryKernel + ?Sized>(
    k: &K,
    spec: &DomainSpec,
    exponents: std::ops::RangeInclusive<u32>,
) -> Result<Vec<(usize, f64)>> {
    if spec.d() != 1 {
        return domain("refinement study is one-dimensional");
    }
    let tables: Vec<SpectralTable> = exponents
        .clone()
        .map(|j| spectral_grid(k, spec, 1 << j))
        .collect::<Result<_>>()?;
    Ok(tables
        .windows(2)
        .map(|w| {
            let half = (w[0].n() / 2) as i64;
            let gap = (-half + 1..half)
                .map(|kk| (w[0].raw_value(&[kk]) - w[1].raw_value(&[kk])).abs())
                .fold(0.0, f64::max);
            (w[0].n(), gap)
        })
        .collect())
}

/// `max_k |Psi_J(x_k) - Psi_{J+1}(x_k)|` on the coarse grid, per `J`.
pub fn wavelet_refinement_gaps<K: StationaryKernel + ?Sized>(
    k: &K,
    spec: &DomainSpec,
    level: usize,
    exponents: std::ops::RangeInclusive<u32>,
) -> Result<Vec<(u32, f64)>> {
    if spec.d() != 1 {
        return domain("refinement study is one-dimensional");
    }
    let eps = WaveletType::new(vec![1])?;
    let grids = exponents
        .clone()
        .map(|j| Ok(synthesize_wavelet(&spectral_grid(k, spec, 1 << j)?, &eps, level)?.grid))
        .collect::<Result<Vec<_>>>()?;
    Ok(exponents
        .zip(grids.windows(2))
        .map(|(j, w)| {
            let half = (w[0].m() / 2) as i64;
            let gap = (-half..half)
                .map(|kk| (w[0].at(&[kk]) - w[1].at(&[2 * kk])).abs())
                .fold(0.0, f64::max);
            (j, gap)
        })
        .collect())
}

/// Order `p` in `gap ~ C 2^(-p j)` from `(j, gap)` pairs.
pub fn observed_order(points: &[(f64, f64)]) -> Result<SlopeFit> {
    let xs: Vec<f64> = points.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = points.iter().map(|p| -p.1.log2()).collect();
    fit_line(&xs, &ys)
}

/// `max |G - I|` for the first `count` KL eigenfunctions, with the
/// rectangle rule on `q^d` torus points.
pub fn kl_gram_error(e: &KlExpansion, count: usize, q: usize) -> Result<f64> {
    if e.d() != 1 {
        return domain("Gram check is one-dimensional");
    }
    if count > e.count() {
        return domain(format!("Gram check of {count} functions, {} available", e.count()));
    }
    let g = e.gamma();
    let h = 2.0 * g / q as f64;
    let cols: Vec<Vec<f64>> = (0..q)
        .map(|i| {
            let x = -g + i as f64 * h;
            (1..=count).map(|j| e.eigenfunction(j, &[x])).collect::<Result<_>>()
        })
        .collect::<Result<_>>()?;
    Ok(gram_error(&cols, count, h))
}

fn gram_error(cols: &[Vec<f64>], count: usize, weight: f64) -> f64 {
    let mut worst = 0f64;
    for a in 0..count {
        for b in a..count {
            let ip: f64 = cols.iter().map(|c| c[a] * c[b]).sum::<f64>() * weight;
            let target = if a == b { 1.0 } else { 0.0 };
            worst = worst.max((ip - target).abs());
        }
    }
    worst
}

/// `max |G - I|` for the unfiltered periodic Meyer system (constant plus
/// all translates of levels `0..=max_level`) under grid quadrature.
pub fn meyer_gram_error(gamma: f64, max_level: usize, n: usize) -> Result<f64> {
    let spec = DomainSpec::new(gamma / 2.0, gamma, 1)?;
    let t = SpectralTable::constant(&spec, n, 1.0)?;
    let f = WaveletFamily::new(&t, max_level, 3)?;
    let m = f.grid_len() as i64;
    let mut funcs: Vec<(WaveletType, usize, Vec<i64>)> = Vec::new();
    for level in 0..=max_level {
        for (eps, shift) in f.translates(level) {
            funcs.push((eps, level, shift));
        }
    }
    let count = funcs.len() + 1;
    let cols: Vec<Vec<f64>> = (-m / 2..m / 2)
        .map(|k| {
            let mut c = vec![f.scaling_constant()];
            for (eps, level, shift) in &funcs {
                c.push(f.eval_on_grid(eps, *level, shift, &[k])?);
            }
            Ok(c)
        })
        .collect::<Result<_>>()?;
    Ok(gram_error(&cols, count, 2.0 * gamma / m as f64))
}

/// `max |sum_{j<=n} psi_j(x) psi_j(x') - k(x - x')|` over a `p x p` probe grid of D.
pub fn kl_covariance_error<K: StationaryKernel + ?Sized>(
    k: &K,
    e: &KlExpansion,
    n: usize,
    p: usize,
) -> Result<f64> {
    if e.d() != 1 {
        return domain("covariance reconstruction check is one-dimensional");
    }
    let half = e.spec().delta() / 2.0;
    let xs: Vec<f64> = (0..p).map(|i| -half + 2.0 * half * i as f64 / (p - 1) as f64).collect();
    let rep = Representation::kl(e, n)?;
    let vals: Vec<Vec<f64>> = xs.iter().map(|&x| rep.eval_terms(&[x])).collect::<Result<_>>()?;
    let mut worst = 0f64;
    for (a, va) in xs.iter().zip(&vals) {
        for (b, vb) in xs.iter().zip(&vals) {
            let s: f64 = va.iter().zip(vb).map(|(u, v)| u * v).sum();
            worst = worst.max((s - k.cov(&[a - b])).abs());
        }
    }
    Ok(worst)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Profile {
    Quick,
    Full,
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

fn check(name: &str, pass: bool, detail: String) -> Check {
    Check {
        name: name.to_string(),
        pass,
        detail,
    }
}

/// Settings for the suite; the kernel is Matérn in one dimension.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct VerifySettings {
    pub nu: f64,
    pub lambda: f64,
    pub delta: f64,
    pub gamma: f64,
    pub n: usize,
    pub seed: u64,
}

impl Default for VerifySettings {
    fn default() -> Self {
        Self {
            nu: 0.5,
            lambda: 1.0,
            delta: 1.0,
            gamma: 1.5,
            n: 1 << 14,
            seed: 0,
        }
    }
}

/// Runs the suite; errors inside a check count as failures of that check.
pub fn run_suite(s: &VerifySettings, profile: Profile) -> Result<Vec<Check>> {
    let kernel = Matern::new(MaternParams::new(s.nu, s.lambda, 1)?);
    let spec = DomainSpec::new(s.delta, s.gamma, 1)?;
    let mut out = Vec::new();
    let mut run = |name: &str, f: &dyn Fn() -> Result<(bool, String)>| {
        out.push(match f() {
            Ok((pass, detail)) => check(name, pass, detail),
            Err(e) => check(name, false, format!("error: {e}")),
        });
    };

    let table = spectral_grid(&kernel, &spec, s.n)?;
    run("spectrum positive", &|| {
        let r = table.positivity();
        Ok((r.pass, format!("min {:e}, max {:e}", r.min, r.max)))
    });
    run("spectrum real", &|| {
        let r = table.max_imag_residue();
        Ok((r < 1e-10, format!("imag residue {r:e}")))
    });
    run("meyer partition of unity", &|| {
        let worst = (0..10_000)
            .map(|i| {
                let w = -4.0 * PI / 3.0 + 8.0 * PI / 3.0 * i as f64 / 9999.0;
                (meyer_scaling_hat(w).powi(2) + meyer_wavelet_hat(w).norm_sqr() - 1.0).abs()
            })
            .fold(0.0, f64::max);
        Ok((worst < 1e-12, format!("max deviation {worst:e}")))
    });
    run("kl eigenvalue decay", &|| {
        let e = kl_expansion(&table, 1024)?;
        let fit = kl_decay_report(&e, 32, 1024)?;
        let target = -(2.0 * s.nu + 1.0);
        Ok(((fit.slope - target).abs() <= 0.3, format!("slope {:.3}, expected {target}", fit.slope)))
    });
    run("kl orthonormality", &|| {
        let e = kl_expansion(&table, 64)?;
        let err = kl_gram_error(&e, 64, 512)?;
        Ok((err < 1e-10, format!("max |G - I| {err:e}")))
    });
    run("meyer orthonormality", &|| {
        let err = meyer_gram_error(s.gamma, 4, 1 << 10)?;
        Ok((err < 1e-8, format!("max |G - I| {err:e}")))
    });
    run("level-sum decay", &|| {
        let f = WaveletFamily::new(&table, 6, 3)?;
        let sums: Vec<f64> = (3..=6)
            .map(|l| f.level_sum(l, &ProbeGrid::Synthesis))
            .collect::<Result<_>>()?;
        let ratios: Vec<f64> = sums.windows(2).map(|w| (w[1] / w[0]).log2()).collect();
        let pass = ratios.iter().all(|r| (r + s.nu).abs() <= 0.3);
        Ok((pass, format!("log2 ratios {ratios:.3?}, expected {}", -s.nu)))
    });
    run("sampler determinism", &|| {
        let e = kl_expansion(&table, 128)?;
        let rep = Representation::kl(&e, 128)?;
        let grid = vec![vec![-0.2], vec![0.3]];
        let a = sample_field(&rep, s.seed, 4, &grid)?;
        let b = sample_field(&rep, s.seed, 4, &grid)?;
        let same = a.iter().zip(&b).all(|(x, y)| x.values == y.values);
        Ok((same, "repeat run identical".into()))
    });
    run("fem constant coefficient", &|| {
        let mesh = Mesh1D::new(64)?;
        let sol = assemble_solve(&[0.0; 64], |_| 1.0, &mesh)?;
        let err = (sol.at(0.0) - 0.125).abs();
        let fd = dual_norm(|_| 1.0, &mesh)?;
        let bound = apriori_bound_check(&[0.0; 64], &sol, fd);
        Ok((err <= mesh.h().powi(2) && bound, format!("|u(0) - 1/8| {err:e}")))
    });

    if profile == Profile::Full {
        run("gamma_min below operating point", &|| {
            let g = find_gamma_min(&kernel, s.delta, s.n, 1e-4)?;
            Ok((g.gamma <= s.gamma, format!("gamma_min {:.5}", g.gamma)))
        });
        run("spectral self-convergence", &|| {
            let gaps = spectral_refinement_gaps(&kernel, &spec, 10..=16)?;
            let pts: Vec<(f64, f64)> = gaps.iter().map(|&(n, g)| ((n as f64).log2(), g)).collect();
            let fit = observed_order(&pts)?;
            let target = 2.0 * s.nu + 1.0 - 0.3;
            Ok((fit.slope >= target, format!("order {:.3}, need >= {target}", fit.slope)))
        });
        run("wavelet self-convergence", &|| {
            let gaps = wavelet_refinement_gaps(&kernel, &spec, 2, 10..=15)?;
            let pts: Vec<(f64, f64)> = gaps.iter().map(|&(j, g)| (j as f64, g)).collect();
            let fit = observed_order(&pts)?;
            let target = s.nu + 0.5 - 0.3;
            Ok((fit.slope >= target, format!("order {:.3}, need >= {target}", fit.slope)))
        });
        run("localization stability", &|| {
            let f = WaveletFamily::new(&table, 6, 3)?;
            let eps = WaveletType::new(vec![1])?;
            let sups: Vec<f64> = (2..=6)
                .map(|l| Ok(f.localization_profile(&eps, l, s.nu)?.sup_abs))
                .collect::<Result<_>>()?;
            let (lo, hi) = sups.iter().fold((f64::INFINITY, 0f64), |(a, b), &v| (a.min(v), b.max(v)));
            Ok((hi <= 2.0 * lo, format!("sup|F| range {lo:.4}..{hi:.4}")))
        });
        run("kl covariance reconstruction", &|| {
            let n = 2048.min(crate::kl::representable_count(&table));
            let e = kl_expansion(&table, crate::kl::representable_count(&table))?;
            let err = kl_covariance_error(&kernel, &e, n, 33)?;
            let tail = e.tail_sum(n) / s.gamma;
            let tol = tail.max(1e-2);
            Ok((err <= tol, format!("max error {err:e}, tolerance {tol:e}")))
        });
    }
    Ok(out)
}

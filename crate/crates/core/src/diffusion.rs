//! P1 finite elements for `-(a u')' = f` on `(-1/2, 1/2)`, `u(±1/2) = 0`,
//! with lognormal coefficient `a = exp(b)` taken elementwise at midpoints.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{domain, Result};
use crate::sampler::{coefficients, Representation};

/// Uniform mesh of `(-1/2, 1/2)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Mesh1D {
    elements: usize,
}

impl Mesh1D {
    pub fn new(elements: usize) -> Result<Self> {
        if elements < 2 {
            return domain(format!("mesh needs at least 2 elements, got {elements}"));
        }
        Ok(Self { elements })
    }

    pub fn elements(&self) -> usize {
        self.elements
    }

    pub fn h(&self) -> f64 {
        1.0 / self.elements as f64
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..=self.elements).map(|i| -0.5 + i as f64 * self.h()).collect()
    }

    /// Element midpoints, where the coefficient is sampled.
    pub fn midpoints(&self) -> Vec<f64> {
        (0..self.elements).map(|e| -0.5 + (e as f64 + 0.5) * self.h()).collect()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FemSolution {
    /// Values at all nodes, boundary zeros included.
    pub nodal: Vec<f64>,
    /// `|u_h|_{H^1} = ||u_h'||_{L^2}`.
    pub energy_norm: f64,
}

impl FemSolution {
    /// Piecewise-linear value at `x`, clamped to the interval.
    pub fn at(&self, x: f64) -> f64 {
        let e = self.nodal.len() - 1;
        let s = ((x + 0.5) * e as f64).clamp(0.0, e as f64);
        let i = (s.floor() as usize).min(e - 1);
        let w = s - i as f64;
        (1.0 - w) * self.nodal[i] + w * self.nodal[i + 1]
    }
}

/// Galerkin solve with `a = exp(log_field[e])` on element `e`. The load uses
/// the midpoint rule per element.
pub fn assemble_solve(log_field: &[f64], f: impl Fn(f64) -> f64, mesh: &Mesh1D) -> Result<FemSolution> {
    let ne = mesh.elements();
    if log_field.len() != ne {
        return domain(format!(
            "log-coefficient has {} values, mesh has {ne} elements",
            log_field.len()
        ));
    }
    if log_field.iter().any(|b| !b.is_finite()) {
        return domain("log-coefficient has non-finite values");
    }
    let h = mesh.h();
    let a: Vec<f64> = log_field.iter().map(|b| b.exp()).collect();
    let mids = mesh.midpoints();

    // Interior nodes 1..ne-1; tridiagonal system.
    let n = ne - 1;
    let diag: Vec<f64> = (0..n).map(|i| (a[i] + a[i + 1]) / h).collect();
    let off: Vec<f64> = (0..n.saturating_sub(1)).map(|i| -a[i + 1] / h).collect();
    let rhs: Vec<f64> = (0..n)
        .map(|i| 0.5 * h * (f(mids[i]) + f(mids[i + 1])))
        .collect();
    let interior = solve_tridiagonal(&off, &diag, &off, &rhs);

    let mut nodal = Vec::with_capacity(ne + 1);
    nodal.push(0.0);
    nodal.extend(interior);
    nodal.push(0.0);
    let energy_norm = nodal
        .windows(2)
        .map(|w| (w[1] - w[0]).powi(2) / h)
        .sum::<f64>()
        .sqrt();
    Ok(FemSolution { nodal, energy_norm })
}

/// Thomas algorithm; `lower[i]` couples rows `i+1, i`, `upper[i]` rows `i, i+1`.
fn solve_tridiagonal(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    for i in 0..n {
        let l = if i > 0 { lower[i - 1] } else { 0.0 };
        let denom = diag[i] - if i > 0 { l * c[i - 1] } else { 0.0 };
        c[i] = if i + 1 < n { upper[i] / denom } else { 0.0 };
        d[i] = (rhs[i] - if i > 0 { l * d[i - 1] } else { 0.0 }) / denom;
    }
    for i in (0..n.saturating_sub(1)).rev() {
        d[i] -= c[i] * d[i + 1];
    }
    d
}

/// `||f||` in the dual of the discrete space: the `H^1` seminorm of the
/// discrete solution with `a = 1`.
pub fn dual_norm(f: impl Fn(f64) -> f64, mesh: &Mesh1D) -> Result<f64> {
    Ok(assemble_solve(&vec![0.0; mesh.elements()], f, mesh)?.energy_norm)
}

/// Relative slack allowed in [`apriori_bound_check`].
pub const FEM_TOL: f64 = 1e-10;

/// `|u_h|_{H^1} <= ||f||_* exp(max |b|) (1 + FEM_TOL)`.
pub fn apriori_bound_check(log_field: &[f64], sol: &FemSolution, f_dual_norm: f64) -> bool {
    let bmax = log_field.iter().fold(0.0f64, |m, b| m.max(b.abs()));
    sol.energy_norm <= f_dual_norm * bmax.exp() * (1.0 + FEM_TOL)
}

/// Monte Carlo mean of `u_h` with per-node standard errors.
#[derive(Debug, Clone, Serialize)]
pub struct MeanField {
    pub x: Vec<f64>,
    pub mean: Vec<f64>,
    pub stderr: Vec<f64>,
    pub samples: usize,
    /// Number of samples violating the a-priori bound.
    pub bound_violations: usize,
}

impl MeanField {
    /// Mean and standard error at the node nearest to `x`.
    pub fn at(&self, x: f64) -> (f64, f64) {
        let e = self.x.len() - 1;
        let i = ((x + 0.5) * e as f64).round().clamp(0.0, e as f64) as usize;
        (self.mean[i], self.stderr[i])
    }
}

/// Mean of `M` solves with `f = 1` and `b` drawn from `rep`, realization
/// `r` using the coefficient stream of the sampler.
pub fn mc_mean_field(rep: &Representation, m: usize, seed: u64, mesh: &Mesh1D) -> Result<MeanField> {
    if m == 0 {
        return domain("need at least one sample");
    }
    if rep.d() != 1 {
        return domain("the diffusion demo is one-dimensional");
    }
    let mids: Vec<Vec<f64>> = mesh.midpoints().into_iter().map(|x| vec![x]).collect();
    if let Some(x) = mids.iter().find(|x| !rep.spec().contains(x)) {
        return domain(format!("mesh point {x:?} outside the field domain"));
    }
    let basis = rep.basis_matrix(&mids)?;
    let fdual = dual_norm(|_| 1.0, mesh)?;
    let solves: Vec<(Vec<f64>, bool)> = (0..m)
        .into_par_iter()
        .map(|id| {
            let b = basis.combine(&coefficients(seed, id, basis.terms));
            let sol = assemble_solve(&b, |_| 1.0, mesh)?;
            let ok = apriori_bound_check(&b, &sol, fdual);
            Ok((sol.nodal, ok))
        })
        .collect::<Result<_>>()?;
    let nodes = mesh.nodes();
    let mf = m as f64;
    let mut mean = vec![0.0; nodes.len()];
    for (u, _) in &solves {
        for (acc, v) in mean.iter_mut().zip(u) {
            *acc += v / mf;
        }
    }
    let stderr = (0..nodes.len())
        .map(|i| {
            if m < 2 {
                return 0.0;
            }
            let var = solves.iter().map(|(u, _)| (u[i] - mean[i]).powi(2)).sum::<f64>() / (mf - 1.0);
            (var / mf).sqrt()
        })
        .collect();
    Ok(MeanField {
        x: nodes,
        mean,
        stderr,
        samples: m,
        bound_violations: solves.iter().filter(|(_, ok)| !ok).count(),
    })
}

//! Acceptance gate: one PASS/FAIL line per criterion.
//!
//! Criteria listed in `EXPECTED_FAILURES` may fail without failing the run;
//! they are still evaluated at full tolerance and reported as FAIL.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use grf_periodic::cutoff::DomainSpec;
use grf_periodic::diffusion::{assemble_solve, mc_mean_field, Mesh1D};
use grf_periodic::kernel::{Matern, MaternParams};
use grf_periodic::kl::{kl_decay_report, kl_expansion, representable_count};
use grf_periodic::meyer::WaveletType;
use grf_periodic::periodization::{find_gamma_min, spectral_grid, SpectralTable};
use grf_periodic::sampler::{empirical_covariance, sample_field, truncation_error, Representation};
use grf_periodic::verify::{
    kl_covariance_error, kl_gram_error, meyer_gram_error, observed_order, spectral_refinement_gaps,
    wavelet_refinement_gaps,
};
use grf_periodic::wavelet::{ProbeGrid, WaveletFamily};
use grf_periodic::Result;

const N: usize = 1 << 14;

/// `(criterion, part that may fail)`.
const EXPECTED_FAILURES: &[(&str, &str)] = &[("3", "nu=4 rate")];

struct Outcome {
    pass: bool,
    /// False only when a part outside `EXPECTED_FAILURES` failed.
    required_ok: bool,
    detail: String,
}

impl Outcome {
    fn plain(pass: bool, detail: String) -> Self {
        Self { pass, required_ok: pass, detail }
    }
}

fn matern(nu: f64, lambda: f64) -> Matern {
    Matern::new(MaternParams::new(nu, lambda, 1).unwrap())
}

fn spec(gamma: f64) -> DomainSpec {
    DomainSpec::new(1.0, gamma, 1).unwrap()
}

fn table(nu: f64, gamma: f64) -> Result<SpectralTable> {
    spectral_grid(&matern(nu, 1.0), &spec(gamma), N)
}

fn c1() -> Result<Outcome> {
    let mut pass = true;
    let mut parts = Vec::new();
    for (nu, lambda, gamma, bound) in [(0.5, 1.0, 1.5, 1.5), (4.0, 1.0, 5.0, 5.0), (0.5, 0.5, 1.5, 1.3)] {
        let k = matern(nu, lambda);
        let start = Instant::now();
        let positive = spectral_grid(&k, &spec(gamma), N)?.is_positive();
        let g = find_gamma_min(&k, 1.0, N, 1e-4)?;
        let fast = start.elapsed() < Duration::from_secs(10);
        let ok = g.gamma <= bound && fast && (lambda != 1.0 || positive);
        pass &= ok;
        parts.push(format!("({nu},{lambda}) gamma_min {:.4} <= {bound}", g.gamma));
    }
    Ok(Outcome::plain(pass, parts.join("; ")))
}

fn c2() -> Result<Outcome> {
    let mut pass = true;
    let mut parts = Vec::new();
    for (nu, gamma, tol) in [(0.5, 1.5, 0.25), (1.5, 2.0, 0.3)] {
        let e = kl_expansion(&table(nu, gamma)?, 1024)?;
        let slope = kl_decay_report(&e, 32, 1024)?.slope;
        let target = -(2.0 * nu + 1.0);
        pass &= (slope - target).abs() <= tol;
        parts.push(format!("nu={nu} slope {slope:.3} vs {target} +- {tol}"));
    }
    Ok(Outcome::plain(pass, parts.join("; ")))
}

fn level_ratios(nu: f64, gamma: f64, levels: std::ops::RangeInclusive<usize>) -> Result<Vec<f64>> {
    let f = WaveletFamily::new(&table(nu, gamma)?, *levels.end(), 3)?;
    let sums: Vec<f64> = levels.map(|l| f.level_sum(l, &ProbeGrid::Synthesis)).collect::<Result<_>>()?;
    Ok(sums.windows(2).map(|w| (w[1] / w[0]).log2()).collect())
}

fn c3() -> Result<Outcome> {
    let a = level_ratios(0.5, 1.5, 3..=6)?;
    let b = level_ratios(4.0, 5.0, 2..=4)?;
    let pass_a = a.iter().all(|r| (r + 0.5).abs() <= 0.3);
    let pass_b = b.iter().all(|r| (r + 4.0).abs() <= 0.6);
    Ok(Outcome {
        pass: pass_a && pass_b,
        required_ok: pass_a,
        detail: format!(
            "nu=0.5 ratios {a:.3?} vs -0.5 +- 0.3 [{}]; nu=4 ratios {b:.3?} vs -4 +- 0.6 [{}]",
            verdict(pass_a),
            verdict(pass_b)
        ),
    })
}

fn c4() -> Result<Outcome> {
    let gaps = spectral_refinement_gaps(&matern(0.5, 1.0), &spec(1.5), 10..=16)?;
    let pts: Vec<(f64, f64)> = gaps.iter().map(|&(n, g)| ((n as f64).log2(), g)).collect();
    let order = observed_order(&pts)?.slope;
    Ok(Outcome::plain(order >= 1.7, format!("nu=0.5 order {order:.3} >= 1.7")))
}

fn c5() -> Result<Outcome> {
    let gaps = wavelet_refinement_gaps(&matern(0.5, 1.0), &spec(1.5), 2, 10..=15)?;
    let pts: Vec<(f64, f64)> = gaps.iter().map(|&(j, g)| (j as f64, g)).collect();
    let order = observed_order(&pts)?.slope;
    Ok(Outcome::plain(order >= 0.7, format!("nu=0.5 level 2 order {order:.3} >= 0.7")))
}

fn c6() -> Result<Outcome> {
    let e = kl_expansion(&table(0.5, 1.5)?, 64)?;
    let kl = kl_gram_error(&e, 64, 1 << 12)?;
    let meyer = meyer_gram_error(1.5, 4, 1 << 10)?;
    Ok(Outcome::plain(
        kl < 1e-10 && meyer < 1e-8,
        format!("kl |G-I| {kl:.2e} < 1e-10; meyer |G-I| {meyer:.2e} < 1e-8"),
    ))
}

fn c7() -> Result<Outcome> {
    let t = table(1.5, 2.0)?;
    let e = kl_expansion(&t, representable_count(&t))?;
    let err = kl_covariance_error(&matern(1.5, 1.0), &e, 2048, 33)?;
    let tol = (e.tail_sum(2048) / e.gamma()).max(1e-2);
    Ok(Outcome::plain(err <= tol, format!("max error {err:.2e} <= {tol:.2e}")))
}

fn c8() -> Result<Outcome> {
    let m = 20_000;
    let t = table(0.5, 1.5)?;
    let e = kl_expansion(&t, representable_count(&t))?;
    let kl = Representation::kl(&e, 4096)?;
    let family = WaveletFamily::new(&t, 11, 3)?;
    let wav = Representation::wavelet(&family, 11)?;
    let xs = [0.0, 0.1, -0.25, 0.25, -0.5, 0.5, 0.45];
    let points: Vec<Vec<f64>> = xs.iter().map(|&x| vec![x]).collect();
    let pairs = [(0, 0), (0, 1), (2, 3), (4, 5), (1, 6)];
    let deficit = truncation_error(&kl, 4096, &points)?;
    let ek = empirical_covariance(&sample_field(&kl, 1, m, &points)?, &pairs)?;
    let ew = empirical_covariance(&sample_field(&wav, 2, m, &points)?, &pairs)?;
    let mut pass = true;
    let mut worst_exact = 0f64;
    let mut worst_cross = 0f64;
    for ((&(a, b), k), w) in pairs.iter().zip(&ek).zip(&ew) {
        let exact = (-(xs[a] - xs[b]).abs()).exp();
        let z = (k.estimate - exact).abs() / (5.0 * k.stderr + deficit);
        let zc = (k.estimate - w.estimate).abs() / (5.0 * k.stderr.hypot(w.stderr));
        pass &= z <= 1.0 && zc <= 1.0;
        worst_exact = worst_exact.max(z);
        worst_cross = worst_cross.max(zc);
    }
    Ok(Outcome::plain(
        pass,
        format!(
            "M={m}; |kl - k| / (5 se + {deficit:.1e}) max {worst_exact:.2}; |kl - wavelet| / 5 se max {worst_cross:.2}"
        ),
    ))
}

fn c9() -> Result<Outcome> {
    let exact = |x: f64| (0.25 - x * x) / 2.0;
    let mut node_err = Vec::new();
    let mut mid_err = Vec::new();
    for elements in [16, 32, 64, 128, 256] {
        let mesh = Mesh1D::new(elements)?;
        let sol = assemble_solve(&vec![0.0; elements], |_| 1.0, &mesh)?;
        node_err.push(((sol.at(0.0) - 0.125).abs(), mesh.h()));
        mid_err.push(
            mesh.midpoints()
                .iter()
                .map(|&x| (sol.at(x) - exact(x)).abs())
                .fold(0.0, f64::max),
        );
    }
    let converged = node_err.iter().all(|&(e, h)| e <= h * h);
    let ratios: Vec<f64> = mid_err.windows(2).map(|w| w[0] / w[1]).collect();
    let second_order = ratios.iter().all(|r| (r - 4.0).abs() <= 0.5);

    let t = table(0.5, 1.5)?;
    let e = kl_expansion(&t, 256)?;
    let kl = Representation::kl(&e, 256)?;
    let family = WaveletFamily::new(&t, 6, 3)?;
    let wav = Representation::wavelet(&family, 6)?;
    let mesh = Mesh1D::new(64)?;
    let violations = mc_mean_field(&kl, 100, 7, &mesh)?.bound_violations;
    let (mk, sk) = mc_mean_field(&kl, 2000, 3, &mesh)?.at(0.0);
    let (mw, sw) = mc_mean_field(&wav, 2000, 4, &mesh)?.at(0.0);
    let agree = (mk - mw).abs() <= 3.0 * sk.hypot(sw);
    Ok(Outcome::plain(
        converged && second_order && violations == 0 && agree,
        format!(
            "|u(0)-1/8| max {:.1e}; halving ratios {ratios:.2?}; bound violations {violations}/100; \
             u(0) kl {mk:.5} wavelet {mw:.5} within 3 se {:.1e}",
            node_err.iter().map(|e| e.0).fold(0.0, f64::max),
            3.0 * sk.hypot(sw)
        ),
    ))
}

fn c10() -> Result<Outcome> {
    let f = WaveletFamily::new(&table(0.5, 1.5)?, 6, 3)?;
    let eps = WaveletType::new(vec![1])?;
    let sups: Vec<f64> = (2..=6)
        .map(|l| Ok(f.localization_profile(&eps, l, 0.5)?.sup_abs))
        .collect::<Result<_>>()?;
    let (lo, hi) = sups.iter().fold((f64::INFINITY, 0f64), |(a, b), &v| (a.min(v), b.max(v)));
    Ok(Outcome::plain(hi <= 2.0 * lo, format!("sup|F| {sups:.4?}, ratio {:.3} <= 2", hi / lo)))
}

fn verdict(pass: bool) -> &'static str {
    if pass {
        "PASS"
    } else {
        "FAIL"
    }
}

type Criterion = fn() -> Result<Outcome>;

fn main() -> ExitCode {
    let criteria: [(&str, &str, u64, Criterion); 10] = [
        ("1", "gamma_min anchors", 30, c1),
        ("2", "KL eigenvalue decay", 5, c2),
        ("3", "wavelet level-sum decay", 30, c3),
        ("4", "spectral self-convergence", 10, c4),
        ("5", "wavelet self-convergence", 30, c5),
        ("6", "orthonormality", 20, c6),
        ("7", "covariance reconstruction", 20, c7),
        ("8", "sampling statistics", 120, c8),
        ("9", "diffusion demo", 120, c9),
        ("10", "localization stability", 30, c10),
    ];
    let mut gate = true;
    for (id, name, limit, run) in criteria {
        let start = Instant::now();
        let outcome = run().unwrap_or_else(|e| Outcome::plain(false, format!("error: {e}")));
        let secs = start.elapsed().as_secs_f64();
        let in_time = secs < limit as f64;
        let pass = outcome.pass && in_time;
        let expected = EXPECTED_FAILURES.iter().find(|(c, _)| *c == id);
        let tolerated = !pass && in_time && outcome.required_ok && expected.is_some();
        gate &= pass || tolerated;
        println!(
            "{} criterion {id:>2} {name}: {} [{secs:.2} s < {limit} s]{}",
            verdict(pass),
            outcome.detail,
            match expected {
                Some((_, part)) if tolerated => format!(" (expected failure: {part})"),
                _ => String::new(),
            }
        );
    }
    if gate {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

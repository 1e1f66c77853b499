//! The `grf` command line.
//!
//! Exit codes: 0 on success, 2 on invalid input, 1 on runtime failure
//! (including failed `verify` checks).

mod output;

use std::ffi::OsString;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use crate::cutoff::DomainSpec;
use crate::diffusion::{mc_mean_field, Mesh1D};
use crate::error::{Error, Result};
use crate::kernel::{Matern, MaternParams, StationaryKernel};
use crate::kl::{kl_decay_report, kl_expansion, representable_count};
use crate::meyer::WaveletType;
use crate::periodization::{find_gamma_min, spectral_grid, DEFAULT_N_1D, DEFAULT_N_2D};
use crate::sampler::{empirical_covariance, sample_field, Representation};
use crate::verify::{run_suite, Profile, VerifySettings};
use crate::wavelet::{max_level_for_grid, ProbeGrid, WaveletFamily, DEFAULT_INTERP_ORDER};

pub use output::VERSION;
use output::{num, Artifacts, Csv};

#[derive(Parser, Debug)]
#[command(
    name = "grf",
    version,
    about = "Periodic continuation and expansions of stationary Gaussian random fields"
)]
struct Cli {
    /// Output directory [default: $GRF_OUT_DIR, else the current directory]
    #[arg(long, global = true, env = "GRF_OUT_DIR")]
    out_dir: Option<PathBuf>,
    /// Worker threads [default: all cores]
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, Serialize)]
struct KernelArgs {
    /// Matérn smoothness
    #[arg(long, default_value_t = 0.5, allow_negative_numbers = true)]
    nu: f64,
    /// Matérn correlation length
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    lambda: f64,
    /// Half-width of exactness; the domain is [-delta/2, delta/2]^d
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    delta: f64,
    /// Torus half-width [default: the smallest admissible value]
    #[arg(long, allow_negative_numbers = true)]
    gamma: Option<f64>,
    /// Spatial dimension
    #[arg(long, default_value_t = 1)]
    d: usize,
    /// log2 of the grid size per axis [default: 14 for d = 1, 10 otherwise]
    #[arg(long)]
    j: Option<u32>,
    /// Bisection tolerance for the automatic gamma
    #[arg(long, default_value_t = 1e-4)]
    gtol: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum RepKind {
    Kl,
    Wavelet,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum ProfileArg {
    Quick,
    Full,
}

/// Inclusive level range written `a..b` (or a single level `a`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
struct LevelRange {
    lo: usize,
    hi: usize,
}

impl FromStr for LevelRange {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let parse = |t: &str| t.trim().parse::<usize>().map_err(|e| format!("bad level '{t}': {e}"));
        let (lo, hi) = match s.split_once("..") {
            Some((a, b)) => (parse(a)?, parse(b.trim_start_matches('='))?),
            None => {
                let l = parse(s)?;
                (l, l)
            }
        };
        if lo > hi {
            return Err(format!("empty level range {s}"));
        }
        Ok(Self { lo, hi })
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Smallest torus half-width with a nonnegative sampled spectrum
    GammaMin {
        #[command(flatten)]
        kernel: KernelArgs,
        /// Sweep a (nu, lambda) grid instead of a single point
        #[arg(long)]
        sweep: bool,
        /// Smoothness values of the sweep
        #[arg(long, value_delimiter = ',', default_value = "0.5,1,1.5,2,2.5,3,3.5,4")]
        nu_grid: Vec<f64>,
        /// Correlation lengths of the sweep
        #[arg(long, value_delimiter = ',', default_value = "0.25,0.5,0.75,1,1.25,1.5")]
        lambda_grid: Vec<f64>,
    },
    /// Sampled spectrum of the truncated kernel
    Spectrum {
        #[command(flatten)]
        kernel: KernelArgs,
    },
    /// Periodic KL eigenvalues and their decay
    Kl {
        #[command(flatten)]
        kernel: KernelArgs,
        /// Number of eigenpairs
        #[arg(long, default_value_t = 1024)]
        count: usize,
        /// First index of the decay fit
        #[arg(long, default_value_t = 32)]
        fit_lo: usize,
        /// Last index of the decay fit
        #[arg(long, default_value_t = 1024)]
        fit_hi: usize,
    },
    /// Filtered wavelets, level sums and localization fits
    Wavelets {
        #[command(flatten)]
        kernel: KernelArgs,
        /// Levels to synthesize, e.g. 0..5
        #[arg(long, default_value = "0..5")]
        levels: LevelRange,
        /// Odd interpolation order
        #[arg(long, default_value_t = DEFAULT_INTERP_ORDER)]
        interp_order: usize,
    },
    /// Field realizations and empirical covariances
    Sample {
        #[command(flatten)]
        kernel: KernelArgs,
        #[arg(long, value_enum, default_value_t = RepKind::Kl)]
        rep: RepKind,
        /// KL terms
        #[arg(long, default_value_t = 4096)]
        terms: usize,
        /// Highest wavelet level
        #[arg(long, default_value_t = 6)]
        max_level: usize,
        /// Number of realizations
        #[arg(long, default_value_t = 1000)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Uniform sampling points across the domain
        #[arg(long, default_value_t = 33)]
        points: usize,
    },
    /// Invariant suite
    Verify {
        #[command(flatten)]
        kernel: KernelArgs,
        #[arg(long, value_enum, default_value_t = ProfileArg::Quick)]
        profile: ProfileArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Monte Carlo mean of a 1D lognormal diffusion problem
    DemoPde {
        #[command(flatten)]
        kernel: KernelArgs,
        #[arg(long, value_enum, default_value_t = RepKind::Kl)]
        rep: RepKind,
        #[arg(long, default_value_t = 256)]
        terms: usize,
        #[arg(long, default_value_t = 6)]
        max_level: usize,
        /// Monte Carlo samples
        #[arg(long, default_value_t = 2000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Finite elements
        #[arg(long, default_value_t = 64)]
        elements: usize,
    },
}

/// The configuration echoed into every artifact.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub command: String,
    pub nu: f64,
    pub lambda: f64,
    pub delta: f64,
    pub gamma: Option<f64>,
    pub d: usize,
    pub j: u32,
    pub gtol: f64,
    pub levels: Option<(usize, usize)>,
    pub truncation: Option<String>,
    pub seed: Option<u64>,
    pub out_dir: String,
    pub options: serde_json::Value,
}

fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Config(msg.into()))
}

impl RunConfig {
    fn from_kernel(command: &str, k: &KernelArgs, out_dir: &std::path::Path) -> Self {
        let default_j = if k.d == 1 {
            DEFAULT_N_1D.trailing_zeros()
        } else {
            DEFAULT_N_2D.trailing_zeros()
        };
        Self {
            command: command.into(),
            nu: k.nu,
            lambda: k.lambda,
            delta: k.delta,
            gamma: k.gamma,
            d: k.d,
            j: k.j.unwrap_or(default_j),
            gtol: k.gtol,
            levels: None,
            truncation: None,
            seed: None,
            out_dir: out_dir.display().to_string(),
            options: json!({}),
        }
    }

    fn n(&self) -> usize {
        1usize << self.j
    }

    fn validate(&self, max_d: usize) -> Result<()> {
        MaternParams::new(self.nu, self.lambda, self.d)?;
        if self.d > max_d {
            return invalid(format!(
                "{} supports d <= {max_d}, got d = {}",
                self.command, self.d
            ));
        }
        let max_j = match self.d {
            1 => 24,
            2 => 12,
            _ => 8,
        };
        if !(6..=max_j).contains(&self.j) {
            return invalid(format!("j must lie in 6..={max_j} for d = {}, got {}", self.d, self.j));
        }
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return invalid(format!("delta must be positive, got {}", self.delta));
        }
        if let Some(g) = self.gamma {
            DomainSpec::new(self.delta, g, self.d)?;
        }
        if !(self.gtol > 0.0) {
            return invalid(format!("gtol must be positive, got {}", self.gtol));
        }
        if let Some((_, hi)) = self.levels {
            let top = max_level_for_grid(self.n());
            if hi > top {
                return invalid(format!("level {hi} exceeds {top}, the highest level for j = {}", self.j));
            }
        }
        Ok(())
    }

    fn kernel(&self) -> Result<Matern> {
        Ok(Matern::new(MaternParams::new(self.nu, self.lambda, self.d)?))
    }

    /// Given or automatically chosen domain geometry.
    fn resolve_spec(&self, k: &Matern, art: &mut Artifacts) -> Result<DomainSpec> {
        let gamma = match self.gamma {
            Some(g) => g,
            None => {
                let g = find_gamma_min(k, self.delta, self.n(), self.gtol)?;
                println!("gamma = {:.6} (automatic, {} evaluations)", g.gamma, g.evaluations);
                g.gamma
            }
        };
        art.resolve("gamma", gamma)?;
        DomainSpec::new(self.delta, gamma, self.d)
    }
}

/// Parses `argv` (program name first), runs the command and returns the
/// process exit code.
pub fn run_command<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let pool = match cli.threads {
        Some(0) => {
            eprintln!("error: --threads must be positive");
            return 2;
        }
        Some(n) => rayon::ThreadPoolBuilder::new().num_threads(n).build(),
        None => rayon::ThreadPoolBuilder::new().build(),
    };
    let pool = match pool {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start worker pool: {e}");
            return 1;
        }
    };
    let out_dir = cli.out_dir.clone().unwrap_or_else(|| PathBuf::from("."));
    match pool.install(|| execute(cli.command, &out_dir)) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Domain(_) | Error::Config(_) | Error::NotPositive { .. } => 2,
                _ => 1,
            }
        }
    }
}

fn report(paths: &[PathBuf]) {
    for p in paths {
        println!("wrote {}", p.display());
    }
}

fn execute(command: Command, out_dir: &std::path::Path) -> Result<i32> {
    match command {
        Command::GammaMin {
            kernel,
            sweep,
            nu_grid,
            lambda_grid,
        } => {
            let mut cfg = RunConfig::from_kernel("gamma-min", &kernel, out_dir);
            cfg.options = json!({ "sweep": sweep, "nu_grid": nu_grid, "lambda_grid": lambda_grid });
            cfg.validate(2)?;
            if sweep {
                for (&nu, &lambda) in nu_grid.iter().flat_map(|n| lambda_grid.iter().map(move |l| (n, l))) {
                    MaternParams::new(nu, lambda, cfg.d)?;
                }
            }
            let mut art = Artifacts::new(out_dir, "gamma-min", &cfg)?;
            let points: Vec<(f64, f64)> = if sweep {
                nu_grid
                    .iter()
                    .flat_map(|&n| lambda_grid.iter().map(move |&l| (n, l)))
                    .collect()
            } else {
                vec![(cfg.nu, cfg.lambda)]
            };
            let mut csv = Csv::new(&["nu", "lambda", "gamma_min", "evaluations"]);
            for (nu, lambda) in points {
                let k = Matern::new(MaternParams::new(nu, lambda, cfg.d)?);
                let g = find_gamma_min(&k, cfg.delta, cfg.n(), cfg.gtol)?;
                println!("nu = {nu}, lambda = {lambda}: gamma_min = {:.6}", g.gamma);
                csv.row(&[num(nu), num(lambda), num(g.gamma), g.evaluations.to_string()]);
            }
            art.csv("gammamin.csv", csv);
            report(&art.finish()?);
            Ok(0)
        }
        Command::Spectrum { kernel } => {
            let cfg = RunConfig::from_kernel("spectrum", &kernel, out_dir);
            cfg.validate(1)?;
            let k = cfg.kernel()?;
            let mut art = Artifacts::new(out_dir, "spectrum", &cfg)?;
            let spec = cfg.resolve_spec(&k, &mut art)?;
            let t = spectral_grid(&k, &spec, cfg.n())?;
            let pos = t.positivity();
            println!(
                "positivity: {} (min {:e}, max {:e}, clamped {})",
                if pos.pass { "pass" } else { "FAIL" },
                pos.min,
                pos.max,
                t.clamped_count()
            );
            art.resolve("positivity", pos)?;
            let mut csv = Csv::new(&["k", "omega_k", "value"]);
            for (kk, w, v) in t.rows_1d() {
                csv.row(&[kk.to_string(), num(w), num(v)]);
            }
            art.csv("spectrum.csv", csv);
            report(&art.finish()?);
            Ok(0)
        }
        Command::Kl {
            kernel,
            count,
            fit_lo,
            fit_hi,
        } => {
            let mut cfg = RunConfig::from_kernel("kl", &kernel, out_dir);
            cfg.truncation = Some(format!("kl:{count}"));
            cfg.options = json!({ "fit_lo": fit_lo, "fit_hi": fit_hi });
            cfg.validate(2)?;
            if fit_lo == 0 || fit_lo >= fit_hi || fit_hi > count {
                return invalid(format!("fit range {fit_lo}..={fit_hi} must lie inside 1..={count}"));
            }
            let k = cfg.kernel()?;
            let mut art = Artifacts::new(out_dir, "kl", &cfg)?;
            let spec = cfg.resolve_spec(&k, &mut art)?;
            let t = spectral_grid(&k, &spec, cfg.n())?;
            if count > representable_count(&t) {
                return invalid(format!(
                    "count {count} exceeds the {} eigenpairs available for j = {}",
                    representable_count(&t),
                    cfg.j
                ));
            }
            let e = kl_expansion(&t, count)?;
            let fit = kl_decay_report(&e, fit_lo, fit_hi)?;
            let expected = -2.0 * k.decay_exponent() / cfg.d as f64;
            println!("decay slope {:.4} over j in [{fit_lo}, {fit_hi}] (rate -2r/d = {expected})", fit.slope);
            let mut csv = Csv::new(&["j", "eigenvalue", "m", "parity"]);
            for (j, entry) in e.entries().iter().enumerate() {
                csv.row(&[
                    (j + 1).to_string(),
                    num(entry.eigenvalue),
                    entry.freq_label(),
                    entry.parity_label(),
                ]);
            }
            art.csv("kl.csv", csv);
            art.json(
                "kl_decay.json",
                json!({ "fit": fit, "j_lo": fit_lo, "j_hi": fit_hi, "expected_slope": expected }),
            )?;
            report(&art.finish()?);
            Ok(0)
        }
        Command::Wavelets {
            kernel,
            levels,
            interp_order,
        } => {
            let mut cfg = RunConfig::from_kernel("wavelets", &kernel, out_dir);
            cfg.levels = Some((levels.lo, levels.hi));
            cfg.options = json!({ "interp_order": interp_order });
            cfg.validate(1)?;
            let k = cfg.kernel()?;
            let mut art = Artifacts::new(out_dir, "wavelets", &cfg)?;
            let spec = cfg.resolve_spec(&k, &mut art)?;
            let t = spectral_grid(&k, &spec, cfg.n())?;
            let f = WaveletFamily::new(&t, levels.hi, interp_order)?;
            art.resolve("imag_residue", f.imag_residue())?;
            art.resolve("scaling_constant", f.scaling_constant())?;
            let eps = WaveletType::new(vec![1])?;
            let alpha = k.decay_exponent() - cfg.d as f64 / 2.0;
            let mut sums = Csv::new(&["level", "sup_sum", "log2_ratio"]);
            let mut fits = Vec::new();
            let mut prev: Option<f64> = None;
            for level in levels.lo..=levels.hi {
                let mut csv = Csv::new(&["x", "value"]);
                for (x, v) in f.mother(&eps, level)?.rows_1d() {
                    csv.row(&[num(x), num(v)]);
                }
                art.csv(&format!("wavelet_l{level}.csv"), csv);
                let s = f.level_sum(level, &ProbeGrid::Synthesis)?;
                let ratio = prev.map(|p| num((s / p).log2())).unwrap_or_default();
                println!("level {level}: sup level sum {s:.6e} {ratio}");
                sums.row(&[level.to_string(), num(s), ratio]);
                prev = Some(s);
                fits.push(f.localization_profile(&eps, level, alpha)?);
            }
            art.csv("levelsum.csv", sums);
            let sups: Vec<f64> = fits.iter().map(|d| d.sup_abs).collect();
            let lo = sups.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = sups.iter().copied().fold(0.0, f64::max);
            art.json(
                "localization.json",
                json!({ "alpha": alpha, "fits": fits, "sup_min": lo, "sup_max": hi, "sup_ratio": hi / lo }),
            )?;
            report(&art.finish()?);
            Ok(0)
        }
        Command::Sample {
            kernel,
            rep,
            terms,
            max_level,
            count,
            seed,
            points,
        } => {
            let mut cfg = RunConfig::from_kernel("sample", &kernel, out_dir);
            cfg.truncation = Some(truncation_label(rep, terms, max_level));
            cfg.seed = Some(seed);
            cfg.options = json!({ "rep": rep, "count": count, "points": points });
            if rep == RepKind::Wavelet {
                cfg.levels = Some((0, max_level));
            }
            cfg.validate(1)?;
            if points < 2 || count == 0 {
                return invalid("need at least 2 points and 1 realization");
            }
            let k = cfg.kernel()?;
            let mut art = Artifacts::new(out_dir, "sample", &cfg)?;
            let spec = cfg.resolve_spec(&k, &mut art)?;
            let t = spectral_grid(&k, &spec, cfg.n())?;
            let grid: Vec<Vec<f64>> = (0..points)
                .map(|i| vec![-0.5 * cfg.delta + cfg.delta * i as f64 / (points - 1) as f64])
                .collect();
            let reals = with_representation(&t, rep, terms, max_level, |r| sample_field(r, seed, count, &grid))?;
            let mut csv = Csv::new(&["realization", "x", "value"]);
            for r in &reals {
                for (x, v) in grid.iter().zip(&r.values) {
                    csv.row(&[r.id.to_string(), num(x[0]), num(*v)]);
                }
            }
            art.csv("samples.csv", csv);
            if count >= 2 {
                let centre = points / 2;
                let pairs: Vec<(usize, usize)> = (0..points).map(|i| (centre, i)).collect();
                let cov = empirical_covariance(&reals, &pairs)?;
                let mut csv = Csv::new(&["x", "x_prime", "estimate", "stderr", "kernel"]);
                for (&(a, b), c) in pairs.iter().zip(&cov) {
                    let (xa, xb) = (grid[a][0], grid[b][0]);
                    csv.row(&[num(xa), num(xb), num(c.estimate), num(c.stderr), num(k.cov(&[xa - xb]))]);
                }
                art.csv("empcov.csv", csv);
            }
            println!("{count} realizations on {points} points");
            report(&art.finish()?);
            Ok(0)
        }
        Command::Verify { kernel, profile, seed } => {
            let mut cfg = RunConfig::from_kernel("verify", &kernel, out_dir);
            cfg.seed = Some(seed);
            cfg.options = json!({ "profile": profile });
            cfg.validate(1)?;
            let k = cfg.kernel()?;
            let mut art = Artifacts::new(out_dir, "verify", &cfg)?;
            let spec = cfg.resolve_spec(&k, &mut art)?;
            let settings = VerifySettings {
                nu: cfg.nu,
                lambda: cfg.lambda,
                delta: cfg.delta,
                gamma: spec.gamma(),
                n: cfg.n(),
                seed,
            };
            let profile = match profile {
                ProfileArg::Quick => Profile::Quick,
                ProfileArg::Full => Profile::Full,
            };
            let checks = run_suite(&settings, profile)?;
            for c in &checks {
                println!("{} {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
            let failed = checks.iter().filter(|c| !c.pass).count();
            art.json("verify.json", &checks)?;
            report(&art.finish()?);
            println!("{} checks, {failed} failed", checks.len());
            Ok(if failed == 0 { 0 } else { 1 })
        }
        Command::DemoPde {
            kernel,
            rep,
            terms,
            max_level,
            samples,
            seed,
            elements,
        } => {
            let mut cfg = RunConfig::from_kernel("demo-pde", &kernel, out_dir);
            cfg.truncation = Some(truncation_label(rep, terms, max_level));
            cfg.seed = Some(seed);
            cfg.options = json!({ "rep": rep, "samples": samples, "elements": elements, "f": "1" });
            if rep == RepKind::Wavelet {
                cfg.levels = Some((0, max_level));
            }
            cfg.validate(1)?;
            if (cfg.delta - 1.0).abs() > 0.0 {
                return invalid("the diffusion demo lives on (-1/2, 1/2) and needs delta = 1");
            }
            let mesh = Mesh1D::new(elements)?;
            let k = cfg.kernel()?;
            let mut art = Artifacts::new(out_dir, "demo-pde", &cfg)?;
            let spec = cfg.resolve_spec(&k, &mut art)?;
            let t = spectral_grid(&k, &spec, cfg.n())?;
            let mf = with_representation(&t, rep, terms, max_level, |r| mc_mean_field(r, samples, seed, &mesh))?;
            let (u0, se) = mf.at(0.0);
            println!("mean u(0) = {u0:.6} +- {se:.2e} over {samples} samples");
            println!("a-priori bound violations: {}", mf.bound_violations);
            art.resolve("bound_violations", mf.bound_violations)?;
            let mut csv = Csv::new(&["x", "mean", "stderr"]);
            for i in 0..mf.x.len() {
                csv.row(&[num(mf.x[i]), num(mf.mean[i]), num(mf.stderr[i])]);
            }
            art.csv("meanfield.csv", csv);
            report(&art.finish()?);
            Ok(if mf.bound_violations == 0 { 0 } else { 1 })
        }
    }
}

fn truncation_label(rep: RepKind, terms: usize, max_level: usize) -> String {
    match rep {
        RepKind::Kl => format!("kl:{terms}"),
        RepKind::Wavelet => format!("wavelet:{max_level}"),
    }
}

fn with_representation<T>(
    t: &crate::periodization::SpectralTable,
    rep: RepKind,
    terms: usize,
    max_level: usize,
    f: impl FnOnce(&Representation) -> Result<T>,
) -> Result<T> {
    match rep {
        RepKind::Kl => {
            let available = representable_count(t);
            if terms == 0 || terms > available {
                return invalid(format!("terms must lie in 1..={available}, got {terms}"));
            }
            let e = kl_expansion(t, terms)?;
            f(&Representation::kl(&e, terms)?)
        }
        RepKind::Wavelet => {
            let fam = WaveletFamily::new(t, max_level, DEFAULT_INTERP_ORDER)?;
            f(&Representation::wavelet(&fam, max_level)?)
        }
    }
}

//! Periodic Karhunen-Loève expansion.
//!
//! On the torus `[-gamma, gamma]^d` the covariance operator of the periodic
//! process is diagonalized by tensorized trigonometric functions
//!
//! ```text
//! t_0 = (2 gamma)^(-1/2),  t_{2m} = gamma^(-1/2) cos(m pi z / gamma),  t_{2m-1} = gamma^(-1/2) sin(m pi z / gamma)
//! ```
//!
//! and the eigenvalue of every parity combination at frequency `m` is
//! `c_m(k_p)`. Restricting `sqrt(lambda_j) phi_j` to the domain gives a
//! (redundant) expansion system of the original field; no eigenproblem on
//! the domain itself is ever solved.

use std::cmp::Ordering;
use std::f64::consts::PI;

use serde::Serialize;

use crate::cutoff::DomainSpec;
use crate::error::{domain, Result};
use crate::fit::{fit_log_log, SlopeFit};
use crate::grid::unflatten;
use crate::periodization::{kp_fourier_coeff, SpectralTable};

/// Per-axis trigonometric factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Parity {
    Cos,
    Sin,
}

impl Parity {
    pub fn as_str(self) -> &'static str {
        match self {
            Parity::Cos => "cos",
            Parity::Sin => "sin",
        }
    }
}

/// One eigenpair of the periodic covariance operator.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KlEntry {
    pub eigenvalue: f64,
    pub freq: Vec<u32>,
    pub parity: Vec<Parity>,
}

impl KlEntry {
    fn norm_sq(&self) -> u64 {
        self.freq.iter().map(|&m| (m as u64) * (m as u64)).sum()
    }

    /// Label like `cos` (d = 1) or `cos*sin` (d = 2).
    pub fn parity_label(&self) -> String {
        self.parity
            .iter()
            .map(|p| p.as_str())
            .collect::<Vec<_>>()
            .join("*")
    }

    /// Frequency label like `3` or `3 1`.
    pub fn freq_label(&self) -> String {
        self.freq
            .iter()
            .map(|m| m.to_string())
            .collect::<Vec<_>>()
            .join(" ")
    }
}

/// Nonincreasing eigenvalues, then `(|m|, m, parity)` lexicographically.
fn entry_order(a: &KlEntry, b: &KlEntry) -> Ordering {
    b.eigenvalue
        .total_cmp(&a.eigenvalue)
        .then_with(|| a.norm_sq().cmp(&b.norm_sq()))
        .then_with(|| a.freq.cmp(&b.freq))
        .then_with(|| a.parity.cmp(&b.parity))
}

/// The `count` leading eigenpairs of the periodic covariance operator.
#[derive(Debug, Clone)]
pub struct KlExpansion {
    spec: DomainSpec,
    gamma: f64,
    d: usize,
    entries: Vec<KlEntry>,
    available: usize,
}

/// Number of eigenpairs representable from a table: every `m` with
/// `0 <= m_i <= N/4`, with `2^(#nonzero m_i)` parity combinations.
pub fn representable_count(t: &SpectralTable) -> usize {
    (1 + 2 * (t.n() / 4)).pow(t.d() as u32)
}

pub fn kl_expansion(t: &SpectralTable, count: usize) -> Result<KlExpansion> {
    t.require_positive()?;
    let available = representable_count(t);
    if count == 0 || count > available {
        return domain(format!(
            "requested {count} eigenpairs, table supports 1..={available}"
        ));
    }
    let d = t.d();
    let max_m = (t.n() / 4) as u32;
    let mut entries = Vec::with_capacity(available);
    let side = max_m as usize + 1;
    let mut idx = vec![0usize; d];
    for flat in 0..side.pow(d as u32) {
        unflatten(flat, side, d, &mut idx);
        let freq: Vec<u32> = idx.iter().map(|&m| m as u32).collect();
        let signed: Vec<i64> = idx.iter().map(|&m| m as i64).collect();
        push_parities(&freq, kp_fourier_coeff(t, &signed)?, &mut entries);
    }
    debug_assert_eq!(entries.len(), available);
    entries.sort_by(entry_order);
    entries.truncate(count);
    Ok(KlExpansion {
        spec: *t.spec(),
        gamma: t.gamma(),
        d,
        entries,
        available,
    })
}

fn push_parities(freq: &[u32], eigenvalue: f64, out: &mut Vec<KlEntry>) {
    let free: Vec<usize> = (0..freq.len()).filter(|&i| freq[i] != 0).collect();
    for mask in 0..(1usize << free.len()) {
        let mut parity = vec![Parity::Cos; freq.len()];
        for (bit, &axis) in free.iter().enumerate() {
            if mask >> bit & 1 == 1 {
                parity[axis] = Parity::Sin;
            }
        }
        out.push(KlEntry {
            eigenvalue,
            freq: freq.to_vec(),
            parity,
        });
    }
}

impl KlExpansion {
    pub fn spec(&self) -> &DomainSpec {
        &self.spec
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn count(&self) -> usize {
        self.entries.len()
    }

    /// Number of eigenpairs the underlying table could have provided.
    pub fn available(&self) -> usize {
        self.available
    }

    pub fn entries(&self) -> &[KlEntry] {
        &self.entries
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.eigenvalue).collect()
    }

    fn entry(&self, j: usize) -> Result<&KlEntry> {
        if j == 0 || j > self.entries.len() {
            return domain(format!("basis index {j} outside 1..={}", self.entries.len()));
        }
        Ok(&self.entries[j - 1])
    }

    /// The orthonormal eigenfunction `phi_{p,j}(x)` (1-based `j`).
    pub fn eigenfunction(&self, j: usize, x: &[f64]) -> Result<f64> {
        let e = self.entry(j)?;
        if x.len() != self.d {
            return domain(format!("point has {} coordinates, expected {}", x.len(), self.d));
        }
        Ok(trig_product(e, self.gamma, x))
    }

    /// `psi_j(x) = sqrt(lambda_{p,j}) phi_{p,j}(x)`.
    pub fn eval(&self, j: usize, x: &[f64]) -> Result<f64> {
        let e = self.entry(j)?;
        Ok(e.eigenvalue.sqrt() * self.eigenfunction(j, x)?)
    }

    /// `sum_{j > n} lambda_{p,j}` over the retained entries.
    pub fn tail_sum(&self, n: usize) -> f64 {
        self.entries.iter().skip(n).map(|e| e.eigenvalue).sum()
    }
}

fn trig_product(e: &KlEntry, gamma: f64, x: &[f64]) -> f64 {
    let inv_sqrt_gamma = gamma.sqrt().recip();
    e.freq
        .iter()
        .zip(&e.parity)
        .zip(x)
        .map(|((&m, &p), &z)| {
            if m == 0 {
                (2.0 * gamma).sqrt().recip()
            } else {
                let arg = m as f64 * PI * z / gamma;
                inv_sqrt_gamma
                    * match p {
                        Parity::Cos => arg.cos(),
                        Parity::Sin => arg.sin(),
                    }
            }
        })
        .product()
}

/// Log-log slope of `lambda_{p,j}` against `j` over `j_lo..=j_hi`.
pub fn kl_decay_report(e: &KlExpansion, j_lo: usize, j_hi: usize) -> Result<SlopeFit> {
    if j_lo == 0 || j_lo >= j_hi || j_hi > e.count() {
        return domain(format!(
            "decay range {j_lo}..={j_hi} invalid for {} eigenpairs",
            e.count()
        ));
    }
    let js: Vec<f64> = (j_lo..=j_hi).map(|j| j as f64).collect();
    let lams: Vec<f64> = (j_lo..=j_hi).map(|j| e.entries[j - 1].eigenvalue).collect();
    fit_log_log(&js, &lams)
}

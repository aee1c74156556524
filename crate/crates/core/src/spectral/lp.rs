//! Littlewood–Paley partition and Besov norms.
//!
//! The low-frequency symbol is `φ̃(r) = S((3/4 − r)·12)` with `S` the smooth step
//! of [`crate::numerics::smooth_step`], so `φ̃ = 1` on `[0, 2/3]` and `φ̃ = 0` on
//! `[3/4, ∞)`. The shell symbol is `ψ̃(r) = φ̃(r/2) − φ̃(r)`, supported in
//! `(2/3, 3/2)`, and the partition `φ̃(r) + Σ_N ψ̃(r/N)` telescopes to one.

use serde::Serialize;

use super::field::{PeriodicField, PointNorm};
use super::ops::require_zero_mean;
use crate::error::{Error, Result};
use crate::numerics::smooth_step;

/// `φ̃(r)`.
pub fn low_symbol(r: f64) -> f64 {
    smooth_step((0.75 - r) * 12.0)
}

/// `ψ̃(r)`.
pub fn shell_symbol(r: f64) -> f64 {
    low_symbol(0.5 * r) - low_symbol(r)
}

/// Dyadic shells available on an `n³` grid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LpPartition {
    pub shells: Vec<u64>,
}

impl LpPartition {
    /// Shells `1, 2, 4, …, n/2`; these cover every wavevector of the band.
    pub fn for_grid(n: usize) -> Self {
        let mut shells = Vec::new();
        let mut s = 1u64;
        while s <= (n / 2) as u64 {
            shells.push(s);
            s *= 2;
        }
        Self { shells }
    }

    /// `φ̃(r) + Σ_N ψ̃(r/N)` over the available shells.
    pub fn partition_sum(&self, r: f64) -> f64 {
        low_symbol(r)
            + self
                .shells
                .iter()
                .map(|&s| shell_symbol(r / s as f64))
                .sum::<f64>()
    }
}

fn check_shell(u: &PeriodicField, shell: u64) -> Result<()> {
    let nyquist = (u.n() / 2) as u64;
    if !shell.is_power_of_two() || shell > nyquist {
        return Err(Error::Range(format!(
            "shell N = {shell} must be a power of two not exceeding the Nyquist frequency {nyquist}"
        )));
    }
    Ok(())
}

fn radius(k: [f64; 3]) -> f64 {
    (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]).sqrt()
}

/// `P_N u`.
pub fn lp_project(u: &PeriodicField, shell: u64) -> Result<PeriodicField> {
    check_shell(u, shell)?;
    let mut out = u.clone();
    let s = shell as f64;
    out.apply_scalar_symbol(|k| shell_symbol(radius(k) / s));
    Ok(out)
}

/// `P_{≤N} u`, the low part plus all shells up to `N`.
pub fn lp_low(u: &PeriodicField, shell: u64) -> Result<PeriodicField> {
    check_shell(u, shell)?;
    let mut out = u.clone();
    let s = shell as f64;
    out.apply_scalar_symbol(|k| low_symbol(radius(k) / (2.0 * s)));
    Ok(out)
}

/// `P_{>N} u = u − P_{≤N} u`.
pub fn lp_high(u: &PeriodicField, shell: u64) -> Result<PeriodicField> {
    Ok(u.sub(&lp_low(u, shell)?))
}

/// Smallest even `2^a 3^b 5^c ≥ 3·reach + 1`, at most `cap`.
fn eval_grid_size(reach: usize, cap: usize) -> usize {
    let smooth = |mut v: usize| {
        for f in [2, 3, 5] {
            while v % f == 0 {
                v /= f;
            }
        }
        v == 1
    };
    let mut size = (3 * reach + 1).max(4);
    while size < cap && !(size % 2 == 0 && smooth(size)) {
        size += 1;
    }
    size.min(cap)
}

/// Integrability exponent of a Besov norm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BesovP {
    Two,
    Infinity,
}

/// Besov norm together with its per-shell contributions `‖P_N u‖_{L^p}`.
#[derive(Debug, Clone, Serialize)]
pub struct BesovReport {
    pub value: f64,
    pub shells: Vec<(u64, f64)>,
}

/// `‖u‖_{B^s_{p,q}} = ‖N^s ‖P_N u‖_{L^p}‖_{ℓ^q}` over the dyadic shells.
///
/// `L²` norms use the averaged normalization and Parseval; `L^∞` norms are grid
/// sup norms on `oversample³` translates of an evaluation grid. The evaluation
/// grid of shell `N` is the smallest 5-smooth even size whose band holds
/// `|ξ| < 3N/2`, capped at the base grid. `q = ∞` is allowed.
pub fn besov_norm(
    u: &PeriodicField,
    s: f64,
    p: BesovP,
    q: f64,
    oversample: usize,
) -> Result<BesovReport> {
    require_zero_mean(u, "Besov norm")?;
    if !(q >= 1.0) {
        return Err(Error::Range(format!(
            "Besov summability q = {q} must be at least 1"
        )));
    }
    let partition = LpPartition::for_grid(u.n());
    let mut shells = Vec::with_capacity(partition.shells.len());
    for &n in &partition.shells {
        let pn = lp_project(u, n)?;
        let amp = if pn.max_coeff() == 0.0 {
            0.0
        } else {
            match p {
                BesovP::Two => pn.mean_square().sqrt(),
                BesovP::Infinity => {
                    let reach = (u.cutoff() as u64).min((3 * n).div_ceil(2)) as usize;
                    let size = eval_grid_size(reach, u.n());
                    let coarse = if size < u.n() { pn.resample(size)? } else { pn };
                    coarse.sup(oversample, PointNorm::Euclidean).value
                }
            }
        };
        shells.push((n, amp));
    }
    let weighted = shells.iter().map(|&(n, a)| (n as f64).powf(s) * a);
    let value = if q.is_infinite() {
        weighted.fold(0.0, f64::max)
    } else {
        weighted.map(|v| v.powf(q)).sum::<f64>().powf(1.0 / q)
    };
    Ok(BesovReport { value, shells })
}

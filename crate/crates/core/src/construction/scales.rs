use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::fft::band_cutoff;

/// Target shear `Θ sin(x·η)` that the cascade delivers at low frequency.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetSpec {
    pub theta: [f64; 3],
    pub eta: [i64; 3],
    /// Error tolerance used when reporting the error field.
    pub epsilon: f64,
    /// Highest derivative order of the error field to report.
    pub n_max: usize,
}

impl TargetSpec {
    pub fn validate(&self) -> Result<()> {
        let dot: f64 = (0..3).map(|i| self.theta[i] * self.eta[i] as f64).sum();
        if self.theta_norm() == 0.0 || self.eta.iter().all(|&c| c == 0) {
            return Err(Error::Config(
                "theta_star and eta_star must both be non-zero vectors".into(),
            ));
        }
        if dot != 0.0 {
            return Err(Error::Config(format!(
                "theta_star · eta_star = {dot} but the target must satisfy Θ·η = 0"
            )));
        }
        Ok(())
    }

    pub fn theta_norm(&self) -> f64 {
        self.theta.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    pub fn eta_norm(&self) -> f64 {
        self.eta.iter().map(|&c| (c * c) as f64).sum::<f64>().sqrt()
    }

    pub fn eta_f64(&self) -> [f64; 3] {
        self.eta.map(|c| c as f64)
    }

    pub fn theta_hat(&self) -> [f64; 3] {
        let n = self.theta_norm();
        self.theta.map(|c| c / n)
    }

    /// Amplification ratio `|Θ|/|η|`.
    pub fn ratio(&self) -> f64 {
        self.theta_norm() / self.eta_norm()
    }

    /// `c_* = ‖η̂ ⊙ Θ̂‖_max`.
    pub fn c_star(&self) -> f64 {
        let e = self.eta_f64().map(|c| c / self.eta_norm());
        crate::geometry::SymMat3::sym_product(e, self.theta_hat()).max_norm()
    }
}

/// Number of cascade steps: fixed or chosen from the target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum KStar {
    Auto,
    Fixed(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleParams {
    pub b: f64,
    pub gamma: f64,
    pub a: f64,
    pub kstar: KStar,
    pub epsilon0: f64,
}

/// Frequency and amplitude ladders of the cascade.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleTable {
    pub target: TargetSpec,
    pub b: f64,
    pub gamma: f64,
    pub a: f64,
    pub kstar: usize,
    pub epsilon0: f64,
    /// Grid size the table was validated against.
    pub grid: usize,
    /// `N_k`, `k = 0..=k_*`.
    pub n: Vec<u64>,
    /// `M_k`, `k = 0..=k_*`; entry 0 is unused and stored as 0.
    pub m: Vec<u64>,
    /// `ℓ_k`, `k = 0..k_*`.
    pub ell: Vec<f64>,
    /// `C_k`, `k = 0..=k_*`.
    pub c: Vec<f64>,
}

/// Ceiling that treats values within a relative `1e-9` of an integer as that integer,
/// so exact powers such as `16^{5/4} = 32` are not pushed up by rounding.
pub fn tolerant_ceil(x: f64) -> u64 {
    let r = x.round();
    if (x - r).abs() <= 1e-9 * x.abs().max(1.0) {
        r as u64
    } else {
        x.ceil() as u64
    }
}

/// Smallest `k ≥ 1` with `ratio^{2^{-k}} ≤ 101/100`.
pub fn choose_kstar(ratio: f64) -> Result<usize> {
    if !(ratio >= 1.0) || !ratio.is_finite() {
        return Err(Error::Config(format!(
            "|Θ*|/|η*| = {ratio} must be at least 1 for a cascade to be requested"
        )));
    }
    let target = (1.01f64).ln();
    let lr = ratio.ln();
    let mut k = 1;
    while lr / 2f64.powi(k as i32) > target {
        k += 1;
    }
    Ok(k)
}

/// Populates the ladders and checks every parameter window, including that the
/// grid resolves the highest frequency.
pub fn build_scales(target: &TargetSpec, params: &ScaleParams, grid: usize) -> Result<ScaleTable> {
    target.validate()?;
    let ScaleParams {
        b,
        gamma,
        a,
        kstar,
        epsilon0,
    } = *params;
    if !(b > 1.0 && b < 2.0) {
        return Err(Error::Config(format!("b = {b} violates 1 < b < 2")));
    }
    let (lo, hi) = ((b + 1.0) / (2.0 * b), (5.0 - b) / 4.0);
    if !(gamma > lo && gamma < hi) {
        return Err(Error::Config(format!(
            "gamma = {gamma} violates (b+1)/(2b) < γ < (5−b)/4, i.e. {lo:.6} < γ < {hi:.6}"
        )));
    }
    if !(a > 1.0) {
        return Err(Error::Config(format!("A = {a} violates A > 1")));
    }
    if !(epsilon0 > 0.0 && epsilon0 < 1.0) {
        return Err(Error::Config(format!(
            "epsilon0 = {epsilon0} violates 0 < ε₀ < 1"
        )));
    }
    let kstar = match kstar {
        KStar::Fixed(0) => {
            return Err(Error::Config("k_star = 0 violates k_* ≥ 1".into()));
        }
        KStar::Fixed(k) => k,
        KStar::Auto => choose_kstar(target.ratio())?,
    };
    let eta = target.eta_norm();
    let ratio = target.ratio();
    let top_real = eta * a.powf(b.powi(kstar as i32) - 1.0);
    if !(top_real <= (grid / 4) as f64) {
        return Err(Error::Resolution(format!(
            "N_{kstar} ≈ {top_real:.3e} needs a grid of at least 4·N_{kstar}, far beyond n = {grid}"
        )));
    }
    let mut n = vec![eta.ceil() as u64];
    let mut m = vec![0u64];
    for k in 1..=kstar {
        let bk = b.powi(k as i32);
        n.push(tolerant_ceil(eta * a.powf(bk - 1.0)));
        m.push(tolerant_ceil(eta * a.powf(gamma * bk - 1.0)));
    }
    for k in 1..=kstar {
        if m[k] >= n[k] {
            return Err(Error::Config(format!(
                "M_{k} = {} is not below N_{k} = {}; increase A",
                m[k], n[k]
            )));
        }
        if n[k] <= n[k - 1] {
            return Err(Error::Config(format!(
                "N_{k} = {} does not exceed N_{} = {}; increase A",
                n[k],
                k - 1,
                n[k - 1]
            )));
        }
    }
    let ell = (0..kstar)
        .map(|k| (n[k] as f64).powf(-0.75) * (n[k + 1] as f64).powf(-0.25))
        .collect();
    let c = (0..=kstar)
        .map(|k| n[k] as f64 * ratio.powf(0.5f64.powi(k as i32)))
        .collect();
    let top = n[kstar];
    if (grid as u64) < 4 * top {
        return Err(Error::Resolution(format!(
            "grid n = {grid} is below 4·N_{kstar} = {}; the cascade cannot be resolved",
            4 * top
        )));
    }
    let cutoff = band_cutoff(grid) as u64;
    if top > cutoff {
        return Err(Error::Resolution(format!(
            "N_{kstar} = {top} exceeds the dealiased cutoff {cutoff} of the n = {grid} grid"
        )));
    }
    Ok(ScaleTable {
        target: target.clone(),
        b,
        gamma,
        a,
        kstar,
        epsilon0,
        grid,
        n,
        m,
        ell,
        c,
    })
}

impl ScaleTable {
    /// Largest relative gap between `C_{k+1}²` and `N_k⁻¹ N_{k+1}² C_k`.
    pub fn c_relation_defect(&self) -> f64 {
        (0..self.kstar)
            .map(|k| {
                let lhs = self.c[k + 1] * self.c[k + 1];
                let rhs =
                    self.n[k + 1] as f64 * self.n[k + 1] as f64 * self.c[k] / self.n[k] as f64;
                (lhs - rhs).abs() / lhs
            })
            .fold(0.0, f64::max)
    }

    /// Decay rate of `ψ_k`: `N_k²`, or `|η|²` at `k = 0`.
    pub fn decay_rate(&self, k: usize) -> f64 {
        if k == 0 {
            let e = self.target.eta_norm();
            e * e
        } else {
            let nk = self.n[k] as f64;
            nk * nk
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn target(theta: [f64; 3], eta: [i64; 3]) -> TargetSpec {
        TargetSpec {
            theta,
            eta,
            epsilon: 0.1,
            n_max: 2,
        }
    }

    fn params(a: f64, k: usize) -> ScaleParams {
        ScaleParams {
            b: 1.5,
            gamma: 0.85,
            a,
            kstar: KStar::Fixed(k),
            epsilon0: 0.5,
        }
    }

    #[test]
    fn ladder_with_eta_four() {
        let t = target([1.0, 0.0, 0.0], [0, 0, 4]);
        let s = build_scales(&t, &params(10.0, 2), 512).unwrap();
        assert_eq!(s.n, vec![4, 13, 72]);
    }

    #[test]
    fn reference_ladder() {
        let t = target([32.0, 0.0, 0.0], [0, 0, 2]);
        let s = build_scales(&t, &params(16.0, 2), 256).unwrap();
        assert_eq!(s.n, vec![2, 8, 64]);
        assert_eq!(s.m[1..], [5, 26]);
        assert!((s.c[2] - 2.0 * 64.0).abs() < 1e-12);
        assert!(s.c_relation_defect() < 1e-12);
    }

    #[test]
    fn kstar_choices() {
        assert_eq!(choose_kstar(16.0).unwrap(), 9);
        assert_eq!(choose_kstar(1.0).unwrap(), 1);
        assert_eq!(choose_kstar(1.01).unwrap(), 1);
        assert!(choose_kstar(0.5).is_err());
    }

    #[test]
    fn gamma_window_is_named() {
        let t = target([32.0, 0.0, 0.0], [0, 0, 2]);
        let mut p = params(16.0, 2);
        p.gamma = 0.9;
        let err = build_scales(&t, &p, 256).unwrap_err();
        assert!(err.to_string().contains("(b+1)/(2b) < γ < (5−b)/4"));
    }

    #[test]
    fn small_grid_is_a_resolution_error() {
        let t = target([32.0, 0.0, 0.0], [0, 0, 2]);
        let err = build_scales(&t, &params(16.0, 2), 128).unwrap_err();
        assert!(matches!(err, Error::Resolution(_)));
    }

    #[test]
    fn non_orthogonal_target_is_rejected() {
        let t = target([1.0, 0.0, 1.0], [0, 0, 2]);
        assert!(matches!(t.validate(), Err(Error::Config(_))));
    }

    #[test]
    fn c_star_of_orthogonal_axes() {
        let t = target([32.0, 0.0, 0.0], [0, 0, 2]);
        assert!((t.c_star() - 0.5).abs() < 1e-15);
    }
}

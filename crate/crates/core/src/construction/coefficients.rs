use std::f64::consts::PI;

use log::{info, warn};
use num_complex::Complex64;
use serde::Serialize;

use super::scales::ScaleTable;
use crate::error::{Error, Result};
use crate::geometry::{rat_to_f64, MikadoFamily, NashSystem, SymMat3, NASH_RADIUS, SYM_PAIRS};
use crate::spectral::{
    fft::band_cutoff, leray_laplacian, modified_sym_gradient, mollify, tensor_divergence,
    PeriodicField, PointNorm,
};

/// Grid-sup refinement inside the induction.
pub const INDUCTION_OVERSAMPLE: usize = 2;

/// `Ψ_{j,k}(·, 0) = φ_j(M x) sin(N η_j·x)` truncated to the band of an `n³` grid.
///
/// Built from the exact Fourier coefficients of `φ_j`; carriers `N η_j` and
/// `M` must themselves fit in the band.
pub fn mikado_wave(
    family: &MikadoFamily,
    j: usize,
    m_scale: u64,
    n_scale: u64,
    grid: usize,
) -> Result<PeriodicField> {
    let cutoff = band_cutoff(grid) as u64;
    if n_scale > cutoff || m_scale > cutoff {
        return Err(Error::Resolution(format!(
            "Mikado wave with N = {n_scale}, M = {m_scale} does not fit the band |ξ_i| ≤ {cutoff} of n = {grid}"
        )));
    }
    let line = &family.lines[j];
    let mut out = PeriodicField::zeros(grid, 1)?;
    let (m, n) = (m_scale as i64, n_scale as i64);
    let reach = (cutoff as i64 + n) / m + 1;
    let mut eta = [0i64; 3];
    eta[line.eta_axis] = 1;
    for a0 in -reach..=reach {
        for a1 in -reach..=reach {
            for a2 in -reach..=reach {
                let mu = [a0, a1, a2];
                if !line.is_transverse(mu) {
                    continue;
                }
                let c = family.phi_coefficient(j, mu);
                // sin(Nη·x) = (e^{iNη·x} − e^{−iNη·x}) / 2i
                let half = Complex64::new(0.0, -0.5) * c;
                let plus = [
                    m * a0 + n * eta[0],
                    m * a1 + n * eta[1],
                    m * a2 + n * eta[2],
                ];
                let minus = [
                    m * a0 - n * eta[0],
                    m * a1 - n * eta[1],
                    m * a2 - n * eta[2],
                ];
                out.add_stored(0, plus, half);
                out.add_stored(0, minus, -half);
            }
        }
    }
    Ok(out)
}

/// `B_{j,k} = ⨏ Ψ_{j,k}²(x, 0) dx` of the band-truncated wave, by Parseval.
pub fn compute_b(family: &MikadoFamily, j: usize, k: usize, scales: &ScaleTable) -> Result<f64> {
    if k == 0 || k > scales.kstar {
        return Err(Error::Range(format!(
            "B_(j,k) is defined for 1 ≤ k ≤ {}, got k = {k}",
            scales.kstar
        )));
    }
    Ok(mikado_wave(family, j, scales.m[k], scales.n[k], scales.grid)?.mean_square())
}

/// Diagnostics of one induction stage `k ≥ 1`.
#[derive(Debug, Clone, Serialize)]
pub struct StageReport {
    pub k: usize,
    /// `‖𝒟ψ_{k−1}⁰‖_∞` (entry-wise maximum, oversampled grid).
    pub sup_dpsi_prev: f64,
    pub sup_location: [usize; 3],
    pub sup_offset: [usize; 3],
    /// Largest `‖X − Id‖_max` over the grid, at most `1/7`.
    pub nash_argument_radius: f64,
    pub b: [f64; 6],
    /// `⨏φ²/2`, the value of `B` for an untruncated wave with `M ≪ N`.
    pub b_leading: f64,
    pub p: f64,
    pub a_min: [f64; 6],
    pub a_max: [f64; 6],
    /// `max_x ‖Σ_j B a_j² θ_j⊗θ_j + 4N_{k−1}𝒟ψ_{k−1}⁰ − p Id‖_max / (4N_{k−1}‖𝒟ψ_{k−1}⁰‖_∞)`.
    pub recursion_residual: f64,
    pub warnings: Vec<String>,
}

/// Output of the coefficient induction.
#[derive(Debug, Clone)]
pub struct CoefficientTable {
    pub scales: ScaleTable,
    pub family: MikadoFamily,
    pub nash: NashSystem,
    /// `ψ_k⁰`, `k = 0..=k_*`.
    pub psi0: Vec<PeriodicField>,
    /// `Σ_j a_{j,k} Ψ_{j,k}⁰ θ_j` before mollification and scaling; at `k = 0`
    /// this is `a_{1,0} sin(x·η) Θ̂`.
    pub carrier: Vec<PeriodicField>,
    pub stages: Vec<StageReport>,
    /// `‖𝒟ψ_k⁰‖_∞`, `k = 0..=k_*`.
    pub sup_dpsi: Vec<f64>,
    /// Warnings for `N_k‖𝒟ψ_k⁰‖_∞` outside `[c_*^{2^{−k}}, 31669^{1−2^{−k}}]`.
    pub dpsi_window_warnings: Vec<String>,
}

/// `ψ_0⁰ = −(N_0|η|)⁻¹ sin(x·η) Θ̂` and its carrier `a_{1,0} sin(x·η) Θ̂`.
fn initial_potential(scales: &ScaleTable) -> Result<(PeriodicField, PeriodicField)> {
    let t = &scales.target;
    let n0 = scales.n[0] as f64;
    let a10 = -n0 / t.eta_norm();
    let th = t.theta_hat();
    let mut carrier = PeriodicField::zeros(scales.grid, 3)?;
    for (c, &th_c) in th.iter().enumerate() {
        if th_c != 0.0 {
            carrier.set_mode(c, t.eta, Complex64::new(0.0, -0.5 * a10 * th_c))?;
        }
    }
    let psi = carrier.scaled(1.0 / (n0 * n0));
    Ok((psi, carrier))
}

/// `Γ_j²(Id − D/(7S))` as a band field; affine in `D`.
fn gamma_sq_field(nash: &NashSystem, d: &PeriodicField, sup: f64, j: usize) -> PeriodicField {
    let weights: Vec<f64> = (0..6)
        .map(|s| -rat_to_f64(&nash.b[j][s]) / (7.0 * sup))
        .collect();
    let mut g = d.map_modes(1, |_, a, out| {
        out[0] = a.iter().zip(&weights).map(|(v, w)| v * *w).sum();
    });
    g.add_mode(0, [0, 0, 0], Complex64::new(0.5, 0.0))
        .expect("zero mode is in the band");
    g
}

impl CoefficientTable {
    /// `a_{j,k}` on the base grid, recomputed from `ψ_{k−1}⁰`.
    pub fn coefficient_grid(&self, k: usize, j: usize) -> Result<Vec<f64>> {
        if k == 0 || k > self.scales.kstar {
            return Err(Error::Range(format!(
                "a_(j,k) fields exist for 1 ≤ k ≤ {}, got k = {k}",
                self.scales.kstar
            )));
        }
        let d = modified_sym_gradient(&self.psi0[k - 1])?;
        let sup = self.sup_dpsi[k - 1];
        let b = self.stages[k - 1].b[j];
        let amp = (28.0 * self.scales.n[k - 1] as f64 * sup / b).sqrt();
        let mut g = gamma_sq_field(&self.nash, &d, sup, j).to_grid(0);
        g.iter_mut().for_each(|v| *v = amp * v.max(0.0).sqrt());
        Ok(g)
    }

    /// `a_{j,k}` projected onto the band, for snapshots.
    pub fn coefficient_field(&self, k: usize, j: usize) -> Result<PeriodicField> {
        let g = self.coefficient_grid(k, j)?;
        PeriodicField::from_grids(self.scales.grid, &[&g])
    }

    /// `Σ_j B_{j,k} a_{j,k}² θ_j⊗θ_j` as a band tensor field.
    pub fn transfer_tensor(&self, k: usize) -> Result<PeriodicField> {
        let mut out = PeriodicField::zeros(self.scales.grid, 6)?;
        for j in 0..6 {
            let mut h = self.coefficient_grid(k, j)?;
            let b = self.stages[k - 1].b[j];
            h.iter_mut().for_each(|v| *v = b * *v * *v);
            let hf = PeriodicField::from_grids(self.scales.grid, &[&h])?;
            let tt = SymMat3::outer(self.nash.theta_f64(j));
            for s in 0..6 {
                if tt.0[s] != 0.0 {
                    let src: Vec<Complex64> = hf.comp(0).iter().map(|v| v * tt.0[s]).collect();
                    out.comp_mut(s)
                        .iter_mut()
                        .zip(src)
                        .for_each(|(o, v)| *o += v);
                }
            }
        }
        Ok(out)
    }

    /// Relative sup-norm residual of
    /// `ℙ div R_{k+1}^{low} = −2C_{k+1}²N_k ℙΔψ_k⁰ e^{−2N_{k+1}²t}`.
    pub fn verify_key_cancellation(&self, k: usize, t: f64) -> Result<f64> {
        let ks = self.scales.kstar;
        if k >= ks {
            return Err(Error::Range(format!(
                "key cancellation is defined for 0 ≤ k < k_* = {ks}, got k = {k}"
            )));
        }
        if !(t >= 0.0) {
            return Err(Error::Range(format!("time t = {t} must be non-negative")));
        }
        let c1 = self.scales.c[k + 1];
        let n1 = self.scales.n[k + 1] as f64;
        let decay = (-2.0 * n1 * n1 * t).exp();
        let r_low = self.transfer_tensor(k + 1)?.scaled(c1 * c1 * decay);
        let lhs = crate::spectral::leray_project(&tensor_divergence(&r_low)?)?;
        let rhs = leray_laplacian(&self.psi0[k])?
            .scaled(-2.0 * c1 * c1 * self.scales.n[k] as f64 * decay);
        let scale = rhs.sup_norm(1);
        if scale == 0.0 {
            return Ok(lhs.sup_norm(1));
        }
        Ok(lhs.sub(&rhs).sup_norm(1) / scale)
    }
}

/// Runs the coefficient induction for `k = 1..=k_*`.
pub fn build_coefficients(
    scales: &ScaleTable,
    family: &MikadoFamily,
    nash: &NashSystem,
) -> Result<CoefficientTable> {
    let grid = scales.grid;
    let (psi_initial, carrier_initial) = initial_potential(scales)?;
    let mut psi0 = vec![psi_initial];
    let mut carrier = vec![carrier_initial];
    let mut stages = Vec::new();
    let mut sup_dpsi = Vec::new();
    let b_leading = 0.5 * family.mean_phi_sq();

    for k in 1..=scales.kstar {
        let n_prev = scales.n[k - 1] as f64;
        let d = modified_sym_gradient(&psi0[k - 1])?;
        let sup = d.sup(INDUCTION_OVERSAMPLE, PointNorm::MaxEntry);
        if !(sup.value > 0.0) {
            return Err(Error::DegenerateInduction { k });
        }
        sup_dpsi.push(sup.value);
        info!("stage k = {k}: ‖𝒟ψ_{}⁰‖_∞ = {:.6e}", k - 1, sup.value);

        let mut b = [0.0; 6];
        let mut waves = Vec::with_capacity(6);
        for (j, bj) in b.iter_mut().enumerate() {
            let w = mikado_wave(family, j, scales.m[k], scales.n[k], grid)?;
            *bj = w.mean_square();
            if !(*bj > 0.0) {
                return Err(Error::DegenerateInduction { k });
            }
            waves.push(w);
        }

        // Nash argument on the base grid
        let d_grids: Vec<Vec<f64>> = (0..6).map(|s| d.to_grid(s)).collect();
        let mut radius = 0.0f64;
        let mut worst = 0usize;
        for idx in 0..d_grids[0].len() {
            let r = d_grids.iter().fold(0.0f64, |acc, g| acc.max(g[idx].abs())) / (7.0 * sup.value);
            if r > radius {
                radius = r;
                worst = idx;
            }
        }
        if radius > NASH_RADIUS * (1.0 + 1e-12) {
            return Err(Error::DecompositionDomain {
                k,
                norm: radius,
                index: [worst / (grid * grid), (worst / grid) % grid, worst % grid],
            });
        }

        let mut sum = PeriodicField::zeros(grid, 3)?;
        let mut transfer = Vec::with_capacity(6);
        let mut a_min = [f64::INFINITY; 6];
        let mut a_max = [0.0f64; 6];
        for j in 0..6 {
            let amp = (28.0 * n_prev * sup.value / b[j]).sqrt();
            let mut a = gamma_sq_field(nash, &d, sup.value, j).to_grid(0);
            for v in a.iter_mut() {
                if !(*v > 0.0) {
                    return Err(Error::DecompositionDomain {
                        k,
                        norm: radius,
                        index: [0; 3],
                    });
                }
                *v = amp * v.sqrt();
                a_min[j] = a_min[j].min(*v);
                a_max[j] = a_max[j].max(*v);
            }
            let mut prod = waves[j].to_grid(0);
            prod.iter_mut().zip(&a).for_each(|(p, av)| *p *= av);
            let pf = PeriodicField::from_grids(grid, &[&prod])?;
            let th = nash.theta_f64(j);
            for (c, &th_c) in th.iter().enumerate() {
                if th_c != 0.0 {
                    sum.comp_mut(c)
                        .iter_mut()
                        .zip(pf.comp(0))
                        .for_each(|(o, v)| *o += v * th_c);
                }
            }
            a.iter_mut().for_each(|v| *v = b[j] * *v * *v);
            transfer.push(a);
        }

        // pointwise recursion residual
        let npts = transfer[0].len();
        let p = transfer.iter().map(|h| h.iter().sum::<f64>()).sum::<f64>() / (3.0 * npts as f64);
        let thetas: Vec<SymMat3> = (0..6).map(|j| SymMat3::outer(nash.theta_f64(j))).collect();
        let mut worst_res = 0.0f64;
        for (s, &(r, c)) in SYM_PAIRS.iter().enumerate() {
            let iso = if r == c { p } else { 0.0 };
            for idx in 0..npts {
                let mut lhs = 4.0 * n_prev * d_grids[s][idx] - iso;
                for j in 0..6 {
                    lhs += transfer[j][idx] * thetas[j].0[s];
                }
                worst_res = worst_res.max(lhs.abs());
            }
        }
        drop(transfer);
        drop(d_grids);
        let recursion_residual = worst_res / (4.0 * n_prev * sup.value);

        let mut warnings = Vec::new();
        for j in 0..6 {
            if a_min[j] < 1.0 || a_max[j] > 32000.0 {
                let msg = format!(
                    "a_({},{k}) ranges over [{:.4e}, {:.4e}], outside [1, 32000]",
                    j + 1,
                    a_min[j],
                    a_max[j]
                );
                warn!("{msg}");
                warnings.push(msg);
            }
            if b[j] < 1.0 / 1131.0 || b[j] > 1.0 / 1130.0 {
                let msg = format!(
                    "B_({},{k}) = {:.6e} lies outside [1/1131, 1/1130]",
                    j + 1,
                    b[j]
                );
                warn!("{msg}");
                warnings.push(msg);
            }
        }

        let nk = scales.n[k] as f64;
        let smoothed = if k < scales.kstar {
            mollify(&sum, scales.ell[k])?
        } else {
            sum.clone()
        };
        psi0.push(smoothed.scaled(1.0 / (nk * nk)));
        carrier.push(sum);
        stages.push(StageReport {
            k,
            sup_dpsi_prev: sup.value,
            sup_location: sup.index,
            sup_offset: sup.offset,
            nash_argument_radius: radius,
            b,
            b_leading,
            p,
            a_min,
            a_max,
            recursion_residual,
            warnings,
        });
    }

    let last = modified_sym_gradient(&psi0[scales.kstar])?;
    sup_dpsi.push(last.sup(INDUCTION_OVERSAMPLE, PointNorm::MaxEntry).value);

    let c_star = scales.target.c_star();
    let mut dpsi_window_warnings = Vec::new();
    for (k, s) in sup_dpsi.iter().enumerate() {
        let e = 0.5f64.powi(k as i32);
        let (lo, hi) = (c_star.powf(e), 31669f64.powf(1.0 - e));
        let val = scales.n[k] as f64 * s;
        if val < lo * (1.0 - 1e-12) || val > hi * (1.0 + 1e-12) {
            let msg = format!("N_{k}‖𝒟ψ_{k}⁰‖_∞ = {val:.6e} lies outside [{lo:.6e}, {hi:.6e}]");
            warn!("{msg}");
            dpsi_window_warnings.push(msg);
        }
    }

    Ok(CoefficientTable {
        scales: scales.clone(),
        family: family.clone(),
        nash: nash.clone(),
        psi0,
        carrier,
        stages,
        sup_dpsi,
        dpsi_window_warnings,
    })
}

/// `1/(360π)`, the limit of `B_{j,k}` as `ε₀ → 0` and `M_k/N_k → 0`.
pub fn b_limit() -> f64 {
    1.0 / (360.0 * PI)
}

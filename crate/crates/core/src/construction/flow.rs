use num_complex::Complex64;
use serde::Serialize;

use super::coefficients::CoefficientTable;
use super::scales::TargetSpec;
use crate::error::{Error, Result};
use crate::spectral::{
    besov_norm, laplacian, leray_laplacian, leray_project, outer_square_stats, tensor_divergence,
    BesovP, PeriodicField,
};

/// Oversampling used for reported sup norms.
pub const REPORT_OVERSAMPLE: usize = 2;

/// One term `amplitude·(1 − e^{−activation·t})·e^{−decay·t}·shape` of the flow.
#[derive(Debug, Clone)]
struct Component {
    shape: PeriodicField,
    amplitude: f64,
    /// Zero when the term is present from `t = 0`.
    activation: f64,
    decay: f64,
}

impl Component {
    fn factor(&self, t: f64) -> f64 {
        let on = if self.activation > 0.0 {
            -(-self.activation * t).exp_m1()
        } else {
            1.0
        };
        self.amplitude * on * (-self.decay * t).exp()
    }

    fn factor_rate(&self, t: f64) -> f64 {
        let damp = (-self.decay * t).exp();
        if self.activation > 0.0 {
            let rise = (-self.activation * t).exp();
            self.amplitude * damp * (self.activation * rise + self.decay * (rise - 1.0))
        } else {
            -self.amplitude * self.decay * damp
        }
    }
}

/// The principal flow `v = Σ_k v_k` with closed-form time dependence.
#[derive(Debug, Clone)]
pub struct PrincipalFlow {
    target: TargetSpec,
    grid: usize,
    components: Vec<Component>,
    table: Option<CoefficientTable>,
}

/// Norm report of the initial data `u⁰ = v(·, 0)`.
#[derive(Debug, Clone, Serialize)]
pub struct U0Report {
    pub besov_inf_1: f64,
    /// `B⁻¹_{∞,2}`, the upper proxy for the `BMO⁻¹` norm.
    pub besov_inf_2: f64,
    /// `(N, ‖P_N u⁰‖_∞)` for every dyadic shell of the grid.
    pub shells: Vec<(u64, f64)>,
    pub peak_shell: u64,
    pub peak_amplitude: f64,
    /// Largest `‖P_N u⁰‖_∞` over shells outside `(N_{k_*}/2, 2N_{k_*})`, relative to the peak.
    pub leakage: f64,
    pub leakage_shell: u64,
    /// Largest `‖P_N u⁰‖_∞` over shells inside `(N_{k_*}/2, 2N_{k_*})`.
    pub mid_frequency_max: f64,
    /// `33000·C_{k_*}`.
    pub mid_frequency_bound: f64,
    pub sup_norm: f64,
    pub mean_abs: f64,
    pub max_divergence_coeff: f64,
}

/// Force residual `g = ∂_t v − Δv + ℙ div(v⊗v)` at one time.
#[derive(Debug, Clone, Serialize)]
pub struct ForceSample {
    pub t: f64,
    pub residual_sup: f64,
    pub advection_sup: f64,
    /// `‖g‖_∞ / ‖ℙ div(v⊗v)‖_∞`, zero when both vanish.
    pub ratio: f64,
    /// Fraction of `⨏|v⊗v|²` on the grid that lies outside the band.
    pub truncated_fraction: f64,
}

fn check_time(t: f64) -> Result<()> {
    if t >= 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::Range(format!(
            "time t = {t} must be finite and non-negative"
        )))
    }
}

impl PrincipalFlow {
    /// Assembles `v_k = C_k(1 − e^{−2N_{k+1}²t}) e^{−λ_k t} ℙΔψ_k⁰` for `k < k_*`
    /// and `v_{k_*} = C_{k_*} e^{−N_{k_*}²t} ℙΔψ_{k_*}⁰`.
    pub fn new(table: CoefficientTable) -> Result<Self> {
        let s = &table.scales;
        let mut components = Vec::with_capacity(s.kstar + 1);
        for k in 0..=s.kstar {
            let activation = if k < s.kstar {
                let next = s.n[k + 1] as f64;
                2.0 * next * next
            } else {
                0.0
            };
            components.push(Component {
                shape: leray_laplacian(&table.psi0[k])?,
                amplitude: s.c[k],
                activation,
                decay: s.decay_rate(k),
            });
        }
        Ok(Self {
            target: s.target.clone(),
            grid: s.grid,
            components,
            table: Some(table),
        })
    }

    /// Degenerate family `v = Θ sin(x·η) e^{−|η|²t}` with no cascade, an exact
    /// solution of the unforced equations.
    pub fn shear(target: &TargetSpec, grid: usize) -> Result<Self> {
        target.validate()?;
        let mut shape = PeriodicField::zeros(grid, 3)?;
        for (c, &th) in target.theta.iter().enumerate() {
            if th != 0.0 {
                shape.set_mode(c, target.eta, Complex64::new(0.0, -0.5 * th))?;
            }
        }
        let e = target.eta_norm();
        Ok(Self {
            target: target.clone(),
            grid,
            components: vec![Component {
                shape,
                amplitude: 1.0,
                activation: 0.0,
                decay: e * e,
            }],
            table: None,
        })
    }

    pub fn grid(&self) -> usize {
        self.grid
    }

    pub fn target(&self) -> &TargetSpec {
        &self.target
    }

    pub fn table(&self) -> Option<&CoefficientTable> {
        self.table.as_ref()
    }

    /// Index of the last component, `k_*` (zero for the shear family).
    pub fn kstar(&self) -> usize {
        self.components.len() - 1
    }

    fn component_ref(&self, k: usize) -> Result<&Component> {
        self.components.get(k).ok_or_else(|| {
            Error::Range(format!("component k = {k} exceeds k_* = {}", self.kstar()))
        })
    }

    /// Scalar time factor multiplying `ℙΔψ_k⁰` in `v_k`.
    pub fn time_factor(&self, k: usize, t: f64) -> Result<f64> {
        check_time(t)?;
        Ok(self.component_ref(k)?.factor(t))
    }

    /// Grid sup of the spatial profile of `v_k`, so that
    /// `‖v_k(t)‖_∞ = |time_factor(k, t)|·shape_sup(k)`.
    pub fn shape_sup(&self, k: usize) -> Result<f64> {
        Ok(self.component_ref(k)?.shape.sup_norm(1))
    }

    /// `v_k(·, t)`.
    pub fn component(&self, k: usize, t: f64) -> Result<PeriodicField> {
        check_time(t)?;
        let c = self.component_ref(k)?;
        Ok(c.shape.scaled(c.factor(t)))
    }

    /// `v(·, t)`.
    pub fn velocity(&self, t: f64) -> Result<PeriodicField> {
        check_time(t)?;
        let mut out = PeriodicField::zeros(self.grid, 3)?;
        for c in &self.components {
            let f = c.factor(t);
            if f != 0.0 {
                out.axpy(f, &c.shape);
            }
        }
        Ok(out)
    }

    /// `∂_t v(·, t)` from the closed-form time factors.
    pub fn velocity_rate(&self, t: f64) -> Result<PeriodicField> {
        check_time(t)?;
        let mut out = PeriodicField::zeros(self.grid, 3)?;
        for c in &self.components {
            out.axpy(c.factor_rate(t), &c.shape);
        }
        Ok(out)
    }

    /// Principal part `v_k^p = −C_k e^{−λ_k t} Σ_j a_{j,k} Ψ_{j,k}⁰ θ_j`.
    /// The shear family is entirely principal.
    pub fn principal(&self, k: usize, t: f64) -> Result<PeriodicField> {
        check_time(t)?;
        let c = self.component_ref(k)?;
        match &self.table {
            Some(table) => Ok(table.carrier[k].scaled(-c.amplitude * (-c.decay * t).exp())),
            None => Ok(c.shape.scaled(c.factor(t))),
        }
    }

    /// `v_k^e = v_k − v_k^p`.
    pub fn exceptional(&self, k: usize, t: f64) -> Result<PeriodicField> {
        Ok(self.component(k, t)?.sub(&self.principal(k, t)?))
    }

    /// `Θ sin(x·η) e^{−|η|²t}`, the leading term of the solution.
    pub fn target_shear(&self, t: f64) -> Result<PeriodicField> {
        check_time(t)?;
        let e = self.target.eta_norm();
        let mut out = PeriodicField::zeros(self.grid, 3)?;
        let amp = (-e * e * t).exp();
        for (c, &th) in self.target.theta.iter().enumerate() {
            if th != 0.0 {
                out.set_mode(c, self.target.eta, Complex64::new(0.0, -0.5 * th * amp))?;
            }
        }
        Ok(out)
    }

    /// `u⁰ = v(·, 0)`.
    pub fn initial_data(&self) -> Result<PeriodicField> {
        self.velocity(0.0)
    }

    /// Besov norms, shell profile and leakage of `u⁰`.
    pub fn initial_data_report(&self) -> Result<U0Report> {
        let u0 = self.initial_data()?;
        let besov = besov_norm(&u0, -1.0, BesovP::Infinity, 1.0, REPORT_OVERSAMPLE)?;
        let besov_inf_2 = besov
            .shells
            .iter()
            .map(|&(n, a)| (a / n as f64).powi(2))
            .sum::<f64>()
            .sqrt();
        let top = self.top_frequency() as f64;
        let inside = |n: u64| (n as f64) > 0.5 * top && (n as f64) < 2.0 * top;
        let (peak_shell, peak_amplitude) = besov
            .shells
            .iter()
            .copied()
            .fold((0, 0.0), |acc, (n, a)| if a > acc.1 { (n, a) } else { acc });
        let (leakage_shell, leak) = besov
            .shells
            .iter()
            .copied()
            .filter(|&(n, _)| !inside(n))
            .fold((0, 0.0), |acc, (n, a)| if a > acc.1 { (n, a) } else { acc });
        let mid_frequency_max = besov
            .shells
            .iter()
            .filter(|&&(n, _)| inside(n))
            .map(|&(_, a)| a)
            .fold(0.0, f64::max);
        let divergence = crate::spectral::divergence(&u0)?;
        let mean_abs = (0..3).map(|c| u0.mean(c).abs()).fold(0.0, f64::max);
        Ok(U0Report {
            besov_inf_1: besov.value,
            besov_inf_2,
            peak_shell,
            peak_amplitude,
            leakage: if peak_amplitude > 0.0 {
                leak / peak_amplitude
            } else {
                0.0
            },
            leakage_shell,
            mid_frequency_max,
            mid_frequency_bound: 33000.0 * self.components[self.kstar()].amplitude,
            sup_norm: u0.sup_norm(REPORT_OVERSAMPLE),
            mean_abs,
            max_divergence_coeff: divergence.max_coeff(),
            shells: besov.shells,
        })
    }

    /// `N_{k_*}`, or `|η|` for the shear family.
    pub fn top_frequency(&self) -> u64 {
        match &self.table {
            Some(t) => t.scales.n[t.scales.kstar],
            None => self.target.eta_norm().ceil() as u64,
        }
    }

    /// Shape of the force bound,
    /// `A^{−β}(N_0²t)^{α/2+β} e^{−N_0²t} t^{−(2+α)/2}`, for comparison with
    /// measured residuals.
    pub fn force_bound_profile(&self, alpha: f64, beta: f64, t: f64) -> Option<f64> {
        let s = &self.table.as_ref()?.scales;
        let n0 = s.n[0] as f64;
        let x = n0 * n0 * t;
        Some(
            s.a.powf(-beta)
                * x.powf(0.5 * alpha + beta)
                * (-x).exp()
                * t.powf(-0.5 * (2.0 + alpha)),
        )
    }

    /// `g(t) = ∂_t v − Δv + ℙ div(v⊗v)` and its size relative to the advection term.
    pub fn force_residual(&self, t: f64) -> Result<(PeriodicField, ForceSample)> {
        let v = self.velocity(t)?;
        let (tensor, stats) = outer_square_stats(&v)?;
        let advection = leray_project(&tensor_divergence(&tensor)?)?;
        let mut g = self.velocity_rate(t)?;
        g.axpy(-1.0, &laplacian(&v));
        g.axpy(1.0, &advection);
        let residual_sup = g.sup_norm(REPORT_OVERSAMPLE);
        let advection_sup = advection.sup_norm(REPORT_OVERSAMPLE);
        let ratio = if advection_sup > 0.0 {
            residual_sup / advection_sup
        } else if residual_sup == 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
        Ok((
            g,
            ForceSample {
                t,
                residual_sup,
                advection_sup,
                ratio,
                truncated_fraction: stats.truncated_fraction,
            },
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn target() -> TargetSpec {
        TargetSpec {
            theta: [3.0, 0.0, 0.0],
            eta: [0, 1, 1],
            epsilon: 0.1,
            n_max: 1,
        }
    }

    #[test]
    fn shear_family_has_zero_force() {
        let flow = PrincipalFlow::shear(&target(), 16).unwrap();
        for t in [0.0, 0.05, 0.4] {
            let (_, s) = flow.force_residual(t).unwrap();
            assert!(s.residual_sup <= 1e-12, "{}", s.residual_sup);
        }
    }

    #[test]
    fn rate_matches_difference_quotient() {
        let c = Component {
            shape: PeriodicField::zeros(4, 1).unwrap(),
            amplitude: 3.0,
            activation: 50.0,
            decay: 4.0,
        };
        let (t, h) = (0.013, 1e-6);
        let fd = (c.factor(t + h) - c.factor(t - h)) / (2.0 * h);
        assert!((fd - c.factor_rate(t)).abs() < 1e-6 * fd.abs());
        assert_eq!(c.factor(0.0), 0.0);
    }

    #[test]
    fn shear_target_matches_component() {
        let flow = PrincipalFlow::shear(&target(), 16).unwrap();
        let d = flow
            .velocity(0.3)
            .unwrap()
            .sub(&flow.target_shear(0.3).unwrap());
        assert!(d.max_coeff() < 1e-15);
        assert!(flow.exceptional(0, 0.3).unwrap().max_coeff() < 1e-15);
        assert!(flow.velocity(-1.0).is_err());
    }

    #[test]
    fn truncation_loss_of_band_product() {
        let flow = PrincipalFlow::shear(&target(), 16).unwrap();
        let v = flow.velocity(0.0).unwrap();
        let (_, stats) = outer_square_stats(&v).unwrap();
        assert!(stats.truncated_fraction < 1e-14);
        assert!((stats.max_speed - 3.0).abs() < 1e-12);
    }
}

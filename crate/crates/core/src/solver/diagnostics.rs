use num_complex::Complex64;
use serde::Serialize;

use crate::construction::PrincipalFlow;
use crate::error::Result;
use crate::spectral::{besov_norm, BesovP, PeriodicField};

/// Oversampling for shell amplitudes and Besov norms in the time series.
pub const SERIES_OVERSAMPLE: usize = 2;

/// `‖P u‖_∞` for the sharp annulus `center/√2 < |ξ| ≤ √2·center`.
///
/// Evaluated on the smallest grid that holds the annulus.
pub fn shell_amplitude(u: &PeriodicField, center: f64, oversample: usize) -> Result<f64> {
    let (lo, hi) = (center / 2f64.sqrt(), center * 2f64.sqrt());
    let mut p = u.clone();
    p.apply_scalar_symbol(|k| {
        let r = (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]).sqrt();
        if r > lo && r <= hi {
            1.0
        } else {
            0.0
        }
    });
    if p.max_coeff() == 0.0 {
        return Ok(0.0);
    }
    let reach = (hi.floor() as usize).min(u.cutoff());
    let mut size = 3 * reach + 1;
    size += size % 2;
    while size < u.n() && !five_smooth(size) {
        size += 2;
    }
    if size < u.n() {
        p = p.resample(size)?;
    }
    Ok(p.sup_norm(oversample))
}

fn five_smooth(mut v: usize) -> bool {
    for f in [2, 3, 5] {
        while v % f == 0 {
            v /= f;
        }
    }
    v == 1
}

/// Pointwise Frobenius sup of `∇ⁿu` on the base grid, streamed one component
/// at a time.
pub fn derivative_sup(u: &PeriodicField, order: usize) -> f64 {
    let len = u.plan().grid_len();
    let mut acc = vec![0.0; len];
    let mut buf = vec![0.0; len];
    let count = 3usize.pow(order as u32);
    for c in 0..u.ncomp() {
        let single = u.component(c);
        for multi in 0..count {
            let mut axes = [0usize; 3];
            let mut rest = multi;
            for _ in 0..order {
                axes[rest % 3] += 1;
                rest /= 3;
            }
            let d = single.map_modes(1, |k, a, out| {
                let mut s = Complex64::new(1.0, 0.0);
                for (axis, &times) in axes.iter().enumerate() {
                    for _ in 0..times {
                        s *= Complex64::new(0.0, k[axis]);
                    }
                }
                out[0] = s * a[0];
            });
            d.to_grid_into(0, &mut buf);
            acc.iter_mut().zip(&buf).for_each(|(a, b)| *a += b * b);
        }
    }
    acc.iter().fold(0.0f64, |m, &v| m.max(v)).sqrt()
}

/// Error field `E = u − Θ sin(x·η)e^{−|η|²t}` and perturbation `w = u − v`.
#[derive(Debug, Clone, Serialize)]
pub struct ErrorReport {
    pub t: f64,
    /// `‖∇ⁿE‖_∞`, `n = 0..=n_max`.
    pub error_norms: Vec<f64>,
    /// `t^{(1+n)/2}‖∇ⁿw‖_∞`, `n = 0..=n_max`.
    pub perturbation: Vec<f64>,
    /// `‖w‖_∞ / max_k ‖v_k‖_∞`, zero when `v` vanishes.
    pub perturbation_ratio: f64,
}

pub fn error_and_perturbation(
    u: &PeriodicField,
    t: f64,
    flow: &PrincipalFlow,
    n_max: usize,
) -> Result<ErrorReport> {
    let e = u.sub(&flow.target_shear(t)?);
    let error_norms = (0..=n_max).map(|n| derivative_sup(&e, n)).collect();
    drop(e);
    let w = u.sub(&flow.velocity(t)?);
    let perturbation: Vec<f64> = (0..=n_max)
        .map(|n| t.powf(0.5 * (1.0 + n as f64)) * derivative_sup(&w, n))
        .collect();
    let w_sup = derivative_sup(&w, 0);
    drop(w);
    let mut v_max = 0.0f64;
    for k in 0..=flow.kstar() {
        if flow.time_factor(k, t)? != 0.0 {
            v_max = v_max.max(derivative_sup(&flow.component(k, t)?, 0));
        }
    }
    Ok(ErrorReport {
        t,
        error_norms,
        perturbation,
        perturbation_ratio: if v_max > 0.0 { w_sup / v_max } else { 0.0 },
    })
}

/// Everything recorded at one sample time.
#[derive(Debug, Clone, Serialize)]
pub struct SampleDiagnostics {
    pub shell_amps: Vec<f64>,
    pub besov_inf_inf: f64,
    pub besov_inf_1: f64,
    /// `⨏|u|²`.
    pub energy: f64,
    /// `⨏|∇u|²`.
    pub enstrophy: f64,
    pub error: Option<ErrorReport>,
}

/// Shell amplitudes at `centers`, Besov norms of `u − ⨏u`, energy, enstrophy
/// and, given a flow, the error report.
pub fn sample_diagnostics(
    u: &PeriodicField,
    t: f64,
    centers: &[u64],
    flow: Option<&PrincipalFlow>,
    n_max: usize,
) -> Result<SampleDiagnostics> {
    let shell_amps = centers
        .iter()
        .map(|&c| shell_amplitude(u, c as f64, SERIES_OVERSAMPLE))
        .collect::<Result<Vec<_>>>()?;
    let mut fluct = u.clone();
    for c in 0..3 {
        fluct.set_mode(c, [0, 0, 0], Complex64::new(0.0, 0.0))?;
    }
    let besov = besov_norm(&fluct, -1.0, BesovP::Infinity, 1.0, SERIES_OVERSAMPLE)?;
    let besov_inf_inf = besov
        .shells
        .iter()
        .map(|&(n, a)| a / n as f64)
        .fold(0.0, f64::max);
    let enstrophy = {
        let mut total = 0.0;
        for axis in 0..3 {
            total += crate::spectral::partial(u, axis).mean_square();
        }
        total
    };
    let error = match flow {
        Some(f) => Some(error_and_perturbation(u, t, f, n_max)?),
        None => None,
    };
    Ok(SampleDiagnostics {
        shell_amps,
        besov_inf_inf,
        besov_inf_1: besov.value,
        energy: u.mean_square(),
        enstrophy,
        error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::construction::TargetSpec;

    fn target() -> TargetSpec {
        TargetSpec {
            theta: [2.0, 0.0, 0.0],
            eta: [0, 0, 3],
            epsilon: 0.1,
            n_max: 2,
        }
    }

    #[test]
    fn shell_amplitude_of_a_shear() {
        let flow = PrincipalFlow::shear(&target(), 32).unwrap();
        let u = flow.velocity(0.0).unwrap();
        assert!((shell_amplitude(&u, 3.0, 2).unwrap() - 2.0).abs() < 1e-12);
        assert_eq!(shell_amplitude(&u, 8.0, 2).unwrap(), 0.0);
    }

    #[test]
    fn derivative_sup_of_a_shear() {
        // ∇ⁿ(2 e1 sin 3x3) has Frobenius sup 2·3ⁿ
        let flow = PrincipalFlow::shear(&target(), 16).unwrap();
        let u = flow.velocity(0.0).unwrap();
        for n in 0..3 {
            let expect = 2.0 * 3f64.powi(n as i32);
            assert!((derivative_sup(&u, n) - expect).abs() < 1e-11 * expect);
        }
    }

    #[test]
    fn exact_solution_has_no_error() {
        let flow = PrincipalFlow::shear(&target(), 16).unwrap();
        let u = flow.velocity(0.2).unwrap();
        let r = error_and_perturbation(&u, 0.2, &flow, 2).unwrap();
        assert!(r.error_norms.iter().all(|&e| e < 1e-12));
        assert!(r.perturbation.iter().all(|&e| e < 1e-12));
        assert_eq!(r.perturbation_ratio, 0.0);
    }

    #[test]
    fn diagnostics_of_a_shear() {
        let flow = PrincipalFlow::shear(&target(), 16).unwrap();
        let u = flow.velocity(0.0).unwrap();
        let d = sample_diagnostics(&u, 0.0, &[3], None, 0).unwrap();
        assert!((d.energy - 2.0).abs() < 1e-12);
        assert!((d.enstrophy - 18.0).abs() < 1e-12);
        // |ξ| = 3 lies only in the dyadic shell N = 4
        assert!((d.besov_inf_1 - 0.5).abs() < 1e-12);
        assert_eq!(d.besov_inf_inf, d.besov_inf_1);
    }
}

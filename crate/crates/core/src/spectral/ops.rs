use num_complex::Complex64;

use super::field::PeriodicField;
use crate::error::{Error, Result};
use crate::geometry::{sym_index, SYM_PAIRS};

const I: Complex64 = Complex64::new(0.0, 1.0);

fn norm_sq(k: [f64; 3]) -> f64 {
    k[0] * k[0] + k[1] * k[1] + k[2] * k[2]
}

fn expect_ncomp(u: &PeriodicField, ncomp: usize, what: &str) -> Result<()> {
    if u.ncomp() != ncomp {
        return Err(Error::Range(format!(
            "{what} expects {ncomp} components, got {}",
            u.ncomp()
        )));
    }
    Ok(())
}

/// Rejects fields whose zero mode is not negligible.
pub fn require_zero_mean(u: &PeriodicField, what: &str) -> Result<()> {
    let scale = u.max_coeff().max(f64::MIN_POSITIVE);
    for c in 0..u.ncomp() {
        let mean = u.mean(c);
        if mean.abs() > 1e-12 * scale {
            return Err(Error::Precondition(format!(
                "{what} requires a zero-mean field; component {c} has mean {mean:.3e}"
            )));
        }
    }
    Ok(())
}

/// `∇u` for a scalar field.
pub fn gradient(u: &PeriodicField) -> Result<PeriodicField> {
    expect_ncomp(u, 1, "gradient")?;
    Ok(u.map_modes(3, |k, a, out| {
        for i in 0..3 {
            out[i] = I * k[i] * a[0];
        }
    }))
}

/// Derivative along `direction`, applied to every component.
pub fn directional_derivative(u: &PeriodicField, direction: [f64; 3]) -> PeriodicField {
    u.map_modes(u.ncomp(), |k, a, out| {
        let s = I * (direction[0] * k[0] + direction[1] * k[1] + direction[2] * k[2]);
        for (o, v) in out.iter_mut().zip(a) {
            *o = s * v;
        }
    })
}

/// Partial derivative `∂_axis`, applied to every component.
pub fn partial(u: &PeriodicField, axis: usize) -> PeriodicField {
    let mut dir = [0.0; 3];
    dir[axis] = 1.0;
    directional_derivative(u, dir)
}

/// `div u` for a vector field.
pub fn divergence(u: &PeriodicField) -> Result<PeriodicField> {
    expect_ncomp(u, 3, "divergence")?;
    Ok(u.map_modes(1, |k, a, out| {
        out[0] = I * (k[0] * a[0] + k[1] * a[1] + k[2] * a[2]);
    }))
}

/// Row divergence `(div T)_a = Σ_b ∂_b T_ab` of a symmetric tensor.
pub fn tensor_divergence(t: &PeriodicField) -> Result<PeriodicField> {
    expect_ncomp(t, 6, "tensor divergence")?;
    Ok(t.map_modes(3, |k, a, out| {
        for (r, o) in out.iter_mut().enumerate() {
            let mut s = Complex64::new(0.0, 0.0);
            for (b, kb) in k.iter().enumerate() {
                s += *kb * a[sym_index(r, b)];
            }
            *o = I * s;
        }
    }))
}

/// `Δu`, componentwise.
pub fn laplacian(u: &PeriodicField) -> PeriodicField {
    let mut out = u.clone();
    out.apply_scalar_symbol(|k| -norm_sq(k));
    out
}

/// Leray projection `û ↦ û − ξ(ξ·û)/|ξ|²`; the zero mode is left alone.
pub fn leray_project(u: &PeriodicField) -> Result<PeriodicField> {
    expect_ncomp(u, 3, "Leray projection")?;
    Ok(u.map_modes(3, |k, a, out| {
        let k2 = norm_sq(k);
        if k2 == 0.0 {
            out.copy_from_slice(a);
            return;
        }
        let proj = (k[0] * a[0] + k[1] * a[1] + k[2] * a[2]) / k2;
        for i in 0..3 {
            out[i] = a[i] - proj * k[i];
        }
    }))
}

/// Heat propagator `e^{tΔ}`.
pub fn heat_propagate(u: &PeriodicField, t: f64) -> Result<PeriodicField> {
    if !(t >= 0.0) {
        return Err(Error::Range(format!(
            "heat propagation time t = {t} must be non-negative"
        )));
    }
    let mut out = u.clone();
    out.apply_scalar_symbol(|k| (-norm_sq(k) * t).exp());
    Ok(out)
}

/// Gaussian mollifier at length scale `ell`: `û(ξ) ↦ e^{−|ξ|²ℓ²/2} û(ξ)`.
pub fn mollify(u: &PeriodicField, ell: f64) -> Result<PeriodicField> {
    if !(ell > 0.0) {
        return Err(Error::Range(format!(
            "mollification scale ℓ = {ell} must be positive"
        )));
    }
    let mut out = u.clone();
    out.apply_scalar_symbol(|k| (-0.5 * norm_sq(k) * ell * ell).exp());
    Ok(out)
}

/// Symbol of the anti-divergence `ℛ`, entry `(a, b)` acting on component `c`.
#[inline]
fn anti_divergence_symbol(k: [f64; 3], a: usize, b: usize, c: usize) -> Complex64 {
    let k2 = norm_sq(k);
    let delta = |p: usize, q: usize| if p == q { 1.0 } else { 0.0 };
    let real = 0.5 * k[a] * k[b] * k[c] / (k2 * k2) + 0.5 * delta(a, b) * k[c] / k2
        - delta(b, c) * k[a] / k2
        - delta(a, c) * k[b] / k2;
    I * real
}

/// Right inverse of the row divergence on zero-mean vector fields, producing a
/// symmetric tensor: `div ℛV = V − ⨏V`.
pub fn anti_divergence(v: &PeriodicField) -> Result<PeriodicField> {
    expect_ncomp(v, 3, "anti-divergence")?;
    require_zero_mean(v, "anti-divergence")?;
    Ok(v.map_modes(6, |k, a, out| {
        if norm_sq(k) == 0.0 {
            return;
        }
        for (s, &(p, q)) in SYM_PAIRS.iter().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for (c, vc) in a.iter().enumerate() {
                acc += anti_divergence_symbol(k, p, q, c) * vc;
            }
            out[s] = acc;
        }
    }))
}

/// Modified symmetric gradient `𝒟f = ½(∇f + ∇fᵀ) − (div f) Id`.
pub fn modified_sym_gradient(f: &PeriodicField) -> Result<PeriodicField> {
    expect_ncomp(f, 3, "modified symmetric gradient")?;
    Ok(f.map_modes(6, |k, a, out| {
        let div = I * (k[0] * a[0] + k[1] * a[1] + k[2] * a[2]);
        for (s, &(p, q)) in SYM_PAIRS.iter().enumerate() {
            let sym = 0.5 * I * (k[p] * a[q] + k[q] * a[p]);
            out[s] = if p == q { sym - div } else { sym };
        }
    }))
}

/// `ℙΔf`.
pub fn leray_laplacian(f: &PeriodicField) -> Result<PeriodicField> {
    leray_project(&laplacian(f))
}

/// `‖div 𝒟f − ½ℙΔf‖_∞` on the base grid.
pub fn sym_gradient_defect(f: &PeriodicField) -> Result<f64> {
    let lhs = tensor_divergence(&modified_sym_gradient(f)?)?;
    let rhs = leray_laplacian(f)?.scaled(0.5);
    Ok(lhs.sub(&rhs).sup_norm(1))
}

/// Grid-side facts gathered while forming `u ⊗ u`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProductStats {
    /// Largest pointwise `|u|` on the base grid.
    pub max_speed: f64,
    /// Fraction of the grid mean square of `u ⊗ u` that lies outside the band.
    pub truncated_fraction: f64,
}

/// Symmetric tensor `u ⊗ u` of a vector field, computed on the grid and
/// projected onto the band. Exact when `u` lies in the band.
pub fn outer_square(u: &PeriodicField) -> Result<PeriodicField> {
    Ok(outer_square_stats(u)?.0)
}

/// [`outer_square`] together with [`ProductStats`].
pub fn outer_square_stats(u: &PeriodicField) -> Result<(PeriodicField, ProductStats)> {
    expect_ncomp(u, 3, "outer square")?;
    let grids: Vec<Vec<f64>> = (0..3).map(|c| u.to_grid(c)).collect();
    let len = grids[0].len();
    let max_speed = (0..len)
        .map(|i| grids[0][i] * grids[0][i] + grids[1][i] * grids[1][i] + grids[2][i] * grids[2][i])
        .fold(0.0, f64::max)
        .sqrt();
    let mut out = u.zeros_like(6);
    let mut buf = vec![0.0; len];
    let (mut total, mut kept) = (0.0, 0.0);
    for (s, &(p, q)) in SYM_PAIRS.iter().enumerate() {
        buf.iter_mut()
            .zip(grids[p].iter().zip(&grids[q]))
            .for_each(|(b, (x, y))| *b = x * y);
        let weight = if p == q { 1.0 } else { 2.0 };
        total += weight * buf.iter().map(|x| x * x).sum::<f64>() / len as f64;
        u.plan().grid_to_band(&buf, out.comp_mut(s));
        kept += weight * out.mean_square_of(s);
    }
    let truncated_fraction = if total > 0.0 {
        ((total - kept) / total).max(0.0)
    } else {
        0.0
    };
    Ok((
        out,
        ProductStats {
            max_speed,
            truncated_fraction,
        },
    ))
}

/// `ℙ div(u ⊗ u)`.
pub fn projected_advection(u: &PeriodicField) -> Result<PeriodicField> {
    leray_project(&tensor_divergence(&outer_square(u)?)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::field::random_band_limited;

    fn random_field(n: usize, ncomp: usize, kmax: i64, seed: u64) -> PeriodicField {
        random_band_limited(n, ncomp, kmax, seed).unwrap()
    }

    fn shear(n: usize) -> PeriodicField {
        // e1 sin(x2)
        let mut u = PeriodicField::zeros(n, 3).unwrap();
        u.set_mode(0, [0, 1, 0], Complex64::new(0.0, -0.5)).unwrap();
        u
    }

    #[test]
    fn gradients_are_annihilated_by_leray() {
        let q = random_field(16, 1, 5, 2);
        let g = gradient(&q).unwrap();
        let p = leray_project(&g).unwrap();
        assert!(p.max_coeff() < 1e-15 * g.max_coeff());
    }

    #[test]
    fn leray_single_mode() {
        let mut u = PeriodicField::zeros(16, 3).unwrap();
        u.set_mode(0, [1, 1, 0], Complex64::new(1.0, 0.0)).unwrap();
        let p = leray_project(&u).unwrap();
        assert!((p.mode(0, [1, 1, 0]) - Complex64::new(0.5, 0.0)).norm() < 1e-16);
        assert!((p.mode(1, [1, 1, 0]) - Complex64::new(-0.5, 0.0)).norm() < 1e-16);
        assert_eq!(p.mode(2, [1, 1, 0]), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn leray_is_idempotent_and_solenoidal() {
        let u = random_field(16, 3, 5, 4);
        let p = leray_project(&u).unwrap();
        let pp = leray_project(&p).unwrap();
        assert!(pp.sub(&p).max_coeff() <= 1e-14 * p.max_coeff());
        assert!(divergence(&p).unwrap().max_coeff() < 1e-13);
    }

    #[test]
    fn heat_semigroup() {
        let u = random_field(16, 1, 5, 5);
        let a = heat_propagate(&heat_propagate(&u, 0.01).unwrap(), 0.02).unwrap();
        let b = heat_propagate(&u, 0.03).unwrap();
        assert!(a.sub(&b).max_coeff() <= 1e-14 * u.max_coeff());
        assert!(heat_propagate(&u, -1.0).is_err());
    }

    #[test]
    fn anti_divergence_single_mode() {
        let mut v = PeriodicField::zeros(16, 3).unwrap();
        v.set_mode(0, [0, 0, 1], Complex64::new(1.0, 0.0)).unwrap();
        let r = anti_divergence(&v).unwrap();
        let back = tensor_divergence(&r).unwrap();
        assert!(back.sub(&v).max_coeff() < 1e-15);
    }

    #[test]
    fn anti_divergence_rejects_constants() {
        let mut v = PeriodicField::zeros(16, 3).unwrap();
        v.set_mode(1, [0, 0, 0], Complex64::new(2.0, 0.0)).unwrap();
        assert!(matches!(anti_divergence(&v), Err(Error::Precondition(_))));
    }

    #[test]
    fn modified_sym_gradient_of_shear() {
        let u = shear(16);
        let d = modified_sym_gradient(&u).unwrap();
        // ½(e1⊗e2 + e2⊗e1) cos(x2): the 12 entry carries cos, coefficient 1/4 at ±e2
        let c = d.mode(1, [0, 1, 0]);
        assert!((c - Complex64::new(0.25, 0.0)).norm() < 1e-16);
        for s in [0, 2, 3, 4, 5] {
            assert!(d.comp(s).iter().all(|v| v.norm() < 1e-16));
        }
    }

    #[test]
    fn mollifier_symbol() {
        let mut u = PeriodicField::zeros(16, 1).unwrap();
        u.set_mode(0, [0, 0, 0], Complex64::new(3.0, 0.0)).unwrap();
        u.set_mode(0, [2, 0, 0], Complex64::new(1.0, 0.0)).unwrap();
        let m = mollify(&u, 0.5).unwrap();
        assert_eq!(m.mean(0), 3.0);
        assert!((m.mode(0, [2, 0, 0]).re - (-0.5f64).exp()).abs() < 1e-16);
    }

    #[test]
    fn outer_square_of_shear() {
        let u = shear(16);
        let t = outer_square(&u).unwrap();
        // sin² = 1/2 − cos(2x2)/2
        assert!((t.mean(0) - 0.5).abs() < 1e-15);
        assert!((t.mode(0, [0, 2, 0]).re + 0.25).abs() < 1e-15);
        assert!(projected_advection(&u).unwrap().max_coeff() < 1e-15);
    }
}

use std::f64::consts::PI;

use num_complex::Complex64;
use num_integer::Integer;
use num_rational::Rational64;
use serde::Serialize;

use super::{nash_directions, rat, rat_to_f64, ratvec_to_f64, RatVec3};
use crate::error::{Error, Result};
use crate::numerics::{bessel_j0, bisect, smooth_step, GaussLegendre};

/// Cylinder radius of every Mikado flow.
pub const DELTA0: f64 = 1.0 / 15.0;

/// Lines must be further apart than this multiple of the radius.
pub const SEPARATION_FACTOR: f64 = 201.0 / 100.0;

/// Length of one period of each line: `|5θ| · 2π`.
const LINE_PERIOD: f64 = 10.0 * PI;

/// One periodic line `x_j + ℝθ_j` together with its oscillation axis.
#[derive(Debug, Clone, PartialEq)]
pub struct MikadoLine {
    pub theta: RatVec3,
    pub position: RatVec3,
    /// Index of the basis vector `e_{axis}` used as oscillation direction.
    pub eta_axis: usize,
    /// Axis along which `θ` vanishes; the cross-section lattice is spanned by
    /// `2π e_zero` and `(2π/5) u` with `u ⊥ θ` in the remaining plane.
    zero_axis: usize,
}

impl MikadoLine {
    pub fn theta_f64(&self) -> [f64; 3] {
        ratvec_to_f64(&self.theta)
    }

    pub fn position_f64(&self) -> [f64; 3] {
        ratvec_to_f64(&self.position)
    }

    pub fn eta(&self) -> [f64; 3] {
        let mut e = [0.0; 3];
        e[self.eta_axis] = 1.0;
        e
    }

    /// Unit vector orthogonal to `θ` and to `e_zero`.
    fn transverse(&self) -> [f64; 3] {
        let t = self.theta_f64();
        let (p, q) = other_axes(self.zero_axis);
        let mut u = [0.0; 3];
        u[p] = t[q];
        u[q] = -t[p];
        u
    }

    /// Distance on `𝕋³` from `x` to the line.
    pub fn distance_to(&self, x: [f64; 3]) -> f64 {
        let p = self.position_f64();
        let y = [x[0] - p[0], x[1] - p[1], x[2] - p[2]];
        let u = self.transverse();
        let along_zero = wrap(y[self.zero_axis], 2.0 * PI);
        let along_u = wrap(dot(y, u), 0.4 * PI);
        along_zero.hypot(along_u)
    }

    /// Whether `θ·ξ = 0` for an integer frequency.
    pub fn is_transverse(&self, xi: [i64; 3]) -> bool {
        let five_theta = self
            .theta
            .map(|c| (c * Rational64::from_integer(5)).to_integer());
        five_theta[0] * xi[0] + five_theta[1] * xi[1] + five_theta[2] * xi[2] == 0
    }
}

fn other_axes(axis: usize) -> (usize, usize) {
    match axis {
        0 => (1, 2),
        1 => (0, 2),
        _ => (0, 1),
    }
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Representative of `x` modulo `period` in `[-period/2, period/2)`.
fn wrap(x: f64, period: f64) -> f64 {
    x - period * (x / period).round()
}

/// Radial plateau profile `χ` with `χ = 1` on `[0, (1 - s)δ₀]`, a smooth
/// monotone transition, and `χ = 0` from `δ₀` on.
#[derive(Debug, Clone, Serialize)]
pub struct MikadoProfile {
    pub delta0: f64,
    pub epsilon0: f64,
    /// Transition width as a fraction of `δ₀`.
    pub transition: f64,
}

impl MikadoProfile {
    pub fn chi(&self, r: f64) -> f64 {
        let r = r.abs();
        if r >= self.delta0 {
            0.0
        } else {
            smooth_step((self.delta0 - r) / (self.transition * self.delta0))
        }
    }

    fn plateau_radius(&self) -> f64 {
        (1.0 - self.transition) * self.delta0
    }

    /// `∫_{ℝ²} χ(|y|)² dy`, the cross-sectional mass.
    pub fn cross_section_l2(&self) -> f64 {
        let r0 = self.plateau_radius();
        let gl = GaussLegendre::new(20);
        let tail = gl.integrate(r0, self.delta0, 64, |r| {
            let c = self.chi(r);
            c * c * r
        });
        2.0 * PI * (0.5 * r0 * r0 + tail)
    }

    /// `∫_{𝕋³} φ_j² dx` over one fundamental cell.
    pub fn torus_l2(&self) -> f64 {
        LINE_PERIOD * self.cross_section_l2()
    }

    /// Hankel transform `∫_0^{δ₀} χ(r) J₀(qr) r dr`.
    pub fn hankel(&self, q: f64) -> f64 {
        let r0 = self.plateau_radius();
        let gl = GaussLegendre::new(16);
        let inner_panels = 4 + (q * r0).ceil() as usize;
        let core = gl.integrate(0.0, r0, inner_panels, |r| bessel_j0(q * r) * r);
        let tail = gl.integrate(r0, self.delta0, 64, |r| self.chi(r) * bessel_j0(q * r) * r);
        core + tail
    }
}

/// Solves for the transition fraction so that `∫ φ_j² = (10π² − ε₀)δ₀²`.
pub fn mikado_profile(delta0: f64, epsilon0: f64) -> Result<MikadoProfile> {
    if !(epsilon0 > 0.0 && epsilon0 < 1.0) {
        return Err(Error::Range(format!(
            "epsilon0 = {epsilon0} must lie in (0, 1)"
        )));
    }
    if !(delta0 > 0.0 && delta0 < 0.2 * PI) {
        return Err(Error::Range(format!(
            "delta0 = {delta0} must lie in (0, 2π/10) to fit the cross-section cell"
        )));
    }
    let target = (10.0 * PI * PI - epsilon0) * delta0 * delta0;
    let mass = |s: f64| {
        MikadoProfile {
            delta0,
            epsilon0,
            transition: s,
        }
        .torus_l2()
            - target
    };
    let s = bisect(mass, 1e-9, 1.0, 1e-14).ok_or_else(|| {
        Error::InfeasibleNormalization(format!(
            "no transition fraction in (0, 1) gives ∫φ² = (10π² − {epsilon0})δ₀²"
        ))
    })?;
    Ok(MikadoProfile {
        delta0,
        epsilon0,
        transition: s,
    })
}

/// The six Mikado flows: directions, lines, and their common profile.
#[derive(Debug, Clone)]
pub struct MikadoFamily {
    pub lines: [MikadoLine; 6],
    pub profile: MikadoProfile,
}

/// Reference line positions with `δ₀ = 1/15` and the profile for `epsilon0`.
pub fn mikado_family(epsilon0: f64) -> Result<MikadoFamily> {
    let sys = nash_directions();
    let positions: [RatVec3; 6] = [
        [rat(21, 100), rat(26, 25), rat(47, 50)],
        [rat(37, 50), rat(467, 100), rat(357, 100)],
        [rat(7, 5), rat(126, 25), rat(91, 100)],
        [rat(393, 100), rat(104, 25), rat(341, 100)],
        [rat(3, 4), rat(617, 100), rat(153, 25)],
        [rat(261, 100), rat(307, 50), rat(339, 100)],
    ];
    let lines = std::array::from_fn(|j| {
        let theta = sys.theta[j];
        let zero_axis = (0..3)
            .find(|&a| theta[a] == Rational64::from_integer(0))
            .expect("every direction has a vanishing component");
        MikadoLine {
            theta,
            position: positions[j],
            eta_axis: zero_axis,
            zero_axis,
        }
    });
    Ok(MikadoFamily {
        lines,
        profile: mikado_profile(DELTA0, epsilon0)?,
    })
}

impl MikadoFamily {
    /// `φ_j(x)`.
    pub fn phi(&self, j: usize, x: [f64; 3]) -> f64 {
        self.profile.chi(self.lines[j].distance_to(x))
    }

    /// Fourier coefficient `(2π)⁻³ ∫ φ_j(x) e^{-iξ·x} dx`; zero unless `θ_j·ξ = 0`.
    pub fn phi_coefficient(&self, j: usize, xi: [i64; 3]) -> Complex64 {
        let line = &self.lines[j];
        if !line.is_transverse(xi) {
            return Complex64::new(0.0, 0.0);
        }
        let xf = xi.map(|c| c as f64);
        let q = dot(xf, xf).sqrt();
        let amplitude = LINE_PERIOD / (8.0 * PI * PI * PI) * 2.0 * PI * self.profile.hankel(q);
        let phase = -dot(xf, line.position_f64());
        Complex64::from_polar(amplitude, phase)
    }

    /// Average of `φ_j²` over the torus.
    pub fn mean_phi_sq(&self) -> f64 {
        self.profile.torus_l2() / (8.0 * PI * PI * PI)
    }
}

/// Both notions of distance between two Mikado lines.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct LineDistance {
    /// Minimum over the shifts `m ∈ {0,…,4}³` of the projected offset,
    /// the convention of the reference distance table.
    pub tabulated: f64,
    /// Exact minimum over all of `ℤ³`.
    pub periodic: f64,
}

/// Distance between lines `j1` and `j2` (zero-based); symmetric in the pair.
pub fn line_distance(family: &MikadoFamily, j1: usize, j2: usize) -> LineDistance {
    if j1 == j2 {
        return LineDistance {
            tabulated: 0.0,
            periodic: 0.0,
        };
    }
    // the one-sided shift range is only symmetric once the pair is ordered
    let (lo, hi) = (j1.min(j2), j1.max(j2));
    let (a, b) = (&family.lines[lo], &family.lines[hi]);
    // 25 θ_a × θ_b is an integer vector
    let ta = a
        .theta
        .map(|c| (c * Rational64::from_integer(5)).to_integer());
    let tb = b
        .theta
        .map(|c| (c * Rational64::from_integer(5)).to_integer());
    let normal = [
        ta[1] * tb[2] - ta[2] * tb[1],
        ta[2] * tb[0] - ta[0] * tb[2],
        ta[0] * tb[1] - ta[1] * tb[0],
    ];
    let nf = normal.map(|c| c as f64);
    let norm = dot(nf, nf).sqrt();
    let diff: [f64; 3] = std::array::from_fn(|i| rat_to_f64(&(a.position[i] - b.position[i])));
    let offset = dot(diff, nf);

    let mut tabulated = f64::INFINITY;
    for m0 in 0..5i64 {
        for m1 in 0..5i64 {
            for m2 in 0..5i64 {
                let shift = (m0 * normal[0] + m1 * normal[1] + m2 * normal[2]) as f64;
                tabulated = tabulated.min((offset + 2.0 * PI * shift).abs() / norm);
            }
        }
    }
    // shifts reach exactly the multiples of gcd(normal)
    let g = normal.iter().fold(0i64, |acc, c| acc.gcd(c)) as f64;
    let periodic = wrap(offset, 2.0 * PI * g).abs() / norm;
    LineDistance {
        tabulated,
        periodic,
    }
}

/// Symmetric 6×6 table of [`line_distance`].
pub fn line_distance_matrix(family: &MikadoFamily) -> [[LineDistance; 6]; 6] {
    std::array::from_fn(|i| std::array::from_fn(|j| line_distance(family, i, j)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn family() -> MikadoFamily {
        mikado_family(0.5).unwrap()
    }

    #[test]
    fn oscillation_axes_are_orthogonal_to_directions() {
        let fam = family();
        let expected = [1, 0, 0, 1, 2, 2];
        for (line, e) in fam.lines.iter().zip(expected) {
            assert_eq!(line.eta_axis, e);
            assert_eq!(dot(line.theta_f64(), line.eta()), 0.0);
        }
    }

    #[test]
    fn profile_normalization() {
        let fam = family();
        let expected = (10.0 * PI * PI - 0.5) / 225.0;
        assert!((fam.profile.torus_l2() - expected).abs() < 1e-6);
        assert!(fam.profile.transition > 0.0 && fam.profile.transition < 1.0);
    }

    #[test]
    fn profile_is_one_on_line_and_vanishes_outside() {
        let fam = family();
        for j in 0..6 {
            let p = fam.lines[j].position_f64();
            assert_eq!(fam.phi(j, p), 1.0);
            let t = fam.lines[j].theta_f64();
            let on = [p[0] + 3.0 * t[0], p[1] + 3.0 * t[1], p[2] + 3.0 * t[2]];
            assert!((fam.phi(j, on) - 1.0).abs() < 1e-12);
            let off = [
                p[0] + 0.1 * fam.lines[j].eta()[0],
                p[1] + 0.1 * fam.lines[j].eta()[1],
                p[2] + 0.1 * fam.lines[j].eta()[2],
            ];
            assert_eq!(fam.phi(j, off), 0.0);
        }
    }

    #[test]
    fn lines_are_periodic_with_period_ten_pi() {
        let fam = family();
        for line in &fam.lines {
            let t = line.theta_f64();
            let p = line.position_f64();
            let x = [p[0] + 0.01, p[1] + 0.02, p[2] - 0.015];
            let shifted = [
                x[0] + LINE_PERIOD * t[0],
                x[1] + LINE_PERIOD * t[1],
                x[2] + LINE_PERIOD * t[2],
            ];
            assert!((line.distance_to(x) - line.distance_to(shifted)).abs() < 1e-12);
            let lattice = [x[0] + 2.0 * PI, x[1] - 4.0 * PI, x[2]];
            assert!((line.distance_to(x) - line.distance_to(lattice)).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_mode_coefficient_is_the_mean() {
        let fam = family();
        let c = fam.phi_coefficient(0, [0, 0, 0]);
        let mass = LINE_PERIOD * 2.0 * PI * fam.profile.hankel(0.0) / (8.0 * PI.powi(3));
        assert!((c.re - mass).abs() < 1e-15 && c.im == 0.0);
        assert_eq!(fam.phi_coefficient(0, [1, 0, 0]), Complex64::new(0.0, 0.0));
        assert_ne!(fam.phi_coefficient(0, [3, 0, -4]), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn self_distance_is_zero() {
        let fam = family();
        let d = line_distance(&fam, 4, 4);
        assert_eq!(d.tabulated, 0.0);
        assert_eq!(d.periodic, 0.0);
    }

    #[test]
    fn distance_table_is_symmetric() {
        let table = line_distance_matrix(&family());
        for i in 0..6 {
            for j in 0..6 {
                assert_eq!(table[i][j].tabulated, table[j][i].tabulated);
                assert_eq!(table[i][j].periodic, table[j][i].periodic);
            }
        }
    }

    #[test]
    fn periodic_distance_never_exceeds_tabulated() {
        let fam = family();
        for i in 0..6 {
            for j in 0..6 {
                let d = line_distance(&fam, i, j);
                assert!(d.periodic <= d.tabulated + 1e-12);
                assert!(d.periodic > SEPARATION_FACTOR * DELTA0 || i == j);
            }
        }
    }
}

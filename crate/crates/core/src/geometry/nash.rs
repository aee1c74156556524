use num_rational::Rational64;
use num_traits::{Signed, Zero};

use super::{rat, rat_to_f64, ratvec_to_f64, RatVec3, SymMat3, SYM_PAIRS};
use crate::error::{Error, Result};

/// Radius of the ball around the identity on which the decomposition is valid.
pub const NASH_RADIUS: f64 = 1.0 / 7.0;

/// The six rational directions and the exact linear response of the
/// coefficients `Γ_j²` to a symmetric perturbation of the identity:
/// `Γ_j²(Id + ε) = 1/2 + Σ_{k≤l} b[j][kl] ε_kl`.
#[derive(Debug, Clone, PartialEq)]
pub struct NashSystem {
    pub theta: [RatVec3; 6],
    /// `b[j][s]` with `s` indexing [`SYM_PAIRS`].
    pub b: [[Rational64; 6]; 6],
    pub radius: Rational64,
}

/// Builds the fixed rational directions and solves the 6×6 system
/// `Σ_j g_j θ_j⊗θ_j = M` exactly for the response table.
pub fn nash_directions() -> NashSystem {
    let theta: [RatVec3; 6] = [
        [rat(4, 5), rat(0, 1), rat(3, 5)],
        [rat(0, 1), rat(-3, 5), rat(4, 5)],
        [rat(0, 1), rat(4, 5), rat(3, 5)],
        [rat(3, 5), rat(0, 1), rat(-4, 5)],
        [rat(3, 5), rat(4, 5), rat(0, 1)],
        [rat(-4, 5), rat(3, 5), rat(0, 1)],
    ];
    // rows: matrix entries (k,l), columns: directions j
    let mut system = [[Rational64::zero(); 6]; 6];
    for (row, &(k, l)) in SYM_PAIRS.iter().enumerate() {
        for (j, t) in theta.iter().enumerate() {
            system[row][j] = t[k] * t[l];
        }
    }
    let inv = invert6(system).expect("the six rank-one tensors are linearly independent");
    NashSystem {
        theta,
        b: inv,
        radius: rat(1, 7),
    }
}

/// Exact Gauss–Jordan inverse over the rationals.
fn invert6(mut a: [[Rational64; 6]; 6]) -> Option<[[Rational64; 6]; 6]> {
    let mut inv = [[Rational64::zero(); 6]; 6];
    for (i, row) in inv.iter_mut().enumerate() {
        row[i] = Rational64::from_integer(1);
    }
    for col in 0..6 {
        let pivot = (col..6).find(|&r| !a[r][col].is_zero())?;
        a.swap(col, pivot);
        inv.swap(col, pivot);
        let p = a[col][col];
        for c in 0..6 {
            a[col][c] /= p;
            inv[col][c] /= p;
        }
        for r in 0..6 {
            if r != col && !a[r][col].is_zero() {
                let f = a[r][col];
                for c in 0..6 {
                    let ac = a[col][c];
                    let ic = inv[col][c];
                    a[r][c] -= f * ac;
                    inv[r][c] -= f * ic;
                }
            }
        }
    }
    Some(inv)
}

impl NashSystem {
    pub fn theta_f64(&self, j: usize) -> [f64; 3] {
        ratvec_to_f64(&self.theta[j])
    }

    /// `Σ_j θ_j⊗θ_j` in exact arithmetic, stored like [`SymMat3`].
    pub fn frame_sum(&self) -> [Rational64; 6] {
        let mut s = [Rational64::zero(); 6];
        for t in &self.theta {
            for (slot, &(k, l)) in SYM_PAIRS.iter().enumerate() {
                s[slot] += t[k] * t[l];
            }
        }
        s
    }

    /// `Σ_{k≤l} |b_{jkl}|` for direction `j`.
    pub fn response_l1(&self, j: usize) -> Rational64 {
        self.b[j]
            .iter()
            .fold(Rational64::zero(), |acc, x| acc + x.abs())
    }

    /// Affine map `M ↦ Γ_j²(M)` evaluated without the domain check.
    pub fn gamma_sq_unchecked(&self, m: &SymMat3) -> [f64; 6] {
        let eps = m.sub(&SymMat3::IDENTITY);
        let mut out = [0.5; 6];
        for (j, o) in out.iter_mut().enumerate() {
            for s in 0..6 {
                *o += rat_to_f64(&self.b[j][s]) * eps.0[s];
            }
        }
        out
    }

    /// `Σ_j g_j θ_j⊗θ_j` for given weights.
    pub fn recompose(&self, weights: &[f64; 6]) -> SymMat3 {
        let mut acc = SymMat3::ZERO;
        for (j, w) in weights.iter().enumerate() {
            acc = acc.add(&SymMat3::outer(self.theta_f64(j)).scale(*w));
        }
        acc
    }
}

/// Squared Nash coefficients `Γ_j²(M)`, `j = 1..6`, for `‖M − Id‖_max < 1/7`.
pub fn nash_decompose(system: &NashSystem, m: &SymMat3) -> Result<[f64; 6]> {
    let dist = m.sub(&SymMat3::IDENTITY).max_norm();
    if !(dist < NASH_RADIUS) {
        return Err(Error::Domain(format!(
            "‖M − Id‖_max = {dist:.6e} is not below 1/7"
        )));
    }
    Ok(system.gamma_sq_unchecked(m))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn first_direction_and_frame_sum() {
        let sys = nash_directions();
        assert_eq!(sys.theta[0], [rat(4, 5), rat(0, 1), rat(3, 5)]);
        let two = Rational64::from_integer(2);
        let zero = Rational64::zero();
        assert_eq!(sys.frame_sum(), [two, zero, zero, two, zero, two]);
    }

    #[test]
    fn directions_are_rational_unit_vectors_on_the_fifth_lattice() {
        let sys = nash_directions();
        for t in &sys.theta {
            let n2 = t[0] * t[0] + t[1] * t[1] + t[2] * t[2];
            assert_eq!(n2, Rational64::from_integer(1));
            for c in t {
                assert!((*c * Rational64::from_integer(5)).is_integer());
            }
        }
    }

    #[test]
    fn response_table_first_row() {
        let sys = nash_directions();
        assert_eq!(sys.b[0][0], rat(1, 2));
        assert_eq!(sys.b[0][1], rat(7, 24));
        assert_eq!(sys.b[0][2], rat(25, 24));
        for j in 0..6 {
            assert_eq!(sys.response_l1(j), rat(25, 8), "row {j}");
        }
    }

    #[test]
    fn identity_gives_one_half() {
        let sys = nash_directions();
        let g = nash_decompose(&sys, &SymMat3::IDENTITY).unwrap();
        for v in g {
            assert!((v - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn perturbing_e11_moves_first_coefficient_by_b111() {
        let sys = nash_directions();
        let mut m = SymMat3::IDENTITY;
        m.0[0] += 1.0 / 7.0 - 1e-15;
        let g = nash_decompose(&sys, &m).unwrap();
        assert!((g[0] - (0.5 + 1.0 / 14.0)).abs() < 1e-14);
    }

    #[test]
    fn outside_ball_is_a_domain_error() {
        let sys = nash_directions();
        let mut m = SymMat3::IDENTITY;
        m.0[4] = 0.2;
        let err = nash_decompose(&sys, &m).unwrap_err();
        assert!(err.to_string().contains("‖M − Id‖_max"));
    }

    proptest! {
        #[test]
        fn decomposition_reconstructs(eps in proptest::array::uniform6(-0.1428f64..0.1428)) {
            let sys = nash_directions();
            let m = SymMat3::IDENTITY.add(&SymMat3(eps));
            let g = nash_decompose(&sys, &m).unwrap();
            let back = sys.recompose(&g);
            prop_assert!(back.sub(&m).max_norm() <= 1e-12);
            for v in g {
                prop_assert!(v >= 1.0 / 25.0 - 1e-12 && v <= 1.0);
            }
        }
    }
}

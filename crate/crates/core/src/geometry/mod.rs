//! Nash rank-one decomposition and Mikado flow geometry.
//!
//! Everything the construction fixes as exact data
//! (directions, response coefficients, line positions) is kept as
//! [`Rational64`] and only converted to `f64` at the point of use.

mod mikado;
mod nash;

pub use mikado::{
    line_distance, line_distance_matrix, mikado_family, mikado_profile, LineDistance, MikadoFamily,
    MikadoLine, MikadoProfile, DELTA0, SEPARATION_FACTOR,
};
pub use nash::{nash_decompose, nash_directions, NashSystem, NASH_RADIUS};

use num_rational::Rational64;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

/// Exact rational 3-vector.
pub type RatVec3 = [Rational64; 3];

pub(crate) fn rat(n: i64, d: i64) -> Rational64 {
    Rational64::new(n, d)
}

pub(crate) fn rat_to_f64(r: &Rational64) -> f64 {
    r.to_f64().expect("rational fits in f64")
}

pub(crate) fn ratvec_to_f64(v: &RatVec3) -> [f64; 3] {
    [rat_to_f64(&v[0]), rat_to_f64(&v[1]), rat_to_f64(&v[2])]
}

/// Index pairs `(k, l)` with `k <= l`, in the storage order of [`SymMat3`].
pub const SYM_PAIRS: [(usize, usize); 6] = [(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)];

/// Storage slot of entry `(a, b)` of a symmetric 3×3 matrix.
#[inline]
pub fn sym_index(a: usize, b: usize) -> usize {
    let (a, b) = if a <= b { (a, b) } else { (b, a) };
    match (a, b) {
        (0, 0) => 0,
        (0, 1) => 1,
        (0, 2) => 2,
        (1, 1) => 3,
        (1, 2) => 4,
        (2, 2) => 5,
        _ => unreachable!("index out of range"),
    }
}

/// Real symmetric 3×3 matrix stored as `(11, 12, 13, 22, 23, 33)`.
///
/// The norm is the entry-wise maximum, matching the ball in which the
/// Nash coefficients are defined.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SymMat3(pub [f64; 6]);

impl SymMat3 {
    pub const ZERO: SymMat3 = SymMat3([0.0; 6]);
    pub const IDENTITY: SymMat3 = SymMat3([1.0, 0.0, 0.0, 1.0, 0.0, 1.0]);

    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.0[sym_index(a, b)]
    }

    /// `v ⊗ v`.
    pub fn outer(v: [f64; 3]) -> Self {
        let mut m = [0.0; 6];
        for (s, &(a, b)) in SYM_PAIRS.iter().enumerate() {
            m[s] = v[a] * v[b];
        }
        SymMat3(m)
    }

    /// Symmetrized product `a ⊙ b = (a⊗b + b⊗a)/2`.
    pub fn sym_product(a: [f64; 3], b: [f64; 3]) -> Self {
        let mut m = [0.0; 6];
        for (s, &(k, l)) in SYM_PAIRS.iter().enumerate() {
            m[s] = 0.5 * (a[k] * b[l] + b[k] * a[l]);
        }
        SymMat3(m)
    }

    pub fn max_norm(&self) -> f64 {
        self.0.iter().fold(0.0f64, |acc, x| acc.max(x.abs()))
    }

    pub fn trace(&self) -> f64 {
        self.0[0] + self.0[3] + self.0[5]
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut m = self.0;
        m.iter_mut().for_each(|x| *x *= s);
        SymMat3(m)
    }

    pub fn add(&self, other: &SymMat3) -> Self {
        let mut m = self.0;
        m.iter_mut().zip(other.0).for_each(|(x, y)| *x += y);
        SymMat3(m)
    }

    pub fn sub(&self, other: &SymMat3) -> Self {
        self.add(&other.scale(-1.0))
    }
}

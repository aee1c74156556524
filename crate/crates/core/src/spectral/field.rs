use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;

use super::fft::{plan, GridPlan};
use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Pointwise norm used when reducing a multi-component field to a sup norm.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PointNorm {
    /// `|u(x)|` with the Euclidean norm over components.
    Euclidean,
    /// `max_c |u_c(x)|`; for symmetric tensors this is the entry-wise maximum.
    MaxEntry,
}

/// Location and value of a grid sup norm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupNorm {
    pub value: f64,
    /// Grid index of the maximizer on the evaluation grid it was found on.
    pub index: [usize; 3],
    /// Sub-grid offset `s/oversample` (in grid spacings) of that evaluation grid.
    pub offset: [usize; 3],
}

/// A real scalar, vector, or symmetric-tensor field on `𝕋³`, held as Fourier
/// coefficients inside the dealiased band `max_i |ξ_i| ≤ m` of an `n³` grid.
///
/// Coefficients use the averaged normalization `û(ξ) = ⨏ u e^{-iξ·x}`. Only the
/// half-space `ξ2 ≥ 0` is stored; the rest follows from `û(−ξ) = conj û(ξ)`.
/// Components are stored one after another.
#[derive(Clone)]
pub struct PeriodicField {
    plan: Arc<GridPlan>,
    ncomp: usize,
    coeffs: Vec<Complex64>,
}

impl std::fmt::Debug for PeriodicField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PeriodicField")
            .field("n", &self.n())
            .field("ncomp", &self.ncomp)
            .finish_non_exhaustive()
    }
}

impl PeriodicField {
    pub fn zeros(n: usize, ncomp: usize) -> Result<Self> {
        if n < 4 || n % 2 != 0 {
            return Err(Error::Range(format!(
                "grid size n = {n} must be even and at least 4"
            )));
        }
        if ncomp == 0 {
            return Err(Error::Range("a field needs at least one component".into()));
        }
        let plan = plan(n);
        let len = plan.band_len() * ncomp;
        Ok(Self {
            plan,
            ncomp,
            coeffs: vec![ZERO; len],
        })
    }

    pub(crate) fn zeros_like(&self, ncomp: usize) -> Self {
        Self {
            plan: self.plan.clone(),
            ncomp,
            coeffs: vec![ZERO; self.plan.band_len() * ncomp],
        }
    }

    pub fn n(&self) -> usize {
        self.plan.n
    }

    /// Band cutoff: modes with any `|ξ_i| > m` are identically zero.
    pub fn cutoff(&self) -> usize {
        self.plan.m
    }

    pub fn ncomp(&self) -> usize {
        self.ncomp
    }

    pub fn band_len(&self) -> usize {
        self.plan.band_len()
    }

    pub fn plan(&self) -> &GridPlan {
        &self.plan
    }

    pub fn comp(&self, c: usize) -> &[Complex64] {
        let len = self.band_len();
        &self.coeffs[c * len..(c + 1) * len]
    }

    pub fn comp_mut(&mut self, c: usize) -> &mut [Complex64] {
        let len = self.band_len();
        &mut self.coeffs[c * len..(c + 1) * len]
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    /// Integer wavevector of a band slot.
    #[inline]
    pub fn wavevector(&self, idx: usize) -> [i64; 3] {
        let m = self.plan.m;
        let side = 2 * m + 1;
        let h = m + 1;
        let i2 = idx % h;
        let i1 = (idx / h) % side;
        let i0 = idx / (h * side);
        [i0 as i64 - m as i64, i1 as i64 - m as i64, i2 as i64]
    }

    /// Band slot of `ξ` and whether the stored value must be conjugated.
    pub fn slot(&self, xi: [i64; 3]) -> Option<(usize, bool)> {
        let m = self.plan.m as i64;
        if xi.iter().any(|c| c.abs() > m) {
            return None;
        }
        let (k, conj) = if xi[2] < 0 {
            ([-xi[0], -xi[1], -xi[2]], true)
        } else {
            (xi, false)
        };
        let side = 2 * m + 1;
        let idx = (((k[0] + m) * side + (k[1] + m)) * (m + 1) + k[2]) as usize;
        Some((idx, conj))
    }

    /// `û_c(ξ)`, zero outside the band.
    pub fn mode(&self, c: usize, xi: [i64; 3]) -> Complex64 {
        match self.slot(xi) {
            None => ZERO,
            Some((idx, conj)) => {
                let v = self.comp(c)[idx];
                if conj {
                    v.conj()
                } else {
                    v
                }
            }
        }
    }

    /// Sets `û_c(ξ) = value` and `û_c(−ξ) = conj(value)`.
    pub fn set_mode(&mut self, c: usize, xi: [i64; 3], value: Complex64) -> Result<()> {
        let (idx, conj) = self.slot(xi).ok_or_else(|| {
            Error::Resolution(format!(
                "wavevector {xi:?} lies outside the band |ξ_i| ≤ {} of the n = {} grid",
                self.cutoff(),
                self.n()
            ))
        })?;
        let v = if conj { value.conj() } else { value };
        self.comp_mut(c)[idx] = v;
        if xi[2] == 0 {
            let (jdx, _) = self
                .slot([-xi[0], -xi[1], 0])
                .expect("mirror lies in the band");
            if jdx == idx {
                self.comp_mut(c)[idx] = Complex64::new(v.re, 0.0);
            } else {
                self.comp_mut(c)[jdx] = v.conj();
            }
        }
        Ok(())
    }

    /// `û_c(ξ) += value` together with the conjugate mirror.
    pub fn add_mode(&mut self, c: usize, xi: [i64; 3], value: Complex64) -> Result<()> {
        let current = self.mode(c, xi);
        if xi == [0, 0, 0] {
            return self.set_mode(c, xi, current + Complex64::new(value.re, 0.0));
        }
        self.set_mode(c, xi, current + value)
    }

    /// Adds `value` at `ξ` when `ξ` is a stored slot (`ξ2 ≥ 0`, inside the band).
    /// Summing a real field's full spectrum through this method fills the band exactly once.
    pub fn add_stored(&mut self, c: usize, xi: [i64; 3], value: Complex64) -> bool {
        match self.slot(xi) {
            Some((idx, false)) => {
                self.comp_mut(c)[idx] += value;
                true
            }
            _ => false,
        }
    }

    /// Zero-mode value `⨏ u_c`.
    pub fn mean(&self, c: usize) -> f64 {
        self.mode(c, [0, 0, 0]).re
    }

    pub fn has_zero_mean(&self, tol: f64) -> bool {
        (0..self.ncomp).all(|c| self.mean(c).abs() <= tol)
    }

    /// `⨏ |u|²` by Parseval, summed over components.
    pub fn mean_square(&self) -> f64 {
        let mut total = 0.0;
        for c in 0..self.ncomp {
            total += self.mean_square_of(c);
        }
        total
    }

    pub fn mean_square_of(&self, c: usize) -> f64 {
        let h = self.cutoff() + 1;
        let mut plane = 0.0;
        let mut upper = 0.0;
        for (idx, v) in self.comp(c).iter().enumerate() {
            if idx % h == 0 {
                plane += v.norm_sqr();
            } else {
                upper += v.norm_sqr();
            }
        }
        plane + 2.0 * upper
    }

    /// `⨏ u_a v_b` summed over matching components, by Parseval.
    pub fn inner(&self, other: &PeriodicField) -> f64 {
        assert_eq!(self.ncomp, other.ncomp);
        let h = self.cutoff() + 1;
        let mut total = 0.0;
        for (idx, (a, b)) in self.coeffs.iter().zip(&other.coeffs).enumerate() {
            let w = if idx % h == 0 { 1.0 } else { 2.0 };
            total += w * (a * b.conj()).re;
        }
        total
    }

    /// Maximum coefficient modulus.
    pub fn max_coeff(&self) -> f64 {
        self.coeffs.iter().fold(0.0f64, |acc, v| acc.max(v.norm()))
    }

    pub fn scale(&mut self, s: f64) {
        self.coeffs.iter_mut().for_each(|v| *v *= s);
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut out = self.clone();
        out.scale(s);
        out
    }

    /// `self += s · other`.
    pub fn axpy(&mut self, s: f64, other: &PeriodicField) {
        assert_eq!(self.n(), other.n());
        assert_eq!(self.ncomp, other.ncomp);
        self.coeffs
            .iter_mut()
            .zip(&other.coeffs)
            .for_each(|(a, b)| *a += b * s);
    }

    pub fn sub(&self, other: &PeriodicField) -> Self {
        let mut out = self.clone();
        out.axpy(-1.0, other);
        out
    }

    pub fn component(&self, c: usize) -> Self {
        let mut out = self.zeros_like(1);
        out.coeffs.copy_from_slice(self.comp(c));
        out
    }

    /// Concatenates the components of several fields on the same grid.
    pub fn stack(parts: &[&PeriodicField]) -> Result<Self> {
        let first = parts
            .first()
            .ok_or_else(|| Error::Range("cannot stack zero fields".into()))?;
        if parts.iter().any(|p| p.n() != first.n()) {
            return Err(Error::Range(
                "stacked fields must share the grid size".into(),
            ));
        }
        let ncomp = parts.iter().map(|p| p.ncomp).sum();
        let mut out = first.zeros_like(ncomp);
        let mut offset = 0;
        for p in parts {
            out.coeffs[offset..offset + p.coeffs.len()].copy_from_slice(&p.coeffs);
            offset += p.coeffs.len();
        }
        Ok(out)
    }

    /// Builds a new field whose coefficients at `ξ` are `f(ξ, û(ξ))`.
    pub fn map_modes<F>(&self, ncomp_out: usize, f: F) -> Self
    where
        F: Fn([f64; 3], &[Complex64], &mut [Complex64]),
    {
        let mut out = self.zeros_like(ncomp_out);
        let len = self.band_len();
        let mut input = vec![ZERO; self.ncomp];
        let mut output = vec![ZERO; ncomp_out];
        for idx in 0..len {
            let k = self.wavevector(idx);
            for (c, slot) in input.iter_mut().enumerate() {
                *slot = self.coeffs[c * len + idx];
            }
            output.iter_mut().for_each(|v| *v = ZERO);
            f([k[0] as f64, k[1] as f64, k[2] as f64], &input, &mut output);
            for (c, v) in output.iter().enumerate() {
                out.coeffs[c * len + idx] = *v;
            }
        }
        out
    }

    /// Multiplies every component by a scalar symbol in place.
    pub fn apply_scalar_symbol<F: Fn([f64; 3]) -> f64>(&mut self, symbol: F) {
        let len = self.band_len();
        let weights: Vec<f64> = (0..len)
            .map(|idx| {
                let k = self.wavevector(idx);
                symbol([k[0] as f64, k[1] as f64, k[2] as f64])
            })
            .collect();
        for c in 0..self.ncomp {
            let len = self.band_len();
            let comp = &mut self.coeffs[c * len..(c + 1) * len];
            comp.iter_mut().zip(&weights).for_each(|(v, w)| *v *= *w);
        }
    }

    /// Physical values of one component on the `n³` grid (row-major, last axis fastest).
    pub fn to_grid(&self, c: usize) -> Vec<f64> {
        let mut grid = vec![0.0; self.plan.grid_len()];
        self.plan.band_to_grid(self.comp(c), &mut grid);
        grid
    }

    pub fn to_grid_into(&self, c: usize, grid: &mut [f64]) {
        self.plan.band_to_grid(self.comp(c), grid);
    }

    /// Values on the grid translated by `offset/oversample` grid spacings.
    pub fn to_shifted_grid_into(
        &self,
        c: usize,
        offset: [usize; 3],
        oversample: usize,
        grid: &mut [f64],
    ) {
        match self.shift_phases(offset, oversample) {
            Some(phases) => self.to_phased_grid_into(c, &phases, grid),
            None => self.to_grid_into(c, grid),
        }
    }

    /// `e^{iξ·s}` per band mode for the translation `s = offset·2π/(n·oversample)`;
    /// `None` for the zero offset.
    fn shift_phases(&self, offset: [usize; 3], oversample: usize) -> Option<Vec<Complex64>> {
        if offset == [0, 0, 0] {
            return None;
        }
        let h = 2.0 * PI / (self.n() * oversample) as f64;
        let shift = offset.map(|s| s as f64 * h);
        Some(
            (0..self.band_len())
                .map(|idx| {
                    let k = self.wavevector(idx);
                    let phase =
                        k[0] as f64 * shift[0] + k[1] as f64 * shift[1] + k[2] as f64 * shift[2];
                    Complex64::from_polar(1.0, phase)
                })
                .collect(),
        )
    }

    fn to_phased_grid_into(&self, c: usize, phases: &[Complex64], grid: &mut [f64]) {
        let shifted: Vec<Complex64> = self
            .comp(c)
            .iter()
            .zip(phases)
            .map(|(v, p)| v * p)
            .collect();
        self.plan.band_to_grid(&shifted, grid);
    }

    /// Projects grid values onto the band, one grid per component.
    pub fn from_grids(n: usize, grids: &[&[f64]]) -> Result<Self> {
        let mut out = Self::zeros(n, grids.len())?;
        for (c, g) in grids.iter().enumerate() {
            if g.len() != n * n * n {
                return Err(Error::Range(format!(
                    "grid for component {c} has {} values, expected {}",
                    g.len(),
                    n * n * n
                )));
            }
            let plan = out.plan.clone();
            plan.grid_to_band(g, out.comp_mut(c));
        }
        Ok(out)
    }

    /// Samples `f` at the grid points and projects onto the band.
    pub fn from_fn<F: Fn([f64; 3]) -> Vec<f64>>(n: usize, ncomp: usize, f: F) -> Result<Self> {
        let mut grids = vec![vec![0.0; n * n * n]; ncomp];
        let h = 2.0 * PI / n as f64;
        for i0 in 0..n {
            for i1 in 0..n {
                for i2 in 0..n {
                    let vals = f([i0 as f64 * h, i1 as f64 * h, i2 as f64 * h]);
                    let idx = (i0 * n + i1) * n + i2;
                    for (c, g) in grids.iter_mut().enumerate() {
                        g[idx] = vals[c];
                    }
                }
            }
        }
        let refs: Vec<&[f64]> = grids.iter().map(|g| g.as_slice()).collect();
        Self::from_grids(n, &refs)
    }

    /// Grid sup norm over the `oversample³` translates of the base grid.
    ///
    /// Ties resolve to the first maximizer in translate order, then grid order.
    pub fn sup(&self, oversample: usize, norm: PointNorm) -> SupNorm {
        let oversample = oversample.max(1);
        let len = self.plan.grid_len();
        let mut buf = vec![0.0; len];
        let mut acc = vec![0.0; len];
        let mut best = SupNorm {
            value: -1.0,
            index: [0; 3],
            offset: [0; 3],
        };
        for s0 in 0..oversample {
            for s1 in 0..oversample {
                for s2 in 0..oversample {
                    let offset = [s0, s1, s2];
                    acc.iter_mut().for_each(|v| *v = 0.0);
                    let phases = self.shift_phases(offset, oversample);
                    for c in 0..self.ncomp {
                        match &phases {
                            Some(p) => self.to_phased_grid_into(c, p, &mut buf),
                            None => self.to_grid_into(c, &mut buf),
                        }
                        match norm {
                            PointNorm::Euclidean => {
                                acc.iter_mut().zip(&buf).for_each(|(a, b)| *a += b * b)
                            }
                            PointNorm::MaxEntry => acc
                                .iter_mut()
                                .zip(&buf)
                                .for_each(|(a, b)| *a = a.max(b.abs())),
                        }
                    }
                    let (idx, val) =
                        acc.iter()
                            .enumerate()
                            .fold(
                                (0, -1.0f64),
                                |(bi, bv), (i, &v)| if v > bv { (i, v) } else { (bi, bv) },
                            );
                    let val = match norm {
                        PointNorm::Euclidean => val.sqrt(),
                        PointNorm::MaxEntry => val,
                    };
                    if val > best.value {
                        let n = self.n();
                        best = SupNorm {
                            value: val,
                            index: [idx / (n * n), (idx / n) % n, idx % n],
                            offset,
                        };
                    }
                }
            }
        }
        best
    }

    /// Shorthand for the Euclidean grid sup norm.
    pub fn sup_norm(&self, oversample: usize) -> f64 {
        self.sup(oversample, PointNorm::Euclidean).value
    }

    /// Whether every coefficient is finite.
    pub fn is_finite(&self) -> bool {
        self.coeffs
            .iter()
            .all(|v| v.re.is_finite() && v.im.is_finite())
    }

    /// Copies the band into a field on a grid of different size, dropping
    /// modes that do not fit.
    pub fn resample(&self, n: usize) -> Result<Self> {
        let mut out = Self::zeros(n, self.ncomp)?;
        let m = out.cutoff().min(self.cutoff()) as i64;
        for c in 0..self.ncomp {
            for k0 in -m..=m {
                for k1 in -m..=m {
                    for k2 in 0..=m {
                        let v = self.mode(c, [k0, k1, k2]);
                        let (idx, _) = out.slot([k0, k1, k2]).expect("inside the smaller band");
                        out.comp_mut(c)[idx] = v;
                    }
                }
            }
        }
        Ok(out)
    }
}

/// Field with independent uniform random coefficients for `max_i |ξ_i| ≤ kmax`,
/// reproducible from `seed`.
pub fn random_band_limited(n: usize, ncomp: usize, kmax: i64, seed: u64) -> Result<PeriodicField> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut f = PeriodicField::zeros(n, ncomp)?;
    for c in 0..ncomp {
        for k0 in -kmax..=kmax {
            for k1 in -kmax..=kmax {
                for k2 in 0..=kmax {
                    let v = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                    f.add_mode(c, [k0, k1, k2], v)?;
                }
            }
        }
    }
    Ok(f)
}

/// Grid coordinate of a flat index.
pub fn grid_point(n: usize, idx: usize) -> [f64; 3] {
    let h = 2.0 * PI / n as f64;
    [
        (idx / (n * n)) as f64 * h,
        ((idx / n) % n) as f64 * h,
        (idx % n) as f64 * h,
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_field(n: usize, ncomp: usize, kmax: i64, seed: u64) -> PeriodicField {
        random_band_limited(n, ncomp, kmax, seed).unwrap()
    }

    #[test]
    fn single_mode_synthesis() {
        let n = 16;
        let mut f = PeriodicField::zeros(n, 1).unwrap();
        // sin(x1) = (e^{ix1} - e^{-ix1}) / 2i
        f.set_mode(0, [0, 1, 0], Complex64::new(0.0, -0.5)).unwrap();
        let g = f.to_grid(0);
        for (idx, v) in g.iter().enumerate() {
            let x = grid_point(n, idx);
            assert!((v - x[1].sin()).abs() < 1e-14);
        }
        assert!((f.mean_square() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn oblique_mode_synthesis() {
        let n = 12;
        let mut f = PeriodicField::zeros(n, 1).unwrap();
        f.set_mode(0, [2, -1, -3], Complex64::new(0.3, 0.7))
            .unwrap();
        let g = f.to_grid(0);
        for (idx, v) in g.iter().enumerate() {
            let x = grid_point(n, idx);
            let phase = 2.0 * x[0] - x[1] - 3.0 * x[2];
            let expect = 2.0 * (Complex64::new(0.3, 0.7) * Complex64::from_polar(1.0, phase)).re;
            assert!((v - expect).abs() < 1e-13);
        }
    }

    #[test]
    fn round_trip_is_exact_in_the_band() {
        let f = random_field(24, 2, 7, 3);
        let grids: Vec<Vec<f64>> = (0..2).map(|c| f.to_grid(c)).collect();
        let refs: Vec<&[f64]> = grids.iter().map(|g| g.as_slice()).collect();
        let back = PeriodicField::from_grids(24, &refs).unwrap();
        let err = back.sub(&f).max_coeff();
        assert!(err <= 1e-12 * f.max_coeff(), "{err}");
    }

    #[test]
    fn parseval_matches_grid_mean() {
        let f = random_field(20, 1, 6, 9);
        let g = f.to_grid(0);
        let grid_mean = g.iter().map(|v| v * v).sum::<f64>() / g.len() as f64;
        let rel = (grid_mean - f.mean_square()).abs() / grid_mean;
        assert!(rel < 1e-12, "{rel}");
    }

    #[test]
    fn slot_handles_the_half_space() {
        let f = PeriodicField::zeros(16, 1).unwrap();
        assert_eq!(f.slot([0, 0, -1]).unwrap().1, true);
        assert_eq!(f.slot([3, -2, 0]).unwrap().1, false);
        assert!(f.slot([6, 0, 0]).is_none());
        for idx in 0..f.band_len() {
            assert_eq!(f.slot(f.wavevector(idx)).unwrap().0, idx);
        }
    }

    #[test]
    fn oversampled_sup_finds_off_grid_peak() {
        let n = 8;
        let mut f = PeriodicField::zeros(n, 1).unwrap();
        // cos(x0 - π/8) peaks between grid points
        f.set_mode(0, [1, 0, 0], Complex64::from_polar(0.5, -PI / 8.0))
            .unwrap();
        let coarse = f.sup(1, PointNorm::MaxEntry).value;
        let fine = f.sup(2, PointNorm::MaxEntry).value;
        assert!(coarse < 0.93);
        assert!((fine - 1.0).abs() < 1e-14);
    }

    #[test]
    fn resample_preserves_low_modes() {
        let f = random_field(16, 1, 4, 1);
        let g = f.resample(32).unwrap();
        assert_eq!(g.mode(0, [3, -4, 2]), f.mode(0, [3, -4, 2]));
        assert!((g.mean_square() - f.mean_square()).abs() < 1e-14);
    }
}

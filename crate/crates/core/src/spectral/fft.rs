//! Pruned real 3D transforms between the dealiased band and the physical grid.
//!
//! Band layout is `[ξ0][ξ1][ξ2]` with `ξ0, ξ1 ∈ [-m, m]` and `ξ2 ∈ [0, m]`,
//! `ξ2` fastest. Only lines that intersect the band are transformed.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rayon::prelude::*;
use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};
use rustfft::{Fft, FftPlanner};

/// Cached transforms for one grid size.
pub struct GridPlan {
    pub n: usize,
    pub m: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    r2c: Arc<dyn RealToComplex<f64>>,
    c2r: Arc<dyn ComplexToReal<f64>>,
}

/// Largest `m` with `3m < n`: products of two band fields alias only above `m`.
pub fn band_cutoff(n: usize) -> usize {
    (n - 1) / 3
}

/// Plan for grid size `n`, built once per process.
pub fn plan(n: usize) -> Arc<GridPlan> {
    static PLANS: OnceLock<Mutex<HashMap<usize, Arc<GridPlan>>>> = OnceLock::new();
    let map = PLANS.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = map.lock().expect("plan cache poisoned");
    guard
        .entry(n)
        .or_insert_with(|| {
            let mut cp = FftPlanner::new();
            let mut rp = RealFftPlanner::new();
            Arc::new(GridPlan {
                n,
                m: band_cutoff(n),
                forward: cp.plan_fft_forward(n),
                inverse: cp.plan_fft_inverse(n),
                r2c: rp.plan_fft_forward(n),
                c2r: rp.plan_fft_inverse(n),
            })
        })
        .clone()
}

impl GridPlan {
    pub fn side(&self) -> usize {
        2 * self.m + 1
    }

    pub fn band_len(&self) -> usize {
        self.side() * self.side() * (self.m + 1)
    }

    pub fn grid_len(&self) -> usize {
        self.n * self.n * self.n
    }

    #[inline]
    fn wrap(&self, i: usize) -> usize {
        // band index i ↔ frequency i - m ↔ FFT bin (i - m) mod n
        (i + self.n - self.m) % self.n
    }

    /// `u(x) = Σ_ξ û(ξ) e^{iξ·x}` on the `n³` grid, `x = 2π j / n`.
    pub fn band_to_grid(&self, band: &[Complex64], grid: &mut [f64]) {
        let (n, side, h) = (self.n, self.side(), self.m + 1);
        assert_eq!(band.len(), self.band_len());
        assert_eq!(grid.len(), self.grid_len());
        let zero = Complex64::new(0.0, 0.0);

        // lines that are zero in the band stay zero and are not transformed
        let mut occupied = vec![false; side * h];
        for (i, v) in band.iter().enumerate() {
            if *v != zero {
                occupied[i % (side * h)] = true;
            }
        }
        let columns: Vec<usize> = (0..h)
            .filter(|&i2| (0..side).any(|i1| occupied[i1 * h + i2]))
            .collect();

        // axis 0: per ξ1, lines over x0 for every ξ2 → stage_a[ξ1][x0][ξ2]
        let mut stage_a = vec![zero; side * n * h];
        stage_a.par_chunks_mut(n * h).enumerate().for_each_init(
            || {
                (
                    vec![zero; h * n],
                    vec![zero; self.inverse.get_inplace_scratch_len()],
                )
            },
            |(lines, scratch), (i1, out)| {
                let live = &occupied[i1 * h..(i1 + 1) * h];
                if !live.contains(&true) {
                    return;
                }
                lines.iter_mut().for_each(|c| *c = zero);
                for i0 in 0..side {
                    let x = self.wrap(i0);
                    let row = &band[(i0 * side + i1) * h..(i0 * side + i1 + 1) * h];
                    for (i2, v) in row.iter().enumerate() {
                        lines[i2 * n + x] = *v;
                    }
                }
                for i2 in (0..h).filter(|&i2| live[i2]) {
                    let line = &mut lines[i2 * n..(i2 + 1) * n];
                    self.inverse.process_with_scratch(line, scratch);
                    for (x0, v) in line.iter().enumerate() {
                        out[x0 * h + i2] = *v;
                    }
                }
            },
        );

        // axes 1 and 2 per x0 slab: lines over x1, then half-spectrum rows → real rows
        let half = n / 2 + 1;
        grid.par_chunks_mut(n * n).enumerate().for_each_init(
            || {
                (
                    vec![zero; h * n],
                    vec![zero; self.inverse.get_inplace_scratch_len()],
                    vec![zero; half],
                    self.c2r.make_scratch_vec(),
                )
            },
            |(lines, scratch, spec, c2r_scratch), (x0, slab)| {
                lines.iter_mut().for_each(|c| *c = zero);
                for i1 in 0..side {
                    let x = self.wrap(i1);
                    let src = &stage_a[(i1 * n + x0) * h..(i1 * n + x0 + 1) * h];
                    for &i2 in &columns {
                        lines[i2 * n + x] = src[i2];
                    }
                }
                for &i2 in &columns {
                    self.inverse
                        .process_with_scratch(&mut lines[i2 * n..(i2 + 1) * n], scratch);
                }
                for (x1, row) in slab.chunks_mut(n).enumerate() {
                    for i2 in 0..h {
                        spec[i2] = lines[i2 * n + x1];
                    }
                    spec[h..].iter_mut().for_each(|c| *c = zero);
                    spec[0].im = 0.0;
                    spec[half - 1].im = 0.0;
                    self.c2r
                        .process_with_scratch(spec, row, c2r_scratch)
                        .expect("buffer sizes match the plan");
                }
            },
        );
    }

    /// Band coefficients `û(ξ) = n⁻³ Σ_x u(x) e^{-iξ·x}`; modes outside the band are dropped.
    pub fn grid_to_band(&self, grid: &[f64], band: &mut [Complex64]) {
        let (n, side, h) = (self.n, self.side(), self.m + 1);
        assert_eq!(band.len(), self.band_len());
        assert_eq!(grid.len(), self.grid_len());
        let zero = Complex64::new(0.0, 0.0);
        let half = n / 2 + 1;

        // axes 2 and 1 forward per x0 slab, keep band ξ1 → stage_a[x0][ξ1][ξ2]
        let mut stage_a = vec![zero; n * side * h];
        stage_a
            .par_chunks_mut(side * h)
            .zip(grid.par_chunks(n * n))
            .for_each_init(
                || {
                    (
                        vec![zero; h * n],
                        vec![zero; self.forward.get_inplace_scratch_len()],
                        vec![0.0; n],
                        vec![zero; half],
                        self.r2c.make_scratch_vec(),
                    )
                },
                |(lines, scratch, input, spec, r2c_scratch), (out, slab)| {
                    for (x1, row) in slab.chunks(n).enumerate() {
                        input.copy_from_slice(row);
                        self.r2c
                            .process_with_scratch(input, spec, r2c_scratch)
                            .expect("buffer sizes match the plan");
                        for i2 in 0..h {
                            lines[i2 * n + x1] = spec[i2];
                        }
                    }
                    self.forward.process_with_scratch(lines, scratch);
                    for i1 in 0..side {
                        let x = self.wrap(i1);
                        for i2 in 0..h {
                            out[i1 * h + i2] = lines[i2 * n + x];
                        }
                    }
                },
            );

        // axis 0 forward, keep band ξ0; per ξ1 results, scattered afterwards
        let scale = 1.0 / (n * n * n) as f64;
        let per_i1: Vec<Vec<Complex64>> = (0..side)
            .into_par_iter()
            .map_init(
                || vec![zero; self.forward.get_inplace_scratch_len()],
                |scratch, i1| {
                    let mut lines = vec![zero; h * n];
                    for x0 in 0..n {
                        let src = &stage_a[(x0 * side + i1) * h..(x0 * side + i1 + 1) * h];
                        for (i2, v) in src.iter().enumerate() {
                            lines[i2 * n + x0] = *v;
                        }
                    }
                    self.forward.process_with_scratch(&mut lines, scratch);
                    lines
                },
            )
            .collect();
        for (i1, lines) in per_i1.iter().enumerate() {
            for i0 in 0..side {
                let x = self.wrap(i0);
                let dst = &mut band[(i0 * side + i1) * h..(i0 * side + i1 + 1) * h];
                for (i2, d) in dst.iter_mut().enumerate() {
                    *d = lines[i2 * n + x] * scale;
                }
            }
        }
    }
}

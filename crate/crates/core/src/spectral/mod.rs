//! Fourier-space fields on `𝕋³ = (ℝ/2πℤ)³` and the harmonic-analysis operators
//! used by the construction and the solver.

pub mod fft;
mod field;
mod lp;
mod ops;
mod snapshot;

pub use field::{grid_point, random_band_limited, PeriodicField, PointNorm, SupNorm};
pub use lp::{
    besov_norm, low_symbol, lp_high, lp_low, lp_project, shell_symbol, BesovP, BesovReport,
    LpPartition,
};
pub use ops::{
    anti_divergence, directional_derivative, divergence, gradient, heat_propagate, laplacian,
    leray_laplacian, leray_project, modified_sym_gradient, mollify, outer_square,
    outer_square_stats, partial, projected_advection, require_zero_mean, sym_gradient_defect,
    tensor_divergence, ProductStats,
};
pub use snapshot::{read_snapshot, write_snapshot};

//! Scale ladders, the coefficient induction and the principal flow.

mod coefficients;
mod flow;
mod scales;

pub use coefficients::{
    b_limit, build_coefficients, compute_b, mikado_wave, CoefficientTable, StageReport,
    INDUCTION_OVERSAMPLE,
};
pub use flow::{ForceSample, PrincipalFlow, U0Report};
pub use scales::{
    build_scales, choose_kstar, tolerant_ceil, KStar, ScaleParams, ScaleTable, TargetSpec,
};

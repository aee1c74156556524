//! Builds the small cascade construction and prints the scale ladder, the
//! induction diagnostics and the initial-data norms.

use nse_cascade::config::ExperimentConfig;
use nse_cascade::construction::{build_coefficients, PrincipalFlow};
use nse_cascade::geometry::{mikado_family, nash_directions};

fn main() -> nse_cascade::Result<()> {
    let config = ExperimentConfig::from_toml_str(include_str!("../configs/toy.toml"))?;
    let scales = config.build_scales()?;
    println!(
        "k_* = {}, N = {:?}, M = {:?}",
        scales.kstar, scales.n, scales.m
    );
    println!("C = {:?}, mollification ℓ = {:?}", scales.c, scales.ell);

    let table = build_coefficients(
        &scales,
        &mikado_family(config.epsilon0)?,
        &nash_directions(),
    )?;
    for s in &table.stages {
        println!(
            "stage {}: ‖Dψ‖ = {:.4e}, B = {:.4e}, a ∈ [{:.3}, {:.3}], recursion residual {:.2e}",
            s.k,
            s.sup_dpsi_prev,
            s.b[0],
            s.a_min.iter().copied().fold(f64::INFINITY, f64::min),
            s.a_max.iter().copied().fold(0.0, f64::max),
            s.recursion_residual
        );
    }
    for k in 0..scales.kstar {
        println!(
            "key cancellation k = {k}: {:.2e}",
            table.verify_key_cancellation(k, 0.0)?
        );
    }

    let flow = PrincipalFlow::new(table)?;
    let report = flow.initial_data_report()?;
    println!(
        "u⁰: B^-1_(∞,1) = {:.4}, B^-1_(∞,2) = {:.4}, sup = {:.4}, peak shell {} ({:.4})",
        report.besov_inf_1,
        report.besov_inf_2,
        report.sup_norm,
        report.peak_shell,
        report.peak_amplitude
    );
    Ok(())
}

//! Size of the force `g = ∂_t v − Δv + ℙ div(v⊗v)` left by the principal flow,
//! next to the shear family where it vanishes.

use nse_cascade::config::ExperimentConfig;
use nse_cascade::construction::{build_coefficients, PrincipalFlow};
use nse_cascade::geometry::{mikado_family, nash_directions};

fn main() -> nse_cascade::Result<()> {
    let config = ExperimentConfig::from_toml_str(include_str!("../configs/toy.toml"))?;
    let scales = config.build_scales()?;
    let table = build_coefficients(
        &scales,
        &mikado_family(config.epsilon0)?,
        &nash_directions(),
    )?;
    let flow = PrincipalFlow::new(table)?;
    let (alpha, beta) = config.exponents();
    println!(
        "{:>10} {:>12} {:>12} {:>8} {:>10}",
        "t", "‖g‖", "‖P div‖", "ratio", "profile"
    );
    for t in [0.02, 0.0625, 0.125, 0.25, 0.5, 1.0] {
        let (_, s) = flow.force_residual(t)?;
        println!(
            "{:>10.4} {:>12.4e} {:>12.4e} {:>8.3} {:>10.4}",
            t,
            s.residual_sup,
            s.advection_sup,
            s.ratio,
            flow.force_bound_profile(alpha, beta, t).unwrap_or(f64::NAN)
        );
    }

    let shear = PrincipalFlow::shear(&config.target(), 16)?;
    let (_, s) = shear.force_residual(0.3)?;
    println!("shear family: ‖g‖ = {:.3e}", s.residual_sup);
    Ok(())
}

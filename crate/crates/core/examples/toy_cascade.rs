//! Runs the small cascade to `8 N_0⁻²` and prints when each diagnostic shell
//! peaks: energy moves from the high shell to the low one.

use nse_cascade::config::ExperimentConfig;
use nse_cascade::construction::{build_coefficients, PrincipalFlow};
use nse_cascade::geometry::{mikado_family, nash_directions};
use nse_cascade::solver::run;

fn main() -> nse_cascade::Result<()> {
    let config = ExperimentConfig::from_toml_str(include_str!("../configs/toy.toml"))?;
    let scales = config.build_scales()?;
    let table = build_coefficients(
        &scales,
        &mikado_family(config.epsilon0)?,
        &nash_directions(),
    )?;
    let flow = PrincipalFlow::new(table)?;
    let run_cfg = config.run_config(&scales, None)?;
    let (series, _) = run(&flow.initial_data()?, Some(&flow), &scales.n, &run_cfg)?;

    println!("{:>10}  shell amplitudes at N = {:?}", "t", scales.n);
    for s in series.samples.iter().step_by(3) {
        let amps: Vec<String> = s
            .diagnostics
            .shell_amps
            .iter()
            .map(|a| format!("{a:10.4}"))
            .collect();
        println!("{:>10.4e}  {}", s.t, amps.join(" "));
    }
    println!("steps: {}, outcome: {:?}", series.steps, series.outcome);
    println!("activation times: {:?}", series.activation_times());
    println!("peak amplitudes:  {:?}", series.peak_amplitudes());
    Ok(())
}

//! One-step cascade on a 32³ grid: `N = [1, 4]`, `M = [0, 3]`.

use nse_cascade::config::ExperimentConfig;
use nse_cascade::construction::{build_coefficients, PrincipalFlow};
use nse_cascade::geometry::{mikado_family, nash_directions};
use nse_cascade::solver::{run, CascadeSeries, RunOutcome};

fn toy_flow() -> (ExperimentConfig, PrincipalFlow) {
    let config = ExperimentConfig::from_toml_str(include_str!("../configs/toy.toml")).unwrap();
    let scales = config.build_scales().unwrap();
    assert_eq!(scales.n, vec![1, 4]);
    assert_eq!(scales.m, vec![0, 3]);
    let table = build_coefficients(
        &scales,
        &mikado_family(config.epsilon0).unwrap(),
        &nash_directions(),
    )
    .unwrap();
    (config, PrincipalFlow::new(table).unwrap())
}

fn toy_series() -> (PrincipalFlow, CascadeSeries) {
    let (config, flow) = toy_flow();
    let scales = flow.table().unwrap().scales.clone();
    let cfg = config.run_config(&scales, None).unwrap();
    let (series, _) = run(&flow.initial_data().unwrap(), Some(&flow), &scales.n, &cfg).unwrap();
    (flow, series)
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

#[test]
fn initial_data_equals_the_principal_flow_at_rest() {
    let (_, flow) = toy_flow();
    let w0 = flow
        .initial_data()
        .unwrap()
        .sub(&flow.velocity(0.0).unwrap());
    assert_eq!(w0.max_coeff(), 0.0);
    // the low shell is switched off at t = 0
    assert_eq!(flow.component(0, 0.0).unwrap().max_coeff(), 0.0);
}

#[test]
fn cascade_moves_from_the_high_shell_to_the_low_shell() {
    let (flow, series) = toy_series();
    assert_eq!(series.outcome, RunOutcome::Completed);
    assert_eq!(series.final_time(), 8.0);

    let act = series.activation_times();
    assert!(act[1] < act[0], "activation order {act:?}");
    assert_eq!(act[1], 0.0);

    // high shell is largest at t = 0 and decays after N_1⁻²
    let high: Vec<(f64, f64)> = series
        .samples
        .iter()
        .map(|s| (s.t, s.diagnostics.shell_amps[1]))
        .collect();
    let after: Vec<&(f64, f64)> = high.iter().filter(|(t, _)| *t >= 1.0 / 16.0).collect();
    assert!(after.windows(2).all(|w| w[1].1 <= w[0].1), "{after:?}");

    let peaks = series.peak_amplitudes();
    let c0 = flow.target().theta_norm();
    let ideal = c0 * (-1.0f64).exp();
    assert!(
        peaks[0] <= 4.0 * ideal && peaks[0] >= ideal / 4.0,
        "peak {} vs {ideal}",
        peaks[0]
    );

    // frozen from the reference implementation at 916 steps
    assert_eq!(series.steps, 916);
    assert!(rel(act[0], 5.999153674659648e-2) < 1e-9, "{}", act[0]);
    assert!(rel(peaks[0], 3.803958174517324) < 1e-8, "{}", peaks[0]);
    assert!(rel(peaks[1], 72.41180923715716) < 1e-8, "{}", peaks[1]);

    for s in &series.samples {
        let e = s.diagnostics.error.as_ref().unwrap();
        assert!(e
            .error_norms
            .iter()
            .chain(&e.perturbation)
            .all(|v| v.is_finite()));
        if s.t == 0.0 {
            assert!(e.perturbation.iter().all(|&v| v == 0.0));
        }
    }
    let worst = series
        .samples
        .iter()
        .filter(|s| s.t > 0.0 && s.t <= 2.0)
        .map(|s| s.diagnostics.error.as_ref().unwrap().perturbation_ratio)
        .fold(0.0, f64::max);
    // far above 1/2: at this size the perturbation is as large as the flow
    assert!(rel(worst, 2.0645374875217604) < 1e-8, "{worst}");
}

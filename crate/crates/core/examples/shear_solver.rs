//! Integrates a single-mode shear, an exact Navier-Stokes solution, and
//! compares with the closed form.

use nse_cascade::construction::{PrincipalFlow, TargetSpec};
use nse_cascade::solver::{SolverState, StepPolicy};

fn main() -> nse_cascade::Result<()> {
    let target = TargetSpec {
        theta: [3.0, 0.0, 0.0],
        eta: [0, 2, 1],
        epsilon: 0.1,
        n_max: 2,
    };
    let flow = PrincipalFlow::shear(&target, 32)?;
    let mut state = SolverState::new(&flow.initial_data()?, 0.0)?;
    let policy = StepPolicy {
        max_dt: 5e-3,
        ..StepPolicy::default()
    };
    for t in [0.05, 0.1, 0.2, 0.4] {
        let steps = state.advance_to(t, &policy)?;
        let exact = flow.target_shear(t)?;
        println!(
            "t = {t:.2}: {steps:3} steps, ‖u‖ = {:.6}, error = {:.3e}",
            state.u.sup_norm(1),
            state.u.sub(&exact).sup_norm(1)
        );
    }
    Ok(())
}

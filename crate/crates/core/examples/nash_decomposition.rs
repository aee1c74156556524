//! Decomposes a symmetric matrix near the identity into the six rank-one
//! directions and reassembles it.

use nse_cascade::geometry::{nash_decompose, nash_directions, SymMat3};

fn main() -> nse_cascade::Result<()> {
    let system = nash_directions();
    println!("directions and response-table l1 norms:");
    for j in 0..6 {
        println!(
            "  θ_{} = {:?}   Σ|b| = {}",
            j + 1,
            system.theta_f64(j),
            system.response_l1(j)
        );
    }
    println!(
        "Σ θ⊗θ (xx, xy, xz, yy, yz, zz) = {:?}",
        system.frame_sum().map(|r| r.to_string())
    );

    // Id + ε with ‖ε‖_max = 0.1
    let m = SymMat3([1.1, -0.05, 0.02, 0.95, 0.1, 1.0]);
    let weights = nash_decompose(&system, &m)?;
    println!("Γ² = {weights:.6?}");
    let back = system.recompose(&weights);
    println!("reconstruction error = {:.3e}", back.sub(&m).max_norm());

    let outside = SymMat3([1.2, 0.0, 0.0, 1.0, 0.0, 1.0]);
    match nash_decompose(&system, &outside) {
        Ok(_) => println!("unexpectedly accepted"),
        Err(e) => println!("outside the ball: {e}"),
    }
    Ok(())
}

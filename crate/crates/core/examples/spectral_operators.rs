//! Anti-divergence, Leray projection and Besov norms on a random field.

use nse_cascade::spectral::{
    anti_divergence, besov_norm, divergence, leray_project, random_band_limited, tensor_divergence,
    BesovP,
};
use num_complex::Complex64;

fn main() -> nse_cascade::Result<()> {
    let n = 32;
    let mut v = random_band_limited(n, 3, 10, 7)?;
    for c in 0..3 {
        v.set_mode(c, [0, 0, 0], Complex64::new(0.0, 0.0))?;
    }

    let r = anti_divergence(&v)?;
    let defect = tensor_divergence(&r)?.sub(&v).sup_norm(1) / v.sup_norm(1);
    println!("div R v = v up to {defect:.3e} (relative)");

    let w = leray_project(&v)?;
    println!(
        "‖div v‖ = {:.3e}, ‖div P v‖ = {:.3e}",
        divergence(&v)?.max_coeff(),
        divergence(&w)?.max_coeff()
    );

    for (s, p, q) in [
        (-1.0, BesovP::Infinity, 1.0),
        (-1.0, BesovP::Infinity, 2.0),
        (0.0, BesovP::Two, 2.0),
    ] {
        let b = besov_norm(&w, s, p, q, 2)?;
        println!(
            "B^{s}_{{{p:?},{q}}} = {:.6e} over {} shells",
            b.value,
            b.shells.len()
        );
    }
    Ok(())
}

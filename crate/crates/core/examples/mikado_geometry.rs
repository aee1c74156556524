//! Pairwise distances between the six periodic Mikado lines and the
//! cross-section profile.

use nse_cascade::geometry::{line_distance_matrix, mikado_family, DELTA0, SEPARATION_FACTOR};

fn main() -> nse_cascade::Result<()> {
    let family = mikado_family(0.5)?;
    let table = line_distance_matrix(&family);
    println!("tabulated distances (shifts in {{0..4}}³):");
    for row in &table {
        let cells: Vec<String> = row.iter().map(|d| format!("{:8.5}", d.tabulated)).collect();
        println!("  {}", cells.join(" "));
    }
    let mut smallest = f64::INFINITY;
    let mut disagree = Vec::new();
    for (i, row) in table.iter().enumerate() {
        for (j, d) in row.iter().enumerate().skip(i + 1) {
            smallest = smallest.min(d.tabulated);
            if (d.tabulated - d.periodic).abs() > 1e-12 {
                disagree.push(format!(
                    "({},{}): {:.5} vs {:.5}",
                    i + 1,
                    j + 1,
                    d.tabulated,
                    d.periodic
                ));
            }
        }
    }
    println!(
        "smallest distance {smallest:.6} vs required {:.6}",
        SEPARATION_FACTOR * DELTA0
    );
    println!("pairs where the full-lattice distance is smaller: {disagree:?}");

    let p = &family.profile;
    println!(
        "profile: δ₀ = {DELTA0:.5}, cross-section L² = {:.6e}, mean φ² = {:.6e}",
        p.cross_section_l2(),
        family.mean_phi_sq()
    );
    for r in [0.0, 0.5 * DELTA0, DELTA0, 1.5 * DELTA0] {
        println!("  χ({r:.4}) = {:.6}", p.chi(r));
    }
    Ok(())
}

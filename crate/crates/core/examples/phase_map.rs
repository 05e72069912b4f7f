//! Photon number and g2 of the parametrically pumped pair, weak and strong Kerr.
//!
//!     cargo run --release --example phase_map

use kerrsim::spectroscopy::{phase_map, GridAxis, PhaseMapConfig};

fn main() -> kerrsim::Result<()> {
    for alpha in [-0.1, -75.0] {
        let cfg = PhaseMapConfig { alpha, v: -2.0, j2: GridAxis::new(0.2, 1.2, 6), delta: GridAxis::new(-8.0, 2.0, 11), eps_d: 0.0, dims: 8 };
        let map = phase_map(&cfg)?;
        println!("alpha = {alpha} kappa");
        for (i, j2) in map.j2.iter().enumerate() {
            let row: Vec<String> = map.n_a[i].iter().zip(&map.g2[i]).map(|(n, g)| format!("{n:.2}/{g:.2}")).collect();
            println!("  J2 {j2:.2}: {}", row.join(" "));
        }
    }
    println!("cells are <a+a>/g2 for delta from -8 to 2 kappa");
    Ok(())
}

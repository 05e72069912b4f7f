//! Cross-Kerr and coupling bands against the coupler DC flux.
//!
//!     cargo run --release --example regime_map

use kerrsim::circuit::CircuitConstants;
use kerrsim::spectroscopy::regime_map;

fn main() -> kerrsim::Result<()> {
    let map = regime_map(&CircuitConstants::paper_device(), 32)?;
    println!("{:>8} {:>20} {:>20}", "phi_DC", "V band (MHz)", "J_AC band (MHz)");
    for i in (0..map.phi_dc.len()).step_by(3) {
        println!(
            "{:>8.3} {:>9.2} .. {:>7.2} {:>9.3} .. {:>7.3}",
            map.phi_dc[i],
            map.v_min[i] * 1e3,
            map.v_max[i] * 1e3,
            map.j_min[i] * 1e3,
            map.j_max[i] * 1e3
        );
    }
    if let Some((_, _, jmin, jmax)) = map.bands_at(0.3486) {
        println!("at phi_DC = 0.3486: J_AC between {:.2} and {:.2} MHz", jmin * 1e3, jmax * 1e3);
    }
    Ok(())
}

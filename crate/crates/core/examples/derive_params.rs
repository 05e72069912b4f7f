//! Mode frequencies, Kerr terms and sideband coupling at the red-sideband flux point.
//!
//!     cargo run --example derive_params

use kerrsim::circuit::{charging_energies, derive_params, CircuitConstants, FluxConfig};

fn main() -> kerrsim::Result<()> {
    let k = CircuitConstants::paper_device();
    let ce = charging_energies(&k)?;
    println!("EC = {:.4} GHz, EC_S = {:.4} GHz, C~ = {:.2} fF", ce.ec, ce.ec_s, ce.tilde_c);

    let flux = FluxConfig::new(0.1109, 0.4750, 0.3486, 0.3486 / 17.53);
    let p = derive_params(&k, &flux)?;
    println!("omega_A {:.4} GHz  omega_B {:.4} GHz", p.omega_a, p.omega_b);
    println!("alpha_A {:.1} MHz  alpha_B {:.1} MHz", p.alpha_a * 1e3, p.alpha_b * 1e3);
    println!("V {:.3} MHz", p.v * 1e3);
    println!("J_AC {:.3} MHz (first-order form {:.3} MHz)", p.j_ac * 1e3, p.j_ac_approx * 1e3);
    println!("small-modulation regime: {}", p.small_modulation_valid);
    Ok(())
}

//! Steady state of a driven Kerr oscillator: occupancy and g2 against detuning.
//!
//!     cargo run --release --example photon_blockade

use std::f64::consts::PI;

use kerrsim::dynamics::{g2_zero, steady_state, DissipationSpec};
use kerrsim::hamiltonian::build_drive;
use kerrsim::operator::{expect, mode_destroy, mode_number, Mode, ModeLayout};

fn main() -> kerrsim::Result<()> {
    let layout = ModeLayout::single(Mode::A, 8)?;
    let a = mode_destroy(&layout, Mode::A)?;
    let n = mode_number(&layout, Mode::A)?;
    let kerr = a.adjoint().matmul(&a.adjoint())?.matmul(&a)?.matmul(&a)?.scale_real(2.0 * PI * -0.02 / 2.0);
    let diss = DissipationSpec { kappa_a: 0.002, kappa_b: 0.0, nbar_a: 0.0, nbar_b: 0.0, kappa_s: None };
    println!("{:>12} {:>10} {:>8}", "detuning MHz", "<n>", "g2");
    for k in -6..=14 {
        let det = k as f64 * 1e-3;
        let h = n.scale_real(2.0 * PI * -det).add(&kerr)?.add(&build_drive(5e-4, Mode::A, &layout)?)?;
        let ss = steady_state(&h, &diss)?;
        println!("{:>12.1} {:>10.4} {:>8.3}", det * 1e3, expect(&n, &ss)?.re, g2_zero(&ss, Mode::A)?);
    }
    Ok(())
}

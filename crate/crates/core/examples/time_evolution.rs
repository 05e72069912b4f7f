//! Exchange of a single excitation under the resonant red sideband, with loss.
//!
//!     cargo run --release --example time_evolution

use kerrsim::circuit::DerivedParams;
use kerrsim::dynamics::{evolve, DissipationSpec};
use kerrsim::hamiltonian::{build_rotating_frame, FrameSpec, Sideband};
use kerrsim::operator::{Mode, ModeLayout, QState};

fn main() -> kerrsim::Result<()> {
    let p = DerivedParams::effective(6.4716, 4.7129, -0.2442, -0.2382, -0.0065429, 0.0074615);
    let layout = ModeLayout::two_mode(3, 3)?;
    let frame = FrameSpec::sideband(&p, Sideband::Rsb, Mode::B, p.omega_a - p.omega_b, p.omega_b, 0.0)?;
    let h = build_rotating_frame(&p, &frame, &layout)?.total();
    let res = evolve(&h, &DissipationSpec::uniform(0.0024393), &QState::fock(&layout, &[1, 0])?, 200.0, 0.0)?;
    for (t, o) in res.times.iter().zip(&res.records).step_by(20) {
        println!("t {t:6.1} ns  n_A {:.4}  n_B {:.4}", o.n_a.unwrap_or(f64::NAN), o.n_b.unwrap_or(f64::NAN));
    }
    println!("swap time pi/(2 pi J) = {:.1} ns", 0.5 / p.j_ac);
    Ok(())
}

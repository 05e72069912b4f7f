//! Rotating-frame steady state against a full time-dependent lab-frame run.
//!
//!     cargo run --release --example lab_frame_oracle

use kerrsim::circuit::DerivedParams;
use kerrsim::dynamics::DissipationSpec;
use kerrsim::operator::Mode;
use kerrsim::validation::lab_frame_pair;

fn main() -> kerrsim::Result<()> {
    let p = DerivedParams::effective(6.4716, 4.7129, -0.2442, -0.2382, -0.0065429, 0.0074615);
    let diss = DissipationSpec::uniform(0.0024393);
    let wm = p.omega_a - p.omega_b;
    for wd in [p.omega_b + p.j_ac, p.omega_b - p.j_ac] {
        let (rot, lab) = lab_frame_pair(&p, &diss, wm, wd, 0.00024, Mode::B, 3, 12.0)?;
        println!("omega_d {wd:.4} GHz: rotating {rot:.5}  lab {lab:.5}  ({:+.2}%)", 100.0 * (lab / rot - 1.0));
    }
    Ok(())
}

//! Fock truncation ladder at the red-sideband crossing for a strong probe.
//!
//!     cargo run --release --example truncation_ladder

use std::path::Path;

use kerrsim::config;
use kerrsim::dynamics::converge_truncation;
use kerrsim::spectroscopy::SweepConfig;

fn main() -> kerrsim::Result<()> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/configs/rsb_sweep.json");
    for eps in [0.00024, 0.012] {
        let cfg: SweepConfig = config::parse(config::load(&path, &[format!("eps_d={eps}")])?)?;
        let p = cfg.resolve_params()?;
        let (wm, wd) = (p.omega_a - p.omega_b, p.omega_b + p.j_ac);
        let (dims, amp) = converge_truncation(
            |d| {
                let v = cfg.point(&p, wm, wd, d)?.amplitude.norm();
                println!("  eps {eps}: dims {d:?} -> |<b>| {v:.6}");
                Ok(v)
            },
            &[4, 4],
            0.01,
        )?;
        println!("eps {eps}: settled at {dims:?}, |<b>| = {amp:.6}");
    }
    println!("self-Kerr of ~250 MHz keeps both modes close to their two lowest levels");
    Ok(())
}

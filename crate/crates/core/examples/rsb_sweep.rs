//! Red-sideband spectroscopy map and the avoided-crossing gap.
//!
//!     cargo run --release --example rsb_sweep [-- <count>]
//!
//! `count` shrinks both grid axes (default: the canonical 41).

use std::path::Path;

use kerrsim::analysis::{extract_peaks, Polarity};
use kerrsim::config;
use kerrsim::spectroscopy::{sweep_sideband, SweepConfig};

fn main() -> kerrsim::Result<()> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/configs/rsb_sweep.json");
    let mut overrides = Vec::new();
    if let Some(n) = std::env::args().nth(1) {
        overrides.push(format!("omega_m.count={n}"));
        overrides.push(format!("omega_d.count={n}"));
    }
    let cfg: SweepConfig = config::parse(config::load(&path, &overrides)?)?;
    let wb = cfg.resolve_params()?.omega_b;
    let map = sweep_sideband(&cfg)?;
    let peaks = extract_peaks(&map, Polarity::Peak, 0.02)?;
    for col in &peaks.columns {
        let centers: Vec<String> = col.peaks.iter().map(|p| format!("{:.2}", (p.center - wb) * 1e3)).collect();
        println!("omega_m {:.4} GHz  peaks (MHz from omega_B): {}", col.omega_m, centers.join(" "));
    }
    let gap = peaks
        .columns
        .iter()
        .filter(|c| c.peaks.len() >= 2)
        .map(|c| (c.peaks[c.peaks.len() - 1].center - c.peaks[0].center).abs())
        .fold(f64::INFINITY, f64::min);
    println!("minimum splitting {:.2} MHz, 2 J_AC = {:.2} MHz", gap * 1e3, 2e3 * cfg.resolve_params()?.j_ac);
    Ok(())
}

//! Blue-sideband map probed on mode A, followed by a level-model fit.
//!
//!     cargo run --release --example bsb_fit

use std::path::Path;

use kerrsim::analysis::{extract_peaks, fit_levels, FitOptions, LevelKind};
use kerrsim::config::{self, FitConfig};
use kerrsim::spectroscopy::{sweep_sideband, SweepConfig};

fn main() -> kerrsim::Result<()> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/configs");
    let cfg: SweepConfig = config::parse(config::load(&dir.join("bsb_sweep.json"), &[])?)?;
    let fit_cfg: FitConfig = config::parse(config::load(&dir.join("fit_bsb.json"), &[])?)?;
    let map = sweep_sideband(&cfg)?;
    let peaks = extract_peaks(&map, fit_cfg.polarity, fit_cfg.min_prominence)?;
    println!("{} peaks in {} columns", peaks.len(), peaks.columns.len());

    let fit = fit_levels(&peaks, &fit_cfg.model, &FitOptions::default())?;
    for p in &fit.parameters {
        println!("{:>8} = {:.6} GHz  +- {:.2e}", p.name, p.value, p.sigma);
    }
    println!("residual {:.3e} GHz over {} points", fit.residual_norm, fit.n_points);

    // the coalescing-branch model has no support in these loci
    let mut attraction = fit_cfg.model.clone();
    attraction.kind = LevelKind::Attraction;
    match fit_levels(&peaks, &attraction, &FitOptions::default()) {
        Ok(f) => println!("attraction fit: J = {:.4} MHz", f.get("J").map_or(f64::NAN, |p| p.value * 1e3)),
        Err(e) => println!("attraction fit: {e}"),
    }
    Ok(())
}

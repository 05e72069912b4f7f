//! Command-line front end.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde_json::{json, Value};

use crate::analysis::{extract_peaks, fit_levels, FitOptions, PeakSet};
use crate::circuit::derive_params;
use crate::config::{self, DeriveConfig, FitConfig, RegimeConfig};
use crate::error::{Error, Result};
use crate::hamiltonian::Sideband;
use crate::spectroscopy::{phase_map_with, regime_map_with, sha256_hex, sweep_sideband_with, write_outputs, PhaseMapConfig, RegimeMarker, SpectralMap, SweepConfig, SCHEMA_VERSION};
use crate::validation::oracle_suite;

#[derive(Debug, Parser)]
#[command(name = "kerrsim", version, about = "Sideband spectroscopy and phase maps of two coupled Kerr oscillators")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// JSON config file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory (default `out`; `validate` writes nothing unless given).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads for grid sweeps.
    #[arg(long, global = true, env = "KERRSIM_WORKERS")]
    pub workers: Option<usize>,
    /// Seed for synthetic noise in `fit`.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Dot-path override, e.g. `--override params.J_AC=0`. Repeatable.
    #[arg(long = "override", global = true, value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Mode frequencies and couplings from circuit constants and flux biases.
    Derive,
    /// Red-sideband spectroscopy map.
    SweepRsb,
    /// Blue-sideband spectroscopy map.
    SweepBsb,
    /// Cross-Kerr and coupling bands against the coupler DC flux.
    RegimeMap,
    /// Photon number and g2 against squeezing strength and detuning.
    PhaseMap,
    /// Peak extraction and level-model fit of a spectral map CSV.
    Fit,
    /// Built-in oracle checks.
    Validate,
}

impl Cli {
    fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("out"))
    }

    fn workers(&self) -> Result<Option<usize>> {
        match self.workers {
            Some(0) => Err(Error::Config("--workers must be at least 1".into())),
            w => Ok(w),
        }
    }

    fn load(&self) -> Result<Value> {
        let path = self.config.as_ref().ok_or_else(|| Error::Config("--config is required for this command".into()))?;
        config::load(path, &self.overrides)
    }
}

/// Runs one command and returns the summary printed on stdout.
pub fn run(cli: &Cli) -> Result<Value> {
    cli.workers()?;
    match cli.command {
        Command::Derive => {
            let cfg: DeriveConfig = config::parse(cli.load()?)?;
            let p = derive_params(&cfg.constants, &cfg.flux)?;
            let meta = json!({"schema_version": SCHEMA_VERSION, "kind": "derived", "config": cfg, "derived": p});
            let dir = cli.out_dir();
            std::fs::create_dir_all(&dir)?;
            let input = serde_json::to_vec(&meta["config"])?;
            let mut doc = meta.clone();
            doc["input_sha256"] = Value::String(sha256_hex(&input));
            std::fs::write(dir.join("derived.json"), serde_json::to_string_pretty(&doc)? + "\n")?;
            Ok(serde_json::to_value(p)?)
        }
        Command::SweepRsb | Command::SweepBsb => {
            let want = if cli.command == Command::SweepRsb { Sideband::Rsb } else { Sideband::Bsb };
            let cfg: SweepConfig = config::parse(cli.load()?)?;
            if cfg.sideband != want {
                return Err(Error::Config(format!("config sideband is {}, command expects {}", sideband_name(cfg.sideband), sideband_name(want))));
            }
            let map = sweep_sideband_with(&cfg, cli.workers()?)?;
            let csv = map.to_csv()?;
            let mut meta = map.metadata.clone();
            meta["poisoned_cells"] = json!(map.poisoned());
            write_outputs(&cli.out_dir(), "spectral_map", &csv, &meta)?;
            Ok(json!({"cells": map.axis_m.len() * map.axis_d.len(), "poisoned_cells": map.poisoned(), "csv": cli.out_dir().join("spectral_map.csv")}))
        }
        Command::RegimeMap => {
            let cfg: RegimeConfig = config::parse(cli.load()?)?;
            let mut map = regime_map_with(&cfg.constants, cfg.resolution, cli.workers()?)?;
            for m in &cfg.markers {
                let p = derive_params(&cfg.constants, &m.flux)?;
                map.markers.push(RegimeMarker { label: m.label.clone(), phi_dc: m.flux.phi_dc, v: m.v.unwrap_or(p.v), j: m.j.unwrap_or(p.j_ac) });
            }
            let meta = json!({"schema_version": SCHEMA_VERSION, "kind": "regime_map", "config": cfg, "markers": map.markers});
            write_outputs(&cli.out_dir(), "regime_map", &map.to_csv()?, &meta)?;
            let inside: Vec<Value> = map
                .markers
                .iter()
                .map(|m| {
                    let band = map.bands_at(m.phi_dc);
                    json!({"label": m.label, "J_inside_band": band.map(|b| b.2 <= m.j && m.j <= b.3), "V_inside_band": band.map(|b| b.0 <= m.v && m.v <= b.1)})
                })
                .collect();
            Ok(json!({"points": map.phi_dc.len(), "markers": inside}))
        }
        Command::PhaseMap => {
            let cfg: PhaseMapConfig = config::parse(cli.load()?)?;
            let map = phase_map_with(&cfg, cli.workers()?)?;
            let flagged = (0..map.j2.len()).flat_map(|i| (0..map.delta.len()).map(move |j| (i, j))).filter(|&(i, j)| map.truncated(i, j)).count();
            let meta = json!({"schema_version": SCHEMA_VERSION, "kind": "phase_map", "config": cfg, "kappa": map.kappa, "truncation_flagged": flagged});
            write_outputs(&cli.out_dir(), "phase_map", &map.to_csv()?, &meta)?;
            Ok(json!({"cells": map.j2.len() * map.delta.len(), "truncation_flagged": flagged}))
        }
        Command::Fit => {
            let cfg: FitConfig = config::parse(cli.load()?)?;
            let bytes = std::fs::read(&cfg.map).map_err(|e| Error::Config(format!("cannot read map {}: {e}", cfg.map)))?;
            let map = SpectralMap::from_csv(&bytes, cfg.probe)?;
            let mut peaks = extract_peaks(&map, cfg.polarity, cfg.min_prominence)?;
            add_noise(&mut peaks, cfg.noise_sigma, cli.seed)?;
            let opts = FitOptions { outlier_cut: cfg.outlier_cut, ..FitOptions::default() };
            let result = fit_levels(&peaks, &cfg.model, &opts)?;
            let dir = cli.out_dir();
            std::fs::create_dir_all(&dir)?;
            std::fs::write(dir.join("peaks.csv"), peaks_csv(&peaks)?)?;
            let mut input = serde_json::to_vec(&cfg)?;
            input.extend_from_slice(&bytes);
            let doc = json!({
                "schema_version": SCHEMA_VERSION,
                "kind": "fit",
                "config": cfg,
                "seed": cli.seed,
                "result": result,
                "input_sha256": sha256_hex(&input),
            });
            std::fs::write(dir.join("fit.json"), serde_json::to_string_pretty(&doc)? + "\n")?;
            Ok(serde_json::to_value(&result)?)
        }
        Command::Validate => {
            let checks = oracle_suite()?;
            let mut out = std::io::stdout().lock();
            let _ = writeln!(out, "{:<50} {:>14} {:>14} {:>8}  result", "check", "value", "reference", "tol");
            for c in &checks {
                let _ = writeln!(out, "{:<50} {:>14.6e} {:>14.6e} {:>8.0e}  {}", c.name, c.value, c.reference, c.tolerance, if c.pass { "PASS" } else { "FAIL" });
            }
            if let Some(dir) = &cli.out {
                std::fs::create_dir_all(dir)?;
                std::fs::write(dir.join("validate.json"), serde_json::to_string_pretty(&checks)? + "\n")?;
            }
            let failed = checks.iter().filter(|c| !c.pass).count();
            if failed > 0 {
                return Err(Error::NoConvergence(format!("{failed} oracle check(s) failed")));
            }
            Ok(json!({"checks": checks.len(), "failed": 0}))
        }
    }
}

fn sideband_name(s: Sideband) -> String {
    serde_json::to_value(s).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default()
}

fn add_noise(peaks: &mut PeakSet, sigma: f64, seed: u64) -> Result<()> {
    if sigma == 0.0 {
        return Ok(());
    }
    let dist = Normal::new(0.0, sigma).map_err(|e| Error::Config(format!("noise_sigma: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for col in &mut peaks.columns {
        for p in &mut col.peaks {
            p.center += dist.sample(&mut rng);
        }
    }
    Ok(())
}

fn peaks_csv(peaks: &PeakSet) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["omega_m", "center", "width", "amplitude", "prominence", "polarity"])?;
    for c in &peaks.columns {
        for p in &c.peaks {
            w.write_record([format!("{:?}", c.omega_m), format!("{:?}", p.center), format!("{:?}", p.width), format!("{:?}", p.amplitude), format!("{:?}", p.prominence), format!("{:?}", p.polarity).to_lowercase()])?;
        }
    }
    w.into_inner().map_err(|e| Error::Io(std::io::Error::other(e.to_string())))
}

/// Parses arguments, runs, and reports; returns the process exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            eprintln!("{}", json!({"error": "usage", "message": e.to_string().trim(), "exit_code": 2}));
            return 2;
        }
    };
    match run(&cli) {
        Ok(summary) => {
            if cli.command != Command::Validate {
                // a closed pipe on stdout is not a failure of the run
                let _ = writeln!(std::io::stdout().lock(), "{}", serde_json::to_string_pretty(&summary).unwrap_or_default());
            }
            0
        }
        Err(e) => {
            let code = e.exit_code();
            eprintln!("{}", json!({"error": e.kind(), "message": e.to_string(), "exit_code": code}));
            code
        }
    }
}

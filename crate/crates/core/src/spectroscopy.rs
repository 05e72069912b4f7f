//! Two-tone sideband spectroscopy maps, flux-regime bands, and parametric phase maps.

use std::f64::consts::PI;
use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::circuit::{derive_params, CircuitConstants, DerivedParams, FluxConfig};
use crate::dynamics::{steady_state_with, DissipationSpec, SteadyMethod, SteadyOptions};
use crate::error::{Error, Result};
use crate::hamiltonian::{build_rotating_frame, FrameSpec, Sideband};
use crate::operator::{expect, mode_destroy, mode_number, Mode, ModeLayout, QOperator, QState, C64};

pub const SCHEMA_VERSION: u32 = 1;

/// Uniform grid `min..=max` with `count` points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridAxis {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl GridAxis {
    pub fn new(min: f64, max: f64, count: usize) -> Self {
        Self { min, max, count }
    }

    pub fn centered(center: f64, half_width: f64, count: usize) -> Self {
        Self::new(center - half_width, center + half_width, count)
    }

    pub fn validate(&self, name: &str) -> Result<()> {
        if self.count < 2 {
            return Err(Error::Config(format!("{name}: count must be >= 2, got {}", self.count)));
        }
        if !(self.min.is_finite() && self.max.is_finite() && self.max > self.min) {
            return Err(Error::Config(format!("{name}: need finite min < max, got {}..{}", self.min, self.max)));
        }
        Ok(())
    }

    pub fn values(&self) -> Vec<f64> {
        let n = self.count.max(2);
        (0..n).map(|i| if i + 1 == n { self.max } else { self.min + (self.max - self.min) * i as f64 / (n - 1) as f64 }).collect()
    }
}

/// Circuit inputs used when no effective parameters are given.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CircuitSpec {
    pub constants: CircuitConstants,
    pub flux: FluxConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    /// Modulation-frequency axis, GHz.
    pub omega_m: GridAxis,
    /// Drive-frequency axis, GHz.
    pub omega_d: GridAxis,
    pub probe: Mode,
    /// Drive amplitude, GHz.
    pub eps_d: f64,
    /// Fock dimensions `[A, B]` or `[A, B, S]`.
    pub dims: Vec<usize>,
    pub dissipation: DissipationSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<DerivedParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub circuit: Option<CircuitSpec>,
    pub sideband: Sideband,
    #[serde(default)]
    pub occupation_terms: bool,
    #[serde(default)]
    pub sloshing: bool,
    #[serde(default)]
    pub solver: SteadyMethod,
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        self.omega_m.validate("omega_m")?;
        self.omega_d.validate("omega_d")?;
        self.dissipation.validate()?;
        if !(self.eps_d.is_finite() && self.eps_d >= 0.0) {
            return Err(Error::Config(format!("eps_d must be finite and >= 0, got {}", self.eps_d)));
        }
        if self.probe == Mode::S {
            return Err(Error::Config("the sloshing mode cannot be probed".into()));
        }
        let want = if self.sloshing { 3 } else { 2 };
        if self.dims.len() != want {
            return Err(Error::Config(format!("dims must list {want} entries, got {}", self.dims.len())));
        }
        if self.sloshing && self.dissipation.kappa_s.is_none() {
            return Err(Error::Config("sloshing mode needs dissipation.kappa_S".into()));
        }
        self.resolve_params().map(|_| ())
    }

    pub fn resolve_params(&self) -> Result<DerivedParams> {
        match (&self.params, &self.circuit) {
            (Some(p), None) => Ok(p.clone()),
            (None, Some(c)) => derive_params(&c.constants, &c.flux),
            (Some(_), Some(_)) => Err(Error::Config("give either params or circuit, not both".into())),
            (None, None) => Err(Error::Config("one of params or circuit is required".into())),
        }
    }

    pub fn layout_for(&self, dims: &[usize]) -> Result<ModeLayout> {
        match dims {
            [a, b] => ModeLayout::two_mode(*a, *b),
            [a, b, s] => ModeLayout::with_sloshing(*a, *b, *s),
            _ => Err(Error::InvalidDimension(format!("dims must have 2 or 3 entries, got {}", dims.len()))),
        }
    }

    /// Steady-state response at one grid point.
    pub fn point(&self, p: &DerivedParams, omega_m: f64, omega_d: f64, dims: &[usize]) -> Result<PointResult> {
        let layout = self.layout_for(dims)?;
        let frame = FrameSpec::sideband(p, self.sideband, self.probe, omega_m, omega_d, self.eps_d)?.with_occupation_terms(self.occupation_terms);
        let h = build_rotating_frame(p, &frame, &layout)?.total();
        let opts = SteadyOptions { method: self.solver, ..SteadyOptions::default() };
        let ss = steady_state_with(&h, &self.dissipation, &opts)?;
        observe(&ss.state, self.probe)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PointResult {
    pub amplitude: C64,
    pub occupation: f64,
    /// NaN where the occupation is too small to define it.
    pub g2: f64,
}

fn observe(state: &QState, mode: Mode) -> Result<PointResult> {
    let layout = state.layout();
    let c = mode_destroy(layout, mode)?;
    let amplitude = expect(&c, state)?;
    let occupation = expect(&mode_number(layout, mode)?, state)?.re;
    let g2 = match crate::dynamics::g2_zero(state, mode) {
        Ok(v) => v,
        Err(Error::UndefinedG2(_)) => f64::NAN,
        Err(e) => return Err(e),
    };
    Ok(PointResult { amplitude, occupation, g2 })
}

/// Grid of steady-state probe responses, indexed `[i_m][i_d]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralMap {
    pub axis_m: Vec<f64>,
    pub axis_d: Vec<f64>,
    pub probe: Mode,
    pub amplitude: Vec<Vec<C64>>,
    /// `|⟨c⟩|` divided by its column maximum.
    pub normalized: Vec<Vec<f64>>,
    pub occupation: Vec<Vec<f64>>,
    pub g2: Vec<Vec<f64>>,
    /// Error text of poisoned cells.
    pub errors: Vec<Vec<Option<String>>>,
    pub metadata: Value,
}

impl SpectralMap {
    fn from_cells(axis_m: Vec<f64>, axis_d: Vec<f64>, probe: Mode, cells: Vec<Result<PointResult>>, metadata: Value) -> Self {
        let nd = axis_d.len();
        let nan = C64::new(f64::NAN, f64::NAN);
        let mut amplitude = Vec::with_capacity(axis_m.len());
        let mut occupation = Vec::with_capacity(axis_m.len());
        let mut g2 = Vec::with_capacity(axis_m.len());
        let mut errors = Vec::with_capacity(axis_m.len());
        let mut it = cells.into_iter();
        for _ in 0..axis_m.len() {
            let (mut a, mut n, mut g, mut e) = (Vec::with_capacity(nd), Vec::with_capacity(nd), Vec::with_capacity(nd), Vec::with_capacity(nd));
            for _ in 0..nd {
                match it.next().expect("one cell per grid point") {
                    Ok(r) => {
                        a.push(r.amplitude);
                        n.push(r.occupation);
                        g.push(r.g2);
                        e.push(None);
                    }
                    Err(err) => {
                        a.push(nan);
                        n.push(f64::NAN);
                        g.push(f64::NAN);
                        e.push(Some(format!("{}: {err}", err.kind())));
                    }
                }
            }
            amplitude.push(a);
            occupation.push(n);
            g2.push(g);
            errors.push(e);
        }
        let normalized = normalize_columns(&amplitude);
        Self { axis_m, axis_d, probe, amplitude, normalized, occupation, g2, errors, metadata }
    }

    pub fn poisoned(&self) -> usize {
        self.errors.iter().flatten().filter(|e| e.is_some()).count()
    }

    pub fn magnitude(&self, i_m: usize, i_d: usize) -> f64 {
        self.amplitude[i_m][i_d].norm()
    }

    /// One row per grid point, modulation frequency outermost.
    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["omega_m", "omega_d", "re", "im", "abs", "normalized", "n", "g2", "error"])?;
        for (i, wm) in self.axis_m.iter().enumerate() {
            for (j, wd) in self.axis_d.iter().enumerate() {
                let a = self.amplitude[i][j];
                w.write_record([
                    fmt(*wm),
                    fmt(*wd),
                    fmt(a.re),
                    fmt(a.im),
                    fmt(a.norm()),
                    fmt(self.normalized[i][j]),
                    fmt(self.occupation[i][j]),
                    fmt(self.g2[i][j]),
                    self.errors[i][j].clone().unwrap_or_default(),
                ])?;
            }
        }
        w.into_inner().map_err(|e| Error::Io(std::io::Error::other(e.to_string())))
    }

    /// Reads a map in the CSV layout of [`SpectralMap::to_csv`]. Only `omega_m`,
    /// `omega_d` and one of `abs`/`normalized` are required.
    pub fn from_csv(bytes: &[u8], probe: Mode) -> Result<Self> {
        let mut r = csv::Reader::from_reader(bytes);
        let headers = r.headers()?.clone();
        let col = |name: &str| headers.iter().position(|h| h.trim() == name);
        let (im, id) = match (col("omega_m"), col("omega_d")) {
            (Some(a), Some(b)) => (a, b),
            _ => return Err(Error::Config("CSV needs omega_m and omega_d columns".into())),
        };
        let (cre, cim, cabs, cnorm, cn, cg, cerr) = (col("re"), col("im"), col("abs"), col("normalized"), col("n"), col("g2"), col("error"));
        if cabs.is_none() && cnorm.is_none() && cre.is_none() {
            return Err(Error::Config("CSV needs an abs, normalized or re/im column".into()));
        }
        let mut rows = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            let num = |c: Option<usize>| -> Result<f64> {
                match c.and_then(|c| rec.get(c)) {
                    None => Ok(f64::NAN),
                    Some(s) if s.trim().is_empty() => Ok(f64::NAN),
                    Some(s) => s.trim().parse::<f64>().map_err(|_| Error::Config(format!("bad number {s:?} in CSV"))),
                }
            };
            let amp = match (cre, cim) {
                (Some(_), Some(_)) => C64::new(num(cre)?, num(cim)?),
                _ => {
                    let v = if cabs.is_some() { num(cabs)? } else { num(cnorm)? };
                    C64::new(v, 0.0)
                }
            };
            let err = cerr.and_then(|c| rec.get(c)).filter(|s| !s.is_empty()).map(str::to_string);
            rows.push((num(Some(im))?, num(Some(id))?, amp, num(cn)?, num(cg)?, err));
        }
        let mut axis_m: Vec<f64> = Vec::new();
        let mut axis_d: Vec<f64> = Vec::new();
        for r in &rows {
            if !axis_m.contains(&r.0) {
                axis_m.push(r.0);
            }
            if !axis_d.contains(&r.1) {
                axis_d.push(r.1);
            }
        }
        axis_m.sort_by(f64::total_cmp);
        axis_d.sort_by(f64::total_cmp);
        let (nm, nd) = (axis_m.len(), axis_d.len());
        if nm * nd != rows.len() {
            return Err(Error::Config(format!("CSV rows ({}) do not form a {nm}x{nd} grid", rows.len())));
        }
        let nan = C64::new(f64::NAN, f64::NAN);
        let mut amplitude = vec![vec![nan; nd]; nm];
        let mut occupation = vec![vec![f64::NAN; nd]; nm];
        let mut g2 = vec![vec![f64::NAN; nd]; nm];
        let mut errors = vec![vec![None; nd]; nm];
        for (wm, wd, a, n, g, e) in rows {
            let i = axis_m.iter().position(|&x| x == wm).unwrap_or(0);
            let j = axis_d.iter().position(|&x| x == wd).unwrap_or(0);
            amplitude[i][j] = a;
            occupation[i][j] = n;
            g2[i][j] = g;
            errors[i][j] = e;
        }
        let normalized = normalize_columns(&amplitude);
        Ok(Self { axis_m, axis_d, probe, amplitude, normalized, occupation, g2, errors, metadata: Value::Null })
    }
}

fn normalize_columns(amplitude: &[Vec<C64>]) -> Vec<Vec<f64>> {
    amplitude
        .iter()
        .map(|col| {
            let mags: Vec<f64> = col.iter().map(|z| z.norm()).collect();
            let max = mags.iter().cloned().filter(|v| v.is_finite()).fold(0.0_f64, f64::max);
            mags.iter().map(|&v| if !v.is_finite() { f64::NAN } else if max > 0.0 { v / max } else { 0.0 }).collect()
        })
        .collect()
}

/// Shortest representation that parses back to the same value.
fn fmt(v: f64) -> String {
    if v.is_nan() {
        "NaN".to_string()
    } else {
        format!("{v:?}")
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn run_grid<T, F>(n: usize, workers: Option<usize>, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match workers {
        Some(1) => Ok((0..n).map(&f).collect()),
        Some(w) => {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(w).build().map_err(|e| Error::Config(format!("thread pool: {e}")))?;
            Ok(pool.install(|| (0..n).into_par_iter().map(&f).collect()))
        }
        None => Ok((0..n).into_par_iter().map(&f).collect()),
    }
}

pub fn sweep_sideband(config: &SweepConfig) -> Result<SpectralMap> {
    sweep_sideband_with(config, None)
}

/// Steady-state sweep over the `(omega_m, omega_d)` grid. Failing cells are kept as
/// poisoned entries; `workers = None` uses all available cores.
pub fn sweep_sideband_with(config: &SweepConfig, workers: Option<usize>) -> Result<SpectralMap> {
    config.validate()?;
    if config.sideband == Sideband::None {
        return Err(Error::Config("sideband spectroscopy needs sideband rsb or bsb".into()));
    }
    let p = config.resolve_params()?;
    let axis_m = config.omega_m.values();
    let axis_d = config.omega_d.values();
    let mid = |v: &[f64]| v[v.len() / 2];
    FrameSpec::sideband(&p, config.sideband, config.probe, mid(&axis_m), mid(&axis_d), config.eps_d)?.check(&p)?;
    config.layout_for(&config.dims)?;
    let nd = axis_d.len();
    let cells = run_grid(axis_m.len() * nd, workers, |k| config.point(&p, axis_m[k / nd], axis_d[k % nd], &config.dims))?;
    let metadata = json!({
        "schema_version": SCHEMA_VERSION,
        "kind": "spectral_map",
        "config": config,
        "derived": p,
    });
    Ok(SpectralMap::from_cells(axis_m, axis_d, config.probe, cells, metadata))
}

/// Configuration echo, provenance hashes, and the CSV itself.
pub fn write_outputs(dir: &Path, stem: &str, csv: &[u8], metadata: &Value) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(format!("{stem}.csv")), csv)?;
    let mut meta = metadata.clone();
    let input = meta.get("config").map(serde_json::to_vec).transpose()?.unwrap_or_default();
    if let Value::Object(m) = &mut meta {
        m.insert("input_sha256".into(), Value::String(sha256_hex(&input)));
        m.insert("output_sha256".into(), Value::String(sha256_hex(csv)));
    }
    fs::write(dir.join(format!("{stem}.json")), serde_json::to_string_pretty(&meta)? + "\n")?;
    Ok(())
}

/// Cross-Kerr and sideband-coupling bands against the coupler DC flux.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegimeMap {
    /// Coupler DC flux, Φ₀.
    pub phi_dc: Vec<f64>,
    pub v_min: Vec<f64>,
    pub v_max: Vec<f64>,
    pub j_min: Vec<f64>,
    pub j_max: Vec<f64>,
    pub markers: Vec<RegimeMarker>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegimeMarker {
    pub label: String,
    pub phi_dc: f64,
    #[serde(rename = "V")]
    pub v: f64,
    #[serde(rename = "J")]
    pub j: f64,
}

impl RegimeMap {
    /// Band value at `phi_dc` by linear interpolation: `(v_min, v_max, j_min, j_max)`.
    pub fn bands_at(&self, phi_dc: f64) -> Option<(f64, f64, f64, f64)> {
        let k = self.phi_dc.windows(2).position(|w| w[0] <= phi_dc && phi_dc <= w[1])?;
        let t = (phi_dc - self.phi_dc[k]) / (self.phi_dc[k + 1] - self.phi_dc[k]);
        let lerp = |v: &[f64]| v[k] + t * (v[k + 1] - v[k]);
        Some((lerp(&self.v_min), lerp(&self.v_max), lerp(&self.j_min), lerp(&self.j_max)))
    }

    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["phi_dc", "V_min", "V_max", "J_min", "J_max"])?;
        for i in 0..self.phi_dc.len() {
            w.write_record([fmt(self.phi_dc[i]), fmt(self.v_min[i]), fmt(self.v_max[i]), fmt(self.j_min[i]), fmt(self.j_max[i])])?;
        }
        w.into_inner().map_err(|e| Error::Io(std::io::Error::other(e.to_string())))
    }
}

/// Bands over `Φ_DC ∈ [0, 0.5]`: V over transmon fluxes `Φ_A, Φ_B ∈ [0, 0.5]`, and
/// J_AC over those fluxes and `Φ_AC ∈ [Φ_DC/100, Φ_DC/10]`.
pub fn regime_map(constants: &CircuitConstants, resolution: usize) -> Result<RegimeMap> {
    regime_map_with(constants, resolution, None)
}

pub fn regime_map_with(constants: &CircuitConstants, resolution: usize, workers: Option<usize>) -> Result<RegimeMap> {
    if resolution < 16 {
        return Err(Error::Config(format!("regime map resolution must be >= 16, got {resolution}")));
    }
    constants.validate()?;
    let phi_dc = GridAxis::new(0.0, 0.5, resolution).values();
    let transmon = GridAxis::new(0.0, 0.5, resolution).values();
    let rows = run_grid(phi_dc.len(), workers, |i| -> Result<[f64; 4]> {
        let dc = phi_dc[i];
        let (mut vmin, mut vmax, mut jmin, mut jmax) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for &fa in &transmon {
            for &fb in &transmon {
                for ac in [dc / 100.0, dc / 10.0] {
                    let p = derive_params(constants, &FluxConfig::new(fa, fb, dc, ac))?;
                    vmin = vmin.min(p.v);
                    vmax = vmax.max(p.v);
                    jmin = jmin.min(p.j_ac);
                    jmax = jmax.max(p.j_ac);
                }
            }
        }
        Ok([vmin, vmax, jmin, jmax])
    })?;
    let rows: Vec<[f64; 4]> = rows.into_iter().collect::<Result<_>>()?;
    Ok(RegimeMap {
        phi_dc,
        v_min: rows.iter().map(|r| r[0]).collect(),
        v_max: rows.iter().map(|r| r[1]).collect(),
        j_min: rows.iter().map(|r| r[2]).collect(),
        j_max: rows.iter().map(|r| r[3]).collect(),
        markers: Vec::new(),
    })
}

/// Parametric two-mode-squeezing phase map; all energies in units of κ.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseMapConfig {
    pub alpha: f64,
    #[serde(rename = "V")]
    pub v: f64,
    pub j2: GridAxis,
    pub delta: GridAxis,
    #[serde(default)]
    pub eps_d: f64,
    pub dims: usize,
}

impl PhaseMapConfig {
    pub fn validate(&self) -> Result<()> {
        self.j2.validate("j2")?;
        self.delta.validate("delta")?;
        if self.dims < 3 {
            return Err(Error::Config(format!("phase map dims must be >= 3, got {}", self.dims)));
        }
        if ![self.alpha, self.v, self.eps_d].iter().all(|v| v.is_finite()) || self.eps_d < 0.0 {
            return Err(Error::Config("alpha, V, eps_d must be finite and eps_d >= 0".into()));
        }
        Ok(())
    }
}

/// Steady-state `⟨a†a⟩` and `g²(0)` of mode A on a `[i_j2][i_delta]` grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseMap {
    pub j2: Vec<f64>,
    pub delta: Vec<f64>,
    pub alpha: f64,
    #[serde(rename = "V")]
    pub v: f64,
    pub kappa: f64,
    pub dims: usize,
    pub n_a: Vec<Vec<f64>>,
    pub g2: Vec<Vec<f64>>,
    /// Population of the highest Fock level of A; large values flag truncation.
    pub top_population: Vec<Vec<f64>>,
    pub errors: Vec<Vec<Option<String>>>,
}

/// Cells whose top-level population exceeds this are flagged as truncation-limited.
pub const TRUNCATION_FLAG: f64 = 1e-3;

impl PhaseMap {
    pub fn truncated(&self, i: usize, j: usize) -> bool {
        !(self.top_population[i][j] <= TRUNCATION_FLAG)
    }

    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["J2", "delta", "n_a", "g2", "top_population", "error"])?;
        for (i, j2) in self.j2.iter().enumerate() {
            for (k, d) in self.delta.iter().enumerate() {
                let mut err = self.errors[i][k].clone().unwrap_or_default();
                if err.is_empty() && self.truncated(i, k) {
                    err = "truncation".into();
                }
                w.write_record([fmt(*j2), fmt(*d), fmt(self.n_a[i][k]), fmt(self.g2[i][k]), fmt(self.top_population[i][k]), err])?;
            }
        }
        w.into_inner().map_err(|e| Error::Io(std::io::Error::other(e.to_string())))
    }
}

/// Rotating-frame Hamiltonian of the phase map (angular units, κ = 1):
/// `−δ/2 (n_a + n_b) + α/2 Σ c†²c² + V n_a n_b + J₂(a†b† + ab) + ε(a + a†)`.
pub fn phase_map_hamiltonian(alpha: f64, v: f64, j2: f64, delta: f64, eps_d: f64, dims: usize) -> Result<QOperator> {
    let layout = ModeLayout::two_mode(dims, dims)?;
    let a = mode_destroy(&layout, Mode::A)?.into_matrix();
    let b = mode_destroy(&layout, Mode::B)?.into_matrix();
    let (ad, bd) = (a.adjoint(), b.adjoint());
    let (na, nb) = (&ad * &a, &bd * &b);
    let c = C64::from;
    let h: DMatrix<C64> = (&na + &nb) * c(-delta / 2.0)
        + (&ad * &ad * &a * &a + &bd * &bd * &b * &b) * c(alpha / 2.0)
        + &na * &nb * c(v)
        + (&ad * &bd + &a * &b) * c(j2)
        + (&a + &ad) * c(eps_d);
    QOperator::new_hermitian(h * c(2.0 * PI), layout)
}

pub fn phase_map(config: &PhaseMapConfig) -> Result<PhaseMap> {
    phase_map_with(config, None)
}

pub fn phase_map_with(config: &PhaseMapConfig, workers: Option<usize>) -> Result<PhaseMap> {
    config.validate()?;
    let j2 = config.j2.values();
    let delta = config.delta.values();
    let dims = config.dims;
    let diss = DissipationSpec::uniform(1.0);
    // without a coherent drive n_a − n_b is conserved
    let charges: Option<Vec<i64>> = (config.eps_d == 0.0).then(|| (0..dims * dims).map(|i| (i / dims) as i64 - (i % dims) as i64).collect());
    let nd = delta.len();
    let cells = run_grid(j2.len() * nd, workers, |k| -> Result<(f64, f64, f64)> {
        let h = phase_map_hamiltonian(config.alpha, config.v, j2[k / nd], delta[k % nd], config.eps_d, dims)?;
        let opts = SteadyOptions { charges: charges.clone(), ..SteadyOptions::default() };
        let ss = steady_state_with(&h, &diss, &opts)?;
        let r = observe(&ss.state, Mode::A)?;
        let pops = ss.state.populations();
        let top: f64 = (0..dims * dims).filter(|i| i / dims == dims - 1).map(|i| pops[i]).sum();
        Ok((r.occupation, r.g2, top))
    })?;
    let mut out = PhaseMap {
        j2: j2.clone(),
        delta: delta.clone(),
        alpha: config.alpha,
        v: config.v,
        kappa: 1.0,
        dims,
        n_a: vec![vec![f64::NAN; nd]; j2.len()],
        g2: vec![vec![f64::NAN; nd]; j2.len()],
        top_population: vec![vec![f64::NAN; nd]; j2.len()],
        errors: vec![vec![None; nd]; j2.len()],
    };
    for (k, cell) in cells.into_iter().enumerate() {
        let (i, j) = (k / nd, k % nd);
        match cell {
            Ok((n, g, top)) => {
                out.n_a[i][j] = n;
                out.g2[i][j] = g;
                out.top_population[i][j] = top;
            }
            Err(e) => out.errors[i][j] = Some(format!("{}: {e}", e.kind())),
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axis_endpoints_exact() {
        let v = GridAxis::new(0.1, 0.7, 7).values();
        assert_eq!(v.len(), 7);
        assert_eq!(v[0], 0.1);
        assert_eq!(v[6], 0.7);
        assert!(v.windows(2).all(|w| w[1] > w[0]));
        assert!(GridAxis::new(1.0, 1.0, 3).validate("x").is_err());
        assert!(GridAxis::new(0.0, 1.0, 1).validate("x").is_err());
    }

    #[test]
    fn normalization_per_column() {
        let amp = vec![vec![C64::new(0.5, 0.0), C64::new(0.0, 2.0)], vec![C64::new(f64::NAN, 0.0), C64::new(3.0, 4.0)]];
        let n = normalize_columns(&amp);
        assert_eq!(n[0], vec![0.25, 1.0]);
        assert!(n[1][0].is_nan());
        assert_eq!(n[1][1], 1.0);
    }

    #[test]
    fn float_format_round_trips() {
        for v in [0.1, 1.0 / 3.0, -6.542859001534e-3, 1e-300] {
            assert_eq!(fmt(v).parse::<f64>().unwrap(), v);
        }
        assert!(fmt(f64::NAN).parse::<f64>().unwrap().is_nan());
    }
}

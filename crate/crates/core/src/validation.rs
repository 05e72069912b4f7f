//! Built-in oracle checks run by `kerrsim validate`.

use serde::Serialize;

use crate::circuit::DerivedParams;
use crate::dynamics::{converge_truncation, evolve_time_dependent, steady_state, DissipationSpec, EvolveOptions};
use crate::error::Result;
use crate::hamiltonian::{build_drive, build_lab_frame, Sideband};
use crate::operator::{expect, mode_number, Mode, ModeLayout, QState, C64};
use crate::spectroscopy::{GridAxis, SweepConfig};

#[derive(Clone, Debug, Serialize)]
pub struct OracleCheck {
    pub name: String,
    pub value: f64,
    pub reference: f64,
    /// Relative tolerance.
    pub tolerance: f64,
    pub pass: bool,
}

impl OracleCheck {
    pub fn relative(name: &str, value: f64, reference: f64, tolerance: f64) -> Self {
        let pass = ((value - reference) / reference).abs() <= tolerance;
        Self { name: name.to_string(), value, reference, tolerance, pass }
    }
}

/// Steady `⟨a†a⟩` of a driven damped cavity against `ε² / (Δ² + κ²/4)`.
pub fn cavity_check(detuning: f64, kappa: f64, eps: f64, dim: usize) -> Result<OracleCheck> {
    let layout = ModeLayout::single(Mode::A, dim)?;
    let h = mode_number(&layout, Mode::A)?.scale_real(2.0 * std::f64::consts::PI * detuning).add(&build_drive(eps, Mode::A, &layout)?)?;
    let diss = DissipationSpec { kappa_a: kappa, kappa_b: 0.0, nbar_a: 0.0, nbar_b: 0.0, kappa_s: None };
    let ss = steady_state(&h, &diss)?;
    let n = expect(&mode_number(&layout, Mode::A)?, &ss)?.re;
    let exact = eps * eps / (detuning * detuning + kappa * kappa / 4.0);
    Ok(OracleCheck::relative("driven cavity occupancy", n, exact, 0.01))
}

/// `|⟨c⟩|` of the rotating-frame steady state and the time average of the lab-frame
/// trajectory over its last fifth, started from vacuum and run for `decay_times`
/// amplitude decay times.
#[allow(clippy::too_many_arguments)]
pub fn lab_frame_pair(p: &DerivedParams, diss: &DissipationSpec, omega_m: f64, omega_d: f64, eps_d: f64, probe: Mode, dims: usize, decay_times: f64) -> Result<(f64, f64)> {
    let cfg = SweepConfig {
        omega_m: GridAxis::centered(omega_m, 1e-3, 2),
        omega_d: GridAxis::centered(omega_d, 1e-3, 2),
        probe,
        eps_d,
        dims: vec![dims, dims],
        dissipation: diss.clone(),
        params: Some(p.clone()),
        circuit: None,
        sideband: Sideband::Rsb,
        occupation_terms: false,
        sloshing: false,
        solver: Default::default(),
    };
    let rot = cfg.point(p, omega_m, omega_d, &cfg.dims)?.amplitude.norm();
    let layout = ModeLayout::two_mode(dims, dims)?;
    let h = build_lab_frame(p, &layout, omega_m, omega_d, eps_d, probe)?;
    let slow = diss.kappa_a.min(diss.kappa_b) * std::f64::consts::PI;
    let t_final = decay_times / slow;
    let n_out = 2001;
    let opts = EvolveOptions { n_out, ..EvolveOptions::default() };
    let res = evolve_time_dependent(&h, diss, &QState::vacuum(&layout), t_final, 0.0, &opts)?;
    let tail: Vec<f64> = res.records[n_out * 4 / 5..]
        .iter()
        .map(|o| match probe {
            Mode::A => o.a,
            _ => o.b,
        })
        .map(|z| z.unwrap_or(C64::new(f64::NAN, 0.0)).norm())
        .collect();
    let lab = tail.iter().sum::<f64>() / tail.len() as f64;
    Ok((rot, lab))
}

/// Relative drift of the probe amplitude between successive truncations.
pub fn truncation_check(cfg: &SweepConfig, omega_m: f64, omega_d: f64, start: usize, tol: f64) -> Result<OracleCheck> {
    let p = cfg.resolve_params()?;
    let mut values = Vec::new();
    let (dims, value) = converge_truncation(
        |d| {
            let v = cfg.point(&p, omega_m, omega_d, d)?.amplitude.norm();
            values.push(v);
            Ok(v)
        },
        &vec![start; cfg.dims.len()],
        tol,
    )?;
    let next = values.last().copied().unwrap_or(value);
    Ok(OracleCheck::relative(&format!("truncation ladder from {start} (settled at {})", dims[0]), next, value, tol))
}

/// Default oracle table: driven cavity, lab frame against rotating frame, and the
/// truncation ladder at the red-sideband crossing.
pub fn oracle_suite() -> Result<Vec<OracleCheck>> {
    let mut out = vec![cavity_check(0.0013, 0.0024, 0.0002, 12)?];
    let p = DerivedParams::effective(6.4716, 4.7129, -0.2442, -0.2382, -0.0065429, 0.0074615);
    let diss = DissipationSpec::uniform(0.0024393);
    let wm = p.omega_a - p.omega_b;
    let (rot, lab) = lab_frame_pair(&p, &diss, wm, p.omega_b + p.j_ac, 0.00024, Mode::B, 3, 12.0)?;
    out.push(OracleCheck::relative("lab frame vs rotating frame |<b>|", lab, rot, 0.02));
    let cfg = SweepConfig {
        omega_m: GridAxis::centered(wm, 0.03, 41),
        omega_d: GridAxis::centered(p.omega_b, 0.03, 41),
        probe: Mode::B,
        eps_d: 0.00024,
        dims: vec![6, 6],
        dissipation: diss,
        params: Some(p.clone()),
        circuit: None,
        sideband: Sideband::Rsb,
        occupation_terms: false,
        sloshing: false,
        solver: Default::default(),
    };
    out.push(truncation_check(&cfg, wm, p.omega_b + p.j_ac, 4, 0.01)?);
    Ok(out)
}

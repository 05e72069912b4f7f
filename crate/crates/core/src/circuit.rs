//! Device constants and flux biases mapped onto effective-Hamiltonian parameters.
//!
//! Every energy is an ordinary frequency `E/h` in GHz and every flux is in units of Φ₀.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;
const PLANCK: f64 = 6.626_070_15e-34;

/// `e²/(2h)` for a 1 fF capacitance, in GHz.
pub fn charging_constant() -> f64 {
    ELEMENTARY_CHARGE * ELEMENTARY_CHARGE / (2.0 * PLANCK * 1e-15) * 1e-9
}

/// Below this value of sin(πΦ_DC)/sin(πΦ_AC) the first-order modulation expansion is flagged.
pub const SMALL_MODULATION_RATIO: f64 = 5.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CircuitConstants {
    #[serde(rename = "EJmax_A")]
    pub ej_max_a: f64,
    #[serde(rename = "EJmax_B")]
    pub ej_max_b: f64,
    #[serde(rename = "EJmax_C")]
    pub ej_max_c: f64,
    pub d_a: f64,
    pub d_b: f64,
    pub d_c: f64,
    /// Junction/shunt capacitance of each transmon, fF.
    pub c: f64,
    pub c1g: f64,
    pub c2g: f64,
    pub cc: f64,
}

impl CircuitConstants {
    /// The fabricated two-transmon device with its SQUID coupler.
    pub fn paper_device() -> Self {
        Self {
            ej_max_a: 23.01,
            ej_max_b: 23.01,
            ej_max_c: 7.75,
            d_a: 0.5,
            d_b: 0.5,
            d_c: 0.051,
            c: 39.0,
            c1g: 61.0,
            c2g: 87.0,
            cc: 20.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("EJmax_A", self.ej_max_a), ("EJmax_B", self.ej_max_b), ("EJmax_C", self.ej_max_c)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidCircuit(format!("{name} must be positive, got {v}")));
            }
        }
        for (name, v) in [("d_A", self.d_a), ("d_B", self.d_b), ("d_C", self.d_c)] {
            if !(0.0..1.0).contains(&v) {
                return Err(Error::InvalidCircuit(format!("{name} must lie in [0, 1), got {v}")));
            }
        }
        for (name, v) in [("C", self.c), ("C1g", self.c1g), ("C2g", self.c2g), ("Cc", self.cc)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidCircuit(format!("capacitance {name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

impl Default for CircuitConstants {
    fn default() -> Self {
        Self::paper_device()
    }
}

/// Static biases, modulation, and an optional linear crosstalk map on (Φ_A, Φ_B, Φ_DC).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FluxConfig {
    #[serde(rename = "phi_A")]
    pub phi_a: f64,
    #[serde(rename = "phi_B")]
    pub phi_b: f64,
    #[serde(rename = "phi_DC")]
    pub phi_dc: f64,
    #[serde(rename = "phi_AC", default)]
    pub phi_ac: f64,
    /// Modulation frequency, GHz. Informational for parameter derivation.
    #[serde(default)]
    pub omega_m: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub crosstalk_matrix: Option<[[f64; 3]; 3]>,
}

impl FluxConfig {
    pub fn new(phi_a: f64, phi_b: f64, phi_dc: f64, phi_ac: f64) -> Self {
        Self { phi_a, phi_b, phi_dc, phi_ac, omega_m: 0.0, crosstalk_matrix: None }
    }

    /// Fluxes after the crosstalk map (identity when none is configured).
    pub fn effective_fluxes(&self) -> (f64, f64, f64) {
        let raw = [self.phi_a, self.phi_b, self.phi_dc];
        match &self.crosstalk_matrix {
            None => (raw[0], raw[1], raw[2]),
            Some(m) => {
                let row = |r: &[f64; 3]| r[0] * raw[0] + r[1] * raw[1] + r[2] * raw[2];
                (row(&m[0]), row(&m[1]), row(&m[2]))
            }
        }
    }

    /// False when sin(πΦ_DC) is not much larger than sin(πΦ_AC).
    pub fn small_modulation_valid(&self) -> bool {
        let (_, _, dc) = self.effective_fluxes();
        let s_ac = (PI * self.phi_ac).sin().abs();
        if s_ac == 0.0 {
            return true;
        }
        (PI * dc).sin().abs() / s_ac >= SMALL_MODULATION_RATIO
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("phi_A", self.phi_a), ("phi_B", self.phi_b), ("phi_DC", self.phi_dc), ("phi_AC", self.phi_ac)] {
            if !v.is_finite() {
                return Err(Error::Config(format!("{name} is not finite")));
            }
        }
        if self.phi_ac < 0.0 {
            return Err(Error::Config(format!("phi_AC must be >= 0, got {}", self.phi_ac)));
        }
        Ok(())
    }
}

/// Effective capacitances (fF) and charging energies (GHz).
///
/// The two mode-mixing capacitances are stored as inverses because `C̃_ABR`
/// diverges for symmetric gate capacitances.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChargingEnergies {
    #[serde(rename = "EC")]
    pub ec: f64,
    #[serde(rename = "EC_C")]
    pub ec_c: f64,
    #[serde(rename = "EC_S")]
    pub ec_s: f64,
    pub tilde_c: f64,
    pub tilde_c_s: f64,
    pub tilde_c_r: f64,
    pub inv_tilde_c_abs: f64,
    pub inv_tilde_c_abr: f64,
    pub det_c_prime: f64,
}

/// Josephson energy of an asymmetric SQUID at flux `phi`.
///
/// Written as `E·√(cos²πφ + d² sin²πφ)`, which equals `E|cos πφ|√(1 + d² tan² πφ)`
/// and stays finite at half a flux quantum.
pub fn josephson_energy(ej_max: f64, d: f64, phi: f64) -> f64 {
    let (s, c) = (PI * phi).sin_cos();
    ej_max * (c * c + d * d * s * s).sqrt()
}

pub fn charging_energies(k: &CircuitConstants) -> Result<ChargingEnergies> {
    k.validate()?;
    let (c, c1, c2, cc) = (k.c, k.c1g, k.c2g, k.cc);
    let x = c1 * (c2 + 2.0 * cc) + c * (c1 + c2 + 2.0 * cc);
    let y = c1 * c2 + c * (c1 + c2);
    let det = x * y / 4.0;
    let tilde_c = 4.0 * det
        / (c1 * c2 * (c1 + c2) + c1 * cc * (c1 + 2.0 * c2) + c * (c1 + c2) * (c1 + c2 + 2.0 * cc));
    let tilde_c_s = 2.0 * x / (4.0 * c + c1 + c2 + 2.0 * cc);
    let tilde_c_r = 2.0 * y / (4.0 * c + c1 + c2);
    let inv_tilde_c_abs = (c2 - c1 + 2.0 * cc) / (2.0 * x);
    let inv_tilde_c_abr = (c2 - c1) / (2.0 * y);
    for (name, v) in [("C~", tilde_c), ("C~_S", tilde_c_s), ("C~_R", tilde_c_r)] {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::InvalidCircuit(format!("{name} = {v} is not positive")));
        }
    }
    let kc = charging_constant();
    let rigid = tilde_c_r * inv_tilde_c_abr * inv_tilde_c_abr;
    let ec = kc * (1.0 / tilde_c - rigid);
    let ec_c = 2.0 * kc * (cc * c1 * c1 / (4.0 * det) - rigid);
    let ec_s = kc / tilde_c_s;
    if !(ec > 0.0 && ec_s > 0.0) {
        return Err(Error::InvalidCircuit(format!("charging energies not positive (EC = {ec}, EC_S = {ec_s})")));
    }
    Ok(ChargingEnergies { ec, ec_c, ec_s, tilde_c, tilde_c_s, tilde_c_r, inv_tilde_c_abs, inv_tilde_c_abr, det_c_prime: det })
}

/// Every parameter of the effective two-oscillator Hamiltonian, GHz.
///
/// Fields missing from a JSON document default to zero, so a hand-written
/// parameter set only needs the entries it uses.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DerivedParams {
    #[serde(rename = "omega_A")]
    pub omega_a: f64,
    #[serde(rename = "omega_B")]
    pub omega_b: f64,
    #[serde(rename = "omega_S")]
    pub omega_s: f64,
    #[serde(rename = "alpha_A")]
    pub alpha_a: f64,
    #[serde(rename = "alpha_B")]
    pub alpha_b: f64,
    #[serde(rename = "alpha_S")]
    pub alpha_s: f64,
    #[serde(rename = "V")]
    pub v: f64,
    #[serde(rename = "J1_DC")]
    pub j1_dc: f64,
    #[serde(rename = "J2_DC")]
    pub j2_dc: f64,
    #[serde(rename = "J_AC")]
    pub j_ac: f64,
    /// First-order approximation of `J_AC`, kept for comparison only.
    #[serde(rename = "J_AC_approx")]
    pub j_ac_approx: f64,
    #[serde(rename = "Jn_A")]
    pub jn_a: f64,
    #[serde(rename = "Jn_B")]
    pub jn_b: f64,
    #[serde(rename = "Jn_S")]
    pub jn_s: f64,
    #[serde(rename = "V_AS")]
    pub v_as: f64,
    #[serde(rename = "V_BS")]
    pub v_bs: f64,
    #[serde(rename = "EJ_A_eff")]
    pub ej_a_eff: f64,
    #[serde(rename = "EJ_B_eff")]
    pub ej_b_eff: f64,
    #[serde(rename = "EJ_C_DC")]
    pub ej_c_dc: f64,
    /// Quartic coefficients of the transmon potentials; informational.
    #[serde(rename = "U_A")]
    pub u_a: f64,
    #[serde(rename = "U_B")]
    pub u_b: f64,
    /// `√(8Ẽ_J E_C) − E_C` for each transmon, a diagnostic.
    #[serde(rename = "omega_A_simple")]
    pub omega_a_simple: f64,
    #[serde(rename = "omega_B_simple")]
    pub omega_b_simple: f64,
    #[serde(rename = "EC")]
    pub ec: f64,
    #[serde(rename = "EC_S")]
    pub ec_s: f64,
    pub small_modulation_valid: bool,
}

impl DerivedParams {
    /// Hand-specified two-oscillator parameters with no occupation-dependent couplings.
    pub fn effective(omega_a: f64, omega_b: f64, alpha_a: f64, alpha_b: f64, v: f64, j_ac: f64) -> Self {
        Self { omega_a, omega_b, alpha_a, alpha_b, v, j_ac, small_modulation_valid: true, ..Default::default() }
    }
}

/// Prefactors shared by the modulated couplings.
struct Modulation {
    amp: f64,
}

impl Modulation {
    fn new(k: &CircuitConstants, phi_dc: f64, phi_ac: f64) -> Self {
        Self { amp: PI * phi_ac * k.ej_max_c * (PI * phi_dc).sin() }
    }
}

pub fn derive_params(k: &CircuitConstants, flux: &FluxConfig) -> Result<DerivedParams> {
    flux.validate()?;
    let ce = charging_energies(k)?;
    let (phi_a, phi_b, phi_dc) = flux.effective_fluxes();
    let ec = ce.ec;
    let ecs = ce.ec_s;
    let ejc = josephson_energy(k.ej_max_c, k.d_c, phi_dc);
    let ea = josephson_energy(k.ej_max_a, k.d_a, phi_a) + ejc / 4.0;
    let eb = josephson_energy(k.ej_max_b, k.d_b, phi_b) + ejc / 4.0;
    let gm = (ea * eb).sqrt();

    let v = -ejc * ec / (8.0 * gm);
    let v_as = -0.5 * (ec * ecs * ejc / ea).sqrt();
    let v_bs = -0.5 * (ec * ecs * ejc / eb).sqrt();
    let alpha = |ei: f64| -ec * (1.0 - ejc / 16.0 * (1.0 / ei - 1.0 / gm));
    let alpha_a = alpha(ea);
    let alpha_b = alpha(eb);
    let omega_a = (8.0 * ea * ec).sqrt() + alpha_a + 0.5 * (v + v_as);
    let omega_b = (8.0 * eb * ec).sqrt() + alpha_b + 0.5 * (v + v_bs);
    let alpha_s = -ecs;
    let omega_s = (8.0 * ejc * ecs).sqrt() + alpha_s - 0.25 * (ejc * ec * ecs).sqrt() * (1.0 / ea.sqrt() + 1.0 / eb.sqrt());

    let scale = (ea * eb * ec * ec / 4.0).powf(0.25);
    let j1_dc = scale * (ce.ec_c / ec - ejc / (2.0 * gm));
    let j2_dc = -scale * (ce.ec_c / ec + ejc / (2.0 * gm));

    let m = Modulation::new(k, phi_dc, flux.phi_ac);
    let sloshing = (ec * ec * ecs * ecs / (ejc * ejc * ea * eb)).powf(0.25);
    let asym_a = (ea.powi(3) * eb).powf(-0.25);
    let asym_b = (ea * eb.powi(3)).powf(-0.25);
    let j_ac = m.amp / 8.0 * ((4.0 * ec * ec / (ea * eb)).powf(0.25) - ec / 12.0 * (asym_a + asym_b) - sloshing);
    let j_ac_approx = m.amp / (4.0 * 2f64.sqrt()) * (ec * ec / (ea * eb)).powf(0.25);
    let jn_a = m.amp / 24.0 * ec * asym_a;
    let jn_b = m.amp / 24.0 * ec * asym_b;
    let jn_s = m.amp / 2.0 * sloshing;

    let ej_a_raw = ea - ejc / 4.0;
    let ej_b_raw = eb - ejc / 4.0;
    Ok(DerivedParams {
        omega_a,
        omega_b,
        omega_s,
        alpha_a,
        alpha_b,
        alpha_s,
        v,
        j1_dc,
        j2_dc,
        j_ac,
        j_ac_approx,
        jn_a,
        jn_b,
        jn_s,
        v_as,
        v_bs,
        ej_a_eff: ea,
        ej_b_eff: eb,
        ej_c_dc: ejc,
        u_a: ej_a_raw / 24.0 + ejc / 384.0,
        u_b: ej_b_raw / 24.0 + ejc / 384.0,
        omega_a_simple: (8.0 * ea * ec).sqrt() - ec,
        omega_b_simple: (8.0 * eb * ec).sqrt() - ec,
        ec,
        ec_s: ecs,
        small_modulation_valid: flux.small_modulation_valid(),
    })
}

/// Total sideband coupling at mean occupations `n_a`, `n_b`, `n_s`.
pub fn jtilde(p: &DerivedParams, n_a: f64, n_b: f64, n_s: f64) -> f64 {
    p.j_ac + p.jn_a * n_a + p.jn_b * n_b + p.jn_s * n_s
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn rsb_flux() -> FluxConfig {
        let dc = 0.34858558795070177;
        FluxConfig::new(0.11091972334275574, 0.4749955699148244, dc, dc / 17.531236521246974)
    }

    #[test]
    fn charging_constant_matches_codata() {
        assert_relative_eq!(charging_constant(), 19.370229, max_relative = 1e-6);
    }

    #[test]
    fn josephson_energy_limits() {
        assert_eq!(josephson_energy(7.75, 0.051, 0.0), 7.75);
        assert_relative_eq!(josephson_energy(7.75, 0.051, 0.5), 7.75 * 0.051, max_relative = 1e-14);
        assert_relative_eq!(josephson_energy(7.75, 0.051, 0.3486), 3.5661165927358374, max_relative = 1e-12);
    }

    #[test]
    fn josephson_energy_matches_tan_form_away_from_half() {
        for i in 0..40 {
            let phi = -0.45 + 0.9 * i as f64 / 39.0;
            let tan_form = 7.75 * (PI * phi).cos().abs() * (1.0 + 0.051f64.powi(2) * (PI * phi).tan().powi(2)).sqrt();
            assert_relative_eq!(josephson_energy(7.75, 0.051, phi), tan_form, max_relative = 1e-12);
        }
    }

    #[test]
    fn charging_energies_of_device() {
        let ce = charging_energies(&CircuitConstants::paper_device()).unwrap();
        assert_relative_eq!(ce.ec, 0.248187, max_relative = 1e-5);
        assert_relative_eq!(ce.ec_c, 0.0133698, max_relative = 1e-4);
        assert_relative_eq!(ce.ec_s, 0.220948, max_relative = 1e-5);
    }

    #[test]
    fn symmetric_gates_decouple_rigid_mode() {
        let mut k = CircuitConstants::paper_device();
        k.c2g = k.c1g;
        let ce = charging_energies(&k).unwrap();
        assert_eq!(ce.inv_tilde_c_abr, 0.0);
    }

    #[test]
    fn rsb_point_reproduces_extracted_couplings() {
        let p = derive_params(&CircuitConstants::paper_device(), &rsb_flux()).unwrap();
        assert_relative_eq!(p.v, -6.542859001534e-3, max_relative = 1e-9);
        assert_relative_eq!(p.j_ac, 7.461504834437e-3, max_relative = 1e-9);
        assert!(p.small_modulation_valid);
    }

    #[test]
    fn zero_modulation_zeroes_modulated_couplings() {
        let mut f = rsb_flux();
        let with = derive_params(&CircuitConstants::paper_device(), &f).unwrap();
        f.phi_ac = 0.0;
        let without = derive_params(&CircuitConstants::paper_device(), &f).unwrap();
        assert_eq!(without.j_ac, 0.0);
        assert_eq!(without.jn_a, 0.0);
        assert_eq!(without.jn_b, 0.0);
        assert_eq!(without.jn_s, 0.0);
        assert_eq!(with.omega_a, without.omega_a);
        assert_eq!(with.v, without.v);
        assert_eq!(with.j1_dc, without.j1_dc);
    }

    #[test]
    fn jtilde_is_linear() {
        let p = derive_params(&CircuitConstants::paper_device(), &rsb_flux()).unwrap();
        assert_eq!(jtilde(&p, 0.0, 0.0, 0.0), p.j_ac);
        assert_eq!(jtilde(&p, 1.0, 0.0, 0.0), p.j_ac + p.jn_a);
    }

    #[test]
    fn crosstalk_identity_is_a_no_op() {
        let mut f = rsb_flux();
        let base = derive_params(&CircuitConstants::paper_device(), &f).unwrap();
        f.crosstalk_matrix = Some([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);
        assert_eq!(derive_params(&CircuitConstants::paper_device(), &f).unwrap(), base);
    }

    #[test]
    fn large_modulation_is_flagged() {
        let f = FluxConfig::new(0.1, 0.4, 0.05, 0.04);
        assert!(!f.small_modulation_valid());
    }

    #[test]
    fn invalid_constants_rejected() {
        let mut k = CircuitConstants::paper_device();
        k.d_c = 1.0;
        assert!(matches!(charging_energies(&k), Err(Error::InvalidCircuit(_))));
        k = CircuitConstants::paper_device();
        k.cc = -1.0;
        assert!(matches!(charging_energies(&k), Err(Error::InvalidCircuit(_))));
    }
}

//! Static, sideband, and drive Hamiltonians in angular units (rad/ns).
//!
//! Parameters arrive as ordinary frequencies in GHz; the factor 2π is applied here and nowhere else.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::circuit::DerivedParams;
use crate::error::{Error, Result};
use crate::operator::{mode_destroy, Mode, ModeLayout, QOperator, C64};

const TWO_PI: f64 = 2.0 * PI;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sideband {
    Rsb,
    Bsb,
    None,
}

/// Ladder operators of every mode in a layout, as bare matrices.
#[derive(Clone, Debug)]
pub(crate) struct Ladders {
    pub a: Option<DMatrix<C64>>,
    pub b: Option<DMatrix<C64>>,
    pub s: Option<DMatrix<C64>>,
    pub dim: usize,
}

impl Ladders {
    pub fn new(layout: &ModeLayout) -> Result<Self> {
        let get = |m: Mode| -> Result<Option<DMatrix<C64>>> {
            if layout.contains(m) {
                Ok(Some(mode_destroy(layout, m)?.into_matrix()))
            } else {
                Ok(None)
            }
        };
        Ok(Self { a: get(Mode::A)?, b: get(Mode::B)?, s: get(Mode::S)?, dim: layout.total_dim() })
    }

    pub fn of(&self, mode: Mode) -> Option<&DMatrix<C64>> {
        match mode {
            Mode::A => self.a.as_ref(),
            Mode::B => self.b.as_ref(),
            Mode::S => self.s.as_ref(),
        }
    }

    pub fn require(&self, mode: Mode) -> Result<&DMatrix<C64>> {
        self.of(mode).ok_or_else(|| Error::UnknownMode(mode.to_string()))
    }
}

fn number(c: &DMatrix<C64>) -> DMatrix<C64> {
    c.adjoint() * c
}

fn kerr(c: &DMatrix<C64>) -> DMatrix<C64> {
    let cd = c.adjoint();
    &cd * &cd * c * c
}

fn require_ab(layout: &ModeLayout) -> Result<()> {
    if !(layout.contains(Mode::A) && layout.contains(Mode::B)) {
        return Err(Error::LayoutMismatch(format!("layout {layout} must contain modes A and B")));
    }
    Ok(())
}

/// Diagonal part with the given per-mode frequencies (GHz) and all Kerr terms.
fn static_part(p: &DerivedParams, ops: &Ladders, freq_a: f64, freq_b: f64, freq_s: f64) -> Result<DMatrix<C64>> {
    let a = ops.require(Mode::A)?;
    let b = ops.require(Mode::B)?;
    let (na, nb) = (number(a), number(b));
    let mut h = &na * C64::from(freq_a)
        + kerr(a) * C64::from(p.alpha_a / 2.0)
        + &nb * C64::from(freq_b)
        + kerr(b) * C64::from(p.alpha_b / 2.0)
        + &na * &nb * C64::from(p.v);
    if let Some(s) = &ops.s {
        let ns = number(s);
        h += &ns * C64::from(freq_s) + kerr(s) * C64::from(p.alpha_s / 2.0);
        h += &na * &ns * C64::from(p.v_as) + &nb * &ns * C64::from(p.v_bs);
    }
    Ok(h * C64::from(TWO_PI))
}

/// Static two-oscillator Hamiltonian (plus the sloshing mode when present).
pub fn build_h_dc(p: &DerivedParams, layout: &ModeLayout) -> Result<QOperator> {
    require_ab(layout)?;
    let ops = Ladders::new(layout)?;
    let h = static_part(p, &ops, p.omega_a, p.omega_b, p.omega_s)?;
    QOperator::new_hermitian(h, layout.clone())
}

fn sideband_matrix(p: &DerivedParams, ops: &Ladders, kind: Sideband, occupation_terms: bool) -> Result<DMatrix<C64>> {
    let a = ops.require(Mode::A)?;
    let b = ops.require(Mode::B)?;
    let coupling = match kind {
        Sideband::Rsb => a.adjoint() * b + a * b.adjoint(),
        Sideband::Bsb => a.adjoint() * b.adjoint() + a * b,
        Sideband::None => return Ok(DMatrix::zeros(ops.dim, ops.dim)),
    };
    let h = if occupation_terms {
        let mut pre = DMatrix::<C64>::identity(ops.dim, ops.dim) * C64::from(p.j_ac)
            + number(a) * C64::from(p.jn_a)
            + number(b) * C64::from(p.jn_b);
        if let Some(s) = &ops.s {
            pre += number(s) * C64::from(p.jn_s);
        }
        (&pre * &coupling + &coupling * &pre) * C64::from(0.5)
    } else {
        coupling * C64::from(p.j_ac)
    };
    Ok(h * C64::from(TWO_PI))
}

/// Sideband-activated hopping (RSB) or two-mode squeezing (BSB) term.
///
/// With `occupation_terms` the coupling prefactor `J_AC + Jn_A n_a + Jn_B n_b + Jn_S n_s`
/// is symmetrised against the coupling operator.
pub fn build_sideband(p: &DerivedParams, layout: &ModeLayout, kind: Sideband, occupation_terms: bool) -> Result<QOperator> {
    require_ab(layout)?;
    let ops = Ladders::new(layout)?;
    QOperator::new_hermitian(sideband_matrix(p, &ops, kind, occupation_terms)?, layout.clone())
}

/// `2π ε_d (c† + c)` on `mode`.
pub fn build_drive(eps_d: f64, mode: Mode, layout: &ModeLayout) -> Result<QOperator> {
    if !(eps_d >= 0.0 && eps_d.is_finite()) {
        return Err(Error::Config(format!("drive amplitude must be finite and >= 0, got {eps_d}")));
    }
    let c = mode_destroy(layout, mode)?.into_matrix();
    let h = (c.adjoint() + &c) * C64::from(TWO_PI * eps_d);
    QOperator::new_hermitian(h, layout.clone())
}

/// Rotation frequencies of the co-rotating frame and the probe it is built around.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameSpec {
    pub frame_a: f64,
    pub frame_b: f64,
    #[serde(default)]
    pub frame_s: Option<f64>,
    pub sideband: Sideband,
    pub omega_m: f64,
    pub omega_d: f64,
    pub drive_mode: Mode,
    pub eps_d: f64,
    #[serde(default)]
    pub occupation_terms: bool,
}

impl FrameSpec {
    /// Frame in which the sideband and the probe drive on `probe` are both static.
    ///
    /// The probed mode rotates at `omega_d`. For RSB the other mode is offset by
    /// `omega_m` so that `f_A − f_B = ±omega_m` (sign of `ω_A − ω_B`); for BSB
    /// the two frame frequencies add up to `omega_m`.
    pub fn sideband(p: &DerivedParams, kind: Sideband, probe: Mode, omega_m: f64, omega_d: f64, eps_d: f64) -> Result<Self> {
        let (fa, fb) = match (kind, probe) {
            (Sideband::Rsb, Mode::A) => (omega_d, omega_d - rsb_sign(p) * omega_m),
            (Sideband::Rsb, Mode::B) => (omega_d + rsb_sign(p) * omega_m, omega_d),
            (Sideband::Bsb, Mode::A) => (omega_d, omega_m - omega_d),
            (Sideband::Bsb, Mode::B) => (omega_m - omega_d, omega_d),
            (Sideband::None, Mode::A) => (omega_d, p.omega_b),
            (Sideband::None, Mode::B) => (p.omega_a, omega_d),
            (_, Mode::S) => return Err(Error::InvalidFrame("the sloshing mode cannot be probed".into())),
        };
        Ok(Self {
            frame_a: fa,
            frame_b: fb,
            frame_s: None,
            sideband: kind,
            omega_m,
            omega_d,
            drive_mode: probe,
            eps_d,
            occupation_terms: false,
        })
    }

    pub fn with_occupation_terms(mut self, on: bool) -> Self {
        self.occupation_terms = on;
        self
    }

    fn frame_of(&self, mode: Mode) -> Option<f64> {
        match mode {
            Mode::A => Some(self.frame_a),
            Mode::B => Some(self.frame_b),
            Mode::S => self.frame_s,
        }
    }

    /// Checks that the frame removes all time dependence for this parameter set.
    pub fn check(&self, p: &DerivedParams) -> Result<()> {
        let vals = [self.frame_a, self.frame_b, self.omega_m, self.omega_d, self.eps_d];
        if vals.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidFrame("frame frequencies must be finite".into()));
        }
        let tol = 1e-9 * (1.0 + self.omega_m.abs() + self.omega_d.abs());
        let drive_frame = self.frame_of(self.drive_mode).unwrap_or(f64::NAN);
        if (drive_frame - self.omega_d).abs() > tol {
            return Err(Error::InvalidFrame(format!(
                "probed mode {} rotates at {drive_frame} GHz, not at the drive frequency {}",
                self.drive_mode, self.omega_d
            )));
        }
        let diff = (p.omega_a - p.omega_b).abs();
        let sum = p.omega_a + p.omega_b;
        match self.sideband {
            Sideband::Rsb => {
                if ((self.frame_a - self.frame_b) - rsb_sign(p) * self.omega_m).abs() > tol {
                    return Err(Error::InvalidFrame("RSB frame needs f_A − f_B = ±omega_m".into()));
                }
                if (self.omega_m - diff).abs() > (self.omega_m - sum).abs() {
                    return Err(Error::InvalidFrame(format!(
                        "omega_m = {} GHz sits nearer the blue sideband ({sum} GHz) than the red one ({diff} GHz)",
                        self.omega_m
                    )));
                }
            }
            Sideband::Bsb => {
                if ((self.frame_a + self.frame_b) - self.omega_m).abs() > tol {
                    return Err(Error::InvalidFrame("BSB frame needs f_A + f_B = omega_m".into()));
                }
                if (self.omega_m - sum).abs() > (self.omega_m - diff).abs() {
                    return Err(Error::InvalidFrame(format!(
                        "omega_m = {} GHz sits nearer the red sideband ({diff} GHz) than the blue one ({sum} GHz)",
                        self.omega_m
                    )));
                }
            }
            Sideband::None => {}
        }
        Ok(())
    }
}

fn rsb_sign(p: &DerivedParams) -> f64 {
    if p.omega_a >= p.omega_b {
        1.0
    } else {
        -1.0
    }
}

/// Frame detunings `ω_i − f_i`, GHz.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Detunings {
    pub a: f64,
    pub b: f64,
    pub s: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct HamiltonianSet {
    pub h_static: QOperator,
    pub h_int: QOperator,
    pub h_drive: QOperator,
    pub detunings: Detunings,
}

impl HamiltonianSet {
    pub fn total(&self) -> QOperator {
        self.h_static
            .add(&self.h_int)
            .and_then(|h| h.add(&self.h_drive))
            .expect("parts share one layout")
    }
}

/// Time-independent Hamiltonian in the co-rotating frame described by `frame`.
pub fn build_rotating_frame(p: &DerivedParams, frame: &FrameSpec, layout: &ModeLayout) -> Result<HamiltonianSet> {
    require_ab(layout)?;
    frame.check(p)?;
    let ops = Ladders::new(layout)?;
    let da = p.omega_a - frame.frame_a;
    let db = p.omega_b - frame.frame_b;
    let ds = if layout.contains(Mode::S) { Some(p.omega_s - frame.frame_s.unwrap_or(p.omega_s)) } else { None };
    let h_static = QOperator::new_hermitian(static_part(p, &ops, da, db, ds.unwrap_or(0.0))?, layout.clone())?;
    let h_int = QOperator::new_hermitian(sideband_matrix(p, &ops, frame.sideband, frame.occupation_terms)?, layout.clone())?;
    let h_drive = build_drive(frame.eps_d, frame.drive_mode, layout)?;
    Ok(HamiltonianSet { h_static, h_int, h_drive, detunings: Detunings { a: da, b: db, s: ds } })
}

/// `H(t) = H0 + Σ_k (M_k e^{iω_k t} + M_k† e^{−iω_k t})`, angular units.
#[derive(Clone, Debug)]
pub struct TimeDependentHamiltonian {
    pub layout: ModeLayout,
    pub h0: DMatrix<C64>,
    /// Pairs `(M_k, ω_k)` with ω_k in rad/ns.
    pub harmonics: Vec<(DMatrix<C64>, f64)>,
}

impl TimeDependentHamiltonian {
    pub fn at(&self, t: f64) -> DMatrix<C64> {
        let mut h = self.h0.clone();
        for (m, w) in &self.harmonics {
            let ph = C64::from_polar(1.0, w * t);
            h += m * ph + m.adjoint() * ph.conj();
        }
        h
    }
}

/// Lab-frame model with explicit coupler modulation, written in the interaction
/// picture of the bare oscillator energies `ω_A a†a + ω_B b†b`.
///
/// The modulated coupling `2 J_AC cos(ω_m t)` multiplies both the hopping and
/// the squeezing operator, and the probe is `2 ε_d cos(ω_d t)(c + c†)`.
/// Counter-rotating terms are kept; only the static `J_1,DC`/`J_2,DC` are left out.
pub fn build_lab_frame(p: &DerivedParams, layout: &ModeLayout, omega_m: f64, omega_d: f64, eps_d: f64, probe: Mode) -> Result<TimeDependentHamiltonian> {
    require_ab(layout)?;
    let ops = Ladders::new(layout)?;
    let a = ops.require(Mode::A)?;
    let b = ops.require(Mode::B)?;
    let h0 = static_part(p, &ops, 0.0, 0.0, 0.0)?;
    let (wa, wb, wm, wd) = (TWO_PI * p.omega_a, TWO_PI * p.omega_b, TWO_PI * omega_m, TWO_PI * omega_d);
    let hop = a.adjoint() * b * C64::from(TWO_PI * p.j_ac);
    let sq = a.adjoint() * b.adjoint() * C64::from(TWO_PI * p.j_ac);
    let c = ops.require(probe)?;
    let wc = if probe == Mode::A { wa } else { wb };
    let drv = c.adjoint() * C64::from(TWO_PI * eps_d);
    let harmonics = vec![
        (hop.clone(), wa - wb + wm),
        (hop, wa - wb - wm),
        (sq.clone(), wa + wb + wm),
        (sq, wa + wb - wm),
        (drv.clone(), wc + wd),
        (drv, wc - wd),
    ];
    Ok(TimeDependentHamiltonian { layout: layout.clone(), h0, harmonics })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::mode_number;
    use approx::assert_abs_diff_eq;

    fn params() -> DerivedParams {
        DerivedParams::effective(6.4716, 4.7129, -0.2442, -0.2382, -0.0065429, 0.0074615)
    }

    #[test]
    fn harmonic_limit_is_diagonal() {
        let p = DerivedParams::effective(5.0, 4.0, 0.0, 0.0, 0.0, 0.01);
        let layout = ModeLayout::two_mode(3, 3).unwrap();
        let h = build_h_dc(&p, &layout).unwrap();
        for i in 0..9 {
            let occ = layout.occupations(i);
            let e = TWO_PI * (5.0 * occ[0] as f64 + 4.0 * occ[1] as f64);
            assert_abs_diff_eq!(h.matrix()[(i, i)].re, e, epsilon = 1e-12);
        }
        let off: f64 = (0..9).flat_map(|i| (0..9).map(move |j| (i, j))).filter(|(i, j)| i != j).map(|(i, j)| h.matrix()[(i, j)].norm()).sum();
        assert_eq!(off, 0.0);
    }

    #[test]
    fn cross_kerr_shift_of_doubly_excited_state() {
        let p = params();
        let layout = ModeLayout::two_mode(3, 3).unwrap();
        let h = build_h_dc(&p, &layout).unwrap();
        let i11 = layout.index_of(&[1, 1]).unwrap();
        assert_abs_diff_eq!(h.matrix()[(i11, i11)].re, TWO_PI * (p.omega_a + p.omega_b + p.v), epsilon = 1e-12);
    }

    #[test]
    fn sideband_matrix_element() {
        let p = params();
        let layout = ModeLayout::two_mode(3, 3).unwrap();
        let h = build_sideband(&p, &layout, Sideband::Rsb, false).unwrap();
        let i01 = layout.index_of(&[0, 1]).unwrap();
        let i10 = layout.index_of(&[1, 0]).unwrap();
        assert_abs_diff_eq!(h.matrix()[(i01, i10)].re, TWO_PI * p.j_ac, epsilon = 1e-15);
        let mut zero = p.clone();
        zero.j_ac = 0.0;
        assert_eq!(build_sideband(&zero, &layout, Sideband::Rsb, false).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn sidebands_conserve_the_right_charge() {
        let mut p = params();
        p.jn_a = 0.0003;
        p.jn_b = 0.0002;
        p.jn_s = 0.001;
        let layout = ModeLayout::with_sloshing(4, 3, 3).unwrap();
        let na = mode_number(&layout, Mode::A).unwrap();
        let nb = mode_number(&layout, Mode::B).unwrap();
        for occ in [false, true] {
            let hr = build_sideband(&p, &layout, Sideband::Rsb, occ).unwrap();
            assert!(hr.commutator(&na.add(&nb).unwrap()).unwrap().max_abs() < 1e-13);
            let hb = build_sideband(&p, &layout, Sideband::Bsb, occ).unwrap();
            assert!(hb.commutator(&na.sub(&nb).unwrap()).unwrap().max_abs() < 1e-13);
            assert!(hb.is_hermitian());
        }
    }

    #[test]
    fn drive_entries() {
        let layout = ModeLayout::two_mode(3, 3).unwrap();
        let h = build_drive(0.01, Mode::B, &layout).unwrap();
        assert_abs_diff_eq!(h.matrix()[(0, 1)].re, TWO_PI * 0.01, epsilon = 1e-15);
        assert_eq!(build_drive(0.0, Mode::A, &layout).unwrap().max_abs(), 0.0);
        assert!(h.hermiticity_defect() == 0.0);
    }

    #[test]
    fn resonant_frames_have_zero_detuning() {
        let p = params();
        let layout = ModeLayout::two_mode(3, 3).unwrap();
        let f = FrameSpec::sideband(&p, Sideband::Rsb, Mode::B, p.omega_a - p.omega_b, p.omega_b, 0.0).unwrap();
        let set = build_rotating_frame(&p, &f, &layout).unwrap();
        assert_abs_diff_eq!(set.detunings.a, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(set.detunings.b, 0.0, epsilon = 1e-12);
        let f = FrameSpec::sideband(&p, Sideband::Bsb, Mode::A, p.omega_a + p.omega_b, p.omega_a, 0.0).unwrap();
        let set = build_rotating_frame(&p, &f, &layout).unwrap();
        assert_abs_diff_eq!(set.detunings.a, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(set.detunings.b, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn inconsistent_frames_rejected() {
        let p = params();
        let layout = ModeLayout::two_mode(3, 3).unwrap();
        let mut f = FrameSpec::sideband(&p, Sideband::Rsb, Mode::B, p.omega_a - p.omega_b, p.omega_b, 0.0).unwrap();
        f.sideband = Sideband::Bsb;
        assert!(matches!(build_rotating_frame(&p, &f, &layout), Err(Error::InvalidFrame(_))));
        let f = FrameSpec::sideband(&p, Sideband::Rsb, Mode::B, p.omega_a + p.omega_b, p.omega_b, 0.0).unwrap();
        assert!(matches!(build_rotating_frame(&p, &f, &layout), Err(Error::InvalidFrame(_))));
    }

    #[test]
    fn resonant_doublet_split_by_twice_the_coupling() {
        let p = DerivedParams::effective(6.0, 4.5, -0.2, -0.2, 0.0, 0.01);
        let layout = ModeLayout::two_mode(3, 3).unwrap();
        let f = FrameSpec::sideband(&p, Sideband::Rsb, Mode::B, 1.5, 4.5, 0.0).unwrap();
        let h = build_rotating_frame(&p, &f, &layout).unwrap().total();
        let mut ev: Vec<f64> = h.matrix().clone().symmetric_eigenvalues().iter().cloned().collect();
        ev.sort_by(|x, y| x.partial_cmp(y).unwrap());
        let doublet: Vec<f64> = ev.iter().cloned().filter(|e| (e.abs() - TWO_PI * 0.01).abs() < TWO_PI * 0.002).collect();
        assert_eq!(doublet.len(), 2);
        assert_abs_diff_eq!(doublet[1] - doublet[0], 2.0 * TWO_PI * 0.01, epsilon = 1e-9);
    }
}

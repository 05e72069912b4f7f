//! Lindblad time evolution, steady states, and photon statistics.

mod krylov;
mod liouvillian;
mod ode;
mod steady;

use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::TimeDependentHamiltonian;
use crate::operator::{mode_destroy, trace_product, Mode, ModeLayout, QOperator, QState, C64};

pub use liouvillian::Liouvillian;
pub use ode::Tolerances;
pub use steady::{steady_state, steady_state_with, SteadyMethod, SteadyOptions, SteadyState, DIRECT_FALLBACK_MAX_DIM};

/// Energy-decay linewidths (GHz, ordinary frequency) and bath occupations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DissipationSpec {
    #[serde(rename = "kappa_A")]
    pub kappa_a: f64,
    #[serde(rename = "kappa_B")]
    pub kappa_b: f64,
    #[serde(rename = "nbar_A", default)]
    pub nbar_a: f64,
    #[serde(rename = "nbar_B", default)]
    pub nbar_b: f64,
    #[serde(rename = "kappa_S", default, skip_serializing_if = "Option::is_none")]
    pub kappa_s: Option<f64>,
}

impl DissipationSpec {
    pub fn uniform(kappa: f64) -> Self {
        Self { kappa_a: kappa, kappa_b: kappa, nbar_a: 0.0, nbar_b: 0.0, kappa_s: None }
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.kappa_a, self.kappa_b, self.nbar_a, self.nbar_b, self.kappa_s.unwrap_or(0.0)];
        if all.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::Config("linewidths and thermal occupations must be finite and >= 0".into()));
        }
        Ok(())
    }

    fn kappa_nbar(&self, mode: Mode) -> (f64, f64) {
        match mode {
            Mode::A => (self.kappa_a, self.nbar_a),
            Mode::B => (self.kappa_b, self.nbar_b),
            Mode::S => (self.kappa_s.unwrap_or(0.0), 0.0),
        }
    }

    /// Total decay rate `2πκ(1 + 2n̄)` of `mode`, 1/ns.
    pub fn total_rate(&self, mode: Mode) -> f64 {
        let (k, n) = self.kappa_nbar(mode);
        2.0 * PI * k * (1.0 + 2.0 * n)
    }
}

/// `(c, 2πκ(1+n̄))` and `(c†, 2πκn̄)` for each mode in the layout.
pub(crate) fn jump_operators(diss: &DissipationSpec, layout: &ModeLayout) -> Result<Vec<(DMatrix<C64>, f64)>> {
    let mut out = Vec::new();
    for &m in layout.modes() {
        let (k, n) = diss.kappa_nbar(m);
        if k <= 0.0 {
            continue;
        }
        let c = mode_destroy(layout, m)?.into_matrix();
        if n > 0.0 {
            out.push((c.adjoint(), 2.0 * PI * k * n));
        }
        out.push((c, 2.0 * PI * k * (1.0 + n)));
    }
    Ok(out)
}

/// Observables recorded at one output time. Missing modes give `None`;
/// `g2_*` is `None` where the occupation is too small for it to be defined.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Observables {
    pub a: Option<C64>,
    pub b: Option<C64>,
    pub n_a: Option<f64>,
    pub n_b: Option<f64>,
    pub g2_a: Option<f64>,
    pub g2_b: Option<f64>,
}

struct ObservableOps {
    a: Option<DMatrix<C64>>,
    b: Option<DMatrix<C64>>,
}

impl ObservableOps {
    fn new(layout: &ModeLayout) -> Result<Self> {
        let get = |m| -> Result<Option<DMatrix<C64>>> {
            Ok(if layout.contains(m) { Some(mode_destroy(layout, m)?.into_matrix()) } else { None })
        };
        Ok(Self { a: get(Mode::A)?, b: get(Mode::B)? })
    }

    fn measure(&self, rho: &DMatrix<C64>) -> Observables {
        let one = |c: &Option<DMatrix<C64>>| -> (Option<C64>, Option<f64>, Option<f64>) {
            match c {
                None => (None, None, None),
                Some(c) => {
                    let amp = trace_product(rho, c);
                    let cd = c.adjoint();
                    let n = trace_product(rho, &(&cd * c)).re;
                    let nn = trace_product(rho, &(&cd * &cd * c * c)).re;
                    let g2 = if n > G2_MIN_OCCUPATION { Some(nn / (n * n)) } else { None };
                    (Some(amp), Some(n), g2)
                }
            }
        };
        let (a, n_a, g2_a) = one(&self.a);
        let (b, n_b, g2_b) = one(&self.b);
        Observables { a, b, n_a, n_b, g2_a, g2_b }
    }
}

const G2_MIN_OCCUPATION: f64 = 1e-12;

#[derive(Clone, Debug)]
pub struct EvolutionResult {
    /// Output times, ns.
    pub times: Vec<f64>,
    pub records: Vec<Observables>,
    /// `|tr ρ − 1|` at each output time.
    pub trace_errors: Vec<f64>,
    pub final_state: QState,
    /// Whether the final state is stationary to within `1e-6` of the Liouvillian scale.
    pub steady: bool,
    /// max |L(ρ_final)| entry.
    pub residual: f64,
}

#[derive(Clone, Debug)]
pub struct EvolveOptions {
    /// Number of uniformly spaced output times including `t = 0`.
    pub n_out: usize,
    pub tol: Tolerances,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self { n_out: 400, tol: Tolerances::default() }
    }
}

/// Integrates the master equation from `rho0` to `t_final` (ns).
pub fn evolve(h: &QOperator, diss: &DissipationSpec, rho0: &QState, t_final: f64, dt_hint: f64) -> Result<EvolutionResult> {
    evolve_with(h, diss, rho0, t_final, dt_hint, &EvolveOptions::default())
}

pub fn evolve_with(h: &QOperator, diss: &DissipationSpec, rho0: &QState, t_final: f64, dt_hint: f64, opts: &EvolveOptions) -> Result<EvolutionResult> {
    if !h.is_hermitian() {
        h.clone().into_hermitian()?;
    }
    if h.layout() != rho0.layout() {
        return Err(Error::LayoutMismatch(format!("Hamiltonian on {} vs state on {}", h.layout(), rho0.layout())));
    }
    diss.validate()?;
    let liou = Liouvillian::new(h.matrix(), jump_operators(diss, h.layout())?);
    let scale = liou.norm_scale();
    run(h.layout(), |_, rho| liou.apply(rho), |rho| liou.apply(rho), scale, rho0, t_final, dt_hint, opts)
}

/// Same as [`evolve_with`] for a Hamiltonian with explicit harmonic time dependence.
pub fn evolve_time_dependent(h: &TimeDependentHamiltonian, diss: &DissipationSpec, rho0: &QState, t_final: f64, dt_hint: f64, opts: &EvolveOptions) -> Result<EvolutionResult> {
    if &h.layout != rho0.layout() {
        return Err(Error::LayoutMismatch(format!("Hamiltonian on {} vs state on {}", h.layout, rho0.layout())));
    }
    diss.validate()?;
    let jumps = jump_operators(diss, &h.layout)?;
    let hfun = |t: f64| h.at(t);
    let liou = liouvillian::TimeDependentLiouvillian::new(&hfun, h.layout.total_dim(), jumps);
    let scale = h.at(0.0).iter().fold(0.0_f64, |m, z| m.max(z.norm())) * 2.0;
    run(&h.layout, |t, rho| liou.apply(t, rho), |rho| liou.apply(t_final, rho), scale, rho0, t_final, dt_hint, opts)
}

#[allow(clippy::too_many_arguments)]
fn run<F, G>(layout: &ModeLayout, f: F, final_rhs: G, scale: f64, rho0: &QState, t_final: f64, dt_hint: f64, opts: &EvolveOptions) -> Result<EvolutionResult>
where
    F: FnMut(f64, &DMatrix<C64>) -> DMatrix<C64>,
    G: Fn(&DMatrix<C64>) -> DMatrix<C64>,
{
    if !(t_final > 0.0 && t_final.is_finite()) {
        return Err(Error::Config(format!("t_final must be positive, got {t_final}")));
    }
    let n_out = opts.n_out.max(2);
    let times: Vec<f64> = (0..n_out).map(|i| t_final * i as f64 / (n_out - 1) as f64).collect();
    let obs = ObservableOps::new(layout)?;
    let rho_init = rho0.to_density();
    let mut records = Vec::with_capacity(n_out);
    let mut trace_errors = Vec::with_capacity(n_out);
    records.push(obs.measure(&rho_init));
    trace_errors.push((rho_init.trace() - C64::new(1.0, 0.0)).norm());
    let rho_final = ode::integrate(f, 0.0, rho_init, &times[1..], dt_hint, opts.tol, |_, _, rho| {
        records.push(obs.measure(rho));
        trace_errors.push((rho.trace() - C64::new(1.0, 0.0)).norm());
        Ok(())
    })?;
    let residual = final_rhs(&rho_final).iter().fold(0.0_f64, |m, z| m.max(z.norm()));
    let herm = (&rho_final + rho_final.adjoint()) * C64::from(0.5);
    let final_state = QState::density_with_tol(herm, layout.clone(), 1e-6)?;
    Ok(EvolutionResult { times, records, trace_errors, final_state, steady: residual <= 1e-6 * scale, residual })
}

/// `⟨c†c†cc⟩ / ⟨c†c⟩²` of `mode`.
pub fn g2_zero(state: &QState, mode: Mode) -> Result<f64> {
    let c = mode_destroy(state.layout(), mode)?.into_matrix();
    let rho = state.to_density();
    let cd = c.adjoint();
    let n = trace_product(&rho, &(&cd * &c)).re;
    if n <= G2_MIN_OCCUPATION {
        return Err(Error::UndefinedG2(n));
    }
    let nn = trace_product(&rho, &(&cd * &cd * &c * &c)).re;
    Ok(nn / (n * n))
}

/// Largest per-mode dimension tried by [`converge_truncation`].
pub const TRUNCATION_CEILING: usize = 16;

/// Raises every mode dimension by 2 until `observable` changes by less than
/// `tol` (relative); returns the smaller dimensions of the last agreeing pair.
pub fn converge_truncation<F>(mut observable: F, start_dims: &[usize], tol: f64) -> Result<(Vec<usize>, f64)>
where
    F: FnMut(&[usize]) -> Result<f64>,
{
    if start_dims.is_empty() || start_dims.iter().any(|&d| d < 3) {
        return Err(Error::InvalidDimension("truncation ladder needs start dimensions >= 3".into()));
    }
    let mut dims = start_dims.to_vec();
    let mut value = observable(&dims)?;
    let mut trend = vec![(dims.clone(), value)];
    loop {
        let next: Vec<usize> = dims.iter().map(|d| d + 2).collect();
        if next.iter().any(|&d| d > TRUNCATION_CEILING) {
            let list: Vec<String> = trend.iter().map(|(d, v)| format!("{d:?}: {v:.6e}")).collect();
            return Err(Error::NoConvergence(format!("truncation ceiling {TRUNCATION_CEILING} reached; trend {}", list.join(", "))));
        }
        let next_value = observable(&next)?;
        trend.push((next.clone(), next_value));
        let denom = value.abs().max(next_value.abs()).max(1e-300);
        if (next_value - value).abs() <= tol * denom {
            return Ok((dims, value));
        }
        dims = next;
        value = next_value;
    }
}

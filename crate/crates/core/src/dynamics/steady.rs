use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::krylov::{gmres, Sylvester};
use super::liouvillian::Liouvillian;
use super::{evolve_with, jump_operators, DissipationSpec, EvolveOptions};
use crate::error::{Error, Result};
use crate::operator::{QOperator, QState, C64};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SteadyMethod {
    /// Krylov first; dense LU when it stalls on small spaces, time integration otherwise.
    #[default]
    Auto,
    Direct,
    Krylov,
    Integrate,
}

/// Largest Hilbert dimension for which the dense solve is attempted automatically.
pub const DIRECT_FALLBACK_MAX_DIM: usize = 48;

#[derive(Clone, Debug)]
pub struct SteadyOptions {
    pub method: SteadyMethod,
    /// Conserved U(1) charge of each basis state; restricts the solve to
    /// coherences between states of equal charge.
    pub charges: Option<Vec<i64>>,
    pub restart: usize,
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for SteadyOptions {
    fn default() -> Self {
        Self { method: SteadyMethod::Auto, charges: None, restart: 80, max_iter: 4000, tol: 1e-12 }
    }
}

#[derive(Clone, Debug)]
pub struct SteadyState {
    pub state: QState,
    /// max |L(ρ)| entry.
    pub residual: f64,
    pub iterations: usize,
    pub method: SteadyMethod,
}

pub fn steady_state(h: &QOperator, diss: &DissipationSpec) -> Result<QState> {
    Ok(steady_state_with(h, diss, &SteadyOptions::default())?.state)
}

pub fn steady_state_with(h: &QOperator, diss: &DissipationSpec, opts: &SteadyOptions) -> Result<SteadyState> {
    if !h.is_hermitian() {
        h.clone().into_hermitian()?;
    }
    diss.validate()?;
    let layout = h.layout();
    for &m in layout.modes() {
        if diss.total_rate(m) <= 0.0 {
            return Err(Error::DegenerateLiouvillian(format!(
                "mode {m} has no dissipation, so the steady state is not unique"
            )));
        }
    }
    let jumps = jump_operators(diss, layout)?;
    let liou = Liouvillian::new(h.matrix(), jumps);
    let d = liou.dim();
    let scale = liou.norm_scale();
    let accept = 1e-9 * scale;
    let (rho, iterations, method) = match opts.method {
        SteadyMethod::Direct => (solve_direct(&liou)?, 0, SteadyMethod::Direct),
        SteadyMethod::Krylov => {
            let (rho, it) = solve_krylov(&liou, opts, accept)?;
            (rho, it, SteadyMethod::Krylov)
        }
        SteadyMethod::Integrate => (solve_integrate(h, diss)?, 0, SteadyMethod::Integrate),
        SteadyMethod::Auto => match solve_krylov(&liou, opts, accept) {
            Ok((rho, it)) => (rho, it, SteadyMethod::Krylov),
            Err(Error::NoConvergence(_)) if d <= DIRECT_FALLBACK_MAX_DIM => (solve_direct(&liou)?, 0, SteadyMethod::Direct),
            Err(Error::NoConvergence(_)) => (solve_integrate(h, diss)?, 0, SteadyMethod::Integrate),
            Err(e) => return Err(e),
        },
    };
    let rho = (&rho + rho.adjoint()) * C64::from(0.5);
    let residual = liou.apply(&rho).iter().fold(0.0_f64, |m, z| m.max(z.norm()));
    if method == SteadyMethod::Direct && residual > 1e-6 * scale {
        return Err(Error::DegenerateLiouvillian(format!("direct solve residual {residual:e} too large")));
    }
    let state = QState::density_with_tol(rho, layout.clone(), 1e-9)?;
    Ok(SteadyState { state, residual, iterations, method })
}

/// Dense LU on the vectorised Liouvillian with the `(0,0)` equation replaced by `tr ρ = 1`.
fn solve_direct(liou: &Liouvillian) -> Result<DMatrix<C64>> {
    let d = liou.dim();
    let mut l = liou.superoperator();
    for k in 0..d * d {
        l[(0, k)] = C64::new(0.0, 0.0);
    }
    for i in 0..d {
        l[(0, i + i * d)] = C64::new(1.0, 0.0);
    }
    let mut rhs = DVector::<C64>::zeros(d * d);
    rhs[0] = C64::new(1.0, 0.0);
    let x = l
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::DegenerateLiouvillian("singular vectorised Liouvillian".into()))?;
    if x.iter().any(|z| !z.is_finite()) {
        return Err(Error::DegenerateLiouvillian("non-finite steady state".into()));
    }
    Ok(DMatrix::from_column_slice(d, d, x.as_slice()))
}

/// Index sets of equal charge.
fn sectors(d: usize, charges: Option<&[i64]>) -> Vec<Vec<usize>> {
    match charges {
        None => vec![(0..d).collect()],
        Some(q) => {
            let mut values: Vec<i64> = q.to_vec();
            values.sort_unstable();
            values.dedup();
            values.iter().map(|&v| (0..d).filter(|&i| q[i] == v).collect()).collect()
        }
    }
}

fn check_symmetry(liou: &Liouvillian, q: &[i64]) -> Result<()> {
    let d = liou.dim();
    if q.len() != d {
        return Err(Error::Config(format!("{} charges for a {d}-dimensional space", q.len())));
    }
    let a = liou.no_jump();
    for i in 0..d {
        for j in 0..d {
            if q[i] != q[j] && a[(i, j)].norm() > 0.0 {
                return Err(Error::Config("charges are not conserved by the Hamiltonian".into()));
            }
        }
    }
    for (c, _) in liou.jumps() {
        let mut shift = None;
        for i in 0..d {
            for j in 0..d {
                if c[(i, j)].norm() > 0.0 {
                    let s = q[i] - q[j];
                    if *shift.get_or_insert(s) != s {
                        return Err(Error::Config("a jump operator mixes charge sectors".into()));
                    }
                }
            }
        }
    }
    Ok(())
}

/// GMRES on `L(ρ) + σ tr ρ = σ` (σ = |0⟩⟨0|), preconditioned by the exact inverse of
/// the no-jump part `ρ ↦ (A − s)ρ + ρ(A − s)†`.
fn solve_krylov(liou: &Liouvillian, opts: &SteadyOptions, accept: f64) -> Result<(DMatrix<C64>, usize)> {
    let d = liou.dim();
    if let Some(q) = &opts.charges {
        check_symmetry(liou, q)?;
    }
    let blocks = sectors(d, opts.charges.as_deref());
    let mask: Option<DMatrix<bool>> = opts.charges.as_ref().map(|q| DMatrix::from_fn(d, d, |i, j| q[i] == q[j]));
    let min_rate = liou.jumps().map(|(_, g)| g).filter(|&g| g > 0.0).fold(f64::INFINITY, f64::min);
    let shift = if min_rate.is_finite() { 1e-3 * min_rate } else { 1e-6 };
    let a = liou.no_jump();
    let mut solvers = Vec::with_capacity(blocks.len());
    for idx in &blocks {
        let sub = DMatrix::from_fn(idx.len(), idx.len(), |i, j| a[(idx[i], idx[j])] - if i == j { C64::from(shift) } else { C64::new(0.0, 0.0) });
        let s = Sylvester::new(&sub).ok_or_else(|| Error::NoConvergence("Schur decomposition of the no-jump generator failed".into()))?;
        solvers.push(s);
    }
    let apply_mask = |x: &mut DMatrix<C64>| {
        if let Some(m) = &mask {
            x.zip_apply(m, |z, keep| if !keep { *z = C64::new(0.0, 0.0) });
        }
    };
    let mut sigma = DMatrix::<C64>::zeros(d, d);
    sigma[(0, 0)] = C64::new(1.0, 0.0);
    let op = |x: &DMatrix<C64>| {
        let mut y = liou.apply(x);
        y[(0, 0)] += x.trace();
        apply_mask(&mut y);
        y
    };
    let prec = |x: &DMatrix<C64>| {
        let mut y = DMatrix::<C64>::zeros(d, d);
        for (idx, s) in blocks.iter().zip(&solvers) {
            let sub = DMatrix::from_fn(idx.len(), idx.len(), |i, j| x[(idx[i], idx[j])]);
            let sol = s.solve(&sub);
            for (i, &gi) in idx.iter().enumerate() {
                for (j, &gj) in idx.iter().enumerate() {
                    y[(gi, gj)] = sol[(i, j)];
                }
            }
        }
        y
    };
    let out = gmres(op, prec, &sigma, opts.restart, opts.max_iter, opts.tol);
    let residual = liou.apply(&out.x).iter().fold(0.0_f64, |m, z| m.max(z.norm()));
    if !(out.converged || residual <= accept) || out.x.iter().any(|z| !z.is_finite()) {
        return Err(Error::NoConvergence(format!(
            "GMRES stopped after {} iterations at relative residual {:e}",
            out.iterations, out.rel_residual
        )));
    }
    Ok((out.x, out.iterations))
}

/// Integrates in windows of one decay time until the state stops drifting.
fn solve_integrate(h: &QOperator, diss: &DissipationSpec) -> Result<DMatrix<C64>> {
    let layout = h.layout();
    let slowest = layout.modes().iter().map(|&m| diss.total_rate(m)).fold(f64::INFINITY, f64::min);
    let window = 1.0 / slowest;
    let mut state = QState::vacuum(layout);
    let mut prev = state.to_density();
    for _ in 0..400 {
        let opts = EvolveOptions { n_out: 2, ..EvolveOptions::default() };
        let res = evolve_with(h, diss, &state, window, 0.0, &opts)?;
        let rho = res.final_state.to_density();
        let scale = rho.iter().fold(0.0_f64, |m, z| m.max(z.norm()));
        let drift = (&rho - &prev).iter().fold(0.0_f64, |m, z| m.max(z.norm()));
        prev = rho;
        state = res.final_state;
        if drift <= 1e-6 * scale {
            return Ok(prev);
        }
    }
    Err(Error::NoConvergence("long-time integration did not settle within 400 decay times".into()))
}

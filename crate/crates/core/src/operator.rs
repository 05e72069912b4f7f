//! Dense linear algebra on a truncated Fock space of up to three bosonic modes.
//!
//! Modes are always ordered (A, B, S) and the first mode is the most significant
//! index of the tensor product, so `|n_A, n_B⟩` lives at `n_A * dim_B + n_B`.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Tolerance on max |H − H†| for operators flagged Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-12;
const TRACE_TOL: f64 = 1e-9;
const PSD_TOL: f64 = 1e-9;
const NORM_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Mode {
    A,
    B,
    S,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::A, Mode::B, Mode::S];
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Mode::A => "A",
            Mode::B => "B",
            Mode::S => "S",
        };
        f.write_str(s)
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "A" | "a" => Ok(Mode::A),
            "B" | "b" => Ok(Mode::B),
            "S" | "s" => Ok(Mode::S),
            other => Err(Error::UnknownMode(other.to_string())),
        }
    }
}

/// Which modes are present and how far each is truncated.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ModeLayout {
    modes: Vec<Mode>,
    dims: Vec<usize>,
}

impl ModeLayout {
    pub fn new(entries: &[(Mode, usize)]) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidDimension("layout needs at least one mode".into()));
        }
        let mut sorted = entries.to_vec();
        sorted.sort_by_key(|(m, _)| *m);
        for pair in sorted.windows(2) {
            if pair[0].0 == pair[1].0 {
                return Err(Error::LayoutMismatch(format!("mode {} listed twice", pair[0].0)));
            }
        }
        for &(m, d) in &sorted {
            if d < 2 {
                return Err(Error::InvalidDimension(format!("mode {m} has dimension {d} (< 2)")));
            }
        }
        Ok(Self {
            modes: sorted.iter().map(|(m, _)| *m).collect(),
            dims: sorted.iter().map(|(_, d)| *d).collect(),
        })
    }

    pub fn single(mode: Mode, dim: usize) -> Result<Self> {
        Self::new(&[(mode, dim)])
    }

    pub fn two_mode(dim_a: usize, dim_b: usize) -> Result<Self> {
        Self::new(&[(Mode::A, dim_a), (Mode::B, dim_b)])
    }

    pub fn with_sloshing(dim_a: usize, dim_b: usize, dim_s: usize) -> Result<Self> {
        Self::new(&[(Mode::A, dim_a), (Mode::B, dim_b), (Mode::S, dim_s)])
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn total_dim(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn position(&self, mode: Mode) -> Option<usize> {
        self.modes.iter().position(|&m| m == mode)
    }

    pub fn contains(&self, mode: Mode) -> bool {
        self.position(mode).is_some()
    }

    pub fn dim_of(&self, mode: Mode) -> Result<usize> {
        self.position(mode)
            .map(|p| self.dims[p])
            .ok_or_else(|| Error::UnknownMode(mode.to_string()))
    }

    /// Index step in the product basis when the occupation of `mode` increases by one.
    pub fn stride(&self, mode: Mode) -> Result<usize> {
        let p = self.position(mode).ok_or_else(|| Error::UnknownMode(mode.to_string()))?;
        Ok(self.dims[p + 1..].iter().product())
    }

    /// Per-mode occupations of a product-basis index.
    pub fn occupations(&self, mut index: usize) -> Vec<usize> {
        let mut occ = vec![0; self.dims.len()];
        for (slot, &d) in occ.iter_mut().zip(&self.dims).rev() {
            *slot = index % d;
            index /= d;
        }
        occ
    }

    pub fn index_of(&self, occupations: &[usize]) -> Result<usize> {
        if occupations.len() != self.dims.len() {
            return Err(Error::LayoutMismatch(format!(
                "{} occupations for {} modes",
                occupations.len(),
                self.dims.len()
            )));
        }
        let mut index = 0;
        for (&n, &d) in occupations.iter().zip(&self.dims) {
            if n >= d {
                return Err(Error::InvalidDimension(format!("occupation {n} exceeds truncation {d}")));
            }
            index = index * d + n;
        }
        Ok(index)
    }

    /// Layout restricted to `keep`, preserving the canonical order.
    pub fn subset(&self, keep: &[Mode]) -> Result<Self> {
        let entries = keep
            .iter()
            .map(|&m| self.dim_of(m).map(|d| (m, d)))
            .collect::<Result<Vec<_>>>()?;
        Self::new(&entries)
    }
}

impl fmt::Display for ModeLayout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.modes.iter().zip(&self.dims).map(|(m, d)| format!("{m}:{d}")).collect();
        write!(f, "[{}]", parts.join(", "))
    }
}

/// Dense operator on the space described by its layout.
#[derive(Clone, Debug)]
pub struct QOperator {
    matrix: DMatrix<C64>,
    layout: ModeLayout,
    hermitian: bool,
}

impl QOperator {
    pub fn new(matrix: DMatrix<C64>, layout: ModeLayout) -> Result<Self> {
        let d = layout.total_dim();
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::InvalidDimension(format!(
                "operator matrix is {}x{}, not square",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        if matrix.nrows() != d {
            return Err(Error::LayoutMismatch(format!(
                "matrix dimension {} does not match layout {layout} (dimension {d})",
                matrix.nrows()
            )));
        }
        Ok(Self { matrix, layout, hermitian: false })
    }

    /// Builds an operator and verifies Hermiticity to [`HERMITIAN_TOL`].
    pub fn new_hermitian(matrix: DMatrix<C64>, layout: ModeLayout) -> Result<Self> {
        Self::new(matrix, layout)?.into_hermitian()
    }

    pub fn identity(layout: &ModeLayout) -> Self {
        let d = layout.total_dim();
        Self { matrix: DMatrix::identity(d, d), layout: layout.clone(), hermitian: true }
    }

    pub fn zeros(layout: &ModeLayout) -> Self {
        let d = layout.total_dim();
        Self { matrix: DMatrix::zeros(d, d), layout: layout.clone(), hermitian: true }
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.matrix
    }

    pub fn layout(&self) -> &ModeLayout {
        &self.layout
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    /// max |H − H†| over all entries.
    pub fn hermiticity_defect(&self) -> f64 {
        let d = self.dim();
        let mut worst: f64 = 0.0;
        for i in 0..d {
            for j in i..d {
                worst = worst.max((self.matrix[(i, j)] - self.matrix[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// Sets the Hermiticity flag after checking it.
    pub fn into_hermitian(mut self) -> Result<Self> {
        let defect = self.hermiticity_defect();
        if defect > HERMITIAN_TOL {
            return Err(Error::NotHermitian(defect));
        }
        self.hermitian = true;
        Ok(self)
    }

    pub fn adjoint(&self) -> Self {
        Self { matrix: self.matrix.adjoint(), layout: self.layout.clone(), hermitian: self.hermitian }
    }

    fn check_same(&self, other: &Self) -> Result<()> {
        if self.layout != other.layout {
            return Err(Error::LayoutMismatch(format!("{} vs {}", self.layout, other.layout)));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        Ok(Self {
            matrix: &self.matrix + &other.matrix,
            layout: self.layout.clone(),
            hermitian: self.hermitian && other.hermitian,
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        Ok(Self {
            matrix: &self.matrix - &other.matrix,
            layout: self.layout.clone(),
            hermitian: self.hermitian && other.hermitian,
        })
    }

    pub fn scale(&self, factor: C64) -> Self {
        Self {
            matrix: &self.matrix * factor,
            layout: self.layout.clone(),
            hermitian: self.hermitian && factor.im == 0.0,
        }
    }

    pub fn scale_real(&self, factor: f64) -> Self {
        self.scale(C64::new(factor, 0.0))
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        Ok(Self { matrix: &self.matrix * &other.matrix, layout: self.layout.clone(), hermitian: false })
    }

    pub fn commutator(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        let m = &self.matrix * &other.matrix - &other.matrix * &self.matrix;
        Ok(Self { matrix: m, layout: self.layout.clone(), hermitian: false })
    }

    /// Tensor product; every mode of `self` must precede every mode of `other`.
    pub fn kron(&self, other: &Self) -> Result<Self> {
        let layout = concat_layouts(&self.layout, &other.layout)?;
        Ok(Self {
            matrix: self.matrix.kronecker(&other.matrix),
            layout,
            hermitian: self.hermitian && other.hermitian,
        })
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.matrix.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
    }
}

fn concat_layouts(first: &ModeLayout, second: &ModeLayout) -> Result<ModeLayout> {
    let last = *first.modes().last().expect("layouts are nonempty");
    if second.modes().iter().any(|&m| m <= last) {
        return Err(Error::LayoutMismatch(format!(
            "cannot place {second} after {first}: mode order must stay (A, B, S)"
        )));
    }
    let entries: Vec<(Mode, usize)> = first
        .modes()
        .iter()
        .zip(first.dims())
        .chain(second.modes().iter().zip(second.dims()))
        .map(|(&m, &d)| (m, d))
        .collect();
    ModeLayout::new(&entries)
}

/// Lowering operator with `√n` at `(n − 1, n)`.
pub fn destroy(dim: usize) -> Result<QOperator> {
    if dim < 2 {
        return Err(Error::InvalidDimension(format!("ladder operator needs dim >= 2, got {dim}")));
    }
    let mut m = DMatrix::zeros(dim, dim);
    for n in 1..dim {
        m[(n - 1, n)] = C64::new((n as f64).sqrt(), 0.0);
    }
    QOperator::new(m, ModeLayout::single(Mode::A, dim)?)
}

pub fn create(dim: usize) -> Result<QOperator> {
    Ok(destroy(dim)?.adjoint())
}

pub fn number(dim: usize) -> Result<QOperator> {
    if dim < 2 {
        return Err(Error::InvalidDimension(format!("number operator needs dim >= 2, got {dim}")));
    }
    let m = DMatrix::from_diagonal(&DVector::from_fn(dim, |n, _| C64::new(n as f64, 0.0)));
    QOperator::new_hermitian(m, ModeLayout::single(Mode::A, dim)?)
}

/// Lifts a single-mode operator onto `mode` of `layout` with identities elsewhere.
pub fn embed(op: &QOperator, mode: Mode, layout: &ModeLayout) -> Result<QOperator> {
    if op.layout().modes().len() != 1 {
        return Err(Error::LayoutMismatch(format!("embed expects a single-mode operator, got {}", op.layout())));
    }
    let pos = layout.position(mode).ok_or_else(|| Error::UnknownMode(mode.to_string()))?;
    let target = layout.dims()[pos];
    if op.dim() != target {
        return Err(Error::LayoutMismatch(format!(
            "operator dimension {} does not match mode {mode} dimension {target}",
            op.dim()
        )));
    }
    let before: usize = layout.dims()[..pos].iter().product();
    let after: usize = layout.dims()[pos + 1..].iter().product();
    let m = DMatrix::<C64>::identity(before, before)
        .kronecker(op.matrix())
        .kronecker(&DMatrix::<C64>::identity(after, after));
    let mut out = QOperator::new(m, layout.clone())?;
    out.hermitian = op.hermitian;
    Ok(out)
}

/// Annihilation operator of `mode` on the full layout.
pub fn mode_destroy(layout: &ModeLayout, mode: Mode) -> Result<QOperator> {
    embed(&destroy(layout.dim_of(mode)?)?, mode, layout)
}

/// Number operator of `mode` on the full layout.
pub fn mode_number(layout: &ModeLayout, mode: Mode) -> Result<QOperator> {
    embed(&number(layout.dim_of(mode)?)?, mode, layout)
}

pub fn kron(a: &QOperator, b: &QOperator) -> Result<QOperator> {
    a.kron(b)
}

#[derive(Clone, Debug)]
enum StateData {
    Ket(DVector<C64>),
    Density(DMatrix<C64>),
}

/// Pure or mixed state on a mode layout.
#[derive(Clone, Debug)]
pub struct QState {
    data: StateData,
    layout: ModeLayout,
}

impl QState {
    pub fn ket(vector: DVector<C64>, layout: ModeLayout) -> Result<Self> {
        if vector.len() != layout.total_dim() {
            return Err(Error::LayoutMismatch(format!(
                "ket length {} does not match layout {layout}",
                vector.len()
            )));
        }
        let norm = vector.norm();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidState(format!("ket norm {norm} is not 1")));
        }
        Ok(Self { data: StateData::Ket(vector), layout })
    }

    /// Density matrix validated with the default tolerances (trace, Hermiticity, PSD to 1e-9).
    pub fn density(matrix: DMatrix<C64>, layout: ModeLayout) -> Result<Self> {
        Self::density_with_tol(matrix, layout, TRACE_TOL)
    }

    /// Density matrix validated with a caller-chosen tolerance.
    pub fn density_with_tol(matrix: DMatrix<C64>, layout: ModeLayout, tol: f64) -> Result<Self> {
        let d = layout.total_dim();
        if matrix.nrows() != d || matrix.ncols() != d {
            return Err(Error::LayoutMismatch(format!(
                "density matrix is {}x{}, layout {layout} needs {d}x{d}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > tol || tr.im.abs() > tol {
            return Err(Error::InvalidState(format!("trace {tr} differs from 1")));
        }
        let herm = (&matrix - matrix.adjoint()).iter().fold(0.0_f64, |a, z| a.max(z.norm()));
        if herm > tol.max(PSD_TOL) {
            return Err(Error::InvalidState(format!("density matrix not Hermitian (defect {herm:e})")));
        }
        let state = Self { data: StateData::Density(matrix), layout };
        let min_eig = state.min_eigenvalue();
        if min_eig < -tol.max(PSD_TOL) {
            return Err(Error::InvalidState(format!("negative eigenvalue {min_eig:e}")));
        }
        Ok(state)
    }

    pub fn fock(layout: &ModeLayout, occupations: &[usize]) -> Result<Self> {
        let idx = layout.index_of(occupations)?;
        let mut v = DVector::zeros(layout.total_dim());
        v[idx] = C64::new(1.0, 0.0);
        Self::ket(v, layout.clone())
    }

    pub fn vacuum(layout: &ModeLayout) -> Self {
        let mut v = DVector::zeros(layout.total_dim());
        v[0] = C64::new(1.0, 0.0);
        Self { data: StateData::Ket(v), layout: layout.clone() }
    }

    /// Truncated coherent state of a single mode, renormalised after truncation.
    pub fn coherent(dim: usize, alpha: C64) -> Result<Self> {
        let layout = ModeLayout::single(Mode::A, dim)?;
        let mut v = DVector::zeros(dim);
        let mut amp = C64::new((-alpha.norm_sqr() / 2.0).exp(), 0.0);
        v[0] = amp;
        for n in 1..dim {
            amp = amp * alpha / (n as f64).sqrt();
            v[n] = amp;
        }
        let norm = v.norm();
        Self::ket(v.unscale(norm), layout)
    }

    /// Single-mode thermal (Bose-Einstein) state, renormalised after truncation.
    pub fn thermal(dim: usize, nbar: f64) -> Result<Self> {
        if nbar < 0.0 {
            return Err(Error::InvalidState(format!("negative thermal occupation {nbar}")));
        }
        let layout = ModeLayout::single(Mode::A, dim)?;
        let ratio = nbar / (1.0 + nbar);
        let weights: Vec<f64> = (0..dim).map(|n| ratio.powi(n as i32)).collect();
        let total: f64 = weights.iter().sum();
        let m = DMatrix::from_diagonal(&DVector::from_iterator(dim, weights.iter().map(|w| C64::new(w / total, 0.0))));
        Self::density(m, layout)
    }

    /// Relabels a single-mode state onto another mode label.
    pub fn relabel(mut self, mode: Mode) -> Result<Self> {
        if self.layout.modes().len() != 1 {
            return Err(Error::LayoutMismatch("relabel only applies to single-mode states".into()));
        }
        self.layout = ModeLayout::single(mode, self.layout.dims()[0])?;
        Ok(self)
    }

    /// Tensor product `self ⊗ other`.
    pub fn product(&self, other: &Self) -> Result<Self> {
        let layout = concat_layouts(&self.layout, &other.layout)?;
        let data = match (&self.data, &other.data) {
            (StateData::Ket(a), StateData::Ket(b)) => StateData::Ket(a.kronecker(b)),
            _ => StateData::Density(self.to_density().kronecker(&other.to_density())),
        };
        Ok(Self { data, layout })
    }

    pub fn layout(&self) -> &ModeLayout {
        &self.layout
    }

    pub fn is_ket(&self) -> bool {
        matches!(self.data, StateData::Ket(_))
    }

    pub fn to_density(&self) -> DMatrix<C64> {
        match &self.data {
            StateData::Ket(v) => v * v.adjoint(),
            StateData::Density(m) => m.clone(),
        }
    }

    pub(crate) fn from_density_unchecked(matrix: DMatrix<C64>, layout: ModeLayout) -> Self {
        Self { data: StateData::Density(matrix), layout }
    }

    pub fn trace(&self) -> C64 {
        match &self.data {
            StateData::Ket(v) => C64::new(v.norm_squared(), 0.0),
            StateData::Density(m) => m.trace(),
        }
    }

    /// Smallest eigenvalue of the (Hermitian part of the) density matrix.
    pub fn min_eigenvalue(&self) -> f64 {
        match &self.data {
            StateData::Ket(_) => 0.0,
            StateData::Density(m) => {
                let h = (m + m.adjoint()) * C64::new(0.5, 0.0);
                h.symmetric_eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min)
            }
        }
    }

    /// Probability of each product-basis state.
    pub fn populations(&self) -> Vec<f64> {
        match &self.data {
            StateData::Ket(v) => v.iter().map(|z| z.norm_sqr()).collect(),
            StateData::Density(m) => m.diagonal().iter().map(|z| z.re).collect(),
        }
    }
}

/// `tr(ρ·op)` or `⟨ψ|op|ψ⟩`.
pub fn expect(op: &QOperator, state: &QState) -> Result<C64> {
    if op.layout() != state.layout() {
        return Err(Error::LayoutMismatch(format!("operator on {} vs state on {}", op.layout(), state.layout())));
    }
    Ok(match &state.data {
        StateData::Ket(v) => v.dotc(&(op.matrix() * v)),
        StateData::Density(rho) => trace_product(rho, op.matrix()),
    })
}

/// `tr(a·b)` without forming the product.
pub(crate) fn trace_product(a: &DMatrix<C64>, b: &DMatrix<C64>) -> C64 {
    let d = a.nrows();
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..d {
        for k in 0..d {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

/// Reduced density matrix on `keep`; the traced-out modes are summed over.
pub fn partial_trace(state: &QState, keep: &[Mode]) -> Result<QState> {
    let layout = state.layout();
    let reduced = layout.subset(keep)?;
    let keep_pos: Vec<usize> = reduced.modes().iter().map(|&m| layout.position(m).unwrap()).collect();
    let traced_pos: Vec<usize> = (0..layout.modes().len()).filter(|p| !keep_pos.contains(p)).collect();
    let rho = state.to_density();
    let d = layout.total_dim();
    let dr = reduced.total_dim();
    let occ: Vec<Vec<usize>> = (0..d).map(|i| layout.occupations(i)).collect();
    let kept_index = |o: &[usize]| keep_pos.iter().fold(0, |acc, &p| acc * layout.dims()[p] + o[p]);
    let mut out = DMatrix::zeros(dr, dr);
    for i in 0..d {
        for j in 0..d {
            if traced_pos.iter().all(|&p| occ[i][p] == occ[j][p]) {
                out[(kept_index(&occ[i]), kept_index(&occ[j]))] += rho[(i, j)];
            }
        }
    }
    Ok(QState::from_density_unchecked(out, reduced))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn destroy_two_is_qubit_lowering() {
        let a = destroy(2).unwrap();
        assert_eq!(a.matrix()[(0, 1)], c(1.0));
        assert_eq!(a.matrix()[(0, 0)], c(0.0));
        assert_eq!(a.matrix()[(1, 0)], c(0.0));
        assert_eq!(a.matrix()[(1, 1)], c(0.0));
    }

    #[test]
    fn destroy_three_entries() {
        let a = destroy(3).unwrap();
        assert_eq!(a.matrix()[(0, 1)], c(1.0));
        assert_eq!(a.matrix()[(1, 2)], c(2f64.sqrt()));
        let nonzero = a.matrix().iter().filter(|z| z.norm() > 0.0).count();
        assert_eq!(nonzero, 2);
    }

    #[test]
    fn destroy_rejects_small_dims() {
        assert!(matches!(destroy(1), Err(Error::InvalidDimension(_))));
        assert!(matches!(destroy(0), Err(Error::InvalidDimension(_))));
    }

    #[test]
    fn truncated_commutator_defect_in_last_level() {
        for dim in 2..12 {
            let a = destroy(dim).unwrap();
            let comm = a.commutator(&a.adjoint()).unwrap();
            for i in 0..dim {
                for j in 0..dim {
                    let expected = if i != j {
                        0.0
                    } else if i == dim - 1 {
                        -((dim - 1) as f64)
                    } else {
                        1.0
                    };
                    assert_abs_diff_eq!(comm.matrix()[(i, j)].re, expected, epsilon = 1e-14);
                    assert_eq!(comm.matrix()[(i, j)].im, 0.0);
                }
            }
        }
    }

    #[test]
    fn adjoint_is_an_involution() {
        let a = destroy(3).unwrap();
        assert_eq!(a.adjoint().adjoint().matrix(), a.matrix());
    }

    #[test]
    fn embed_on_first_mode_is_kron_with_identity() {
        let layout = ModeLayout::two_mode(2, 2).unwrap();
        let a = embed(&destroy(2).unwrap(), Mode::A, &layout).unwrap();
        let expected = destroy(2).unwrap().matrix().kronecker(&DMatrix::<C64>::identity(2, 2));
        assert_eq!(a.matrix(), &expected);
        assert_eq!(a.dim(), 4);
    }

    #[test]
    fn embed_identity_is_global_identity() {
        let layout = ModeLayout::with_sloshing(3, 2, 4).unwrap();
        let id = QOperator::identity(&ModeLayout::single(Mode::A, 2).unwrap());
        let lifted = embed(&id, Mode::B, &layout).unwrap();
        assert_eq!(lifted.matrix(), &DMatrix::<C64>::identity(24, 24));
    }

    #[test]
    fn embed_errors() {
        let layout = ModeLayout::two_mode(3, 3).unwrap();
        assert!(matches!(embed(&destroy(3).unwrap(), Mode::S, &layout), Err(Error::UnknownMode(_))));
        assert!(matches!(embed(&destroy(4).unwrap(), Mode::A, &layout), Err(Error::LayoutMismatch(_))));
    }

    #[test]
    fn different_modes_commute() {
        let layout = ModeLayout::with_sloshing(3, 4, 2).unwrap();
        let a = mode_destroy(&layout, Mode::A).unwrap();
        let b = mode_destroy(&layout, Mode::B).unwrap();
        let s = mode_destroy(&layout, Mode::S).unwrap();
        assert_eq!(a.commutator(&b).unwrap().max_abs(), 0.0);
        assert_eq!(a.commutator(&b.adjoint()).unwrap().max_abs(), 0.0);
        assert_eq!(b.commutator(&s.adjoint()).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn embed_is_multiplicative() {
        let layout = ModeLayout::two_mode(4, 3).unwrap();
        let a = destroy(3).unwrap();
        let ad = a.adjoint();
        let prod = a.matmul(&ad).unwrap();
        let lhs = embed(&prod, Mode::B, &layout).unwrap();
        let rhs = embed(&a, Mode::B, &layout).unwrap().matmul(&embed(&ad, Mode::B, &layout).unwrap()).unwrap();
        assert_eq!(lhs.matrix(), rhs.matrix());
    }

    #[test]
    fn expect_number_on_fock_two() {
        let layout = ModeLayout::single(Mode::A, 5).unwrap();
        let n = number(5).unwrap();
        let psi = QState::fock(&layout, &[2]).unwrap();
        assert_abs_diff_eq!(expect(&n, &psi).unwrap().re, 2.0, epsilon = 1e-15);
        let rho = QState::density(psi.to_density(), layout).unwrap();
        assert_abs_diff_eq!(expect(&n, &rho).unwrap().re, 2.0, epsilon = 1e-15);
    }

    #[test]
    fn expect_lowering_on_coherent_state() {
        let psi = QState::coherent(20, c(0.5)).unwrap();
        let a = destroy(20).unwrap();
        let val = expect(&a, &psi).unwrap();
        assert!((val - c(0.5)).norm() < 1e-6);
    }

    #[test]
    fn expect_identity_is_one() {
        let th = QState::thermal(6, 0.4).unwrap();
        let id = QOperator::identity(th.layout());
        assert_abs_diff_eq!(expect(&id, &th).unwrap().re, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn expect_rejects_layout_mismatch() {
        let psi = QState::vacuum(&ModeLayout::two_mode(2, 2).unwrap());
        assert!(matches!(expect(&destroy(4).unwrap(), &psi), Err(Error::LayoutMismatch(_))));
    }

    #[test]
    fn partial_trace_of_product_state_returns_factors() {
        let rho_a = QState::thermal(3, 0.3).unwrap();
        let rho_b = QState::coherent(4, C64::new(0.2, 0.1)).unwrap().relabel(Mode::B).unwrap();
        let joint = rho_a.product(&rho_b).unwrap();
        let red_a = partial_trace(&joint, &[Mode::A]).unwrap();
        let red_b = partial_trace(&joint, &[Mode::B]).unwrap();
        assert!((red_a.to_density() - rho_a.to_density()).iter().all(|z| z.norm() < 1e-12));
        assert!((red_b.to_density() - rho_b.to_density()).iter().all(|z| z.norm() < 1e-12));
    }

    #[test]
    fn partial_trace_of_bell_state_is_maximally_mixed() {
        let layout = ModeLayout::two_mode(2, 2).unwrap();
        let mut v = DVector::zeros(4);
        v[layout.index_of(&[0, 0]).unwrap()] = c(std::f64::consts::FRAC_1_SQRT_2);
        v[layout.index_of(&[1, 1]).unwrap()] = c(std::f64::consts::FRAC_1_SQRT_2);
        let bell = QState::ket(v, layout).unwrap();
        let red = partial_trace(&bell, &[Mode::A]).unwrap().to_density();
        assert_abs_diff_eq!(red[(0, 0)].re, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(red[(1, 1)].re, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(red[(0, 1)].norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn density_validation() {
        let layout = ModeLayout::single(Mode::A, 2).unwrap();
        let bad_trace = DMatrix::from_diagonal(&DVector::from_vec(vec![c(0.7), c(0.7)]));
        assert!(QState::density(bad_trace, layout.clone()).is_err());
        let negative = DMatrix::from_diagonal(&DVector::from_vec(vec![c(1.2), c(-0.2)]));
        assert!(QState::density(negative, layout.clone()).is_err());
        let ok = DMatrix::from_diagonal(&DVector::from_vec(vec![c(0.25), c(0.75)]));
        assert!(QState::density(ok, layout).is_ok());
    }

    #[test]
    fn layout_index_round_trip() {
        let layout = ModeLayout::with_sloshing(3, 4, 2).unwrap();
        for i in 0..layout.total_dim() {
            assert_eq!(layout.index_of(&layout.occupations(i)).unwrap(), i);
        }
        assert_eq!(layout.stride(Mode::A).unwrap(), 8);
        assert_eq!(layout.stride(Mode::S).unwrap(), 1);
    }

    #[test]
    fn layout_rejects_duplicates_and_small_dims() {
        assert!(ModeLayout::new(&[(Mode::A, 3), (Mode::A, 3)]).is_err());
        assert!(ModeLayout::new(&[(Mode::A, 1)]).is_err());
        let unordered = ModeLayout::new(&[(Mode::B, 3), (Mode::A, 2)]).unwrap();
        assert_eq!(unordered.modes(), &[Mode::A, Mode::B]);
    }

    #[test]
    fn hermitian_flag_is_verified() {
        let layout = ModeLayout::single(Mode::A, 3).unwrap();
        let a = destroy(3).unwrap();
        assert!(matches!(QOperator::new_hermitian(a.matrix().clone(), layout.clone()), Err(Error::NotHermitian(_))));
        let x = a.add(&a.adjoint()).unwrap();
        assert!(QOperator::new_hermitian(x.matrix().clone(), layout).is_ok());
    }
}

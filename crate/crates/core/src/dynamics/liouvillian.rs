use nalgebra::DMatrix;

use crate::operator::C64;

/// Compressed sparse rows; ladder operators and most Hamiltonians are very sparse.
#[derive(Clone, Debug)]
pub(crate) struct Csr {
    n: usize,
    row_ptr: Vec<usize>,
    col: Vec<usize>,
    val: Vec<C64>,
}

impl Csr {
    pub fn from_dense(m: &DMatrix<C64>) -> Self {
        let n = m.nrows();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col = Vec::new();
        let mut val = Vec::new();
        row_ptr.push(0);
        for i in 0..n {
            for j in 0..n {
                let v = m[(i, j)];
                if v != C64::new(0.0, 0.0) {
                    col.push(j);
                    val.push(v);
                }
            }
            row_ptr.push(col.len());
        }
        Self { n, row_ptr, col, val }
    }

    /// `out += S·x`
    pub fn left_mul_add(&self, x: &DMatrix<C64>, out: &mut DMatrix<C64>) {
        let n = self.n;
        for i in 0..n {
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                let (k, v) = (self.col[p], self.val[p]);
                for j in 0..n {
                    out[(i, j)] += v * x[(k, j)];
                }
            }
        }
    }

    /// `out += x·S†`
    pub fn right_adj_mul_add(&self, x: &DMatrix<C64>, out: &mut DMatrix<C64>) {
        let n = self.n;
        for j in 0..n {
            for p in self.row_ptr[j]..self.row_ptr[j + 1] {
                let (k, v) = (self.col[p], self.val[p].conj());
                let src = x.column(k).into_owned();
                let mut dst = out.column_mut(j);
                for i in 0..n {
                    dst[i] += src[i] * v;
                }
            }
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.val.iter().fold(0.0_f64, |m, z| m.max(z.norm()))
    }
}

/// `L(ρ) = Aρ + ρA† + Σ γ_k c_k ρ c_k†` with `A = −iH − ½ Σ γ_k c_k†c_k`.
#[derive(Clone, Debug)]
pub struct Liouvillian {
    dim: usize,
    a_eff: DMatrix<C64>,
    a_sparse: Csr,
    jumps: Vec<(DMatrix<C64>, Csr, f64)>,
}

impl Liouvillian {
    /// `h` in rad/ns; each jump carries its rate γ in 1/ns.
    pub fn new(h: &DMatrix<C64>, jumps: Vec<(DMatrix<C64>, f64)>) -> Self {
        let a_eff = no_jump_generator(h, &jumps);
        let a_sparse = Csr::from_dense(&a_eff);
        let jumps = jumps.into_iter().map(|(c, g)| { let s = Csr::from_dense(&c); (c, s, g) }).collect();
        Self { dim: h.nrows(), a_eff, a_sparse, jumps }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Non-Hermitian no-jump generator `A`.
    pub fn no_jump(&self) -> &DMatrix<C64> {
        &self.a_eff
    }

    pub(crate) fn jumps(&self) -> impl Iterator<Item = (&DMatrix<C64>, f64)> {
        self.jumps.iter().map(|(c, _, g)| (c, *g))
    }

    pub fn apply(&self, rho: &DMatrix<C64>) -> DMatrix<C64> {
        let mut out = DMatrix::zeros(self.dim, self.dim);
        self.apply_add(rho, &mut out);
        out
    }

    pub(crate) fn apply_add(&self, rho: &DMatrix<C64>, out: &mut DMatrix<C64>) {
        self.a_sparse.left_mul_add(rho, out);
        self.a_sparse.right_adj_mul_add(rho, out);
        add_jumps(&self.jumps, rho, out);
    }

    /// Matrix of the superoperator acting on column-stacked ρ.
    pub fn superoperator(&self) -> DMatrix<C64> {
        let d = self.dim;
        let id = DMatrix::<C64>::identity(d, d);
        let mut l = id.kronecker(&self.a_eff) + self.a_eff.map(|z| z.conj()).kronecker(&id);
        for (c, _, g) in &self.jumps {
            l += c.map(|z| z.conj()).kronecker(c) * C64::from(*g);
        }
        l
    }

    /// Cheap upper estimate of the largest superoperator entry.
    pub fn norm_scale(&self) -> f64 {
        let a = self.a_sparse.max_abs();
        2.0 * a + self.jumps.iter().map(|(_, s, g)| g * s.max_abs().powi(2)).sum::<f64>()
    }
}

pub(crate) fn no_jump_generator(h: &DMatrix<C64>, jumps: &[(DMatrix<C64>, f64)]) -> DMatrix<C64> {
    let mut a = h * C64::new(0.0, -1.0);
    for (c, g) in jumps {
        a -= c.adjoint() * c * C64::from(0.5 * g);
    }
    a
}

fn add_jumps(jumps: &[(DMatrix<C64>, Csr, f64)], rho: &DMatrix<C64>, out: &mut DMatrix<C64>) {
    if jumps.is_empty() {
        return;
    }
    let d = rho.nrows();
    let mut tmp = DMatrix::zeros(d, d);
    let mut acc = DMatrix::zeros(d, d);
    for (_, c, g) in jumps {
        tmp.fill(C64::new(0.0, 0.0));
        c.left_mul_add(rho, &mut tmp);
        acc.fill(C64::new(0.0, 0.0));
        c.right_adj_mul_add(&tmp, &mut acc);
        *out += &acc * C64::from(*g);
    }
}

/// Dissipator with a Hamiltonian that is rebuilt at every time.
pub(crate) struct TimeDependentLiouvillian<'a> {
    pub h: &'a dyn Fn(f64) -> DMatrix<C64>,
    damping: DMatrix<C64>,
    jumps: Vec<(DMatrix<C64>, Csr, f64)>,
}

impl<'a> TimeDependentLiouvillian<'a> {
    pub fn new(h: &'a dyn Fn(f64) -> DMatrix<C64>, dim: usize, jumps: Vec<(DMatrix<C64>, f64)>) -> Self {
        let mut damping = DMatrix::zeros(dim, dim);
        for (c, g) in &jumps {
            damping += c.adjoint() * c * C64::from(0.5 * g);
        }
        let jumps = jumps.into_iter().map(|(c, g)| { let s = Csr::from_dense(&c); (c, s, g) }).collect();
        Self { h, damping, jumps }
    }

    pub fn apply(&self, t: f64, rho: &DMatrix<C64>) -> DMatrix<C64> {
        let a = (self.h)(t) * C64::new(0.0, -1.0) - &self.damping;
        let mut out = &a * rho + rho * a.adjoint();
        add_jumps(&self.jumps, rho, &mut out);
        out
    }
}

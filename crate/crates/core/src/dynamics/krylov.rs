//! Restarted, right-preconditioned GMRES on matrix-shaped unknowns, and the
//! Schur-based Sylvester solve used as its preconditioner.

use nalgebra::{DMatrix, DVector};

use crate::operator::C64;

fn dot(x: &DMatrix<C64>, y: &DMatrix<C64>) -> C64 {
    x.iter().zip(y.iter()).map(|(a, b)| a.conj() * b).sum()
}

fn norm(x: &DMatrix<C64>) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub(crate) struct GmresOutcome {
    pub x: DMatrix<C64>,
    pub iterations: usize,
    pub rel_residual: f64,
    pub converged: bool,
}

/// Solves `op(x) = b` with right preconditioner `prec ≈ op⁻¹`, starting from zero.
pub(crate) fn gmres<Op, Pc>(op: Op, prec: Pc, b: &DMatrix<C64>, restart: usize, max_iter: usize, tol: f64) -> GmresOutcome
where
    Op: Fn(&DMatrix<C64>) -> DMatrix<C64>,
    Pc: Fn(&DMatrix<C64>) -> DMatrix<C64>,
{
    let (nr, nc) = b.shape();
    let bnorm = norm(b).max(f64::MIN_POSITIVE);
    let mut x = DMatrix::<C64>::zeros(nr, nc);
    let mut r = b.clone();
    let mut total = 0;
    let mut rel = norm(&r) / bnorm;
    while total < max_iter && rel > tol {
        let beta = norm(&r);
        let m = restart.min(max_iter - total);
        let mut basis: Vec<DMatrix<C64>> = Vec::with_capacity(m + 1);
        let mut zs: Vec<DMatrix<C64>> = Vec::with_capacity(m);
        basis.push(&r / C64::from(beta));
        let mut hess = DMatrix::<C64>::zeros(m + 1, m);
        let mut cs = vec![C64::new(0.0, 0.0); m];
        let mut sn = vec![C64::new(0.0, 0.0); m];
        let mut g = DVector::<C64>::zeros(m + 1);
        g[0] = C64::from(beta);
        let mut k_used = 0;
        for k in 0..m {
            let z = prec(&basis[k]);
            let mut w = op(&z);
            zs.push(z);
            for (i, v) in basis.iter().enumerate() {
                let hik = dot(v, &w);
                hess[(i, k)] = hik;
                w -= v * hik;
            }
            // one reorthogonalisation pass keeps long cycles stable
            for (i, v) in basis.iter().enumerate() {
                let c = dot(v, &w);
                hess[(i, k)] += c;
                w -= v * c;
            }
            let hn = norm(&w);
            hess[(k + 1, k)] = C64::from(hn);
            for i in 0..k {
                let (a, bb) = (hess[(i, k)], hess[(i + 1, k)]);
                hess[(i, k)] = cs[i].conj() * a + sn[i].conj() * bb;
                hess[(i + 1, k)] = -sn[i] * a + cs[i] * bb;
            }
            let (a, bb) = (hess[(k, k)], hess[(k + 1, k)]);
            let den = (a.norm_sqr() + bb.norm_sqr()).sqrt();
            if den == 0.0 {
                cs[k] = C64::new(1.0, 0.0);
                sn[k] = C64::new(0.0, 0.0);
            } else {
                cs[k] = a / den;
                sn[k] = bb / den;
            }
            hess[(k, k)] = cs[k].conj() * a + sn[k].conj() * bb;
            hess[(k + 1, k)] = C64::new(0.0, 0.0);
            let gk = g[k];
            g[k] = cs[k].conj() * gk;
            g[k + 1] = -sn[k] * gk;
            k_used = k + 1;
            total += 1;
            rel = g[k + 1].norm() / bnorm;
            if rel <= tol || hn == 0.0 {
                break;
            }
            basis.push(&w / C64::from(hn));
        }
        let mut y = DVector::<C64>::zeros(k_used);
        for i in (0..k_used).rev() {
            let mut s = g[i];
            for j in i + 1..k_used {
                s -= hess[(i, j)] * y[j];
            }
            y[i] = s / hess[(i, i)];
        }
        for (j, z) in zs.iter().enumerate().take(k_used) {
            x += z * y[j];
        }
        r = b - op(&x);
        rel = norm(&r) / bnorm;
        if k_used == 0 {
            break;
        }
    }
    GmresOutcome { converged: rel <= tol, x, iterations: total, rel_residual: rel }
}

/// Solver for `A X + X A† = B` via the complex Schur form `A = Q T Q†`.
pub(crate) struct Sylvester {
    q: DMatrix<C64>,
    t: DMatrix<C64>,
}

impl Sylvester {
    pub fn new(a: &DMatrix<C64>) -> Option<Self> {
        let schur = nalgebra::Schur::try_new(a.clone(), f64::EPSILON, 0)?;
        let (q, t) = schur.unpack();
        for i in 0..t.nrows() {
            for j in 0..t.nrows() {
                if (t[(i, i)] + t[(j, j)].conj()).norm() == 0.0 {
                    return None;
                }
            }
        }
        Some(Self { q, t })
    }

    pub fn solve(&self, b: &DMatrix<C64>) -> DMatrix<C64> {
        let n = self.t.nrows();
        let bt = self.q.adjoint() * b * &self.q;
        let mut y = DMatrix::<C64>::zeros(n, n);
        for j in (0..n).rev() {
            let mut rhs = bt.column(j).into_owned();
            for k in j + 1..n {
                let c = self.t[(j, k)].conj();
                if c != C64::new(0.0, 0.0) {
                    rhs -= y.column(k) * c;
                }
            }
            let shift = self.t[(j, j)].conj();
            for i in (0..n).rev() {
                let mut s = rhs[i];
                for l in i + 1..n {
                    s -= self.t[(i, l)] * y[(l, j)];
                }
                y[(i, j)] = s / (self.t[(i, i)] + shift);
            }
        }
        &self.q * y * self.q.adjoint()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sylvester_round_trip() {
        let n = 7;
        let a = DMatrix::from_fn(n, n, |i, j| C64::new(if i == j { -1.0 - i as f64 } else { 0.1 * ((i * 3 + j) % 5) as f64 }, 0.2 * ((i + 2 * j) % 3) as f64));
        let x = DMatrix::from_fn(n, n, |i, j| C64::new((i + j) as f64, i as f64 - j as f64));
        let b = &a * &x + &x * a.adjoint();
        let s = Sylvester::new(&a).unwrap();
        let got = s.solve(&b);
        assert!((got - x).iter().all(|z| z.norm() < 1e-10));
    }

    #[test]
    fn gmres_solves_a_small_system() {
        let n = 5;
        let a = DMatrix::from_fn(n, n, |i, j| C64::new(if i == j { 3.0 } else { 0.3 / (1.0 + i as f64 + j as f64) }, 0.1 * (i as f64 - j as f64)));
        let x = DMatrix::from_fn(n, n, |i, j| C64::new(i as f64, j as f64));
        let b = &a * &x;
        let out = gmres(|v| &a * v, |v| v.clone(), &b, 10, 200, 1e-13);
        assert!(out.converged);
        assert!((out.x - x).iter().all(|z| z.norm() < 1e-9));
    }
}

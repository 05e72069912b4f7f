//! Dormand–Prince 5(4) with adaptive steps, specialised to matrix-valued states.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::operator::C64;

#[derive(Clone, Copy, Debug)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { rtol: 1e-7, atol: 1e-10 }
    }
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn lin(y: &DMatrix<C64>, h: f64, terms: &[(f64, &DMatrix<C64>)]) -> DMatrix<C64> {
    let mut out = y.clone();
    for &(c, k) in terms {
        if c != 0.0 {
            out.zip_apply(k, |o, kv| *o += kv * (c * h));
        }
    }
    out
}

fn error_norm(err: &DMatrix<C64>, y0: &DMatrix<C64>, y1: &DMatrix<C64>, tol: Tolerances) -> f64 {
    let n = err.len() as f64;
    let mut acc = 0.0;
    for ((e, a), b) in err.iter().zip(y0.iter()).zip(y1.iter()) {
        let sc = tol.atol + tol.rtol * a.norm().max(b.norm());
        acc += (e.norm() / sc).powi(2);
    }
    (acc / n).sqrt()
}

/// Integrates `dy/dt = f(t, y)` from `t0`, stopping exactly at each of `outputs`
/// (increasing) and handing the state to `record`.
pub fn integrate<F, R>(mut f: F, t0: f64, y0: DMatrix<C64>, outputs: &[f64], dt_hint: f64, tol: Tolerances, mut record: R) -> Result<DMatrix<C64>>
where
    F: FnMut(f64, &DMatrix<C64>) -> DMatrix<C64>,
    R: FnMut(usize, f64, &DMatrix<C64>) -> Result<()>,
{
    let mut t = t0;
    let mut y = y0;
    let mut k1 = f(t, &y);
    let span = outputs.last().map_or(0.0, |&e| e - t0);
    let mut h = if dt_hint > 0.0 {
        dt_hint
    } else {
        let fy = k1.iter().fold(0.0_f64, |m, z| m.max(z.norm()));
        let yy = y.iter().fold(0.0_f64, |m, z| m.max(z.norm()));
        if fy > 0.0 { (0.01 * yy.max(1e-3) / fy).min(span.max(1e-12)) } else { span.max(1e-12) * 1e-3 }
    };
    for (idx, &target) in outputs.iter().enumerate() {
        while t < target {
            let remaining = target - t;
            let clipped = h >= remaining;
            let step = if clipped { remaining } else { h };
            if step < 1e-13 * t.abs().max(1.0) && !clipped {
                return Err(Error::Stiffness { t, h: step });
            }
            let k2 = f(t + C2 * step, &lin(&y, step, &[(A21, &k1)]));
            let k3 = f(t + C3 * step, &lin(&y, step, &[(A31, &k1), (A32, &k2)]));
            let k4 = f(t + C4 * step, &lin(&y, step, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
            let k5 = f(t + C5 * step, &lin(&y, step, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]));
            let k6 = f(t + step, &lin(&y, step, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]));
            let y_new = lin(&y, step, &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
            let k7 = f(t + step, &y_new);
            let zero = DMatrix::zeros(y.nrows(), y.ncols());
            let err = lin(&zero, step, &[(E1, &k1), (E3, &k3), (E4, &k4), (E5, &k5), (E6, &k6), (E7, &k7)]);
            let en = error_norm(&err, &y, &y_new, tol);
            if !en.is_finite() {
                return Err(Error::Stiffness { t, h: step });
            }
            let fac = if en == 0.0 { 5.0 } else { (0.9 * en.powf(-0.2)).clamp(0.2, 5.0) };
            if en <= 1.0 {
                t = if clipped { target } else { t + step };
                y = y_new;
                k1 = k7;
                // a step shortened to hit an output time says nothing about the natural size
                if !clipped || fac < 1.0 {
                    h = step * fac;
                }
            } else {
                h = step * fac.min(1.0);
                if h < 1e-13 * t.abs().max(1.0) {
                    return Err(Error::Stiffness { t, h });
                }
            }
        }
        record(idx, t, &y)?;
    }
    Ok(y)
}

//! Coupled-mode eigenfrequencies, peak extraction from spectral maps, and
//! least-squares fits of peak loci to level repulsion/attraction models.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::C64;
use crate::spectroscopy::SpectralMap;

/// Upper and lower normal-mode frequencies of two modes with hopping `j`.
pub fn eigenfreqs_repulsion(omega_a: f64, omega_b: f64, j: f64) -> (f64, f64) {
    let mean = 0.5 * (omega_a + omega_b);
    let half = 0.5 * (omega_a - omega_b);
    let root = half.hypot(j);
    (mean + root, mean - root)
}

/// Normal-mode frequencies of two modes with two-mode squeezing `j`; complex
/// inside the exceptional points `|ω_A − ω_B| < 2j`.
pub fn eigenfreqs_attraction(omega_a: f64, omega_b: f64, j: f64) -> (C64, C64) {
    let mean = 0.5 * (omega_a + omega_b);
    let half = 0.5 * (omega_a - omega_b);
    let disc = (half - j) * (half + j);
    // below the rounding error of the detuning the discriminant is zero
    let noise = 4.0 * f64::EPSILON * omega_a.abs().max(omega_b.abs()).max(j) * (half.abs() + j);
    let root = if disc.abs() <= noise {
        C64::new(0.0, 0.0)
    } else if disc > 0.0 { C64::new(disc.sqrt(), 0.0) } else { C64::new(0.0, (-disc).sqrt()) };
    (C64::from(mean) + root, C64::from(mean) - root)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LevelKind {
    Repulsion,
    Attraction,
}

/// Analytic coupled-mode model of the peak loci.
///
/// Loci are expressed in the (modulation, drive) frequency plane: the difference
/// family (red sideband probed on B) has branches `eig(ω_A − ω_m, ω_B, J)`, the sum
/// family (blue sideband probed on A) has `eig(ω_A, ω_m − ω_B, J)`. Without an
/// explicit `locus`, repulsion uses the difference family and attraction the sum family.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevelModel {
    pub kind: LevelKind,
    #[serde(rename = "omega_A")]
    pub omega_a: f64,
    #[serde(rename = "omega_B")]
    pub omega_b: f64,
    #[serde(rename = "J")]
    pub j: f64,
    #[serde(rename = "V", default)]
    pub v: f64,
    #[serde(rename = "alpha_A", default)]
    pub alpha_a: f64,
    #[serde(rename = "alpha_B", default)]
    pub alpha_b: f64,
    /// Adds the branch pair of a singly excited mode B (shifted by V and α_B).
    #[serde(default)]
    pub kerr_branch: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub locus: Option<Locus>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Locus {
    Difference,
    Sum,
}

impl LevelModel {
    pub fn new(kind: LevelKind, omega_a: f64, omega_b: f64, j: f64) -> Self {
        Self { kind, omega_a, omega_b, j, v: 0.0, alpha_a: 0.0, alpha_b: 0.0, kerr_branch: false, locus: None }
    }

    pub fn locus_family(&self) -> Locus {
        self.locus.unwrap_or(match self.kind {
            LevelKind::Repulsion => Locus::Difference,
            LevelKind::Attraction => Locus::Sum,
        })
    }

    fn pair(&self, omega_a: f64, omega_b: f64, omega_m: f64) -> (C64, C64) {
        let (x, y) = match self.locus_family() {
            Locus::Difference => (omega_a - omega_m, omega_b),
            Locus::Sum => (omega_a, omega_m - omega_b),
        };
        match self.kind {
            LevelKind::Repulsion => {
                let (u, l) = eigenfreqs_repulsion(x, y, self.j);
                (C64::from(u), C64::from(l))
            }
            LevelKind::Attraction => eigenfreqs_attraction(x, y, self.j),
        }
    }

    /// Real parts of every modelled locus at modulation frequency `omega_m`.
    pub fn loci(&self, omega_m: f64) -> Vec<f64> {
        let mut out = Vec::with_capacity(4);
        for br in self.branch_set() {
            let (p, m) = self.pair(br.omega_a, br.omega_b, omega_m);
            out.push(p.re);
            out.push(m.re);
        }
        out
    }

    fn branch_set(&self) -> Vec<Branch> {
        let mut v = vec![self.shifted(0, 0)];
        if self.kerr_branch {
            v.push(self.shifted(0, 1));
        }
        v
    }

    fn shifted(&self, n_a: u8, n_b: u8) -> Branch {
        let (na, nb) = (n_a as f64, n_b as f64);
        Branch {
            n_a,
            n_b,
            omega_a: self.omega_a + self.alpha_a * na + self.v * nb,
            omega_b: self.omega_b + self.alpha_b * nb + self.v * na,
        }
    }
}

/// One occupation-shifted copy of the two-mode problem.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    pub n_a: u8,
    pub n_b: u8,
    #[serde(rename = "omega_A")]
    pub omega_a: f64,
    #[serde(rename = "omega_B")]
    pub omega_b: f64,
}

impl Branch {
    /// Eigenfrequency pair of this branch for a bare (unmodulated) model.
    pub fn eigenfreqs(&self, kind: LevelKind, j: f64) -> (C64, C64) {
        match kind {
            LevelKind::Repulsion => {
                let (u, l) = eigenfreqs_repulsion(self.omega_a, self.omega_b, j);
                (C64::from(u), C64::from(l))
            }
            LevelKind::Attraction => eigenfreqs_attraction(self.omega_a, self.omega_b, j),
        }
    }
}

/// Frequencies shifted by self- and cross-Kerr terms for occupations `n_a`, `n_b` ∈ {0, 1}.
pub fn kerr_shifted_branches(model: &LevelModel, n_a: u8, n_b: u8) -> Result<Vec<Branch>> {
    if n_a > 1 || n_b > 1 {
        return Err(Error::Config("only occupations 0 and 1 are modelled".into()));
    }
    let mut out = vec![model.shifted(0, 0)];
    if (n_a, n_b) != (0, 0) {
        out.push(model.shifted(n_a, n_b));
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    Peak,
    Dip,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    pub center: f64,
    /// Full width at half prominence.
    pub width: f64,
    pub amplitude: f64,
    pub prominence: f64,
    pub polarity: Polarity,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ColumnPeaks {
    pub omega_m: f64,
    pub peaks: Vec<Peak>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PeakSet {
    pub columns: Vec<ColumnPeaks>,
}

impl PeakSet {
    /// All `(omega_m, center)` pairs.
    pub fn points(&self) -> Vec<(f64, f64)> {
        self.columns.iter().flat_map(|c| c.peaks.iter().map(move |p| (c.omega_m, p.center))).collect()
    }

    pub fn len(&self) -> usize {
        self.columns.iter().map(|c| c.peaks.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Local extrema of `y(x)` with at least `min_prominence`, refined by a parabola
/// through the log-magnitude of the three samples around each extremum.
pub fn find_peaks(x: &[f64], y: &[f64], polarity: Polarity, min_prominence: f64) -> Vec<Peak> {
    let n = x.len().min(y.len());
    if n < 3 || y[..n].iter().any(|v| !v.is_finite()) {
        return Vec::new();
    }
    let top = y[..n].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let bottom = y[..n].iter().cloned().fold(f64::INFINITY, f64::min);
    // work on a positive signal so that the log refinement is defined
    let s: Vec<f64> = match polarity {
        Polarity::Peak => y[..n].to_vec(),
        Polarity::Dip => y[..n].iter().map(|v| top - v + bottom.abs()).collect(),
    };
    let floor = 1e-300;
    let mut out = Vec::new();
    let mut i = 1;
    while i + 1 < n {
        if !(s[i] > s[i - 1]) {
            i += 1;
            continue;
        }
        // plateau: advance to its end
        let mut k = i;
        while k + 1 < n && s[k + 1] == s[i] {
            k += 1;
        }
        if k + 1 >= n || s[k + 1] > s[i] {
            i = k + 1;
            continue;
        }
        let mid = (i + k) / 2;
        let h = s[mid];
        let mut left_min = h;
        let mut l = i;
        while l > 0 {
            l -= 1;
            if s[l] > h {
                break;
            }
            left_min = left_min.min(s[l]);
        }
        let mut right_min = h;
        let mut r = k;
        while r + 1 < n {
            r += 1;
            if s[r] > h {
                break;
            }
            right_min = right_min.min(s[r]);
        }
        let prominence = h - left_min.max(right_min);
        if prominence >= min_prominence && prominence > 0.0 {
            let center = if i == k {
                let (ym, y0, yp) = (s[mid - 1].max(floor).ln(), h.max(floor).ln(), s[mid + 1].max(floor).ln());
                let denom = ym - 2.0 * y0 + yp;
                let shift = if denom < 0.0 { (0.5 * (ym - yp) / denom).clamp(-0.5, 0.5) } else { 0.0 };
                let dx = if shift >= 0.0 { x[mid + 1] - x[mid] } else { x[mid] - x[mid - 1] };
                x[mid] + shift * dx
            } else {
                0.5 * (x[i] + x[k])
            };
            let level = h - 0.5 * prominence;
            let mut a = i;
            while a > 0 && s[a] > level {
                a -= 1;
            }
            let left = if s[a] <= level && s[a + 1] != s[a] { x[a] + (level - s[a]) / (s[a + 1] - s[a]) * (x[a + 1] - x[a]) } else { x[a] };
            let mut b = k;
            while b + 1 < n && s[b] > level {
                b += 1;
            }
            let right = if s[b] <= level && s[b - 1] != s[b] { x[b] - (level - s[b]) / (s[b - 1] - s[b]) * (x[b] - x[b - 1]) } else { x[b] };
            let amplitude = match polarity {
                Polarity::Peak => h,
                Polarity::Dip => y[mid],
            };
            out.push(Peak { center, width: right - left, amplitude, prominence, polarity });
        }
        i = k + 1;
    }
    out
}

/// Peaks (or dips) of the normalised probe response in every modulation-frequency column.
/// Columns with poisoned cells yield empty entries.
pub fn extract_peaks(map: &SpectralMap, polarity: Polarity, min_prominence: f64) -> Result<PeakSet> {
    if map.axis_d.len() < 5 {
        return Err(Error::InvalidDimension(format!("need at least 5 drive points, got {}", map.axis_d.len())));
    }
    let columns = map
        .axis_m
        .iter()
        .enumerate()
        .map(|(i, &wm)| ColumnPeaks { omega_m: wm, peaks: find_peaks(&map.axis_d, &map.normalized[i], polarity, min_prominence) })
        .collect();
    Ok(PeakSet { columns })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitParameter {
    pub name: String,
    pub value: f64,
    pub sigma: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub model: LevelModel,
    pub parameters: Vec<FitParameter>,
    /// √(Σ r²), GHz.
    pub residual_norm: f64,
    pub n_points: usize,
    pub iterations: usize,
    pub converged: bool,
}

impl FitResult {
    pub fn get(&self, name: &str) -> Option<&FitParameter> {
        self.parameters.iter().find(|p| p.name == name)
    }
}

#[derive(Clone, Debug)]
pub struct FitOptions {
    pub max_iter: usize,
    /// A point only changes branch when another is closer by this much (GHz).
    pub switch_margin: f64,
    /// Points farther than this from every branch are ignored (GHz); `None` keeps all.
    pub outlier_cut: Option<f64>,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self { max_iter: 200, switch_margin: 0.0, outlier_cut: None }
    }
}

fn param_names(model: &LevelModel) -> Vec<&'static str> {
    if model.kerr_branch {
        vec!["omega_A", "omega_B", "J", "V"]
    } else {
        vec!["omega_A", "omega_B", "J"]
    }
}

fn with_params(base: &LevelModel, p: &[f64]) -> LevelModel {
    let mut m = base.clone();
    m.omega_a = p[0];
    m.omega_b = p[1];
    m.j = p[2].abs();
    if m.kerr_branch {
        m.v = p[3];
    }
    m
}

fn residuals(model: &LevelModel, pts: &[(f64, f64)], assign: &[usize]) -> DVector<f64> {
    DVector::from_iterator(pts.len(), pts.iter().zip(assign).map(|(&(wm, c), &k)| c - model.loci(wm)[k]))
}

fn assign_branches(model: &LevelModel, pts: &[(f64, f64)], prev: Option<&[usize]>, margin: f64) -> Vec<usize> {
    pts.iter()
        .enumerate()
        .map(|(i, &(wm, c))| {
            let loci = model.loci(wm);
            let dist: Vec<f64> = loci.iter().map(|l| (c - l).abs()).collect();
            let best = (0..dist.len()).min_by(|&a, &b| dist[a].total_cmp(&dist[b])).unwrap_or(0);
            match prev {
                Some(p) if dist[p[i]] <= dist[best] + margin => p[i],
                _ => best,
            }
        })
        .collect()
}

fn jacobian(base: &LevelModel, p: &[f64], pts: &[(f64, f64)], assign: &[usize], scale: f64) -> DMatrix<f64> {
    let mut jac = DMatrix::zeros(pts.len(), p.len());
    for k in 0..p.len() {
        let h = 1e-7 * p[k].abs().max(scale);
        let mut up = p.to_vec();
        let mut dn = p.to_vec();
        up[k] += h;
        dn[k] -= h;
        let ru = residuals(&with_params(base, &up), pts, assign);
        let rd = residuals(&with_params(base, &dn), pts, assign);
        jac.set_column(k, &((ru - rd) / (2.0 * h)));
    }
    jac
}

/// Levenberg–Marquardt fit of `(omega_m, center)` points to the nearest model locus.
pub fn fit_points(points: &[(f64, f64)], initial: &LevelModel, opts: &FitOptions) -> Result<FitResult> {
    let names = param_names(initial);
    let np = names.len();
    let mut pts: Vec<(f64, f64)> = points.iter().cloned().filter(|(a, b)| a.is_finite() && b.is_finite()).collect();
    if pts.len() < 8 || pts.len() <= np {
        return Err(Error::IllPosed(format!("{} peak points are not enough for a {np}-parameter fit", pts.len())));
    }
    if let Some(cut) = opts.outlier_cut {
        pts.retain(|&(wm, c)| initial.loci(wm).iter().any(|l| (c - l).abs() <= cut));
        if pts.len() < 8 {
            return Err(Error::IllPosed("too few points near the initial model".into()));
        }
    }
    let scale = initial.j.abs().max(1e-6);
    let mut p: Vec<f64> = vec![initial.omega_a, initial.omega_b, initial.j];
    if initial.kerr_branch {
        p.push(initial.v);
    }
    let mut assign = assign_branches(initial, &pts, None, opts.switch_margin);
    let mut r = residuals(&with_params(initial, &p), &pts, &assign);
    let mut cost = r.norm_squared();
    let mut lambda = 1e-3;
    let mut converged = false;
    let mut iterations = 0;
    let mut trace = Vec::new();
    while iterations < opts.max_iter {
        iterations += 1;
        let jac = jacobian(initial, &p, &pts, &assign, scale);
        let jtj = jac.transpose() * &jac;
        let diag_max = jtj.diagonal().iter().cloned().fold(0.0_f64, f64::max);
        if diag_max == 0.0 || jtj.diagonal().iter().any(|&d| d <= 1e-300 * diag_max.max(1.0)) {
            return Err(Error::IllPosed("a parameter does not influence any residual".into()));
        }
        let g = jac.transpose() * &r;
        let mut accepted = false;
        for _ in 0..40 {
            let mut a = jtj.clone();
            for k in 0..np {
                a[(k, k)] += lambda * jtj[(k, k)];
            }
            let Some(step) = a.cholesky().map(|c| c.solve(&(-&g))) else {
                lambda *= 10.0;
                continue;
            };
            let trial: Vec<f64> = p.iter().zip(step.iter()).map(|(x, d)| x + d).collect();
            let model = with_params(initial, &trial);
            let trial_assign = assign_branches(&model, &pts, Some(&assign), opts.switch_margin);
            let tr = residuals(&model, &pts, &trial_assign);
            let tc = tr.norm_squared();
            if tc.is_finite() && tc <= cost {
                let small = step.iter().zip(&trial).all(|(d, x)| d.abs() <= 1e-12 * (x.abs() + scale));
                let rel = (cost - tc) / cost.max(f64::MIN_POSITIVE);
                p = trial;
                assign = trial_assign;
                r = tr;
                cost = tc;
                lambda = (lambda / 3.0).max(1e-12);
                accepted = true;
                if small || rel < 1e-14 || cost < 1e-28 * pts.len() as f64 {
                    converged = true;
                }
                break;
            }
            lambda *= 4.0;
        }
        trace.push(cost);
        if !accepted {
            // no descent direction left: the current point is a minimum to working precision
            converged = true;
        }
        if converged {
            break;
        }
    }
    if !converged {
        let tail: Vec<String> = trace.iter().rev().take(5).map(|c| format!("{c:.3e}")).collect();
        return Err(Error::FitFailed(format!("no convergence in {} iterations; last costs {}", opts.max_iter, tail.join(", "))));
    }
    let jac = jacobian(initial, &p, &pts, &assign, scale);
    let jtj = jac.transpose() * &jac;
    let svd = jtj.clone().svd(false, false);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smin > 1e-14 * smax) {
        return Err(Error::IllPosed(format!("normal matrix is singular (condition {:.1e})", smax / smin.max(f64::MIN_POSITIVE))));
    }
    let dof = (pts.len() - np) as f64;
    let s2 = cost / dof;
    let cov = jtj.try_inverse().ok_or_else(|| Error::IllPosed("normal matrix not invertible".into()))?;
    let model = with_params(initial, &p);
    let parameters = names
        .iter()
        .enumerate()
        .map(|(k, n)| FitParameter { name: (*n).to_string(), value: if k == 2 { p[k].abs() } else { p[k] }, sigma: (s2 * cov[(k, k)]).max(0.0).sqrt() })
        .collect();
    Ok(FitResult { model, parameters, residual_norm: cost.sqrt(), n_points: pts.len(), iterations, converged })
}

/// Fits the loci of a [`PeakSet`].
pub fn fit_levels(peaks: &PeakSet, initial: &LevelModel, opts: &FitOptions) -> Result<FitResult> {
    fit_points(&peaks.points(), initial, opts)
}

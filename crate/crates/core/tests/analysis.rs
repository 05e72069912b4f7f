use kerrsim::analysis::{eigenfreqs_attraction, eigenfreqs_repulsion, find_peaks, fit_points, FitOptions, LevelKind, LevelModel, Locus, Polarity};
use kerrsim::Error;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

const KAPPA: f64 = 0.0024393;

fn truth() -> LevelModel {
    LevelModel::new(LevelKind::Repulsion, 6.4716, 4.7129, 0.0074615)
}

fn synthetic(model: &LevelModel, n: usize) -> Vec<(f64, f64)> {
    let center = model.omega_a - model.omega_b;
    (0..n)
        .flat_map(|k| {
            let wm = center - 0.03 + 0.06 * k as f64 / (n - 1) as f64;
            model.loci(wm).into_iter().map(move |c| (wm, c))
        })
        .collect()
}

fn guess() -> LevelModel {
    LevelModel::new(LevelKind::Repulsion, 6.4730, 4.7120, 0.005)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn repulsion_sum_rule_and_gap(wa in 4.0f64..8.0, wb in 4.0f64..8.0, j in 0.0f64..0.05) {
        let (u, l) = eigenfreqs_repulsion(wa, wb, j);
        prop_assert!((u + l - wa - wb).abs() <= 1e-12 * (wa + wb));
        prop_assert!(u - l >= 2.0 * j * (1.0 - 1e-12));
        prop_assert!(((u - l).powi(2) - ((wa - wb).powi(2) + 4.0 * j * j)).abs() <= 1e-12 * (wa + wb).powi(2));
    }

    #[test]
    fn attraction_sum_rule(wa in 4.0f64..8.0, wb in 4.0f64..8.0, j in 0.0f64..0.05) {
        let (p, m) = eigenfreqs_attraction(wa, wb, j);
        prop_assert!((p + m - (wa + wb)).norm() <= 1e-12 * (wa + wb));
        // product of the roots of λ² − (a+b)λ + ab + J²
        prop_assert!((p * m - (wa * wb + j * j)).norm() <= 1e-12 * wa * wb);
        if (wa - wb).abs() < 2.0 * j {
            prop_assert!((p.re - m.re).abs() <= 1e-12 * (wa + wb));
        } else {
            prop_assert!(p.im.abs() <= 1e-12 && m.im.abs() <= 1e-12);
        }
    }

    #[test]
    fn exceptional_point_degenerate(wb in 4.0f64..8.0, j in 1e-4f64..0.05, sign in prop::bool::ANY) {
        let wa = if sign { wb + 2.0 * j } else { wb - 2.0 * j };
        let (p, m) = eigenfreqs_attraction(wa, wb, j);
        prop_assert!((p - m).norm() <= 1e-12 * (wa + wb), "{p} {m}");
    }

    #[test]
    fn eigenfreqs_scale(wa in 4.0f64..8.0, wb in 4.0f64..8.0, j in 0.0f64..0.05, s in 0.1f64..10.0) {
        let (u, l) = eigenfreqs_repulsion(wa, wb, j);
        let (us, ls) = eigenfreqs_repulsion(s * wa, s * wb, s * j);
        prop_assert!((us - s * u).abs() <= 1e-12 * s * (wa + wb));
        prop_assert!((ls - s * l).abs() <= 1e-12 * s * (wa + wb));
    }
}

#[test]
fn noiseless_fit_is_exact() {
    let t = truth();
    let fit = fit_points(&synthetic(&t, 41), &guess(), &FitOptions::default()).unwrap();
    assert!(fit.converged);
    for (name, want) in [("omega_A", t.omega_a), ("omega_B", t.omega_b), ("J", t.j)] {
        let got = fit.get(name).unwrap().value;
        assert!(((got - want) / want).abs() < 1e-4, "{name}: {got} vs {want}");
    }
}

#[test]
fn noiseless_sum_locus_fit_with_kerr_branch() {
    let mut t = LevelModel::new(LevelKind::Repulsion, 6.7045, 5.5733, 0.0011313);
    t.v = -0.009158;
    t.alpha_b = -0.2364;
    t.kerr_branch = true;
    t.locus = Some(Locus::Sum);
    let center = t.omega_a + t.omega_b;
    let pts: Vec<(f64, f64)> = (0..41)
        .flat_map(|k| {
            let wm = center - 0.012 + 0.024 * k as f64 / 40.0;
            t.loci(wm).into_iter().map(move |c| (wm, c))
        })
        .collect();
    let mut g = t.clone();
    g.omega_b += 0.0008;
    g.j = 0.0008;
    g.v = -0.007;
    let fit = fit_points(&pts, &g, &FitOptions::default()).unwrap();
    for (name, want) in [("J", t.j), ("V", t.v)] {
        let got = fit.get(name).unwrap().value;
        assert!(((got - want) / want).abs() < 1e-4, "{name}: {got} vs {want}");
    }
}

#[test]
fn noisy_fit_recovers_coupling() {
    let t = truth();
    let clean = synthetic(&t, 41);
    let noise = Normal::new(0.0, KAPPA / 10.0).unwrap();
    let mut errs: Vec<f64> = (0..100u64)
        .map(|seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let pts: Vec<(f64, f64)> = clean.iter().map(|&(m, c)| (m, c + noise.sample(&mut rng))).collect();
            let fit = fit_points(&pts, &guess(), &FitOptions::default()).unwrap();
            (fit.get("J").unwrap().value - t.j).abs() / t.j
        })
        .collect();
    errs.sort_by(f64::total_cmp);
    let median = (errs[49] + errs[50]) / 2.0;
    assert!(median < 0.05, "median relative J error {median}");
}

#[test]
fn too_few_points_is_ill_posed() {
    let pts = synthetic(&truth(), 3);
    assert!(matches!(fit_points(&pts, &guess(), &FitOptions::default()), Err(Error::IllPosed(_))));
}

#[test]
fn lorentzian_peaks_located() {
    let x: Vec<f64> = (0..401).map(|k| -1.0 + k as f64 / 200.0).collect();
    let lor = |x: f64, c: f64, w: f64| 1.0 / (1.0 + ((x - c) / (w / 2.0)).powi(2));
    let y: Vec<f64> = x.iter().map(|&v| lor(v, -0.3137, 0.05) + 0.5 * lor(v, 0.4021, 0.08)).collect();
    let peaks = find_peaks(&x, &y, Polarity::Peak, 0.1);
    assert_eq!(peaks.len(), 2);
    assert!((peaks[0].center + 0.3137).abs() < 5e-4);
    assert!((peaks[1].center - 0.4021).abs() < 5e-4);
    assert!((peaks[0].width - 0.05).abs() < 0.01);
    let inv: Vec<f64> = y.iter().map(|v| 2.0 - v).collect();
    assert_eq!(find_peaks(&x, &inv, Polarity::Dip, 0.1).len(), 2);
    assert!(find_peaks(&x, &y, Polarity::Peak, 0.9).len() == 1);
}

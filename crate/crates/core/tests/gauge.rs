use std::f64::consts::E;

use nullflow::background::{
    build_analytic, raychaudhuri_propagate, AnalyticBackground, InitialSlice, LambdaGrid, Profile, Sources,
};
use nullflow::flow::graph_expansion;
use nullflow::gauge::{
    check_energy_condition, check_gauge_condition, construct_gauge, energy_condition_holds, reparametrize,
    traceless_of_norm, GaugeProfile, DEFAULT_TOL,
};
use nullflow::numerics::lagrange;
use nullflow::{BackgroundFoliation, Error, MetricField, ScalarField, SphereGrid, SymTensor2Field};
use proptest::prelude::*;

fn schwarzschild(grid: SphereGrid, l: LambdaGrid) -> BackgroundFoliation {
    build_analytic(&AnalyticBackground::SchwarzschildCone { mass: 1.0, r0: 1.0 }, grid, l).unwrap()
}

#[test]
fn initial_values_of_the_constructed_gauge() {
    let grid = SphereGrid::axisymmetric(6).unwrap();
    let bg = schwarzschild(grid, LambdaGrid::new(0.0, 0.01, 101).unwrap());
    let v0 = ScalarField::from_fn(grid, |t, _| 0.3 + 0.2 * t.cos().powi(2));
    let g = construct_gauge(&bg, &v0).unwrap();
    for n in 0..grid.len() {
        let beta = 0.5 * bg.slice(0).tr_chib.values()[n];
        assert_eq!(g.a[0].values()[n], 1.0);
        assert!((g.kappa[0].values()[n] - beta / v0.values()[n]).abs() < 1e-14);
        assert_eq!(g.s_of_lambda[0].values()[n], 0.0);
    }
}

#[test]
fn schwarzschild_gauge_at_r_equal_e() {
    let grid = SphereGrid::axisymmetric(4).unwrap();
    let bg = schwarzschild(grid, LambdaGrid::spanning(0.0, E - 1.0, 1e-3).unwrap());
    let g = construct_gauge(&bg, &ScalarField::constant(grid, 0.5)).unwrap();
    let last = bg.lambda().count - 1;
    assert!((bg.lambda().value(last) - (E - 1.0)).abs() < 1e-12);
    for n in 0..grid.len() {
        assert!((g.v.as_ref().unwrap()[last].values()[n] - 2.0 / 3.0).abs() < 1e-9);
        assert!((g.a[last].values()[n] - 2.0 * E).abs() / (2.0 * E) < 1e-8);
        // s = ln(1 + ln r)
        assert!((g.s_of_lambda[last].values()[n] - 2f64.ln()).abs() < 1e-8);
    }
}

#[test]
fn gauge_matches_the_closed_form_at_coarse_spacing() {
    let grid = SphereGrid::axisymmetric(4).unwrap();
    let bg = schwarzschild(grid, LambdaGrid::new(0.0, 1e-2, 301).unwrap());
    let g = construct_gauge(&bg, &ScalarField::constant(grid, 0.5)).unwrap();
    for k in 0..bg.lambda().count {
        let r = 1.0 + bg.lambda().value(k);
        let exact = r * (1.0 + r.ln());
        let kappa = 1.0 + r.ln() + 1.0;
        assert!((g.a[k].values()[0] - exact).abs() / exact < 1e-6);
        assert!((g.kappa[k].values()[0] - kappa).abs() / kappa < 1e-6);
    }
}

#[test]
fn constant_beta_closed_form() {
    // β = ½ tr χ̲ ≡ b: G(k,k) = −2b² makes the Riccati equation stationary.
    // v' = b(1 − v)² gives 1/(1 − v) = 1/(1 − v₀) + bλ = 3 at λ = 1/b.
    let b = 0.8;
    let grid = SphereGrid::axisymmetric(4).unwrap();
    let l = LambdaGrid::spanning(0.0, 1.0 / b, 1.0 / (b * 400.0)).unwrap();
    let bg = build_analytic(
        &AnalyticBackground::ShearFreeCustom {
            r0: 1.0,
            tr_chib0: Profile::Constant(2.0 * b),
            g_kk: Profile::Constant(-2.0 * b * b),
        },
        grid,
        l,
    )
    .unwrap();
    assert!((bg.slice(l.count - 1).tr_chib.values()[0] - 2.0 * b).abs() < 1e-10);
    let g = construct_gauge(&bg, &ScalarField::constant(grid, 0.5)).unwrap();
    let v = &g.v.as_ref().unwrap()[l.count - 1];
    assert!((v.values()[0] - 2.0 / 3.0).abs() < 1e-10, "{}", v.values()[0]);
}

#[test]
fn construction_rejects_bad_input() {
    let grid = SphereGrid::axisymmetric(4).unwrap();
    let bg = schwarzschild(grid, LambdaGrid::new(0.0, 0.1, 11).unwrap());
    for v0 in [0.0, 1.0, -0.2, 1.5] {
        assert!(matches!(construct_gauge(&bg, &ScalarField::constant(grid, v0)), Err(Error::Domain(_))));
    }
    // tr χ̲₀ = 0.4 cos θ is negative on the southern hemisphere
    let l = LambdaGrid::new(0.0, 0.01, 51).unwrap();
    let initial = InitialSlice {
        gamma: MetricField::unit_sphere(grid),
        tr_chib: ScalarField::from_fn(grid, |t, _| 0.4 * t.cos()),
        chib_hat: SymTensor2Field::zeros(grid),
    };
    let sources = Sources {
        kappa: vec![ScalarField::zeros(grid); l.count],
        g_ll: vec![ScalarField::zeros(grid); l.count],
        alphab_hat: vec![SymTensor2Field::zeros(grid); l.count],
    };
    let trapped = raychaudhuri_propagate(&initial, &sources, l).unwrap();
    assert!(matches!(
        construct_gauge(&trapped, &ScalarField::constant(grid, 0.5)),
        Err(Error::NotANullCone { .. })
    ));
}

#[test]
fn gauge_inequality_on_schwarzschild() {
    let grid = SphereGrid::full(6, 8).unwrap();
    let bg = schwarzschild(grid, LambdaGrid::new(0.0, 1e-2, 201).unwrap());
    let g = construct_gauge(&bg, &ScalarField::constant(grid, 0.5)).unwrap();
    let report = check_gauge_condition(&bg, &g, DEFAULT_TOL).unwrap();
    assert!(report.pass, "min slack {}", report.min_slack);
    assert!(report.min_slack >= -1e-8);
    assert!(report.energy_slack.unwrap().iter().all(|f| f.max_abs() == 0.0));

    // a ≡ 1: slack = d tr χ̲/dλ = −2/r²
    let affine = check_gauge_condition(&bg, &GaugeProfile::affine(&bg), DEFAULT_TOL).unwrap();
    assert!(!affine.pass);
    for (lambda, slack) in affine.table(bg.lambda()) {
        let r = 1.0 + lambda;
        assert!((slack + 2.0 / (r * r)).abs() < 1e-8, "lambda {lambda}: {slack}");
    }
}

#[test]
fn gauge_check_rejects_mismatched_lattices() {
    let grid = SphereGrid::axisymmetric(4).unwrap();
    let bg = schwarzschild(grid, LambdaGrid::new(0.0, 0.1, 11).unwrap());
    let other = schwarzschild(grid, LambdaGrid::new(0.0, 0.1, 12).unwrap());
    let g = GaugeProfile::affine(&other);
    assert!(matches!(check_gauge_condition(&bg, &g, DEFAULT_TOL), Err(Error::Lattice(_))));
}

/// One-level-per-slice background with prescribed G, |K̂| and tr K.
fn energy_background(g_kk: f64, k_hat: f64, tr_k: f64) -> BackgroundFoliation {
    let grid = SphereGrid::full(4, 6).unwrap();
    let base = schwarzschild(grid, LambdaGrid::new(0.0, 0.1, 3).unwrap());
    let slices = base
        .slices()
        .iter()
        .enumerate()
        .map(|(k, s)| {
            let r = 1.0 + 0.1 * k as f64;
            let mut s = s.clone();
            s.g_ll = ScalarField::constant(grid, g_kk);
            s.tr_chib = ScalarField::constant(grid, tr_k);
            s.chib_hat = traceless_of_norm(grid, r * r, k_hat);
            s
        })
        .collect();
    BackgroundFoliation::new(*base.lambda(), true, slices).unwrap()
}

#[test]
fn energy_condition_arithmetic() {
    let ok = energy_background(1.0, 0.1, 2.0);
    let slack = check_energy_condition(&ok).unwrap();
    for f in &slack {
        assert!(f.values().iter().all(|v| (v - 0.575).abs() < 1e-12));
    }
    assert!(energy_condition_holds(&ok, &slack, DEFAULT_TOL));

    let bad = energy_background(0.0, 1.0, 1.0);
    let slack = check_energy_condition(&bad).unwrap();
    assert!(slack.iter().all(|f| f.values().iter().all(|v| (v + 4.5).abs() < 1e-12)));
    assert!(!energy_condition_holds(&bad, &slack, DEFAULT_TOL));

    let grid = SphereGrid::axisymmetric(4).unwrap();
    let vac = schwarzschild(grid, LambdaGrid::new(0.0, 0.1, 11).unwrap());
    assert!(check_energy_condition(&vac).unwrap().iter().all(|f| f.max_abs() == 0.0));
}

#[test]
fn affine_reparametrization_is_the_identity() {
    let grid = SphereGrid::full(4, 6).unwrap();
    let bg = schwarzschild(grid, LambdaGrid::new(0.0, 0.05, 41).unwrap());
    let same = reparametrize(&bg, &GaugeProfile::affine(&bg)).unwrap();
    assert_eq!(same.lambda().count, bg.lambda().count);
    assert!((same.lambda().step - bg.lambda().step).abs() < 1e-15);
    for (a, b) in same.slices().iter().zip(bg.slices()) {
        assert_eq!(a.gamma, b.gamma);
        assert_eq!(a.tr_chib, b.tr_chib);
        let d = a.tr_chi.as_ref().unwrap().zip_with(b.tr_chi.as_ref().unwrap(), |x, y| x - y).unwrap();
        assert!(d.max_abs() < 1e-12);
    }
}

/// A per-level field at node `n`, interpolated off the lattice with a cubic.
fn at_lambda(levels: &[ScalarField], l: &LambdaGrid, n: usize, lambda: f64) -> f64 {
    let k = (((lambda - l.min) / l.step).floor() as usize).clamp(1, l.count - 3);
    let xs: Vec<f64> = (k - 1..k + 3).map(|j| l.value(j)).collect();
    let ys: Vec<f64> = (k - 1..k + 3).map(|j| levels[j].values()[n]).collect();
    lagrange(&xs, &ys, lambda)
}

/// (tr χ before, ã · tr χ after reparametrization) of the graph
/// λ = 1 + tilt·cos θ on an axisymmetric grid of `n` rings.
fn expansions_both_ways(n: usize, tilt: f64) -> (Vec<f64>, Vec<f64>) {
    let grid = SphereGrid::axisymmetric(n).unwrap();
    let bg = schwarzschild(grid, LambdaGrid::new(0.0, 5e-3, 601).unwrap());
    let gauge = construct_gauge(&bg, &ScalarField::constant(grid, 0.5)).unwrap();
    let bg_s = reparametrize(&bg, &gauge).unwrap();
    assert!(!bg_s.is_affine());
    let omega = ScalarField::from_fn(grid, |t, _| 1.0 + tilt * t.cos());
    let omega_s = ScalarField::new(
        grid,
        (0..grid.len()).map(|i| at_lambda(&gauge.s_of_lambda, bg.lambda(), i, omega.values()[i])).collect(),
    )
    .unwrap();
    let affine = graph_expansion(&bg, &omega).unwrap();
    let flowed = graph_expansion(&bg_s, &omega_s).unwrap();
    // the partner of ã k is L/ã, so its expansion is (tr χ)/ã
    let scaled = (0..grid.len())
        .map(|i| flowed.values()[i] * at_lambda(&gauge.a, bg.lambda(), i, omega.values()[i]))
        .collect();
    (affine.into_values(), scaled)
}

#[test]
fn mots_locus_is_gauge_covariant() {
    // the horizon r = 2 is a MOTS in both parametrizations
    let (before, after) = expansions_both_ways(24, 0.0);
    assert!(before.iter().all(|v| v.abs() < 1e-12));
    assert!(after.iter().all(|v| v.abs() < 1e-8), "{after:?}");

    // a tilted graph through the horizon: same sign pattern, and the
    // difference is the O(h²) failure of the discrete chain rule
    let mut diffs = Vec::new();
    for n in [24, 48] {
        let (before, after) = expansions_both_ways(n, 0.15);
        for (b, a) in before.iter().zip(&after) {
            if b.abs() > 1e-3 {
                assert_eq!(a.signum(), b.signum(), "n = {n}: {a} vs {b}");
            }
        }
        diffs.push(before.iter().zip(&after).map(|(b, a)| (a - b).abs()).fold(0.0, f64::max));
    }
    assert!(diffs[1] < 5e-5 && diffs[0] / diffs[1] > 3.5, "{diffs:?}");
}

fn shear(grid: SphereGrid, c: f64, d: f64) -> SymTensor2Field {
    SymTensor2Field::from_fn(grid, |t, p| {
        let s = t.sin();
        let a = c * (1.0 + 0.3 * t.cos());
        [a, d * s * p.cos(), -a * s * s]
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn constructed_gauge_invariants(
        tr0 in 0.5f64..3.0,
        tilt in -0.4f64..0.4,
        g0 in 0.0f64..0.1,
        v0 in 0.05f64..0.95,
    ) {
        let grid = SphereGrid::axisymmetric(6).unwrap();
        let l = LambdaGrid::new(0.0, 0.01, 101).unwrap();
        let bg = build_analytic(
            &AnalyticBackground::ShearFreeCustom {
                r0: 1.0,
                tr_chib0: Profile::Samples(grid.coordinates().map(|(t, _)| tr0 * (1.0 + tilt * t.cos())).collect()),
                g_kk: Profile::Constant(g0),
            },
            grid,
            l,
        ).unwrap();
        prop_assume!(bg.slices().iter().all(|s| s.tr_chib.min() > 0.0));
        let g = construct_gauge(&bg, &ScalarField::constant(grid, v0)).unwrap();
        for k in 0..l.count {
            let v = &g.v.as_ref().unwrap()[k];
            prop_assert!(v.min() > 0.0 && v.max() < 1.0);
            prop_assert!(g.a[k].min() >= 1.0);
            if k > 0 {
                for n in 0..grid.len() {
                    prop_assert!(g.s_of_lambda[k].values()[n] > g.s_of_lambda[k - 1].values()[n]);
                }
            }
        }
        // shear-free with G ≥ 0 satisfies the energy condition
        let report = check_gauge_condition(&bg, &g, DEFAULT_TOL).unwrap();
        prop_assert!(report.pass, "min slack {}", report.min_slack);
    }

    #[test]
    fn energy_condition_implies_gauge_condition(
        c in -0.03f64..0.03,
        d in -0.03f64..0.03,
        g0 in 0.0f64..0.3,
        alpha in 0.0f64..0.01,
        v0 in 0.1f64..0.9,
    ) {
        let grid = SphereGrid::full(6, 8).unwrap();
        let l = LambdaGrid::new(0.0, 0.01, 101).unwrap();
        let initial = InitialSlice {
            gamma: MetricField::unit_sphere(grid),
            tr_chib: ScalarField::constant(grid, 2.0),
            chib_hat: shear(grid, c, d),
        };
        // G(k,k) large enough to dominate the small shear
        let sources = Sources {
            kappa: vec![ScalarField::zeros(grid); l.count],
            g_ll: vec![ScalarField::constant(grid, 0.1 + g0); l.count],
            alphab_hat: l.values().map(|x| traceless_of_norm(grid, (1.0 + x).powi(2), alpha)).collect(),
        };
        let bg = raychaudhuri_propagate(&initial, &sources, l).unwrap();
        let energy = check_energy_condition(&bg).unwrap();
        prop_assume!(energy_condition_holds(&bg, &energy, 0.0));
        let g = construct_gauge(&bg, &ScalarField::constant(grid, v0)).unwrap();
        let report = check_gauge_condition(&bg, &g, DEFAULT_TOL).unwrap();
        prop_assert!(report.pass, "min slack {} (tolerance {})", report.min_slack, report.tolerance);
    }
}

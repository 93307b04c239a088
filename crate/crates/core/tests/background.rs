use nullflow::background::{
    background_from_reader, background_to_text, build_analytic, raychaudhuri_propagate, read_background,
    write_background, AnalyticBackground, InitialSlice, LambdaGrid, Profile, Sources,
};
use nullflow::calculus::{integrate, tensor_norm};
use nullflow::{Error, MetricField, ScalarField, SphereGrid, SymTensor2Field};
use proptest::prelude::*;

fn schwarzschild_r0_1(grid: SphereGrid) -> nullflow::BackgroundFoliation {
    build_analytic(
        &AnalyticBackground::SchwarzschildCone { mass: 1.0, r0: 1.0 },
        grid,
        LambdaGrid::new(0.0, 0.01, 301).unwrap(),
    )
    .unwrap()
}

#[test]
fn sampling_examples() {
    let grid = SphereGrid::axisymmetric(8).unwrap();
    let bg = schwarzschild_r0_1(grid);
    let s = bg.sample_at(&ScalarField::constant(grid, 1.5)).unwrap();
    for v in s.tr_chi.as_ref().unwrap().values() {
        assert!((v - 0.16).abs() < 1e-10, "{v}");
    }
    // on-grid level: exact slice values
    let on = bg.sample_at(&ScalarField::constant(grid, 2.0)).unwrap();
    assert_eq!(on.tr_chi, bg.slice(200).tr_chi);
    assert_eq!(on.gamma, bg.slice(200).gamma);
    assert!((on.tr_chi.as_ref().unwrap().values()[0] - 2.0 / 9.0).abs() < 1e-15);

    let mut w = ScalarField::constant(grid, 1.0);
    w.values_mut()[3] = -0.01;
    match bg.sample_at(&w) {
        Err(Error::ExitedDomain { nodes }) => assert_eq!(nodes, vec![3]),
        other => panic!("expected ExitedDomain, got {other:?}"),
    }
}

fn vacuum_sources(grid: SphereGrid, count: usize, g: f64) -> Sources {
    Sources {
        kappa: vec![ScalarField::zeros(grid); count],
        g_ll: vec![ScalarField::constant(grid, g); count],
        alphab_hat: vec![SymTensor2Field::zeros(grid); count],
    }
}

fn round_initial(grid: SphereGrid, tr: f64) -> InitialSlice {
    InitialSlice {
        gamma: MetricField::unit_sphere(grid),
        tr_chib: ScalarField::constant(grid, tr),
        chib_hat: SymTensor2Field::zeros(grid),
    }
}

#[test]
fn riccati_closed_form_and_zero_shear() {
    let grid = SphereGrid::full(6, 8).unwrap();
    let l = LambdaGrid::new(0.0, 0.01, 301).unwrap();
    let bg = raychaudhuri_propagate(&round_initial(grid, 2.0), &vacuum_sources(grid, l.count, 0.0), l).unwrap();
    for v in bg.slice(100).tr_chib.values() {
        assert!((v - 1.0).abs() < 1e-10);
    }
    assert!(bg.slices().iter().all(|s| s.chib_hat.max_abs_component() == 0.0));
    // γ = r² round with r = 1 + λ
    let g = bg.slice(300).gamma.g_at(grid.index(2, 3));
    let th = grid.theta(2);
    assert!((g[0] / 16.0 - 1.0).abs() < 1e-8 && (g[2] / (16.0 * th.sin().powi(2)) - 1.0).abs() < 1e-8);
}

#[test]
fn positive_energy_focuses_faster_than_vacuum() {
    let grid = SphereGrid::axisymmetric(4).unwrap();
    let l = LambdaGrid::new(0.0, 0.01, 201).unwrap();
    let g0 = 0.3;
    let vac = raychaudhuri_propagate(&round_initial(grid, 2.0), &vacuum_sources(grid, l.count, 0.0), l).unwrap();
    let mat = raychaudhuri_propagate(&round_initial(grid, 2.0), &vacuum_sources(grid, l.count, g0), l).unwrap();
    // y' = −y²/2 − g₀ has y = c tan(arctan(y₀/c) − cλ/2), c = √(2g₀)
    let c = (2.0 * g0).sqrt();
    for k in 1..l.count {
        let exact = c * ((2.0 / c).atan() - 0.5 * c * l.value(k)).tan();
        let m = mat.slice(k).tr_chib.values()[0];
        assert!((m - exact).abs() < 1e-8, "lambda {}: {m} vs {exact}", l.value(k));
        assert!(m < vac.slice(k).tr_chib.values()[0]);
    }
}

#[test]
fn focal_point_is_reported_with_last_valid_level() {
    let grid = SphereGrid::axisymmetric(4).unwrap();
    let l = LambdaGrid::new(0.0, 0.01, 301).unwrap();
    // tr χ̲₀ = −2: 1/tr χ̲ reaches 0 at λ = 1
    match raychaudhuri_propagate(&round_initial(grid, -2.0), &vacuum_sources(grid, l.count, 0.0), l) {
        Err(Error::FocalPointReached { lambda, last_valid }) => {
            assert!(lambda <= 1.0 + 1e-9 && lambda > 0.9, "{lambda}");
            assert!(last_valid < lambda);
        }
        other => panic!("expected a focal point, got {other:?}"),
    }
}

#[test]
fn tabulated_background_round_trips_through_a_file() {
    let grid = SphereGrid::full(4, 6).unwrap();
    let bg = build_analytic(
        &AnalyticBackground::SchwarzschildCone { mass: 1.0, r0: 0.0 },
        grid,
        LambdaGrid::spanning(1.0, 2.0, 0.25).unwrap(),
    )
    .unwrap();
    let dir = std::env::temp_dir().join(format!("nullflow-bg-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("bg.txt");
    write_background(&bg, &path).unwrap();
    let back = read_background(&path).unwrap();
    assert_eq!(back.slices(), bg.slices());
    assert_eq!(back.lambda(), bg.lambda());
    assert_eq!(back.is_affine(), bg.is_affine());
    let text = background_to_text(&bg).replacen("nullflow-background", "something-else", 1);
    assert!(matches!(background_from_reader(text.as_bytes()), Err(Error::Parse(_))));
    std::fs::remove_dir_all(dir).ok();
}

/// Traceless with respect to r²·(round metric).
fn shear(grid: SphereGrid, r: f64, c: f64, d: f64) -> SymTensor2Field {
    SymTensor2Field::from_fn(grid, |t, p| {
        let s = t.sin();
        let a = c * (1.0 + 0.3 * t.cos());
        [a * r * r, d * s * p.cos() * r * r, -a * s * s * r * r]
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    // With y = tr χ̲ ≥ 0.7 initially and G + |χ̲̂|² ≤ 0.2 on λ ∈ [0, 1],
    // comparison with y' = −y²/2 − 0.2 keeps y ≥ 0.36, so the data stay a
    // Null Cone over the computed range.
    #[test]
    fn null_cone_lemma_properties(
        r0 in 0.5f64..2.0,
        tilt in -0.3f64..0.3,
        g_levels in prop::collection::vec(0.0f64..0.04, 4),
        c in -0.2f64..0.2,
        d in -0.2f64..0.2,
    ) {
        let grid = SphereGrid::full(6, 8).unwrap();
        let l = LambdaGrid::new(0.0, 0.01, 101).unwrap();
        // smooth, non-negative G(k,k) along the generator
        let g_of = |x: f64| g_levels[0] + g_levels[1] * x + g_levels[2] * x * x + g_levels[3] * (3.0 * x).sin().powi(2);
        let initial = InitialSlice {
            gamma: MetricField::new(SymTensor2Field::round(grid, |_, _| r0)).unwrap(),
            tr_chib: ScalarField::from_fn(grid, |t, _| (2.0 / r0) * (1.0 + tilt * t.cos())),
            chib_hat: shear(grid, r0, 0.05 * c / r0, 0.05 * d / r0),
        };
        let sources = Sources {
            kappa: vec![ScalarField::zeros(grid); l.count],
            g_ll: l.values().map(|x| ScalarField::constant(grid, g_of(x))).collect(),
            alphab_hat: vec![SymTensor2Field::zeros(grid); l.count],
        };
        let bg = raychaudhuri_propagate(&initial, &sources, l).unwrap();
        let mut area_prev = f64::NEG_INFINITY;
        for k in 0..l.count {
            let s = bg.slice(k);
            prop_assert!(s.tr_chib.min() > 0.0);
            let area = integrate(&s.gamma, &ScalarField::constant(grid, 1.0)).unwrap();
            prop_assert!(area >= area_prev);
            area_prev = area;
            let hat = tensor_norm(&s.gamma, &s.chib_hat).unwrap();
            prop_assert!(hat.values().iter().all(|v| v.is_finite()));
            if k + 1 < l.count {
                let next = &bg.slice(k + 1).tr_chib;
                for (a, b) in s.tr_chib.values().iter().zip(next.values()) {
                    prop_assert!((1.0 / b - 1.0 / a) / l.step >= 0.5 - 1e-6);
                }
            }
        }
    }

    #[test]
    fn slope_bound_holds_while_expanding(g0 in 0.0f64..2.0, tr0 in 0.2f64..3.0) {
        let grid = SphereGrid::axisymmetric(4).unwrap();
        let l = LambdaGrid::new(0.0, 0.01, 151).unwrap();
        let initial = InitialSlice {
            gamma: MetricField::unit_sphere(grid),
            tr_chib: ScalarField::constant(grid, tr0),
            chib_hat: shear(grid, 1.0, 0.05, 0.0),
        };
        let Ok(bg) = raychaudhuri_propagate(&initial, &vacuum_sources(grid, l.count, g0), l) else {
            return Ok(());
        };
        for k in 0..l.count - 1 {
            let (a, b) = (bg.slice(k).tr_chib.values()[0], bg.slice(k + 1).tr_chib.values()[0]);
            if a > 0.0 && b > 0.0 {
                prop_assert!((1.0 / b - 1.0 / a) / l.step >= 0.5 - 1e-6);
            }
        }
    }

    #[test]
    fn shear_free_custom_background_matches_riccati(tr0 in 0.5f64..3.0) {
        let grid = SphereGrid::axisymmetric(4).unwrap();
        let l = LambdaGrid::new(0.0, 0.01, 101).unwrap();
        let bg = build_analytic(
            &AnalyticBackground::ShearFreeCustom { r0: 1.0, tr_chib0: Profile::Constant(tr0), g_kk: Profile::Constant(0.0) },
            grid,
            l,
        ).unwrap();
        for k in 0..l.count {
            let exact = tr0 / (1.0 + 0.5 * tr0 * l.value(k));
            prop_assert!((bg.slice(k).tr_chib.values()[0] - exact).abs() < 1e-9);
        }
    }
}

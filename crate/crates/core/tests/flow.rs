use std::f64::consts::FRAC_PI_2;

use nullflow::calculus::grad_norm_sq;
use nullflow::flow::{
    chi_graph, expansion_of, graph_expansion, null_partner_coefficients, run_to_mots, Flow, FlowConfig,
    FlowStatus,
};
use nullflow::scenarios::{schwarzschild_cone, tilted_initial_surface, uniform_ode_solution};
use nullflow::{Error, FieldSnapshot, ScalarField, SphereGrid};
use proptest::prelude::*;

/// ½ tr χ_ω on the Minkowski cone for ω = 2 + 0.1 cos θ, by hand:
/// Δω = −0.2 cos θ / ω², |∇ω|² = 0.01 sin²θ / ω², tr χ = tr χ̲ = 2/ω.
fn minkowski_oracle(theta: f64) -> f64 {
    let w = 2.0 + 0.1 * theta.cos();
    0.2 * theta.cos() / (w * w) + 1.0 / w + 0.01 * theta.sin().powi(2) / (w * w * w)
}

#[test]
fn minkowski_tilted_graph_expansion() {
    assert!((minkowski_oracle(FRAC_PI_2) - 0.50125).abs() < 1e-15);
    let mut errs = Vec::new();
    for n in [64, 128] {
        let grid = SphereGrid::axisymmetric(n).unwrap();
        let bg = schwarzschild_cone(grid, 0.0).unwrap();
        let w = ScalarField::from_fn(grid, |t, _| 2.0 + 0.1 * t.cos());
        let e = graph_expansion(&bg, &w).unwrap();
        let err = (0..grid.len())
            .map(|i| (e.values()[i] - minkowski_oracle(grid.theta(i))).abs())
            .fold(0.0, f64::max);
        errs.push(err);
    }
    assert!(errs[1] < 1e-4 && errs[0] / errs[1] > 3.5, "{errs:?}");
}

#[test]
fn constant_graphs_see_the_background_slice() {
    let grid = SphereGrid::full(8, 12).unwrap();
    let bg = schwarzschild_cone(grid, 1.0).unwrap();
    let k = 400; // λ = 3
    let w = ScalarField::constant(grid, bg.lambda().value(k));
    let s = bg.sample_at(&w).unwrap();
    let e = expansion_of(&s, &w).unwrap();
    let half = bg.slice(k).tr_chi.as_ref().unwrap().map(|v| 0.5 * v);
    assert_eq!(e, half);
    assert_eq!(chi_graph(&s, &w).unwrap(), bg.slice(k).chi().unwrap());
    let p = null_partner_coefficients(&s, &w).unwrap();
    assert!(p.c_l.values().iter().all(|v| *v == 1.0));
    assert_eq!(p.c_lbar.max_abs(), 0.0);
    assert!(p.tangential.theta.iter().chain(&p.tangential.phi).all(|v| *v == 0.0));

    // the horizon r = 2m is a MOTS
    let horizon = graph_expansion(&bg, &ScalarField::constant(grid, 2.0)).unwrap();
    assert!(horizon.max_abs() < 1e-15);
}

#[test]
fn gradient_energy_at_the_equator() {
    let grid = SphereGrid::axisymmetric(256).unwrap();
    let bg = schwarzschild_cone(grid, 1.0).unwrap();
    let w = tilted_initial_surface(grid);
    let s = bg.sample_at(&w).unwrap();
    let u = grad_norm_sq(&s.gamma, &w).unwrap().map(|v| 0.5 * v);
    let i = grid.n_theta() / 2;
    let th = grid.theta(i);
    let exact = 0.5 * (0.3 * th.sin()).powi(2) / (3.0 + 0.3 * th.cos()).powi(2);
    assert!((u.values()[i] - exact).abs() < 1e-6);
    assert!((u.values()[i] - 0.005).abs() < 1e-4);

    let flat = Flow::new(&bg, ScalarField::constant(grid, 3.0), FlowConfig::default()).unwrap();
    assert_eq!(flat.initial_state().unwrap().monitors.u_max, 0.0);
}

#[test]
fn trapped_start_is_rejected_with_its_nodes() {
    let grid = SphereGrid::axisymmetric(16).unwrap();
    let bg = schwarzschild_cone(grid, 1.0).unwrap();
    // inside the horizon on the southern hemisphere only
    let w = ScalarField::from_fn(grid, |t, _| 2.0 + 0.5 * t.cos());
    match run_to_mots(&w, &bg, &FlowConfig::default()) {
        Err(Error::Precondition { nodes, .. }) => {
            assert!(!nodes.is_empty() && nodes.len() < grid.len());
            assert!(nodes.iter().all(|&n| grid.theta(n) > FRAC_PI_2));
        }
        other => panic!("expected a precondition error, got {:?}", other.map(|o| o.status)),
    }
}

#[test]
fn uniform_surface_follows_the_scalar_ode() {
    let grid = SphereGrid::axisymmetric(8).unwrap();
    let bg = schwarzschild_cone(grid, 1.0).unwrap();
    let cfg = FlowConfig {
        max_time: 5.0,
        output_interval: 0.25,
        eps_mots: 1e-14,
        ..FlowConfig::default()
    };
    let out = run_to_mots(&ScalarField::constant(grid, 3.0), &bg, &cfg).unwrap();
    assert_eq!(out.status, FlowStatus::MaxTimeReached { stalled: false });
    assert_eq!(out.history.rows.len(), 21);
    for row in &out.history.rows {
        let exact = uniform_ode_solution(3.0, row.t);
        assert!((row.min_omega - exact).abs() < 1e-8 * row.t.max(1.0), "t = {}", row.t);
        assert_eq!(row.min_omega, row.max_omega);
    }
}

#[test]
fn uniform_decay_rate_is_one_quarter() {
    let grid = SphereGrid::axisymmetric(4).unwrap();
    let bg = schwarzschild_cone(grid, 1.0).unwrap();
    let cfg = FlowConfig {
        max_time: 40.0,
        output_interval: 5.0,
        eps_mots: 1e-14,
        ..FlowConfig::default()
    };
    let out = run_to_mots(&ScalarField::constant(grid, 3.0), &bg, &cfg).unwrap();
    let at = |t: f64| out.history.rows.iter().find(|r| (r.t - t).abs() < 1e-9).unwrap().min_omega - 2.0;
    let rate = (at(30.0) / at(40.0)).ln() / 10.0;
    assert!((rate - 0.25).abs() < 2e-3, "{rate}");
}

#[test]
fn metric_residual_shrinks_with_the_time_step() {
    let grid = SphereGrid::axisymmetric(16).unwrap();
    let bg = schwarzschild_cone(grid, 1.0).unwrap();
    let res: Vec<f64> = [0.2, 0.1, 0.05]
        .iter()
        .map(|&cfl| {
            let cfg = FlowConfig {
                cfl,
                max_time: 0.5,
                ..FlowConfig::default()
            };
            let out = run_to_mots(&ScalarField::constant(grid, 3.0), &bg, &cfg).unwrap();
            out.extremes.max_metric_residual
        })
        .collect();
    for w in res.windows(2) {
        let ratio = w[0] / w[1];
        assert!((1.8..2.2).contains(&ratio), "{res:?}");
    }
}

#[test]
fn resumed_run_matches_an_uninterrupted_one() {
    let grid = SphereGrid::axisymmetric(16).unwrap();
    let bg = schwarzschild_cone(grid, 1.0).unwrap();
    let cfg = FlowConfig {
        max_time: 2.0,
        ..FlowConfig::default()
    };
    let flow = Flow::new(&bg, tilted_initial_surface(grid), cfg).unwrap();
    let straight = flow.run().unwrap();

    let half = flow.run_from(flow.initial_state().unwrap(), 1.0).unwrap();
    let text = flow.snapshot(&half.state).unwrap().to_text();
    let snap = FieldSnapshot::read_from(text.as_bytes()).unwrap();
    let resumed = flow.resume(&snap).unwrap();
    assert_eq!(resumed.omega, half.state.omega);
    assert_eq!(resumed.t, half.state.t);
    let rest = flow.run_from(resumed, 2.0).unwrap();
    assert!((rest.state.t - straight.state.t).abs() < 1e-12);
    assert!(rest.state.omega.max_abs_diff(&straight.state.omega).unwrap() < 1e-12);

    let other = Flow::new(&bg, ScalarField::constant(grid, 3.0), FlowConfig::default()).unwrap();
    assert!(matches!(other.resume(&snap), Err(Error::Parameter(_))));
}

#[test]
fn full_grid_reproduces_the_axisymmetric_run() {
    let cfg = FlowConfig {
        max_time: 0.5,
        ..FlowConfig::default()
    };
    let mut diffs = Vec::new();
    for n in [16, 32] {
        let axis = SphereGrid::axisymmetric(n).unwrap();
        let full = SphereGrid::full(n, 8).unwrap();
        let a = run_to_mots(&tilted_initial_surface(axis), &schwarzschild_cone(axis, 1.0).unwrap(), &cfg).unwrap();
        let f = run_to_mots(&tilted_initial_surface(full), &schwarzschild_cone(full, 1.0).unwrap(), &cfg).unwrap();
        let mut d: f64 = 0.0;
        for i in 0..n {
            for j in 0..8 {
                d = d.max((f.state.omega.values()[full.index(i, j)] - a.state.omega.values()[i]).abs());
            }
        }
        diffs.push(d);
    }
    // both discretize the same axisymmetric problem; only the time steps differ
    assert!(diffs.iter().all(|d| *d < 1e-8), "{diffs:?}");
}

#[test]
fn minkowski_cone_has_no_mots() {
    let grid = SphereGrid::axisymmetric(16).unwrap();
    let bg = schwarzschild_cone(grid, 0.0).unwrap();
    let out = run_to_mots(&ScalarField::constant(grid, 2.0), &bg, &FlowConfig::default()).unwrap();
    assert!(matches!(out.status, FlowStatus::ExitedDomain { .. }), "{:?}", out.status);
    assert!(out.extremes.min_tr_chi > 0.0);
    assert!(out.extremes.max_increment < 0.0);
}

#[test]
fn bad_configuration_is_rejected() {
    let grid = SphereGrid::axisymmetric(8).unwrap();
    let bg = schwarzschild_cone(grid, 1.0).unwrap();
    for cfg in [
        FlowConfig { cfl: 0.0, ..FlowConfig::default() },
        FlowConfig { eps_mots: -1.0, ..FlowConfig::default() },
        FlowConfig { stall_window: 0, ..FlowConfig::default() },
        FlowConfig { leaf_fine_interval: Some(0.1), ..FlowConfig::default() },
    ] {
        assert!(matches!(Flow::new(&bg, ScalarField::constant(grid, 3.0), cfg), Err(Error::Parameter(_))));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    // one step from an outer un-trapped graph lowers ω at every node and
    // keeps the expansion positive
    #[test]
    fn one_step_is_monotone_and_keeps_positivity(
        c in prop::array::uniform4(-0.15f64..0.15),
        base in 2.6f64..3.6,
    ) {
        let grid = SphereGrid::full(12, 8).unwrap();
        let bg = schwarzschild_cone(grid, 1.0).unwrap();
        let w = ScalarField::from_fn(grid, |t, p| {
            base + c[0] * t.cos() + c[1] * (3.0 * t.cos().powi(2) - 1.0)
                + c[2] * t.sin().powi(2) * (2.0 * p).cos() + c[3] * t.sin() * p.sin()
        });
        let flow = Flow::new(&bg, w.clone(), FlowConfig::default()).unwrap();
        let Ok(s0) = flow.initial_state() else { return Ok(()) };
        let s1 = flow.step(&s0, 1.0).unwrap();
        prop_assert!(s1.t > 0.0);
        for (a, b) in s1.omega.values().iter().zip(w.values()) {
            prop_assert!(a < b);
        }
        prop_assert!(s1.monitors.min_tr_chi > -1e-10);
        prop_assert!(s1.monitors.is_green(), "{:?}", s1.monitors.warnings);
    }
}

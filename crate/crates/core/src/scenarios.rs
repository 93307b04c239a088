//! Reference scenarios with pass/fail checks, shared by the command line
//! `reproduce` subcommand and the demos.

use std::f64::consts::E;
use std::time::Instant;

use crate::background::{build_analytic, AnalyticBackground, LambdaGrid};
use crate::background::{raychaudhuri_propagate, BackgroundFoliation, InitialSlice, Sources};
use crate::calculus::{laplace_beltrami, trace};
use crate::error::{Error, Result};
use crate::field::{MetricField, ScalarField, SymTensor2Field};
use crate::flow::{chi_graph, expansion_of, run_to_mots, FlowConfig, FlowOutcome, FlowStatus};
use crate::foliation::{mollify_glue, outermost_violations, verify_foliation, GlueChart, GlueParams};
use crate::gauge::{check_gauge_condition, construct_gauge, GaugeProfile, DEFAULT_TOL};
use crate::grid::SphereGrid;

pub const SCENARIOS: [&str; 8] = [
    "schwarzschild-mots",
    "uniform-ode",
    "raychaudhuri",
    "gauge",
    "laplacian",
    "minkowski",
    "two-path",
    "all",
];

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

fn check(name: &str, pass: bool, detail: String) -> Check {
    Check {
        name: name.to_string(),
        pass,
        detail,
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ScenarioReport {
    pub checks: Vec<Check>,
    /// (file name, contents) of text artifacts worth keeping.
    pub artifacts: Vec<(String, String)>,
}

impl ScenarioReport {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    fn extend(&mut self, other: ScenarioReport) {
        self.checks.extend(other.checks);
        self.artifacts.extend(other.artifacts);
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScenarioOptions {
    /// Repeat the MOTS run at twice the resolution to measure refinement.
    pub refine: bool,
    pub n_theta: usize,
}

impl Default for ScenarioOptions {
    fn default() -> Self {
        Self {
            refine: true,
            n_theta: 128,
        }
    }
}

/// Schwarzschild (m = 1) cone with λ = r on [1, 4].
pub fn schwarzschild_cone(grid: SphereGrid, mass: f64) -> Result<BackgroundFoliation> {
    build_analytic(
        &AnalyticBackground::SchwarzschildCone { mass, r0: 0.0 },
        grid,
        LambdaGrid::spanning(1.0, 4.0, 5e-3)?,
    )
}

/// ω₀ = 3 + 0.3 cos θ.
pub fn tilted_initial_surface(grid: SphereGrid) -> ScalarField {
    ScalarField::from_fn(grid, |t, _| 3.0 + 0.3 * t.cos())
}

/// Flow settings for the MOTS run, storing leaves for gluing.
pub fn mots_config() -> FlowConfig {
    FlowConfig {
        max_time: 200.0,
        leaf_interval: Some(0.0125),
        leaf_fine_interval: Some(1.0 / 1024.0),
        leaf_fine_until: 0.5,
        ..FlowConfig::default()
    }
}

fn sup_distance(f: &ScalarField, c: f64) -> f64 {
    f.values().iter().map(|v| (v - c).abs()).fold(0.0, f64::max)
}

pub fn run(name: &str, opts: ScenarioOptions) -> Result<ScenarioReport> {
    match name {
        "schwarzschild-mots" => schwarzschild_mots(opts),
        "uniform-ode" => uniform_ode(),
        "raychaudhuri" => raychaudhuri_closed_form(),
        "gauge" => gauge_closed_form(),
        "laplacian" => laplacian_convergence(),
        "minkowski" => minkowski_control(),
        "two-path" => two_path(),
        "all" => {
            let mut all = ScenarioReport::default();
            for s in SCENARIOS.iter().filter(|s| **s != "all") {
                all.extend(run(s, opts)?);
            }
            Ok(all)
        }
        other => Err(Error::Parameter(format!(
            "unknown scenario '{other}' (expected one of {})",
            SCENARIOS.join(", ")
        ))),
    }
}

fn mots_run(n: usize) -> Result<(BackgroundFoliation, FlowOutcome, f64)> {
    let grid = SphereGrid::axisymmetric(n)?;
    let bg = schwarzschild_cone(grid, 1.0)?;
    let start = Instant::now();
    let out = run_to_mots(&tilted_initial_surface(grid), &bg, &mots_config())?;
    Ok((bg, out, start.elapsed().as_secs_f64()))
}

/// MOTS location, monitors and gluing on Schwarzschild.
pub fn schwarzschild_mots(opts: ScenarioOptions) -> Result<ScenarioReport> {
    let mut r = ScenarioReport::default();
    let (bg, out, secs) = mots_run(opts.n_theta)?;
    let err = sup_distance(&out.omega_infinity, 2.0);
    r.checks.push(check(
        "mots.converged",
        out.status == FlowStatus::Converged,
        format!("status {} at t = {:.4} after {} steps", out.status.name(), out.state.t, out.state.step),
    ));
    r.checks.push(check(
        "mots.location",
        err < 5e-3,
        format!("sup |omega_inf - 2| = {err:.3e} (raw omega: {:.3e})", sup_distance(&out.state.omega, 2.0)),
    ));
    r.checks.push(check("mots.runtime", secs < 60.0, format!("{secs:.1} s")));
    if opts.refine {
        let (_, fine, _) = mots_run(2 * opts.n_theta)?;
        let err2 = sup_distance(&fine.omega_infinity, 2.0);
        let ratio = err / err2;
        r.checks.push(check(
            "mots.refinement",
            ratio >= 3.5,
            format!("error {err:.3e} -> {err2:.3e} at n_theta {}: ratio {ratio:.3}", 2 * opts.n_theta),
        ));
    }

    let x = &out.extremes;
    r.checks.push(check(
        "monitor.positivity",
        x.min_tr_chi > -1e-10,
        format!("min tr chi = {:.3e}", x.min_tr_chi),
    ));
    r.checks.push(check(
        "monitor.decreasing",
        x.max_increment < 0.0,
        format!("largest nodal increment = {:.3e}", x.max_increment),
    ));
    let growth = x.gradient_growth(0.1);
    r.checks.push(check(
        "monitor.gradient",
        growth <= 2.0,
        format!("sup u_max / early max = {growth:.4}"),
    ));
    r.checks.push(check(
        "monitor.confinement",
        x.min_c0_low >= 0.0 && x.min_c0_high >= 0.0,
        format!("margins {:.3e} (lower), {:.3e} (upper)", x.min_c0_low, x.min_c0_high),
    ));
    r.artifacts.push(("history.tsv".into(), out.history.to_tsv()));

    let params = GlueParams {
        lambda_j: 3.0,
        delta: 0.2,
        eps: 0.05,
    };
    let atlas = mollify_glue(&out.history.leaves, &bg, params)?;
    let verdict = verify_foliation(&atlas, &bg)?;
    r.checks.push(check(
        "glue.verified",
        verdict.is_verified(),
        match &verdict {
            crate::foliation::Verdict::Verified => format!("{} leaves verified", atlas.leaves.len()),
            crate::foliation::Verdict::Failed(w) => format!("{} witnesses", w.len()),
        },
    ));
    let outer = outermost_violations(&atlas, FlowConfig::default().eps_mots);
    r.checks.push(check(
        "glue.outermost",
        outer.is_empty(),
        format!("{} leaves besides sigma = 0 with max tr chi <= eps", outer.len()),
    ));
    let chart = GlueChart::new(&out.history.leaves, params.lambda_j, params.eps)?;
    let norm = chart.mollifier().normalization_error();
    r.checks.push(check("glue.normalization", norm < 1e-10, format!("|int eta - 1| = {norm:.2e}")));
    let levels: Vec<f64> = (0..=80).map(|k| params.lambda_j - params.delta + 0.005 * k as f64).collect();
    let mut errs = Vec::new();
    for k in 0..5 {
        let c = GlueChart::new(&out.history.leaves, params.lambda_j, params.eps / f64::powi(2.0, k))?;
        errs.push(c.sup_mollification_error(&levels));
    }
    let ratios: Vec<f64> = errs.windows(2).map(|w| w[1] / w[0]).collect();
    r.checks.push(check(
        "glue.uniform-convergence",
        ratios.iter().all(|q| *q <= 0.75),
        format!("ratios {:?}", ratios.iter().map(|q| format!("{q:.4}")).collect::<Vec<_>>()),
    ));
    r.artifacts.push(("atlas.tsv".into(), atlas.summary_tsv()));
    Ok(r)
}

/// Solution of dω/dt = −(1/ω)(1 − 2/ω) by classical RK4 with a fine step.
pub fn uniform_ode_solution(w0: f64, t: f64) -> f64 {
    let f = |w: f64| -(1.0 / w) * (1.0 - 2.0 / w);
    let steps = (t / 1e-4).ceil().max(1.0) as usize;
    let h = t / steps as f64;
    let mut w = w0;
    for _ in 0..steps {
        let k1 = f(w);
        let k2 = f(w + 0.5 * h * k1);
        let k3 = f(w + 0.5 * h * k2);
        let k4 = f(w + h * k3);
        w += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    w
}

pub fn uniform_ode() -> Result<ScenarioReport> {
    let grid = SphereGrid::axisymmetric(32)?;
    let bg = schwarzschild_cone(grid, 1.0)?;
    let cfg = FlowConfig {
        max_time: 30.0,
        eps_mots: 1e-14,
        ..FlowConfig::default()
    };
    let out = run_to_mots(&ScalarField::constant(grid, 3.0), &bg, &cfg)?;
    let mut sup: f64 = 0.0;
    for row in &out.history.rows {
        let w = uniform_ode_solution(3.0, row.t);
        sup = sup.max((row.min_omega - w).abs()).max((row.max_omega - w).abs());
    }
    let end = out.state.t;
    let dist = sup_distance(&out.state.omega, 2.0);
    let mut r = ScenarioReport::default();
    r.checks.push(check(
        "uniform.trajectory",
        sup < 1e-8 && (end - 30.0).abs() < 1e-9,
        format!("sup error {sup:.3e} over {} frames up to t = {end}", out.history.rows.len()),
    ));
    r.checks.push(check("uniform.endpoint", dist < 2e-3, format!("|omega(30) - 2| = {dist:.4e}")));
    r.artifacts.push(("uniform_history.tsv".into(), out.history.to_tsv()));
    Ok(r)
}

pub fn raychaudhuri_closed_form() -> Result<ScenarioReport> {
    let grid = SphereGrid::axisymmetric(8)?;
    let l = LambdaGrid::new(0.0, 1e-2, 301)?;
    let initial = InitialSlice {
        gamma: MetricField::unit_sphere(grid),
        tr_chib: ScalarField::constant(grid, 2.0),
        chib_hat: SymTensor2Field::zeros(grid),
    };
    let sources = Sources {
        kappa: vec![ScalarField::zeros(grid); l.count],
        g_ll: vec![ScalarField::zeros(grid); l.count],
        alphab_hat: vec![SymTensor2Field::zeros(grid); l.count],
    };
    let bg = raychaudhuri_propagate(&initial, &sources, l)?;
    let mut err: f64 = 0.0;
    let mut slope = f64::INFINITY;
    for k in 0..l.count {
        let exact = 2.0 / (1.0 + l.value(k));
        err = err.max(sup_distance(&bg.slice(k).tr_chib, exact));
        if k + 1 < l.count {
            for n in 0..grid.len() {
                let a = bg.slice(k).tr_chib.values()[n];
                let b = bg.slice(k + 1).tr_chib.values()[n];
                slope = slope.min((1.0 / b - 1.0 / a) / l.step);
            }
        }
    }
    Ok(ScenarioReport {
        checks: vec![
            check("raychaudhuri.closed-form", err < 1e-8, format!("max |tr chib - 2/(1+lambda)| = {err:.3e}")),
            check("raychaudhuri.slope", slope >= 0.5 - 1e-6, format!("min d(1/tr chib)/dlambda = {slope:.10}")),
        ],
        artifacts: Vec::new(),
    })
}

pub fn gauge_closed_form() -> Result<ScenarioReport> {
    let grid = SphereGrid::axisymmetric(8)?;
    let l = LambdaGrid::spanning(0.0, E - 1.0, 1e-3)?;
    let bg = build_analytic(&AnalyticBackground::SchwarzschildCone { mass: 1.0, r0: 1.0 }, grid, l)?;
    let gauge = construct_gauge(&bg, &ScalarField::constant(grid, 0.5))?;
    let mut rel: f64 = 0.0;
    let mut curve = String::from("lambda\ta\ta_exact\tkappa\n");
    for k in 0..l.count {
        let r = 1.0 + l.value(k);
        let exact = r * (1.0 + r.ln());
        for &a in gauge.a[k].values() {
            rel = rel.max((a - exact).abs() / exact);
        }
        curve.push_str(&format!(
            "{:e}\t{:e}\t{:e}\t{:e}\n",
            l.value(k),
            gauge.a[k].values()[0],
            exact,
            gauge.kappa[k].values()[0]
        ));
    }
    let report = check_gauge_condition(&bg, &gauge, DEFAULT_TOL)?;
    let affine = check_gauge_condition(&bg, &GaugeProfile::affine(&bg), DEFAULT_TOL)?;
    Ok(ScenarioReport {
        checks: vec![
            check("gauge.closed-form", rel < 1e-6, format!("max relative error of a = {rel:.3e}")),
            check(
                "gauge.inequality",
                report.pass && report.min_slack >= -1e-8,
                format!("min slack {:.3e} (tolerance {:.1e})", report.min_slack, report.tolerance),
            ),
            check(
                "gauge.affine-fails",
                !affine.pass,
                format!("affine gauge min slack {:.3e}", affine.min_slack),
            ),
        ],
        artifacts: vec![("gauge_curve.tsv".into(), curve)],
    })
}

/// P_l(cos θ) for l = 1..4.
pub fn legendre(l: usize, x: f64) -> f64 {
    match l {
        1 => x,
        2 => 0.5 * (3.0 * x * x - 1.0),
        3 => 0.5 * (5.0 * x * x * x - 3.0 * x),
        4 => (35.0 * x.powi(4) - 30.0 * x * x + 3.0) / 8.0,
        _ => panic!("legendre: l = {l} not tabulated"),
    }
}

/// Observed orders of the sup error of Δ Y_l⁰ + l(l+1) Y_l⁰ on the given
/// grids (each twice as fine as the previous one).
pub fn zonal_laplacian_orders(l: usize, grids: &[SphereGrid]) -> Result<Vec<f64>> {
    let mut errs = Vec::new();
    for &grid in grids {
        let f = ScalarField::from_fn(grid, |t, _| legendre(l, t.cos()));
        let lap = laplace_beltrami(&MetricField::unit_sphere(grid), &f)?;
        let ll = (l * (l + 1)) as f64;
        errs.push(lap.zip_with(&f, |a, b| a + ll * b)?.max_abs());
    }
    Ok(errs.windows(2).map(|w| (w[0] / w[1]).log2()).collect())
}

pub fn laplacian_convergence() -> Result<ScenarioReport> {
    let mut r = ScenarioReport::default();
    let axis: Vec<SphereGrid> = [32, 64, 128, 256]
        .iter()
        .map(|&n| SphereGrid::axisymmetric(n))
        .collect::<Result<_>>()?;
    let full: Vec<SphereGrid> = [16, 32, 64, 128]
        .iter()
        .map(|&n| SphereGrid::full(n, 2 * n))
        .collect::<Result<_>>()?;
    for l in 1..=4 {
        for (label, grids) in [("axisymmetric", &axis), ("full", &full)] {
            let orders = zonal_laplacian_orders(l, grids)?;
            r.checks.push(check(
                &format!("laplacian.l{l}.{label}"),
                orders.iter().all(|p| *p >= 1.9),
                format!("orders {:?}", orders.iter().map(|p| format!("{p:.3}")).collect::<Vec<_>>()),
            ));
        }
    }
    Ok(r)
}

pub fn minkowski_control() -> Result<ScenarioReport> {
    let grid = SphereGrid::axisymmetric(64)?;
    let bg = schwarzschild_cone(grid, 0.0)?;
    let out = run_to_mots(&ScalarField::constant(grid, 2.0), &bg, &FlowConfig::default())?;
    Ok(ScenarioReport {
        checks: vec![
            check(
                "minkowski.no-mots",
                matches!(out.status, FlowStatus::ExitedDomain { .. }),
                format!("status {} at t = {:.4}", out.status.name(), out.state.t),
            ),
            check(
                "minkowski.untrapped",
                out.extremes.min_tr_chi > 0.0,
                format!("min tr chi over the run = {:.4e}", out.extremes.min_tr_chi),
            ),
        ],
        artifacts: vec![("minkowski_history.tsv".into(), out.history.to_tsv())],
    })
}

/// Graph used for the two-path comparison: zonal tilt plus an m = 2 mode.
pub fn perturbed_graph(grid: SphereGrid) -> ScalarField {
    ScalarField::from_fn(grid, |t, p| 3.0 + 0.3 * t.cos() + 0.1 * t.sin().powi(2) * (2.0 * p).cos())
}

/// sup |tr χ_graph − 2·(½ tr χ_ω)| on each grid.
pub fn two_path_differences(grids: &[SphereGrid]) -> Result<Vec<f64>> {
    grids
        .iter()
        .map(|&grid| {
            let bg = schwarzschild_cone(grid, 1.0)?;
            let w = perturbed_graph(grid);
            let s = bg.sample_at(&w)?;
            let tr = trace(&s.gamma, &chi_graph(&s, &w)?)?;
            let e = expansion_of(&s, &w)?;
            Ok(tr.zip_with(&e, |a, b| a - 2.0 * b)?.max_abs())
        })
        .collect()
}

pub fn two_path() -> Result<ScenarioReport> {
    let grids: Vec<SphereGrid> = [16, 32, 64, 128]
        .iter()
        .map(|&n| SphereGrid::full(n, 2 * n))
        .collect::<Result<_>>()?;
    let d = two_path_differences(&grids)?;
    let orders: Vec<f64> = d.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    Ok(ScenarioReport {
        checks: vec![check(
            "two-path.order",
            orders.iter().all(|p| *p >= 1.9),
            format!(
                "differences {:?}, orders {:?}",
                d.iter().map(|x| format!("{x:.3e}")).collect::<Vec<_>>(),
                orders.iter().map(|p| format!("{p:.3}")).collect::<Vec<_>>()
            ),
        )],
        artifacts: Vec::new(),
    })
}

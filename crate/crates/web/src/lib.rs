//! WebAssembly bindings for the demo page in `www/`. Every entry point runs
//! on a Schwarzschild cone and returns a [`Table`]: a flat array holding
//! row after row, `cols()` numbers per row.

use nullflow::background::{build_analytic, AnalyticBackground};
use nullflow::flow::{run_to_mots, FlowConfig};
use nullflow::foliation::GlueChart;
use nullflow::gauge::{check_gauge_condition, construct_gauge, DEFAULT_TOL};
use nullflow::scenarios::{mots_config, schwarzschild_cone};
use nullflow::{LambdaGrid, ScalarField, SphereGrid};
use wasm_bindgen::prelude::*;

/// A table of `f64`, stored row by row.
#[wasm_bindgen]
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    cols: usize,
    data: Vec<f64>,
}

#[wasm_bindgen]
impl Table {
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn rows(&self) -> usize {
        self.data.len() / self.cols
    }

    pub fn data(&self) -> Vec<f64> {
        self.data.clone()
    }
}

impl Table {
    fn new(cols: usize) -> Self {
        Self { cols, data: Vec::new() }
    }

    fn push(&mut self, row: &[f64]) {
        debug_assert_eq!(row.len(), self.cols);
        self.data.extend_from_slice(row);
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }
}

fn err(e: nullflow::Error) -> String {
    e.to_string()
}

fn axisymmetric(n_theta: usize) -> Result<SphereGrid, String> {
    if !(4..=96).contains(&n_theta) {
        return Err(format!("n_theta must lie in [4, 96], got {n_theta}"));
    }
    SphereGrid::axisymmetric(n_theta).map_err(err)
}

/// Result of [`flow_profile`].
#[wasm_bindgen]
#[derive(Debug, Clone)]
pub struct FlowDemo {
    status: String,
    /// θ, ω₀, ω_∞ per node.
    profile: Table,
    /// t, min ω, max ω, max |tr χ| per output frame.
    history: Table,
}

#[wasm_bindgen]
impl FlowDemo {
    pub fn status(&self) -> String {
        self.status.clone()
    }

    pub fn profile(&self) -> Table {
        self.profile.clone()
    }

    pub fn history(&self) -> Table {
        self.history.clone()
    }
}

/// Flows ω₀ = 3 + `p1` cos θ + `p2` P₂(cos θ) towards the horizon r = 2.
#[wasm_bindgen]
pub fn flow_profile(n_theta: usize, p1: f64, p2: f64) -> Result<FlowDemo, String> {
    let grid = axisymmetric(n_theta)?;
    let bg = schwarzschild_cone(grid, 1.0).map_err(err)?;
    let omega0 = ScalarField::from_fn(grid, |t, _| {
        let c = t.cos();
        3.0 + p1 * c + p2 * 0.5 * (3.0 * c * c - 1.0)
    });
    let cfg = FlowConfig {
        leaf_interval: None,
        leaf_fine_interval: None,
        ..mots_config()
    };
    let out = run_to_mots(&omega0, &bg, &cfg).map_err(err)?;
    let mut profile = Table::new(3);
    for n in 0..grid.len() {
        profile.push(&[grid.theta(n), omega0.values()[n], out.omega_infinity.values()[n]]);
    }
    let mut history = Table::new(4);
    for r in &out.history.rows {
        let tr = r.min_tr_chi.abs().max(r.max_tr_chi.abs());
        history.push(&[r.t, r.min_omega, r.max_omega, tr]);
    }
    Ok(FlowDemo {
        status: out.status.name().to_string(),
        profile,
        history,
    })
}

/// The constructed gauge on the cone r = 1 + λ, λ ∈ [0, 3], for a
/// constant initial value `v0`. Columns: λ, a, κ, s, min gauge slack.
#[wasm_bindgen]
pub fn gauge_curve(mass: f64, v0: f64) -> Result<Table, String> {
    let grid = SphereGrid::axisymmetric(4).map_err(err)?;
    let lambda = LambdaGrid::spanning(0.0, 3.0, 1e-2).map_err(err)?;
    let bg = build_analytic(&AnalyticBackground::SchwarzschildCone { mass, r0: 1.0 }, grid, lambda).map_err(err)?;
    let gauge = construct_gauge(&bg, &ScalarField::constant(grid, v0)).map_err(err)?;
    let report = check_gauge_condition(&bg, &gauge, DEFAULT_TOL).map_err(err)?;
    let mut t = Table::new(5);
    for k in 0..lambda.count {
        t.push(&[
            lambda.value(k),
            gauge.a[k].values()[0],
            gauge.kappa[k].values()[0],
            gauge.s_of_lambda[k].values()[0],
            report.slack[k].min(),
        ]);
    }
    Ok(t)
}

/// The flow chart v(λ) and its mollification v_ε across the junction
/// band [Λ − δ, Λ + δ] at the equator, for ω₀ = 3 + `p1` cos θ.
/// Columns: λ, v, v_ε, ∂v, ∂v_ε.
#[wasm_bindgen]
pub fn glue_demo(p1: f64, lambda_j: f64, delta: f64, eps: f64) -> Result<Table, String> {
    if !(delta > 0.0 && delta <= 0.5) {
        return Err(format!("delta must lie in (0, 0.5], got {delta}"));
    }
    if !(eps > 0.0 && eps < 0.5 * delta) {
        return Err(format!("eps must lie in (0, delta/2), got {eps}"));
    }
    if !(2.6..=3.8).contains(&lambda_j) {
        return Err(format!("the junction level must lie in [2.6, 3.8], got {lambda_j}"));
    }
    let grid = axisymmetric(16)?;
    let bg = schwarzschild_cone(grid, 1.0).map_err(err)?;
    let omega0 = ScalarField::from_fn(grid, |t, _| 3.0 + p1 * t.cos());
    let out = run_to_mots(&omega0, &bg, &mots_config()).map_err(err)?;
    let chart = GlueChart::new(&out.history.leaves, lambda_j, eps).map_err(err)?;
    let node = grid.n_theta() / 2;
    let mut t = Table::new(5);
    let samples = 200;
    for i in 0..=samples {
        let l = lambda_j - delta + 2.0 * delta * i as f64 / samples as f64;
        let (v, dv) = chart.v(l, node);
        let (ve, dve) = chart.v_eps(l, node);
        t.push(&[l, v, ve, dv, dve]);
    }
    Ok(t)
}

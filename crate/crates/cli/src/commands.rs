//! The subcommands. Each returns a JSON report and a verdict; the caller
//! writes the report, the manifest and picks the exit code.

use std::fmt::Write as _;
use std::path::Path;

use nullflow::background::{
    background_to_text, build_analytic, read_background, AnalyticBackground, Interpolation, Profile,
};
use nullflow::flow::{Flow, FlowOutcome, FlowStatus};
use nullflow::foliation::{
    background_atlas, mollify_glue, outermost_violations, verify_foliation, FoliationAtlas, GlueParams, Verdict,
    Witness, WitnessKind,
};
use nullflow::gauge::{
    check_energy_condition, check_gauge_condition, construct_gauge, energy_condition_holds, reparametrize,
    GaugeProfile,
};
use nullflow::scenarios::{self, ScenarioOptions};
use nullflow::{BackgroundFoliation, FieldSnapshot, LambdaGrid, ScalarField, SphereGrid};
use serde_json::{json, Value};

use crate::config::RunConfig;
use crate::error::{Category, CliError};
use crate::output::Outputs;

/// How a command ended when it did not error out.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Ok,
    Fail(Category),
}


pub struct Done {
    pub outcome: Outcome,
    pub report: Value,
}

fn ok(report: Value) -> Done {
    Done {
        outcome: Outcome::Ok,
        report,
    }
}

fn pass_fail(pass: bool, report: Value) -> Done {
    Done {
        outcome: if pass { Outcome::Ok } else { Outcome::Fail(Category::CheckFailed) },
        report,
    }
}

type Res = Result<Done, CliError>;

pub fn background(cfg: &RunConfig) -> nullflow::Result<BackgroundFoliation> {
    let b = &cfg.background;
    let interp: Interpolation = b.interpolation.parse()?;
    let bg = if b.kind == "file" {
        read_background(b.file.as_ref().expect("validated"))?
    } else {
        let grid = cfg.sphere_grid()?;
        let l = &cfg.lambda;
        let lambda = LambdaGrid::spanning(l.min, l.max, l.step)?;
        let spec = match b.kind.as_str() {
            "schwarzschild" => AnalyticBackground::SchwarzschildCone { mass: b.mass, r0: b.r0 },
            "minkowski" => AnalyticBackground::MinkowskiCone { r0: b.r0 },
            _ => {
                let tr = b.tr_chib0.expr().map_err(nullflow::Error::Parameter)?;
                AnalyticBackground::ShearFreeCustom {
                    r0: b.r0,
                    tr_chib0: Profile::Samples(tr.to_field(grid).values().to_vec()),
                    g_kk: Profile::Constant(b.g_kk),
                }
            }
        };
        build_analytic(&spec, grid, lambda)?
    };
    Ok(bg.with_interpolation(interp))
}

fn initial_surface(cfg: &RunConfig, grid: SphereGrid) -> nullflow::Result<ScalarField> {
    match &cfg.flow.omega0_file {
        Some(p) => {
            let snap = FieldSnapshot::load(p)?;
            if snap.grid != grid {
                return Err(nullflow::Error::Shape(format!(
                    "{} is on a different grid than the background",
                    p.display()
                )));
            }
            snap.field("omega")
        }
        None => Ok(cfg.flow.omega0.expr().map_err(nullflow::Error::Parameter)?.to_field(grid)),
    }
}

fn gauge_profile(cfg: &RunConfig, bg: &BackgroundFoliation) -> nullflow::Result<GaugeProfile> {
    if cfg.gauge.kind == "affine" {
        return Ok(GaugeProfile::affine(bg));
    }
    let v0 = cfg.gauge.v0.expr().map_err(nullflow::Error::Parameter)?.to_field(*bg.grid());
    construct_gauge(bg, &v0)
}

fn grid_json(g: &SphereGrid) -> Value {
    json!({ "mode": g.mode().to_string(), "n_theta": g.n_theta(), "n_phi": g.n_phi() })
}

fn lambda_json(l: &LambdaGrid) -> Value {
    json!({ "min": l.min, "max": l.max(), "step": l.step, "count": l.count })
}

fn min_table(header: &str, rows: impl Iterator<Item = (f64, f64)>) -> String {
    let mut out = format!("lambda\t{header}\n");
    for (l, v) in rows {
        let _ = writeln!(out, "{l:e}\t{v:e}");
    }
    out
}

pub fn propagate_background(cfg: &RunConfig, out: &mut Outputs) -> Res {
    let bg = background(cfg)?;
    out.write("background.txt", background_to_text(&bg))?;
    let trapped = bg.weakly_trapped_levels();
    Ok(ok(json!({
        "grid": grid_json(bg.grid()),
        "lambda": lambda_json(bg.lambda()),
        "affine": bg.is_affine(),
        "has_l_side": bg.has_l_side(),
        "has_chi_tensor": bg.has_chi_tensor(),
        "weakly_trapped_levels": trapped.len(),
        "first_untrapped_lambda": (0..bg.lambda().count)
            .find(|k| !trapped.contains(k))
            .map(|k| bg.lambda().value(k)),
    })))
}

pub fn build_gauge(cfg: &RunConfig, out: &mut Outputs) -> Res {
    let bg = background(cfg)?;
    let gauge = gauge_profile(cfg, &bg)?;
    let grid = *bg.grid();
    let mut tsv = String::from("lambda\tnode\ttheta\tphi\ta\tkappa\ts\n");
    for k in 0..bg.lambda().count {
        let l = bg.lambda().value(k);
        for n in 0..grid.len() {
            let (i, j) = grid.ij(n);
            let _ = writeln!(
                tsv,
                "{l:e}\t{n}\t{:e}\t{:e}\t{:e}\t{:e}\t{:e}",
                grid.theta(i),
                grid.phi(j),
                gauge.a[k].values()[n],
                gauge.kappa[k].values()[n],
                gauge.s_of_lambda[k].values()[n]
            );
        }
    }
    out.write("gauge.tsv", tsv)?;
    let report = check_gauge_condition(&bg, &gauge, cfg.gauge.tolerance)?;
    if cfg.gauge.reparametrize {
        let s_bg = reparametrize(&bg, &gauge)?;
        out.write("background_s.txt", background_to_text(&s_bg))?;
    }
    let a_max = gauge.a.iter().map(ScalarField::max).fold(f64::NEG_INFINITY, f64::max);
    Ok(ok(json!({
        "kind": cfg.gauge.kind,
        "s_max": gauge.s_max(),
        "a_max": a_max,
        "gauge_condition": { "pass": report.pass, "min_slack": report.min_slack, "tolerance": report.tolerance },
        "reparametrized": cfg.gauge.reparametrize,
    })))
}

pub fn check_gauge(cfg: &RunConfig, out: &mut Outputs) -> Res {
    let bg = background(cfg)?;
    let gauge = gauge_profile(cfg, &bg)?;
    let report = check_gauge_condition(&bg, &gauge, cfg.gauge.tolerance)?;
    let table = report.table(bg.lambda());
    out.write("gauge_check.tsv", min_table("min_slack", table.iter().copied()))?;
    let worst = table
        .iter()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|&(l, v)| json!({ "lambda": l, "slack": v }));
    Ok(pass_fail(
        report.pass,
        json!({
            "verdict": if report.pass { "PASS" } else { "FAIL" },
            "kind": cfg.gauge.kind,
            "min_slack": report.min_slack,
            "scale": report.scale,
            "tolerance": report.tolerance,
            "worst": worst,
        }),
    ))
}

pub fn check_energy(cfg: &RunConfig, out: &mut Outputs) -> Res {
    let bg = background(cfg)?;
    let slack = check_energy_condition(&bg)?;
    let pass = energy_condition_holds(&bg, &slack, cfg.gauge.tolerance);
    let rows = slack.iter().enumerate().map(|(k, f)| (bg.lambda().value(k), f.min()));
    out.write("energy.tsv", min_table("min_slack", rows))?;
    let min = slack.iter().map(ScalarField::min).fold(f64::INFINITY, f64::min);
    let max_abs = slack.iter().map(ScalarField::max_abs).fold(0.0, f64::max);
    Ok(pass_fail(
        pass,
        json!({
            "verdict": if pass { "PASS" } else { "FAIL" },
            "min_slack": min,
            "max_abs_slack": max_abs,
        }),
    ))
}

fn status_json(s: &FlowStatus) -> Value {
    match s {
        FlowStatus::ExitedDomain { nodes } => json!({ "name": s.name(), "nodes": nodes }),
        FlowStatus::Stiffness { t, dt } => json!({ "name": s.name(), "t": t, "dt": dt }),
        _ => json!({ "name": s.name() }),
    }
}

fn flow_json(o: &FlowOutcome) -> Value {
    let e = &o.extremes;
    json!({
        "status": status_json(&o.status),
        "t": o.state.t,
        "steps": o.state.step,
        "max_abs_tr_chi": 2.0 * o.state.expansion.max_abs(),
        "omega": { "min": o.state.omega.min(), "max": o.state.omega.max() },
        "omega_infinity": { "min": o.omega_infinity.min(), "max": o.omega_infinity.max() },
        "extremes": {
            "min_tr_chi": e.min_tr_chi,
            "max_increment": e.max_increment,
            "min_c0_low": e.min_c0_low,
            "min_c0_high": e.min_c0_high,
            "max_metric_residual": e.max_metric_residual,
            "max_u": e.u_max.iter().map(|p| p.1).fold(0.0, f64::max),
        },
        "leaves": o.history.leaves.len(),
        "warnings": o.warnings,
    })
}

fn terminal(o: &FlowOutcome) -> Outcome {
    if o.status == FlowStatus::Converged {
        Outcome::Ok
    } else {
        Outcome::Fail(Category::Numerical)
    }
}

pub fn run_flow(cfg: &RunConfig, out: &mut Outputs) -> Res {
    let bg = background(cfg)?;
    let omega0 = initial_surface(cfg, *bg.grid())?;
    let flow = Flow::new(&bg, omega0, cfg.flow_config())?;
    let outcome = match &cfg.flow.resume {
        Some(p) => {
            let state = flow.resume(&FieldSnapshot::load(p)?)?;
            flow.run_from(state, cfg.flow.max_time)?
        }
        None => flow.run()?,
    };
    out.write("history.tsv", outcome.history.to_tsv())?;
    let fin = FieldSnapshot::new(*bg.grid())
        .with_meta("status", outcome.status.name())
        .with_meta("t", format!("{:e}", outcome.state.t))
        .with_field("omega", &outcome.state.omega)?
        .with_field("omega_infinity", &outcome.omega_infinity)?
        .with_field("expansion", &outcome.state.expansion)?;
    out.write("final.txt", fin.to_text())?;
    out.write("resume.txt", flow.snapshot(&outcome.state)?.to_text())?;
    Ok(Done {
        outcome: terminal(&outcome),
        report: json!({ "flow": flow_json(&outcome), "resumed": cfg.flow.resume.is_some() }),
    })
}

fn witnesses_tsv(grid: &SphereGrid, witnesses: &[Witness]) -> String {
    let mut out = String::from("leaf\tsigma\tnode\ttheta\tphi\tkind\tvalue\n");
    for w in witnesses {
        let (i, j) = grid.ij(w.node);
        let kind = match w.kind {
            WitnessKind::NotMonotone => "not-monotone",
            WitnessKind::NotUntrapped => "not-untrapped",
        };
        let _ = writeln!(
            out,
            "{}\t{:e}\t{}\t{:e}\t{:e}\t{kind}\t{:e}",
            w.leaf,
            w.sigma,
            w.node,
            grid.theta(i),
            grid.phi(j),
            w.value
        );
    }
    out
}

/// Writes the witness table and returns the verdict as JSON plus PASS flag.
fn record_verdict(atlas: &FoliationAtlas, bg: &BackgroundFoliation, out: &mut Outputs) -> Result<(bool, Value), CliError> {
    let verdict = verify_foliation(atlas, bg)?;
    let witnesses = match &verdict {
        Verdict::Verified => Vec::new(),
        Verdict::Failed(w) => w.clone(),
    };
    out.write("witnesses.tsv", witnesses_tsv(bg.grid(), &witnesses))?;
    let pass = verdict.is_verified();
    Ok((
        pass,
        json!({
            "verdict": if pass { "VERIFIED" } else { "FAILED" },
            "leaves": atlas.leaves.len(),
            "sigma_max": atlas.leaves.last().map(|l| l.sigma),
            "witnesses": witnesses.len(),
        }),
    ))
}

pub fn glue_foliation(cfg: &RunConfig, out: &mut Outputs) -> Res {
    let bg = background(cfg)?;
    let omega0 = initial_surface(cfg, *bg.grid())?;
    let flow = Flow::new(&bg, omega0, cfg.flow_config())?;
    let outcome = flow.run()?;
    out.write("history.tsv", outcome.history.to_tsv())?;
    if outcome.status != FlowStatus::Converged {
        return Ok(Done {
            outcome: Outcome::Fail(Category::Numerical),
            report: json!({ "flow": flow_json(&outcome), "reason": "the flow must converge before gluing" }),
        });
    }
    let fo = &cfg.foliation;
    let params = GlueParams {
        lambda_j: fo.lambda_j,
        delta: fo.delta,
        eps: fo.eps,
    };
    let atlas = mollify_glue(&outcome.history.leaves, &bg, params)?;
    out.write("atlas/atlas.tsv", atlas.summary_tsv())?;
    out.write("atlas/atlas_leaves.txt", atlas.leaves_snapshot(fo.export_stride)?.to_text())?;
    let (pass, verdict) = record_verdict(&atlas, &bg, out)?;
    let violations = outermost_violations(&atlas, cfg.flow.eps_mots);
    Ok(pass_fail(
        pass && violations.is_empty(),
        json!({
            "flow": flow_json(&outcome),
            "glue": { "lambda_j": fo.lambda_j, "delta": fo.delta, "eps": fo.eps },
            "foliation": verdict,
            "outermost_violations": violations,
        }),
    ))
}

fn load_atlas(path: &Path, bg: &BackgroundFoliation) -> nullflow::Result<FoliationAtlas> {
    let file = if path.is_dir() { path.join("atlas_leaves.txt") } else { path.to_path_buf() };
    FoliationAtlas::from_snapshot(&FieldSnapshot::load(file)?, bg)
}

pub fn verify(cfg: &RunConfig, out: &mut Outputs) -> Res {
    let bg = background(cfg)?;
    let fo = &cfg.foliation;
    let (source, atlas) = match &fo.atlas {
        Some(p) => (json!({ "atlas": p.display().to_string() }), load_atlas(p, &bg)?),
        None => (
            json!({ "background_range": fo.range }),
            background_atlas(&bg, fo.range[0], fo.range[1])?,
        ),
    };
    let (pass, verdict) = record_verdict(&atlas, &bg, out)?;
    Ok(pass_fail(pass, json!({ "source": source, "foliation": verdict })))
}

pub fn reproduce(scenario: &str, opts: ScenarioOptions, out: &mut Outputs) -> Res {
    let mut report = scenarios::run(scenario, opts)?;
    // wall-clock details go to the manifest so that outputs stay reproducible
    for c in report.checks.iter_mut().filter(|c| c.name.ends_with(".runtime")) {
        out.record_timing(&c.name, &c.detail);
        c.detail = format!("{} (measured time in manifest.json)", if c.pass { "within limit" } else { "over limit" });
    }
    let mut tsv = String::from("check\tresult\tdetail\n");
    for c in &report.checks {
        let _ = writeln!(tsv, "{}\t{}\t{}", c.name, if c.pass { "PASS" } else { "FAIL" }, c.detail);
    }
    out.write("checks.tsv", tsv)?;
    for (name, text) in &report.artifacts {
        out.write(&format!("artifacts/{name}"), text)?;
    }
    let checks: Vec<Value> = report
        .checks
        .iter()
        .map(|c| json!({ "name": c.name, "pass": c.pass, "detail": c.detail }))
        .collect();
    Ok(pass_fail(
        report.pass(),
        json!({
            "scenario": scenario,
            "verdict": if report.pass() { "PASS" } else { "FAIL" },
            "checks": checks,
        }),
    ))
}

//! Run configuration: a TOML file, `--set` overrides on top, then one
//! validation pass that reports every problem at once.

use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use toml::{Table, Value};

use crate::expr::Expr;

/// A number or an expression over (θ, φ).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Scalar {
    Num(f64),
    Expr(String),
}

impl Scalar {
    pub fn expr(&self) -> Result<Expr, String> {
        match self {
            Scalar::Num(v) => Ok(Expr::Num(*v)),
            Scalar::Expr(s) => Expr::parse(s).map_err(|e| format!("'{s}' {e}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BackgroundSection {
    /// schwarzschild | minkowski | shear-free | file
    pub kind: String,
    pub mass: f64,
    /// Areal radius at λ = 0.
    pub r0: f64,
    pub file: Option<PathBuf>,
    /// shear-free: tr χ̲ on the base slice (angular expression).
    pub tr_chib0: Scalar,
    /// shear-free: G(k,k), constant along the generator.
    pub g_kk: f64,
    /// cubic | linear
    pub interpolation: String,
}

impl Default for BackgroundSection {
    fn default() -> Self {
        Self {
            kind: "schwarzschild".into(),
            mass: 1.0,
            r0: 0.0,
            file: None,
            tr_chib0: Scalar::Num(2.0),
            g_kk: 0.0,
            interpolation: "cubic".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LambdaSection {
    pub min: f64,
    pub max: f64,
    pub step: f64,
}

impl Default for LambdaSection {
    fn default() -> Self {
        Self {
            min: 1.0,
            max: 4.0,
            step: 5e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    /// axisymmetric | full
    pub mode: String,
    pub n_theta: usize,
    pub n_phi: usize,
}

impl Default for GridSection {
    fn default() -> Self {
        Self {
            mode: "axisymmetric".into(),
            n_theta: 64,
            n_phi: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaugeSection {
    /// constructed | affine
    pub kind: String,
    /// Initial value of the auxiliary function, in (0, 1).
    pub v0: Scalar,
    pub tolerance: f64,
    /// build-gauge also writes the background in the flow parameter s.
    pub reparametrize: bool,
}

impl Default for GaugeSection {
    fn default() -> Self {
        Self {
            kind: "constructed".into(),
            v0: Scalar::Num(0.5),
            tolerance: nullflow::gauge::DEFAULT_TOL,
            reparametrize: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FlowSection {
    pub omega0: Scalar,
    /// Field snapshot with an `omega` column; takes precedence over
    /// `omega0`.
    pub omega0_file: Option<PathBuf>,
    pub eps_mots: f64,
    pub cfl: f64,
    pub dt_min: f64,
    pub max_time: f64,
    pub output_interval: f64,
    pub leaf_interval: f64,
    pub leaf_fine_interval: f64,
    pub leaf_fine_until: f64,
    pub stall_window: usize,
    pub stall_tolerance: f64,
    pub monitor_tolerance: f64,
    /// Resume snapshot written by an earlier run-flow.
    pub resume: Option<PathBuf>,
}

impl Default for FlowSection {
    fn default() -> Self {
        let d = nullflow::scenarios::mots_config();
        Self {
            omega0: Scalar::Expr("3 + 0.3*cos(theta)".into()),
            omega0_file: None,
            eps_mots: d.eps_mots,
            cfl: d.cfl,
            dt_min: d.dt_min,
            max_time: d.max_time,
            output_interval: d.output_interval,
            leaf_interval: d.leaf_interval.unwrap_or(0.0125),
            leaf_fine_interval: d.leaf_fine_interval.unwrap_or(1.0 / 1024.0),
            leaf_fine_until: d.leaf_fine_until,
            stall_window: d.stall_window,
            stall_tolerance: d.stall_tolerance,
            monitor_tolerance: d.monitor_tolerance,
            resume: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FoliationSection {
    pub lambda_j: f64,
    pub delta: f64,
    pub eps: f64,
    /// Every `export_stride`-th leaf goes into the exported atlas.
    pub export_stride: usize,
    /// verify: an exported atlas (directory or atlas_leaves.txt). Without
    /// it, the background levels over `range` are verified.
    pub atlas: Option<PathBuf>,
    pub range: [f64; 2],
}

impl Default for FoliationSection {
    fn default() -> Self {
        Self {
            lambda_j: 3.0,
            delta: 0.2,
            eps: 0.05,
            export_stride: 50,
            atlas: None,
            range: [2.5, 4.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("nullflow-out"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct RunConfig {
    pub background: BackgroundSection,
    pub lambda: LambdaSection,
    pub grid: GridSection,
    pub gauge: GaugeSection,
    pub flow: FlowSection,
    pub foliation: FoliationSection,
    pub output: OutputSection,
}

/// Every problem found in a configuration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigErrors(pub Vec<String>);

impl std::fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "{} configuration error(s):", self.0.len())?;
        for e in &self.0 {
            writeln!(f, "  - {e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigErrors {}

const SECTIONS: [&str; 7] = ["background", "lambda", "grid", "gauge", "flow", "foliation", "output"];

/// `value` as TOML when it parses as a TOML value, else as a bare string.
fn override_value(value: &str) -> Value {
    toml::from_str::<Table>(&format!("v = {value}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(value.to_string()))
}

fn insert_path(table: &mut Table, path: &[&str], value: Value) -> Result<(), String> {
    let (last, parents) = path.split_last().expect("non-empty path");
    let mut node = table;
    for part in parents {
        let entry = node
            .entry(part.to_string())
            .or_insert_with(|| Value::Table(Table::new()));
        node = match entry {
            Value::Table(t) => t,
            _ => return Err(part.to_string()),
        };
    }
    node.insert(last.to_string(), value);
    Ok(())
}

/// Applies `section.key=value` overrides in order.
pub fn apply_overrides(table: &mut Table, sets: &[String], errors: &mut Vec<String>) {
    for set in sets {
        let Some((key, value)) = set.split_once('=') else {
            errors.push(format!("--set '{set}': expected key=value"));
            continue;
        };
        let path: Vec<&str> = key.trim().split('.').collect();
        if path.len() < 2 || path.iter().any(|p| p.is_empty()) {
            errors.push(format!("--set '{set}': key must look like section.name"));
            continue;
        }
        if let Err(part) = insert_path(table, &path, override_value(value.trim())) {
            errors.push(format!("--set '{set}': '{part}' is not a table"));
        }
    }
}

fn section<T: DeserializeOwned + Default>(table: &Table, name: &str, errors: &mut Vec<String>) -> T {
    match table.get(name) {
        None => T::default(),
        Some(Value::Table(t)) => T::deserialize(Value::Table(t.clone())).unwrap_or_else(|e| {
            errors.push(format!("[{name}]: {}", e.to_string().split_whitespace().collect::<Vec<_>>().join(" ")));
            T::default()
        }),
        Some(_) => {
            errors.push(format!("'{name}' must be a table"));
            T::default()
        }
    }
}

impl RunConfig {
    /// Reads `path` (if any), applies the overrides and validates.
    pub fn load(path: Option<&Path>, sets: &[String]) -> Result<(Self, Table), ConfigErrors> {
        let mut errors = Vec::new();
        let mut table = match path {
            None => Table::new(),
            Some(p) => match fs::read_to_string(p) {
                Ok(text) => text.parse::<Table>().unwrap_or_else(|e| {
                    errors.push(format!("{}: {}", p.display(), e.to_string().trim()));
                    Table::new()
                }),
                Err(e) => {
                    errors.push(format!("{}: {e}", p.display()));
                    Table::new()
                }
            },
        };
        apply_overrides(&mut table, sets, &mut errors);
        let cfg = Self::from_table(&table, &mut errors);
        if errors.is_empty() {
            Ok((cfg, table))
        } else {
            Err(ConfigErrors(errors))
        }
    }

    pub fn from_table(table: &Table, errors: &mut Vec<String>) -> Self {
        for key in table.keys() {
            if !SECTIONS.contains(&key.as_str()) {
                errors.push(format!("unknown section '{key}'"));
            }
        }
        let cfg = Self {
            background: section(table, "background", errors),
            lambda: section(table, "lambda", errors),
            grid: section(table, "grid", errors),
            gauge: section(table, "gauge", errors),
            flow: section(table, "flow", errors),
            foliation: section(table, "foliation", errors),
            output: section(table, "output", errors),
        };
        cfg.validate(errors);
        cfg
    }

    fn validate(&self, errors: &mut Vec<String>) {
        let mut need = |ok: bool, msg: String| {
            if !ok {
                errors.push(msg);
            }
        };
        let positive = |v: f64| v > 0.0 && v.is_finite();

        let b = &self.background;
        need(
            ["schwarzschild", "minkowski", "shear-free", "file"].contains(&b.kind.as_str()),
            format!("background.kind '{}' is not schwarzschild, minkowski, shear-free or file", b.kind),
        );
        need(b.kind != "file" || b.file.is_some(), "background.kind = file needs background.file".into());
        need(b.mass >= 0.0 && b.mass.is_finite(), format!("background.mass must be non-negative, got {}", b.mass));
        need(b.r0.is_finite(), "background.r0 must be finite".into());
        need(b.g_kk.is_finite(), "background.g_kk must be finite".into());
        need(
            ["cubic", "linear"].contains(&b.interpolation.as_str()),
            format!("background.interpolation '{}' is not cubic or linear", b.interpolation),
        );

        let l = &self.lambda;
        need(positive(l.step), format!("lambda.step must be positive, got {}", l.step));
        need(
            l.min.is_finite() && l.max.is_finite() && l.max > l.min,
            format!("lambda range [{}, {}] is empty", l.min, l.max),
        );

        let g = &self.grid;
        match g.mode.as_str() {
            "axisymmetric" | "full" => {
                if let Err(e) = self.sphere_grid() {
                    need(false, format!("grid: {e}"));
                }
            }
            other => need(false, format!("grid.mode '{other}' is not axisymmetric or full")),
        }
        let axisymmetric = g.mode == "axisymmetric";

        let expr = |name: &str, s: &Scalar| match s.expr() {
            Err(e) => errors_push(name, e),
            Ok(x) if axisymmetric && x.uses_phi() => {
                errors_push(name, "depends on phi on an axisymmetric grid".into())
            }
            Ok(_) => None,
        };
        let expr_errors: Vec<String> = [
            expr("background.tr_chib0", &b.tr_chib0),
            expr("gauge.v0", &self.gauge.v0),
            expr("flow.omega0", &self.flow.omega0),
        ]
        .into_iter()
        .flatten()
        .collect();
        for e in expr_errors {
            need(false, e);
        }

        let ga = &self.gauge;
        need(
            ["constructed", "affine"].contains(&ga.kind.as_str()),
            format!("gauge.kind '{}' is not constructed or affine", ga.kind),
        );
        need(positive(ga.tolerance), "gauge.tolerance must be positive".into());

        let f = &self.flow;
        for (name, v) in [
            ("eps_mots", f.eps_mots),
            ("cfl", f.cfl),
            ("dt_min", f.dt_min),
            ("max_time", f.max_time),
            ("output_interval", f.output_interval),
            ("leaf_interval", f.leaf_interval),
            ("leaf_fine_interval", f.leaf_fine_interval),
            ("stall_tolerance", f.stall_tolerance),
            ("monitor_tolerance", f.monitor_tolerance),
        ] {
            need(positive(v), format!("flow.{name} must be positive, got {v}"));
        }
        need(f.leaf_fine_until >= 0.0, "flow.leaf_fine_until must be non-negative".into());
        need(f.stall_window > 0, "flow.stall_window must be positive".into());

        let fo = &self.foliation;
        need(positive(fo.delta), format!("foliation.delta must be positive, got {}", fo.delta));
        need(
            positive(fo.eps) && fo.eps < fo.delta / 2.0,
            format!("foliation.eps must lie in (0, delta/2), got {}", fo.eps),
        );
        need(fo.lambda_j.is_finite(), "foliation.lambda_j must be finite".into());
        need(fo.export_stride > 0, "foliation.export_stride must be positive".into());
        need(
            fo.range[1] > fo.range[0],
            format!("foliation.range [{}, {}] is empty", fo.range[0], fo.range[1]),
        );
        need(
            !self.output.dir.as_os_str().is_empty(),
            "output.dir must not be empty".into(),
        );
    }

    pub fn sphere_grid(&self) -> nullflow::Result<nullflow::SphereGrid> {
        let mode = self.grid.mode.parse()?;
        nullflow::SphereGrid::new(mode, self.grid.n_theta, self.grid.n_phi)
    }

    pub fn flow_config(&self) -> nullflow::flow::FlowConfig {
        let f = &self.flow;
        nullflow::flow::FlowConfig {
            cfl: f.cfl,
            eps_mots: f.eps_mots,
            max_time: f.max_time,
            dt_min: f.dt_min,
            output_interval: f.output_interval,
            leaf_interval: Some(f.leaf_interval),
            leaf_fine_interval: Some(f.leaf_fine_interval),
            leaf_fine_until: f.leaf_fine_until,
            stall_window: f.stall_window,
            stall_tolerance: f.stall_tolerance,
            monitor_tolerance: f.monitor_tolerance,
        }
    }

    /// Canonical text of the configuration without the output section, so
    /// that the same run written to two directories hashes the same.
    pub fn canonical(&self) -> String {
        let mut v = Value::try_from(self).expect("config serializes");
        if let Value::Table(t) = &mut v {
            t.remove("output");
        }
        toml::to_string(&v).expect("config serializes")
    }

    pub fn sha256(&self) -> String {
        hex(&Sha256::digest(self.canonical().as_bytes()))
    }
}

fn errors_push(name: &str, e: String) -> Option<String> {
    Some(format!("{name}: {e}"))
}

pub fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

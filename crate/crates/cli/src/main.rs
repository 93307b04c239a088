use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use nullflow::scenarios::ScenarioOptions;
use nullflow_cli::commands::{self, Done, Outcome};
use nullflow_cli::config::RunConfig;
use nullflow_cli::error::{Category, CliError};
use nullflow_cli::output::{Outputs, REPORT_SCHEMA};
use serde_json::json;

#[derive(Parser)]
#[command(name = "nullflow", version, about = "Locate MOTS by flowing cross-sections of a null hypersurface")]
struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides output.dir).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Override a configuration entry, e.g. --set flow.cfl=0.1 (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    sets: Vec<String>,
    #[arg(long, short, global = true, conflicts_with = "verbose")]
    quiet: bool,
    #[arg(long, short, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the background foliation and write background.txt.
    PropagateBackground,
    /// Construct the gauge and write gauge.tsv.
    BuildGauge,
    /// Evaluate the gauge inequality on every lattice point.
    CheckGauge,
    /// Evaluate the energy condition on every lattice point.
    CheckEnergy,
    /// Run the flow to a MOTS or another terminal status.
    RunFlow,
    /// Run the flow, glue it to the background and verify the atlas.
    GlueFoliation,
    /// Verify an exported atlas, or the background levels over foliation.range.
    Verify,
    /// Run a reference scenario and assert its checks.
    Reproduce {
        #[arg(value_parser = clap::builder::PossibleValuesParser::new(nullflow::scenarios::SCENARIOS))]
        scenario: String,
        /// Resolution of the MOTS run.
        #[arg(long, default_value_t = 128)]
        n_theta: usize,
        /// Skip the refinement run at twice the resolution.
        #[arg(long)]
        no_refine: bool,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::PropagateBackground => "propagate-background",
            Command::BuildGauge => "build-gauge",
            Command::CheckGauge => "check-gauge",
            Command::CheckEnergy => "check-energy",
            Command::RunFlow => "run-flow",
            Command::GlueFoliation => "glue-foliation",
            Command::Verify => "verify",
            Command::Reproduce { .. } => "reproduce",
        }
    }
}

fn init_threads() -> Result<(), String> {
    let Ok(v) = std::env::var("NULLFLOW_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| format!("NULLFLOW_THREADS must be a positive integer, got '{v}'"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| e.to_string())
}

fn dispatch(cmd: &Command, cfg: &RunConfig, out: &mut Outputs) -> Result<Done, CliError> {
    match cmd {
        Command::PropagateBackground => commands::propagate_background(cfg, out),
        Command::BuildGauge => commands::build_gauge(cfg, out),
        Command::CheckGauge => commands::check_gauge(cfg, out),
        Command::CheckEnergy => commands::check_energy(cfg, out),
        Command::RunFlow => commands::run_flow(cfg, out),
        Command::GlueFoliation => commands::glue_foliation(cfg, out),
        Command::Verify => commands::verify(cfg, out),
        Command::Reproduce {
            scenario,
            n_theta,
            no_refine,
        } => commands::reproduce(
            scenario,
            ScenarioOptions {
                refine: !no_refine,
                n_theta: *n_theta,
            },
            out,
        ),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let command = cli.command.name();
    if let Err(e) = init_threads() {
        eprintln!("error[config]: {e}");
        return ExitCode::from(Category::Config.code() as u8);
    }

    let mut sets = cli.sets.clone();
    if let Some(dir) = &cli.out {
        sets.push(format!("output.dir={}", toml::Value::String(dir.display().to_string())));
    }
    let cfg = match RunConfig::load(cli.config.as_deref(), &sets) {
        Ok((cfg, _)) => cfg,
        Err(e) => {
            eprint!("error[config]: {e}");
            return ExitCode::from(Category::Config.code() as u8);
        }
    };
    let mut out = match Outputs::create(&cfg.output.dir) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error[input]: cannot create {}: {e}", cfg.output.dir.display());
            return ExitCode::from(Category::Input.code() as u8);
        }
    };
    if cli.verbose {
        eprintln!("nullflow {command}: config sha256 {}", cfg.sha256());
        eprintln!("writing to {}", cfg.output.dir.display());
    }

    let result = dispatch(&cli.command, &cfg, &mut out);
    let (code, report) = match result {
        Ok(Done { outcome, report }) => {
            let (code, status) = match outcome {
                Outcome::Ok => (0, "ok".to_string()),
                Outcome::Fail(c) => (c.code(), c.name().to_string()),
            };
            (code, json!({ "schema": REPORT_SCHEMA, "command": command, "status": status, "result": report }))
        }
        Err(e) => {
            let c = e.category();
            eprintln!("error[{}]: {e}", c.name());
            (
                c.code(),
                json!({
                    "schema": REPORT_SCHEMA,
                    "command": command,
                    "status": c.name(),
                    "error": { "category": c.name(), "message": e.to_string(), "details": e.details() },
                }),
            )
        }
    };
    if !cli.quiet {
        let summary = report.get("result").map(|r| r.to_string());
        if let Some(s) = summary {
            println!("{s}");
        }
        println!("{command}: {}", report["status"].as_str().unwrap_or("?"));
    }
    let written = match out.write_json("report.json", &report) {
        Ok(_) => out.finish(command, &cfg.sha256(), &cfg.canonical(), code),
        Err(e) => Err(e),
    };
    if let Err(e) = written {
        eprintln!("error[input]: writing outputs: {e}");
        return ExitCode::from(Category::Input.code() as u8);
    }
    ExitCode::from(code as u8)
}

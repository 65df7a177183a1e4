//! `simulate <scenario> --config file [--set k=v ...] [--out dir]`
//!
//! Exit status: 0 on success, 2 when the acceptance suite fails, 1 on error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use mie_pseudomode::acceptance::{run_criteria, AcceptanceReport};
use mie_pseudomode::config::{Scenario, ScenarioConfig};
use mie_pseudomode::scenario::run_scenario;

#[derive(Parser, Debug)]
#[command(name = "simulate", version, about = "Pseudomode QED scenarios for a dielectric microsphere")]
struct Cli {
    /// Scenario name (see --list-scenarios).
    scenario: Option<String>,
    /// TOML configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a configuration key, e.g. `--set emitter.dipole_debye=100`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Output directory (default: `output_dir` from the config, else `out/<scenario>`).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    list_scenarios: bool,
    /// Run the acceptance suite and print a pass/fail table.
    #[arg(long)]
    acceptance: bool,
}

fn load(cli: &Cli) -> mie_pseudomode::Result<ScenarioConfig> {
    match &cli.config {
        Some(path) => ScenarioConfig::from_file(path, &cli.overrides),
        None if cli.acceptance => {
            // the suite is pinned to the reference sphere unless a config is given
            let base = toml::to_string(&ScenarioConfig::preset(10.0)).expect("preset serializes");
            ScenarioConfig::from_toml(&base, &cli.overrides)
        }
        None => Err(mie_pseudomode::Error::Config("--config is required".into())),
    }
}

fn run(cli: Cli) -> mie_pseudomode::Result<bool> {
    if cli.list_scenarios {
        for s in Scenario::ALL {
            println!("{:<16} {}", s.name(), s.describe());
        }
        return Ok(true);
    }
    let config = load(&cli)?;
    if cli.acceptance {
        let report = run_criteria(&config, &[1, 2, 3, 4, 5, 6, 7, 8, 9, 10], |r| println!("{}", AcceptanceReport::line(r)))?;
        let passed = report.results.iter().filter(|r| r.passed).count();
        println!("{passed}/{} criteria passed", report.results.len());
        if let Some(dir) = &cli.out {
            std::fs::create_dir_all(dir)?;
            std::fs::write(dir.join("acceptance.json"), serde_json::to_string_pretty(&report)?)?;
        }
        return Ok(report.passed());
    }
    let name = match (&cli.scenario, config.scenario) {
        (Some(n), _) => Scenario::parse(n)?,
        (None, Some(s)) => s,
        (None, None) => return Err(mie_pseudomode::Error::Config("no scenario given".into())),
    };
    let out = cli
        .out
        .clone()
        .or_else(|| config.output_dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out").join(name.name()));
    let outcome = run_scenario(name, &config, &out)?;
    if name == Scenario::Acceptance {
        print!("{}", std::fs::read_to_string(out.join("acceptance.txt"))?);
    }
    for f in &outcome.manifest.files {
        println!("{}  {}", f.sha256, out.join(&f.path).display());
    }
    println!("manifest: {}", outcome.manifest_path.display());
    Ok(outcome.passed)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

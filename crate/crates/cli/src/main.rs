use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use cfgspace::scenario::{self, ScenarioConfig, ScenarioError, ScenarioResult};
use clap::{Parser, Subcommand};

/// Batch runner for position-velocity wave function scenarios.
#[derive(Debug, Parser)]
#[command(name = "cfgspace", version, about)]
struct Cli {
    /// Suppress the summary printed on success.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evolve a scenario and write its series, snapshots and report.
    Run {
        /// A TOML file, or the name of a built-in scenario.
        config: String,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
        /// Dotted-key assignment applied before validation, e.g. `evolve.n_steps=200`.
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Validate a scenario and check its wrap budget without evolving it.
    Check {
        config: String,
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// List the built-in scenarios.
    ListScenarios {
        /// Write each built-in as `<name>.toml` into this directory.
        #[arg(long, value_name = "DIR")]
        emit: Option<PathBuf>,
    },
}

/// Files are recognised by extension or existence; anything else is a built-in name.
fn load(source: &str, overrides: &[String]) -> ScenarioResult<ScenarioConfig> {
    let path = Path::new(source);
    if path.extension().is_some_and(|e| e == "toml") || path.exists() {
        let text = fs::read_to_string(path).map_err(|e| ScenarioError::Input { path: path.to_path_buf(), source: e })?;
        ScenarioConfig::from_toml_str(&text, overrides)
    } else {
        ScenarioConfig::from_toml_str(scenario::builtin_toml(source)?, overrides)
    }
}

fn run(cli: Cli) -> ScenarioResult<()> {
    match cli.command {
        Command::Run { config, out_dir, overrides } => {
            let config = load(&config, &overrides)?;
            let report = scenario::run_scenario(&config, &out_dir)?;
            if !cli.quiet {
                println!("{}: {} records, norm drift {:.3e}", report.name, report.records, report.norm.max_drift);
                if let Some(e) = report.energy {
                    println!("  energy drift {:.3e}", e.relative_drift);
                }
                if let Some(c) = report.classical {
                    println!("  max centre deviation {:.3e}", c.max_center_deviation);
                }
                for f in &report.files {
                    println!("  wrote {}", out_dir.join(f).display());
                }
            }
        }
        Command::Check { config, overrides } => {
            let config = load(&config, &overrides)?;
            let report = scenario::check_scenario(&config)?;
            if !cli.quiet {
                println!("{} ({}) on {}: wrap budget {} for t = {}", report.name, report.kind, report.grid, report.wrap_budget, report.duration);
            }
        }
        Command::ListScenarios { emit } => {
            if let Some(dir) = &emit {
                fs::create_dir_all(dir).map_err(|e| ScenarioError::Output { path: dir.clone(), source: e })?;
            }
            for name in scenario::builtin_names() {
                if let Some(dir) = &emit {
                    let path = dir.join(format!("{name}.toml"));
                    fs::write(&path, scenario::builtin_toml(name)?).map_err(|e| ScenarioError::Output { path, source: e })?;
                }
                println!("{name}");
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

use abwave_cli::config::{self, LoadedConfig};
use abwave_cli::error::CliError;
use abwave_cli::output::{self, RunInfo};
use abwave_cli::{preset, scenario, sweep, PRESETS};

#[derive(Parser)]
#[command(name = "abwave", version, about = "Electron diffraction past a magnetic flux line")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write CSV, SVG and a JSON manifest.
    Run {
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Run a scenario for each value of one numeric field.
    Sweep {
        config: PathBuf,
        /// Dotted field name, e.g. `flux.alpha`.
        #[arg(long)]
        param: String,
        /// `start:stop:step` or a comma-separated list.
        #[arg(long, allow_hyphen_values = true)]
        values: String,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Check a configuration and print derived quantities without running.
    Validate { config: PathBuf },
    /// Run a built-in scenario.
    Preset {
        name: String,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

fn report(e: &CliError) {
    eprintln!("error: {e}");
    let mut src = std::error::Error::source(e);
    while let Some(s) = src {
        eprintln!("  caused by: {s}");
        src = s.source();
    }
}

fn execute(loaded: LoadedConfig, out: &Path) -> Result<(), CliError> {
    let loaded = loaded.validated()?;
    let start = Instant::now();
    let result = scenario::run(&loaded.config)?;
    let info = RunInfo {
        config: &loaded.config,
        config_text: &loaded.text,
        duration_s: start.elapsed().as_secs_f64(),
    };
    for p in output::write_all(&result, &info, out)? {
        println!("wrote {}", p.display());
    }
    for (k, v) in &result.metrics {
        println!("{k} = {v}");
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run { config, out } => execute(config::load(&config)?, &out),
        Command::Preset { name, out } => {
            let text = preset(&name).ok_or_else(|| CliError::Config {
                origin: "preset".into(),
                line: None,
                field: name.clone(),
                message: format!(
                    "unknown preset; choose one of {}",
                    PRESETS.iter().map(|(n, _)| *n).collect::<Vec<_>>().join(", ")
                ),
            })?;
            execute(config::parse(text, &format!("preset:{name}"))?, &out)
        }
        Command::Sweep {
            config,
            param,
            values,
            out,
        } => {
            let base = config::load(&config)?.validated()?;
            let values = sweep::parse_values(&values).map_err(|message| CliError::Config {
                origin: "command line".into(),
                line: None,
                field: "--values".into(),
                message,
            })?;
            let rows = sweep::sweep(&base, &param, &values)?;
            std::fs::create_dir_all(&out).map_err(|e| CliError::io(&out, e))?;
            let path = out.join(format!("{}_sweep_{}.csv", base.config.name, param.replace('.', "_")));
            std::fs::write(&path, sweep::csv_string(&rows)).map_err(|e| CliError::io(&path, e))?;
            println!("wrote {}", path.display());
            for r in &rows {
                println!(
                    "{} = {:.6}: deflection {:.6e}, asymmetry {:.6e}, formula {:.6e}, {}",
                    param, r.value, r.expectation_deflection, r.asymmetry_metric, r.deflection_formula, r.status
                );
            }
            Ok(())
        }
        Command::Validate { config } => {
            let loaded = config::load(&config)?;
            let mut problems = loaded.check();
            if problems.is_empty() {
                let (derived, numeric) = scenario::dry_run(&loaded.config)?;
                for (k, v) in &derived {
                    println!("{k} = {v}");
                }
                problems.extend(numeric);
            }
            match problems.len() {
                0 => {
                    println!("ok");
                    Ok(())
                }
                _ => {
                    for p in &problems[1..] {
                        report(p);
                    }
                    Err(problems.swap_remove(0))
                }
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            report(&e);
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use trps_cli::{emit, load_config, presets, run_scenario, CliError};

#[derive(Parser)]
#[command(name = "trps", version, about = "Time-resolved physical spectrum of a cavity-coupled emitter")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a preset or a config file and write its products.
    Run {
        /// Preset name or path to a TOML config.
        source: String,
        /// Output root; the scenario lands in <out>/<name>.
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Override a config key, e.g. --set params.kappa=20 or --set spectrometer.gamma_s=[5,150].
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
        /// Do not echo the resolved config.
        #[arg(long)]
        quiet: bool,
    },
    /// List the built-in presets.
    ListPresets,
    /// Resolve and validate a config (or preset) and print it.
    Validate {
        source: String,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn execute(command: Command) -> Result<(), CliError> {
    match command {
        Command::ListPresets => {
            for name in presets::names() {
                println!("{name:<18} {}", presets::describe(name).unwrap_or_default());
            }
        }
        Command::Validate { source, set } => {
            let cfg = load_config(&source, &set)?;
            print!("{}", emit(&cfg));
        }
        Command::Run { source, out, set, quiet } => {
            let cfg = load_config(&source, &set)?;
            if !quiet {
                print!("{}", emit(&cfg));
                println!();
            }
            let report = run_scenario(&cfg, &out)?;
            for w in &report.warnings {
                eprintln!("warning: {w}");
            }
            for c in &report.checks {
                println!("check {:<40} {:.3e} <= {:.0e} ok", c.name, c.value, c.limit);
            }
            println!(
                "wrote {} files to {}",
                report.manifest.entries.len(),
                out.join(&cfg.name).display()
            );
        }
    }
    Ok(())
}

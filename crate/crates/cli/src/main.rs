use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use decolab::{resolve_out_dir, run_scenario, validate_config, CliError, ScenarioConfig, OUT_ENV};

#[derive(Parser)]
#[command(name = "decolab", version, about = "Run pole-decomposition decoherence scenarios")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write CSV curves plus summary.json
    Run {
        config: PathBuf,
        /// Output directory (overrides the config and DECOLAB_OUT)
        #[arg(long)]
        out: Option<PathBuf>,
        /// Suppress the progress report on stdout
        #[arg(long)]
        quiet: bool,
    },
    /// Check a config without running it
    Validate { config: PathBuf },
    /// Print the version
    Version,
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run { config, out, quiet } => {
            let cfg = ScenarioConfig::load(&config)?;
            let env = std::env::var_os(OUT_ENV).map(PathBuf::from);
            let dir = resolve_out_dir(out.as_deref(), &cfg, env.as_deref());
            let summary = run_scenario(&cfg, &dir)?;
            if !quiet {
                println!("{} scenario written to {}", cfg.kind().name(), dir.display());
                for key in ["gamma0", "gamma_eff", "t_R", "t_D", "crossover_time"] {
                    if let Some(v) = summary.get(key) {
                        println!("  {key} = {v}");
                    }
                }
            }
            Ok(())
        }
        Command::Validate { config } => {
            let diags = validate_config(&config)?;
            if diags.is_empty() {
                println!("{}: ok", config.display());
                Ok(())
            } else {
                Err(CliError::Config(diags))
            }
        }
        Command::Version => {
            println!("decolab {}", env!("CARGO_PKG_VERSION"));
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
